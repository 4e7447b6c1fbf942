//! Run configuration: command-line flags merged with an optional TOML file.
//! Keys present in the file override the corresponding flags.
//!
//! Config file keys (all optional):
//!
//! ```toml
//! metric = "desitter4"          # zoo name or path to a metric file
//! points = [[0.0, 0.0, 0.0, 0.0]]
//! order = 1                     # transport order N ≤ 3
//! alpha = [1, 2]
//! z = ["0+1i", "i0"]            # "i0" is the iε → 0 limit over eps_schedule
//! eps_schedule = [0.5, 0.25, 0.125]
//! tolerance = 1e-3
//! out = "report.json"
//! mode = "lorentzian"           # or "euclidean"
//! seed = 7
//! verify = true
//! fit_degree = 2
//! radius = 0.3
//! ```
//!
//! Metric files use the grammar of `parse_metric`: a bare `diag(e0, ...)`,
//! or TOML with `dim`, `signature` (`"+---"`), `name` and either
//! `g = "diag(...)"` or components `g00 = "..."`, `g01 = "..."`.
//! Expressions combine numbers, `x0 .. x{n-1}`, `+ - * / ^`, parentheses
//! and `exp log sin cos sinh cosh`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use resdyn_core::metricspace::{parse_metric, zoo, MetricExpr};
use resdyn_core::modeldist::EpsSchedule;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub metric: Option<String>,
    pub points: Option<Vec<Vec<f64>>>,
    pub order: Option<usize>,
    pub alpha: Option<Vec<i64>>,
    pub z: Option<Vec<String>>,
    pub eps_schedule: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub verify: Option<bool>,
    pub fit_degree: Option<usize>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Lorentzian,
    Euclidean,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lorentzian" => Ok(Mode::Lorentzian),
            "euclidean" => Ok(Mode::Euclidean),
            _ => bail!("mode must be 'lorentzian' or 'euclidean', got '{s}'"),
        }
    }
}

/// A spectral parameter z, or the iε → 0 limit taken over the ε schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZSpec {
    Value(Complex64),
    Limit,
}

impl ZSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "i0" || t == "limit" {
            return Ok(ZSpec::Limit);
        }
        Ok(ZSpec::Value(parse_complex(t)?))
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        bail!("empty complex number");
    }
    let bad = || anyhow!("cannot parse complex number '{s}'");
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let imag = |p: &str| -> Result<f64> {
        match p {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => p.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(Complex64::new(body[..k].parse().map_err(|_| bad())?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

pub fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad coordinate '{v}' in point '{s}'")))
        .collect()
}

/// Zoo name, or a path to a metric file.
pub fn load_metric(src: &str) -> Result<MetricExpr> {
    let p = Path::new(src);
    if p.is_file() {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {src}"))?;
        return parse_metric(&text).with_context(|| format!("parsing metric file {src}"));
    }
    zoo(src).map_err(|e| anyhow!("{e} (and no file named '{src}')"))
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub metric: Option<String>,
    pub points: Vec<Vec<f64>>,
    pub order: Option<usize>,
    pub alphas: Vec<i64>,
    pub zs: Vec<ZSpec>,
    pub eps: EpsSchedule,
    pub tolerance: f64,
    pub out: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub seed: u64,
    pub verify: bool,
    pub fit_degree: Option<usize>,
    pub radius: Option<f64>,
}

/// Values as given on the command line.
#[derive(Debug, Default, Clone)]
pub struct FlagValues {
    pub config: Option<PathBuf>,
    pub metric: Option<String>,
    pub points: Vec<String>,
    pub order: Option<usize>,
    pub alpha: Option<String>,
    pub z: Vec<String>,
    pub eps_schedule: Option<String>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub verify: bool,
    pub fit_degree: Option<usize>,
    pub radius: Option<f64>,
}

impl RunConfig {
    pub fn from_flags(f: &FlagValues) -> Result<Self> {
        let file: FileConfig = match &f.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let points = match file.points {
            Some(p) => p,
            None => f.points.iter().map(|s| parse_point(s)).collect::<Result<_>>()?,
        };
        let alphas = match file.alpha {
            Some(a) => a,
            None => match &f.alpha {
                Some(s) => s
                    .split(',')
                    .map(|v| v.trim().parse::<i64>().with_context(|| format!("bad alpha '{v}'")))
                    .collect::<Result<_>>()?,
                None => vec![1],
            },
        };
        let z_src: Vec<String> = file.z.unwrap_or_else(|| f.z.clone());
        let zs = if z_src.is_empty() {
            vec![ZSpec::Limit]
        } else {
            z_src.iter().map(|s| ZSpec::parse(s)).collect::<Result<_>>()?
        };
        let eps = match (file.eps_schedule, &f.eps_schedule) {
            (Some(v), _) => {
                if v.is_empty() || v.iter().any(|e| *e <= 0.0) {
                    bail!("eps_schedule needs positive entries");
                }
                EpsSchedule { eps: v }
            }
            (None, Some(s)) => EpsSchedule::parse(s)?,
            (None, None) => EpsSchedule::default(),
        };
        let mode = match file.mode.or_else(|| f.mode.clone()) {
            Some(m) => Some(Mode::parse(&m)?),
            None => None,
        };
        let tolerance = file.tolerance.or(f.tolerance).unwrap_or(1e-3);
        if !(tolerance > 0.0) {
            bail!("tolerance must be positive");
        }
        Ok(RunConfig {
            metric: file.metric.or_else(|| f.metric.clone()),
            points,
            order: file.order.or(f.order),
            alphas,
            zs,
            eps,
            tolerance,
            out: file.out.or_else(|| f.out.clone()),
            mode,
            seed: file.seed.or(f.seed).unwrap_or(0),
            verify: file.verify.unwrap_or(f.verify),
            fit_degree: file.fit_degree.or(f.fit_degree),
            radius: file.radius.or(f.radius),
        })
    }

    pub fn metric(&self) -> Result<MetricExpr> {
        let src = self.metric.as_deref().ok_or_else(|| anyhow!("--metric is required"))?;
        let m = load_metric(src)?;
        if let Some(mode) = self.mode {
            let lor = m.is_lorentzian();
            if lor != (mode == Mode::Lorentzian) {
                bail!("metric '{}' does not match --mode {:?}", m.name, mode);
            }
        }
        Ok(m)
    }

    /// Configured points, or the metric's default point.
    pub fn points_for(&self, m: &MetricExpr) -> Result<Vec<Vec<f64>>> {
        if self.points.is_empty() {
            return Ok(vec![m.default_point()]);
        }
        for p in &self.points {
            if p.len() != m.dim {
                bail!("point {p:?} has {} coordinates for a dim-{} metric", p.len(), m.dim);
            }
        }
        Ok(self.points.clone())
    }
}
