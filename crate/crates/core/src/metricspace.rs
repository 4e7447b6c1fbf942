//! Metrics given by component expressions: parsing, jets, curvature and the
//! wave operator.
//!
//! Curvature conventions:
//!
//! ```text
//! Γ^i_{jk}   = ½ g^{il} (∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk})
//! R^i_{jkl}  = ∂_k Γ^i_{lj} − ∂_l Γ^i_{kj} + Γ^i_{km} Γ^m_{lj} − Γ^i_{lm} Γ^m_{kj}
//! R_{jl}     = R^i_{jil},    R = g^{jl} R_{jl}
//! ```
//!
//! With these the unit round sphere has `R = 2`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse_call_list, parse_expr_in, Expr};
use crate::jet::{self, Jet, JetMat};

/// Metric given in one chart by component expressions.
#[derive(Debug, Clone)]
pub struct MetricExpr {
    pub dim: usize,
    pub signature: Vec<i8>,
    pub name: String,
    comps: Vec<Expr>,
    sources: Vec<String>,
}

impl MetricExpr {
    /// Build from a full symmetric component array (row-major).
    pub fn from_components(name: &str, signature: Vec<i8>, comps: Vec<Vec<Expr>>) -> Result<Self> {
        let n = comps.len();
        if n < 2 {
            return Err(Error::Dimension(format!("dim must be at least 2, got {n}")));
        }
        if signature.len() != n {
            return Err(Error::Dimension(format!(
                "signature has {} entries for dim {n}",
                signature.len()
            )));
        }
        if signature.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::Config("signature entries must be +1 or -1".into()));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in comps.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for e in row {
                if let Some(v) = e.max_var() {
                    if v >= n {
                        return Err(Error::Dimension(format!("variable x{v} in a dim-{n} metric")));
                    }
                }
                flat.push(e.clone());
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if flat[i * n + j] != flat[j * n + i] {
                    return Err(Error::NonSymmetric { i, j });
                }
            }
        }
        let sources = flat.iter().map(|e| format!("{e:?}")).collect();
        Ok(MetricExpr {
            dim: n,
            signature,
            name: name.to_string(),
            comps: flat,
            sources,
        })
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.comps[i * self.dim + j]
    }

    pub fn source(&self, i: usize, j: usize) -> &str {
        &self.sources[i * self.dim + j]
    }

    pub fn is_lorentzian(&self) -> bool {
        self.signature.iter().any(|&s| s < 0)
    }

    /// Flat model `η` of the declared signature.
    pub fn eta(&self) -> Vec<f64> {
        self.signature.iter().map(|&s| s as f64).collect()
    }

    /// `g(x)` as a dense matrix.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.comps[i * n + j].eval(x);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Components evaluated on jet arguments (row-major, symmetric).
    pub fn eval_jets(&self, x: &[Jet<f64>]) -> JetMat<f64> {
        let n = self.dim;
        let mut rows: Vec<Vec<Option<Jet<f64>>>> = vec![vec![None; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.comps[i * n + j].eval(x);
                rows[j][i] = Some(v.clone());
                rows[i][j] = Some(v);
            }
        }
        rows.into_iter()
            .map(|r| r.into_iter().map(|v| v.unwrap()).collect())
            .collect()
    }

    /// Taylor expansion of `g` around `x` to the given order.
    pub fn taylor(&self, x: &[f64], order: usize) -> Result<JetMat<f64>> {
        let vars = Jet::variables(x, order);
        let g = self.eval_jets(&vars);
        if g.iter().flatten().any(|j| !j.is_finite()) {
            return Err(Error::NonFinite(format!("metric {} at {x:?}", self.name)));
        }
        Ok(g)
    }

    /// Check invertibility and eigenvalue signs against the declaration.
    pub fn check_signature(&self, x: &[f64]) -> Result<()> {
        let g = self.eval(x);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("metric {} at {x:?}", self.name)));
        }
        let eig = SymmetricEigen::new(g.clone());
        let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        if eig.eigenvalues.iter().any(|l| l.abs() <= 1e-13 * scale) {
            return Err(Error::SingularMetric(x.to_vec()));
        }
        let mut found: Vec<i8> = eig.eigenvalues.iter().map(|l| if *l > 0.0 { 1 } else { -1 }).collect();
        let mut declared = self.signature.clone();
        found.sort();
        declared.sort();
        if found != declared {
            return Err(Error::Signature {
                point: x.to_vec(),
                declared: self.signature.clone(),
                found,
            });
        }
        Ok(())
    }

    /// Default base point used by drivers and tests.
    pub fn default_point(&self) -> Vec<f64> {
        match self.name.as_str() {
            "sphere2" => vec![std::f64::consts::FRAC_PI_2, 0.0],
            "bump2" => vec![0.3, -0.2],
            _ => vec![0.0; self.dim],
        }
    }
}

fn parse_signature(v: &toml::Value, dim: usize) -> Result<Vec<i8>> {
    match v {
        toml::Value::String(s) => s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::Config(format!("bad signature character '{c}'"))),
            })
            .collect(),
        toml::Value::Array(a) => a
            .iter()
            .map(|e| match e.as_integer() {
                Some(1) => Ok(1),
                Some(-1) => Ok(-1),
                _ => Err(Error::Config(format!("bad signature entry {e}"))),
            })
            .collect(),
        _ => Err(Error::Config(format!("signature for dim {dim} must be a string or array"))),
    }
}

fn diag_metric(name: &str, entries: Vec<Expr>, signature: Option<Vec<i8>>) -> Result<MetricExpr> {
    let n = entries.len();
    let sig = match signature {
        Some(s) => s,
        None => {
            let x0 = vec![0.0; n];
            entries
                .iter()
                .map(|e| if e.eval(&x0) >= 0.0 { 1 } else { -1 })
                .collect()
        }
    };
    let comps = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { entries[i].clone() } else { Expr::num(0.0) })
                .collect()
        })
        .collect();
    MetricExpr::from_components(name, sig, comps)
}

/// Parse a metric definition.
///
/// Accepted forms: a bare `diag(e0, e1, ...)` (signature read off the
/// entries at the origin), or TOML text with keys `dim`, `signature`
/// (`"+---"` or `[1, -1, -1, -1]`), `name`, and either `g = "diag(...)"` or
/// component entries `g00 = "..."`, `g01 = "..."`. Unspecified off-diagonal
/// components are 0; if both `gij` and `gji` are given they must agree.
pub fn parse_metric(source: &str) -> Result<MetricExpr> {
    let trimmed = source.trim();
    if trimmed.starts_with("diag") {
        let n = trimmed.matches(',').count() + 1;
        let entries = parse_call_list(trimmed, "diag", n, "diag")?
            .ok_or_else(|| Error::Config("malformed diag(...)".into()))?;
        return diag_metric("diag", entries, None);
    }
    let table: toml::Table = source
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let name = table
        .get("name")
        .and_then(|v| v.as_str())
        .unwrap_or("custom")
        .to_string();
    let dim = table
        .get("dim")
        .and_then(|v| v.as_integer())
        .ok_or_else(|| Error::Config("missing integer key 'dim'".into()))?;
    if !(2..=9).contains(&dim) {
        return Err(Error::Dimension(format!("dim must be in 2..=9, got {dim}")));
    }
    let n = dim as usize;
    let signature = match table.get("signature") {
        Some(v) => Some(parse_signature(v, n)?),
        None => None,
    };
    if let Some(s) = &signature {
        if s.len() != n {
            return Err(Error::Dimension(format!("signature has {} entries for dim {n}", s.len())));
        }
    }
    let expr_of = |key: &str, v: &toml::Value| -> Result<Expr> {
        match v {
            toml::Value::String(s) => parse_expr_in(s, n, key),
            toml::Value::Integer(i) => Ok(Expr::num(*i as f64)),
            toml::Value::Float(f) => Ok(Expr::num(*f)),
            _ => Err(Error::Config(format!("{key} must be a string or number"))),
        }
    };
    if let Some(v) = table.get("g") {
        let s = v
            .as_str()
            .ok_or_else(|| Error::Config("'g' must be a string".into()))?;
        let entries = parse_call_list(s, "diag", n, "g")?
            .ok_or_else(|| Error::Config("'g' must be diag(...)".into()))?;
        if entries.len() != n {
            return Err(Error::Dimension(format!("diag has {} entries for dim {n}", entries.len())));
        }
        return diag_metric(&name, entries, signature);
    }
    let mut given: Vec<Vec<Option<Expr>>> = vec![vec![None; n]; n];
    for (key, v) in &table {
        if matches!(key.as_str(), "name" | "dim" | "signature") {
            continue;
        }
        let idx = key.strip_prefix('g').filter(|r| r.len() == 2 && r.bytes().all(|b| b.is_ascii_digit()));
        let Some(idx) = idx else {
            return Err(Error::Config(format!("unknown key '{key}'")));
        };
        let i = (idx.as_bytes()[0] - b'0') as usize;
        let j = (idx.as_bytes()[1] - b'0') as usize;
        if i >= n || j >= n {
            return Err(Error::Dimension(format!("component {key} in a dim-{n} metric")));
        }
        given[i][j] = Some(expr_of(key, v)?);
    }
    let mut comps = vec![vec![Expr::num(0.0); n]; n];
    for i in 0..n {
        for j in i..n {
            let e = match (&given[i][j], &given[j][i]) {
                (Some(a), Some(b)) => {
                    if a != b && !agree_numerically(a, b, n) {
                        return Err(Error::NonSymmetric { i, j });
                    }
                    a.clone()
                }
                (Some(a), None) | (None, Some(a)) => a.clone(),
                (None, None) => {
                    if i == j {
                        return Err(Error::Config(format!("missing diagonal component g{i}{i}")));
                    }
                    Expr::num(0.0)
                }
            };
            comps[i][j] = e.clone();
            comps[j][i] = e;
        }
    }
    let signature = match signature {
        Some(s) => s,
        None => {
            let x0 = vec![0.0; n];
            (0..n)
                .map(|i| if comps[i][i].eval(&x0) >= 0.0 { 1 } else { -1 })
                .collect()
        }
    };
    MetricExpr::from_components(&name, signature, comps)
}

fn agree_numerically(a: &Expr, b: &Expr, n: usize) -> bool {
    // deterministic probe points
    (0..16).all(|k| {
        let x: Vec<f64> = (0..n)
            .map(|i| (0.37 * (k as f64 + 1.0) + 0.61 * i as f64).sin() * 0.9)
            .collect();
        let (va, vb) = (a.eval(&x), b.eval(&x));
        (va - vb).abs() <= 1e-12 * (1.0 + va.abs())
    })
}

/// Names of the built-in metrics.
pub const ZOO: &[&str] = &[
    "minkowski2",
    "minkowski4",
    "euclidean2",
    "euclidean4",
    "desitter4",
    "sphere2",
    "bump2",
];

/// Built-in metric by name.
pub fn zoo(name: &str) -> Result<MetricExpr> {
    let src = match name {
        "minkowski2" => "name = \"minkowski2\"\ndim = 2\nsignature = \"+-\"\ng = \"diag(1, -1)\"",
        "minkowski4" => "name = \"minkowski4\"\ndim = 4\nsignature = \"+---\"\ng = \"diag(1, -1, -1, -1)\"",
        "euclidean2" => "name = \"euclidean2\"\ndim = 2\nsignature = \"++\"\ng = \"diag(1, 1)\"",
        "euclidean4" => "name = \"euclidean4\"\ndim = 4\nsignature = \"++++\"\ng = \"diag(1, 1, 1, 1)\"",
        "desitter4" => {
            "name = \"desitter4\"\ndim = 4\nsignature = \"+---\"\n\
             g00 = \"1\"\ng11 = \"-exp(2*x0)\"\ng22 = \"-exp(2*x0)\"\ng33 = \"-exp(2*x0)\""
        }
        "sphere2" => "name = \"sphere2\"\ndim = 2\nsignature = \"++\"\ng00 = \"1\"\ng11 = \"sin(x0)^2\"",
        "bump2" => {
            "name = \"bump2\"\ndim = 2\nsignature = \"+-\"\n\
             g00 = \"1 + 0.2*exp(-(x0^2 + x1^2))\"\n\
             g01 = \"0.1*x0*x1*exp(-(x0^2 + x1^2))\"\n\
             g11 = \"-1 + 0.15*exp(-(x0^2 + 2*x1^2))\""
        }
        _ => return Err(Error::Config(format!("unknown zoo metric '{name}'"))),
    };
    parse_metric(src)
}

/// Christoffel symbols as jets of the given order around `x`,
/// indexed `[i * n * n + j * n + k]` for `Γ^i_{jk}`.
pub fn christoffel_jets(metric: &MetricExpr, x: &[f64], order: usize) -> Result<Vec<Jet<f64>>> {
    let n = metric.dim;
    let g = metric.taylor(x, order + 1)?;
    let gi = jet::inverse(&g).ok_or_else(|| Error::SingularMetric(x.to_vec()))?;
    let gi: JetMat<f64> = gi
        .iter()
        .map(|r| r.iter().map(|v| v.truncate(order)).collect())
        .collect();
    // dg[l][i][j] = ∂_l g_ij
    let dg: Vec<Vec<Vec<Jet<f64>>>> = (0..n)
        .map(|l| (0..n).map(|i| (0..n).map(|j| g[i][j].deriv(l)).collect()).collect())
        .collect();
    // first kind Γ_{l,jk}, then raise the index
    let mut first: Vec<Jet<f64>> = Vec::with_capacity(n * n * n);
    for l in 0..n {
        for j in 0..n {
            for k in 0..n {
                first.push((&(&dg[j][l][k] + &dg[k][l][j]) - &dg[l][j][k]).scale(0.5));
            }
        }
    }
    let mut out: Vec<Jet<f64>> = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if k < j {
                    let v: Jet<f64> = out[i * n * n + k * n + j].clone();
                    out.push(v);
                    continue;
                }
                let mut acc = Jet::zero(n, order);
                for l in 0..n {
                    let f = &first[l * n * n + j * n + k];
                    if !f.is_zero() && !gi[i][l].is_zero() {
                        acc += &gi[i][l].mul_ref(f);
                    }
                }
                out.push(acc);
            }
        }
    }
    Ok(out)
}

/// Levi-Civita curvature data at a point.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureAtPoint {
    pub dim: usize,
    pub point: Vec<f64>,
    /// `Γ^i_{jk}` at `[i][j][k]` flattened.
    pub christoffel: Vec<f64>,
    /// `R^i_{jkl}` flattened.
    pub riemann: Vec<f64>,
    /// `R_{jl}` flattened.
    pub ricci: Vec<f64>,
    pub scalar: f64,
}

impl CurvatureAtPoint {
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.christoffel[(i * n + j) * n + k]
    }

    pub fn riemann(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.riemann[((i * n + j) * n + k) * n + l]
    }

    pub fn ricci(&self, j: usize, l: usize) -> f64 {
        self.ricci[j * self.dim + l]
    }
}

pub fn curvature_at(metric: &MetricExpr, x: &[f64]) -> Result<CurvatureAtPoint> {
    let n = metric.dim;
    if x.len() != n {
        return Err(Error::Dimension(format!("point has {} coordinates for dim {n}", x.len())));
    }
    let g0 = metric.eval(x);
    let ginv = g0
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::SingularMetric(x.to_vec()))?;
    if g0.determinant().abs() < 1e-14 {
        return Err(Error::SingularMetric(x.to_vec()));
    }
    let gam = christoffel_jets(metric, x, 1)?;
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let christoffel: Vec<f64> = gam.iter().map(|j| j.value()).collect();
    let mut riemann = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = gam[idx(i, l, j)].partial(&[k]) - gam[idx(i, k, j)].partial(&[l]);
                    for m in 0..n {
                        v += christoffel[idx(i, k, m)] * christoffel[idx(m, l, j)]
                            - christoffel[idx(i, l, m)] * christoffel[idx(m, k, j)];
                    }
                    riemann[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    let mut ricci = vec![0.0; n * n];
    for j in 0..n {
        for l in 0..n {
            ricci[j * n + l] = (0..n).map(|i| riemann[((i * n + j) * n + i) * n + l]).sum();
        }
    }
    let mut scalar = 0.0;
    for j in 0..n {
        for l in 0..n {
            scalar += ginv[(j, l)] * ricci[j * n + l];
        }
    }
    Ok(CurvatureAtPoint {
        dim: n,
        point: x.to_vec(),
        christoffel,
        riemann,
        ricci,
        scalar,
    })
}

/// `(Pf)(x)` for `P = |g|^{-1/2} ∂_j |g|^{1/2} g^{jk} ∂_k`, with `f` given as
/// a function on second-order jets.
pub fn wave_apply<F>(metric: &MetricExpr, f: F, x: &[f64]) -> Result<f64>
where
    F: Fn(&[Jet<f64>]) -> Jet<f64>,
{
    let n = metric.dim;
    let vars = Jet::variables(x, 2);
    let fj = f(&vars);
    let g = metric.taylor(x, 1)?;
    let gi = jet::inverse(&g).ok_or_else(|| Error::SingularMetric(x.to_vec()))?;
    let d = jet::det(&g).ok_or_else(|| Error::SingularMetric(x.to_vec()))?;
    let d = if d.value() < 0.0 { -d } else { d };
    if d.value() == 0.0 {
        return Err(Error::SingularMetric(x.to_vec()));
    }
    // ∂_j log |g|^{1/2}
    let logvol = d.ln().scale(0.5);
    let mut out = 0.0;
    for j in 0..n {
        for k in 0..n {
            let gjk = gi[j][k].value();
            out += gjk * fj.partial(&[j, k]);
            out += gi[j][k].partial(&[j]) * fj.partial(&[k]);
            out += gjk * logvol.partial(&[j]) * fj.partial(&[k]);
        }
    }
    if !out.is_finite() {
        return Err(Error::NonFinite("wave operator".into()));
    }
    Ok(out)
}

/// `wave_apply` for a function given as an expression.
pub fn wave_apply_expr(metric: &MetricExpr, f: &Expr, x: &[f64]) -> Result<f64> {
    if let Some(v) = f.max_var() {
        if v >= metric.dim {
            return Err(Error::Dimension(format!("x{v} in a dim-{} metric", metric.dim)));
        }
    }
    wave_apply(metric, |v| f.eval(v), x)
}
