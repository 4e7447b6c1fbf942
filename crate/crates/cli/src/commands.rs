//! The curvature, hadamard and residue commands.

use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use resdyn_core::hadamard::{solve_at, GridParams, HadamardTable, MAX_ORDER};
use resdyn_core::metricspace::{curvature_at, CurvatureAtPoint, MetricExpr};
use resdyn_core::modeldist::{stokes_residue_integral, ModelQuadratic};
use resdyn_core::quadrature::{richardson, ConeGrading, SphereQuadrature};
use resdyn_core::residuecalc::{complex_power_dynres, Delta, ResidueReport};
use resdyn_core::scaledyn::{project_pi0_residue, ConcentratingFamily, CorrelatorQuadrature, FitSpec, HadamardKernel};
use resdyn_core::special::gamma;
use serde::Serialize;

use crate::config::{RunConfig, ZSpec};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub pass: bool,
    pub report: T,
}

pub fn envelope<T: Serialize>(command: &'static str, pass: bool, report: T) -> Envelope<T> {
    Envelope { schema_version: SCHEMA_VERSION, command, pass, report }
}

#[derive(Debug, Serialize)]
pub struct CurvatureReport {
    pub metric: String,
    pub points: Vec<CurvatureAtPoint>,
}

pub fn cmd_curvature(cfg: &RunConfig) -> Result<CurvatureReport> {
    let m = cfg.metric()?;
    let points = cfg
        .points_for(&m)?
        .iter()
        .map(|p| {
            m.check_signature(p)?;
            curvature_at(&m, p)
        })
        .collect::<resdyn_core::Result<Vec<_>>>()
        .with_context(|| format!("curvature of '{}'", m.name))?;
    Ok(CurvatureReport { metric: m.name.clone(), points })
}

fn grid_for(cfg: &RunConfig, m: &MetricExpr) -> GridParams {
    let mut g = GridParams::for_dim(m.dim);
    if let Some(d) = cfg.fit_degree {
        g.fit_degree = d;
    }
    if let Some(r) = cfg.radius {
        g.radius = r;
    }
    g
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        bail!("transport order N = {n} exceeds the cap N ≤ {MAX_ORDER}");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct DiagonalEntry {
    pub k: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Serialize)]
pub struct HadamardPoint {
    pub point: Vec<f64>,
    pub diagonal: Vec<DiagonalEntry>,
    /// (u_1 + R/6) relative to R/6, when R ≠ 0 and N ≥ 1.
    pub curvature_delta: Option<Delta>,
    pub table: HadamardTable,
}

#[derive(Debug, Serialize)]
pub struct HadamardReport {
    pub metric: String,
    pub order: usize,
    pub points: Vec<HadamardPoint>,
}

pub fn cmd_hadamard(cfg: &RunConfig) -> Result<HadamardReport> {
    let m = cfg.metric()?;
    let order = cfg.order.unwrap_or(1);
    check_order(order)?;
    let grid = grid_for(cfg, &m);
    let points = cfg
        .points_for(&m)?
        .into_iter()
        .map(|p| -> Result<HadamardPoint> {
            let table = solve_at(&m, &p, order, &grid).with_context(|| format!("transport at {p:?}"))?;
            let diagonal = table
                .diagonal_coefficients()
                .into_iter()
                .enumerate()
                .map(|(k, (value, error))| DiagonalEntry { k, value, error })
                .collect();
            let curvature_delta = if order >= 1 {
                let r = curvature_at(&m, &p)?.scalar;
                let want = -r / 6.0;
                let d = (table.diagonal[1] - want).abs();
                Some(Delta::new("u1_vs_minus_R_over_6", if want != 0.0 { d / want.abs() } else { d }, cfg.tolerance))
            } else {
                None
            };
            Ok(HadamardPoint { point: p, diagonal, curvature_delta, table })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HadamardReport { metric: m.name.clone(), order, points })
}

impl HadamardReport {
    pub fn pass(&self) -> bool {
        self.points.iter().all(|p| p.curvature_delta.as_ref().is_none_or(|d| d.pass))
    }
}

#[derive(Debug, Serialize)]
pub struct ResidueRun {
    pub metric: String,
    pub numeric_route: &'static str,
    pub reports: Vec<ResidueReport>,
}

/// Numeric route for the residue command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericRoute {
    /// Formula with the sphere constant replaced by the extrapolated Stokes integral.
    Stokes,
    /// Resonance fit of the scaled kernel Σ u_k F_k (n = 2 Lorentzian, α = 1).
    Scaling,
}

pub fn cmd_residue(cfg: &RunConfig, route: NumericRoute) -> Result<ResidueRun> {
    let m = cfg.metric()?;
    let n = m.dim;
    if n != 2 && n != 4 {
        bail!("residues are computed for n ∈ {{2, 4}}, got n = {n}");
    }
    let needed = cfg.alphas.iter().map(|&a| (n as i64 / 2 - a).max(0) as usize).max().unwrap_or(0);
    let order = cfg.order.unwrap_or(0).max(needed);
    check_order(order)?;
    if route == NumericRoute::Scaling && (n != 2 || !m.is_lorentzian()) {
        bail!("the scaling route runs on Lorentzian n = 2 metrics");
    }
    let grid = grid_for(cfg, &m);
    let q = if m.is_lorentzian() { ModelQuadratic::lorentzian(n) } else { ModelQuadratic::euclidean(n) };

    // Stokes constant (2π)^{−n} Γ(n/2) I_n replaces i / (2^{n−1} π^{n/2})
    let sphere = if q.lorentzian {
        SphereQuadrature::cone_adapted(n, ConeGrading::default())?
    } else {
        SphereQuadrature::polynomial(n, 16)?
    };
    let stokes = stokes_residue_integral(&q, &cfg.eps, &sphere)?;
    let exact_const = Complex64::new(0.0, 1.0) / (2f64.powi(n as i32 - 1) * PI.powf(n as f64 / 2.0));
    let numeric_const = stokes.value * gamma(n as f64 / 2.0) / (2.0 * PI).powi(n as i32);
    let scale = numeric_const / exact_const;

    let points = cfg.points_for(&m)?;
    let mut reports = Vec::new();
    for p in points {
        let table = solve_at(&m, &p, order, &grid).with_context(|| format!("transport at {p:?}"))?;
        let u: Vec<Complex64> = table.diagonal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let provenance = format!(
            "transport table N={} radius {} panels {}x{} directions {} fit degree {}; diagonal errors {:?}",
            table.order,
            grid.radius,
            grid.panels,
            grid.panel_nodes,
            grid.directions,
            grid.fit_degree,
            table.diagonal_error
        );
        let scalar = curvature_at(&m, &p)?.scalar;
        let work: Vec<(i64, ZSpec)> = cfg.alphas.iter().flat_map(|&a| cfg.zs.iter().map(move |&z| (a, z))).collect();
        let rows = work
            .par_iter()
            .map(|&(alpha, zs)| -> Result<ResidueReport> {
                let eval = |z: Complex64| complex_power_dynres(n, alpha, z, &u);
                let (z, analytic) = match zs {
                    ZSpec::Value(z) => (z, eval(z)?),
                    ZSpec::Limit => {
                        let vals = cfg
                            .eps
                            .eps
                            .iter()
                            .map(|&e| eval(Complex64::new(0.0, e)))
                            .collect::<resdyn_core::Result<Vec<_>>>()?;
                        (Complex64::new(0.0, 0.0), richardson(&cfg.eps.eps, &vals)?.value)
                    }
                };
                let in_range = alpha >= 1 && alpha <= n as i64 / 2;
                let mut deltas = Vec::new();
                let mut note = if in_range { None } else { Some(format!("α = {alpha} out of residue range 1..={}", n / 2)) };
                let numeric = match route {
                    NumericRoute::Stokes => Some(analytic * scale),
                    NumericRoute::Scaling => {
                        if alpha != 1 {
                            None
                        } else {
                            let zz = if z.im > 0.0 { z } else { Complex64::new(0.0, 1.0) };
                            Some(scaling_residue(&m, &p, zz, &grid)?)
                        }
                    }
                };
                if let Some(v) = numeric {
                    let d = (v - analytic).norm();
                    let rel = if analytic.norm() > 0.0 { d / analytic.norm() } else { d };
                    let name = if route == NumericRoute::Stokes { "stokes_route" } else { "scaling_route" };
                    deltas.push(Delta::new(name, rel, cfg.tolerance));
                    if route == NumericRoute::Scaling {
                        let flip = (v + analytic).norm() / analytic.norm().max(f64::MIN_POSITIVE);
                        note = Some(format!("|numeric + analytic| / |analytic| = {flip:.2e}"));
                    }
                }
                if n == 4 && alpha == 1 && z.norm() == 0.0 && scalar != 0.0 {
                    let want = Complex64::new(0.0, -scalar / (48.0 * PI * PI));
                    deltas.push(Delta::new("curvature_identity", (analytic - want).norm() / want.norm(), cfg.tolerance));
                }
                let imaginary_z = z.re == 0.0 && z.im >= 0.0;
                Ok(ResidueReport {
                    point: p.clone(),
                    alpha,
                    z,
                    analytic,
                    numeric,
                    zeta: if in_range && imaginary_z { Some(analytic / 2.0) } else { None },
                    deltas,
                    u_provenance: provenance.clone(),
                    note,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        reports.extend(rows);
    }
    let numeric_route = match route {
        NumericRoute::Stokes => "stokes",
        NumericRoute::Scaling => "scaling",
    };
    Ok(ResidueRun { metric: m.name.clone(), numeric_route, reports })
}

/// −b_0 of the scaled truncated parametrix Σ_{k≤1} u_k F_k at x.
fn scaling_residue(m: &MetricExpr, x: &[f64], z: Complex64, grid: &GridParams) -> Result<Complex64> {
    let fam = ConcentratingFamily::new(x, 0.8 * grid.radius);
    let kernel = HadamardKernel::build(m, &fam.all_nodes(), z, 1, grid)?;
    let quad = CorrelatorQuadrature::new(2, true)?;
    let r = project_pi0_residue(&kernel.into_sampled(), &fam, &quad, &FitSpec::default())?;
    Ok(r.value)
}

impl ResidueRun {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.all_pass())
    }
}
