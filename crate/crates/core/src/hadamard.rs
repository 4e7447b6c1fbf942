//! Hadamard transport hierarchy along normal-coordinate rays.
//!
//! Along h = tω the k-th transport equation reads
//! 2t u_k' + (2k + h·∇log|g̃|^{1/2}) u_k = −2 P u_{k−1}. We solve u_0 by
//! exponential quadrature and u_k by the integrating factor
//! u_k(t) = −t^{−k} u_0(t) ∫_0^t s^{k−1} (P u_{k−1})(sω)/u_0(sω) ds.
//! P u_0 is exact (jets of the exp map); P u_k for k ≥ 1 comes from
//! moving least-squares quadratic fits over neighbouring stations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{self, Jet};
use crate::metricspace::MetricExpr;
use crate::normalgeo::{GeoOptions, NormalCoordinateSystem};
use crate::quadrature::{richardson, CumulativeRule, SphereQuadrature};

/// Largest transport order accepted.
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridParams {
    /// Outer radius of the radial grid (≤ chart trust radius).
    pub radius: f64,
    pub panels: usize,
    pub panel_nodes: usize,
    /// Number of rays for n = 2; polynomial order of the S³ rule for n = 4.
    pub directions: usize,
    /// Neighbours per least-squares stencil (0 = automatic).
    pub stencil: usize,
    /// Total degree of the local least-squares polynomial (2 = quadratic).
    pub fit_degree: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { radius: 0.3, panels: 2, panel_nodes: 8, directions: 16, stencil: 0, fit_degree: 2 }
    }
}

impl GridParams {
    pub fn for_dim(n: usize) -> Self {
        if n == 4 {
            GridParams { directions: 3, ..Default::default() }
        } else {
            Default::default()
        }
    }

    /// Same grid with the radial step halved.
    pub fn refined(&self) -> Self {
        GridParams { panels: 2 * self.panels, ..*self }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// max |u_0^{quad}·|g̃|^{1/4} − 1| over the grid
    pub u0_closed_form_defect: f64,
    /// max Gauss-lemma residual |g̃(h)h − ηh| over the grid
    pub gauss_lemma_max: f64,
    /// worst least-squares stencil condition number (0 when unused)
    pub stencil_condition_max: f64,
    /// diagonal P u_0(0) from the exact jets
    pub pu0_at_origin: f64,
}

/// Transport coefficients sampled on rays through the origin.
#[derive(Debug, Clone, Serialize)]
pub struct HadamardTable {
    pub metric: String,
    pub base: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    pub order: usize,
    pub grid: GridParams,
    pub directions: Vec<Vec<f64>>,
    /// radial nodes, ascending (origin excluded)
    pub radii: Vec<f64>,
    /// values[k][ray][radius]
    pub values: Vec<Vec<Vec<f64>>>,
    pub diagonal: Vec<f64>,
    pub diagonal_error: Vec<f64>,
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    breaks: Vec<f64>,
}

/// Geometric data of g̃ at a station.
#[derive(Debug, Clone)]
struct Station {
    h: Vec<f64>,
    u0: f64,
    ginv: Vec<f64>,
    /// ∂_c g̃^{ab} at [c][a][b]
    dginv: Vec<f64>,
    /// ∂_a log|g̃|^{1/2}
    dl: Vec<f64>,
    pu0: f64,
    gauss: f64,
}

fn station(ncs: &NormalCoordinateSystem, h: &[f64]) -> Result<Station> {
    let n = ncs.dim();
    let g = ncs.pulled_back_metric(h, 2)?;
    let gi = jet::inverse(&g).ok_or_else(|| Error::SingularMetric(h.to_vec()))?;
    let det = jet::det(&g).ok_or_else(|| Error::SingularMetric(h.to_vec()))?;
    let det = if det.value() < 0.0 { -det } else { det };
    let l = det.ln().scale(0.5);
    let u0 = l.scale(-0.5).exp();
    let mut ginv = vec![0.0; n * n];
    let mut dginv = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            ginv[a * n + b] = gi[a][b].value();
            let gr = gi[a][b].gradient();
            for c in 0..n {
                dginv[c * n * n + a * n + b] = gr[c];
            }
        }
    }
    let dl = l.gradient();
    let grad = u0.gradient();
    let hess = u0.hessian();
    let pu0 = apply_p(n, &ginv, &dginv, &dl, &grad, &hess);
    let eta = ncs.eta.clone();
    let mut gauss = 0.0f64;
    for i in 0..n {
        let lhs: f64 = (0..n).map(|j| g[i][j].value() * h[j]).sum();
        gauss = gauss.max((lhs - eta[i] * h[i]).abs());
    }
    Ok(Station { h: h.to_vec(), u0: u0.value(), ginv, dginv, dl, pu0, gauss })
}

/// P f from the gradient and Hessian of f and the metric data.
fn apply_p(n: usize, ginv: &[f64], dginv: &[f64], dl: &[f64], grad: &[f64], hess: &[Vec<f64>]) -> f64 {
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += ginv[a * n + b] * (hess[a][b] + dl[a] * grad[b]);
            acc += dginv[a * n * n + a * n + b] * grad[b];
        }
    }
    acc
}

fn directions(n: usize, grid: &GridParams) -> Result<Vec<Vec<f64>>> {
    match n {
        2 => {
            let m = grid.directions.max(4);
            if m % 2 == 1 {
                return Err(Error::Config("n = 2 needs an even number of rays".into()));
            }
            Ok((0..m)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / m as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect())
        }
        4 => {
            let order = if grid.directions % 2 == 0 { grid.directions + 1 } else { grid.directions };
            // Near the origin every stencil point lies on a ray line, and the
            // quadratic fits need the lines to pin down all 10 quadratic
            // forms. The rule alone gives 8 lines on coordinate axes, so use
            // two generically rotated copies.
            let base = SphereQuadrature::polynomial(4, order)?.nodes;
            let turn = |angles: [f64; 6]| -> Vec<Vec<f64>> {
                let mut nodes = base.clone();
                for ((i, j), a) in [(0, 1), (2, 3), (0, 2), (1, 3), (0, 3), (1, 2)].into_iter().zip(angles) {
                    let (s, c) = f64::sin_cos(a);
                    for w in nodes.iter_mut() {
                        let (p, q) = (w[i], w[j]);
                        w[i] = c * p - s * q;
                        w[j] = s * p + c * q;
                    }
                }
                nodes
            };
            let mut nodes = turn([0.31, 0.67, 1.13, 0.53, 0.89, 0.23]);
            nodes.extend(turn([1.41, 0.17, 0.59, 1.27, 0.37, 0.97]));
            Ok(nodes)
        }
        _ => Err(Error::Cap(format!("transport solver supports n ∈ {{2, 4}}, got {n}"))),
    }
}

fn antipode_index(dirs: &[Vec<f64>]) -> Result<Vec<usize>> {
    dirs.iter()
        .map(|w| {
            dirs.iter()
                .position(|v| v.iter().zip(w).all(|(a, b)| (a + b).abs() < 1e-12))
                .ok_or_else(|| Error::Config("direction set is not antipodally symmetric".into()))
        })
        .collect()
}

/// Solve the transport hierarchy to order N on a ray grid.
pub fn solve_transport(ncs: &NormalCoordinateSystem, order: usize, grid: &GridParams) -> Result<HadamardTable> {
    let n = ncs.dim();
    if order > MAX_ORDER {
        return Err(Error::Cap(format!("N = {order} exceeds the cap N ≤ {MAX_ORDER}")));
    }
    if grid.radius > ncs.radius {
        return Err(Error::TrustRadius { norm: grid.radius, radius: ncs.radius });
    }
    let dirs = directions(n, grid)?;
    let anti = antipode_index(&dirs)?;
    let breaks: Vec<f64> = (0..=grid.panels).map(|p| grid.radius * p as f64 / grid.panels as f64).collect();
    let cum = CumulativeRule::new(breaks.clone(), grid.panel_nodes);
    let radii = cum.nodes().to_vec();
    let nr = radii.len();

    // stations: origin first, then ray-major
    let mut pts: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for w in &dirs {
        for &t in &radii {
            pts.push(w.iter().map(|c| c * t).collect());
        }
    }
    let stations: Vec<Station> = pts.par_iter().map(|h| station(ncs, h)).collect::<Result<_>>()?;
    let idx = |ray: usize, q: usize| 1 + ray * nr + q;

    let mut diag = Diagnostics {
        u0_closed_form_defect: 0.0,
        gauss_lemma_max: stations.iter().map(|s| s.gauss).fold(0.0, f64::max),
        stencil_condition_max: 0.0,
        pu0_at_origin: stations[0].pu0,
    };

    // u_0 by exponential quadrature of ω·∇L / 2
    let mut values: Vec<Vec<Vec<f64>>> = Vec::with_capacity(order + 1);
    let mut u0 = Vec::with_capacity(dirs.len());
    for (r, w) in dirs.iter().enumerate() {
        let f: Vec<f64> = (0..nr)
            .map(|q| 0.5 * stations[idx(r, q)].dl.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let c = cum.apply(&f);
        let ray: Vec<f64> = c.iter().map(|v| (-v).exp()).collect();
        for q in 0..nr {
            let d = (ray[q] / stations[idx(r, q)].u0 - 1.0).abs();
            diag.u0_closed_form_defect = diag.u0_closed_form_defect.max(d);
        }
        u0.push(ray);
    }
    values.push(u0);

    let mut diagonal = vec![1.0];
    let mut diagonal_error = vec![0.0];
    let fit_degree = grid.fit_degree.max(2);
    let npar = jet::basis(n, fit_degree).len();
    let stencil = if grid.stencil > 0 { grid.stencil } else { 3 * npar };

    for k in 1..=order {
        // P u_{k−1} at every station
        let pu: Vec<f64> = if k == 1 {
            stations.iter().map(|s| s.pu0).collect()
        } else {
            let mut field = vec![diagonal[k - 1]];
            for r in 0..dirs.len() {
                field.extend_from_slice(&values[k - 1][r]);
            }
            let (pu, cond) = mls_apply_p(n, &stations, &field, nr, stencil, fit_degree)?;
            diag.stencil_condition_max = diag.stencil_condition_max.max(cond);
            pu
        };
        let mut level = Vec::with_capacity(dirs.len());
        for r in 0..dirs.len() {
            let g: Vec<f64> = (0..nr)
                .map(|q| {
                    let s = &stations[idx(r, q)];
                    radii[q].powi(k as i32 - 1) * pu[idx(r, q)] / s.u0
                })
                .collect();
            let c = cum.apply(&g);
            let ray: Vec<f64> = (0..nr)
                .map(|q| -values[0][r][q] * c[q] / radii[q].powi(k as i32))
                .collect();
            level.push(ray);
        }
        values.push(level);
        let (d, e) = extrapolate_diagonal(&values[k], &radii, &anti)?;
        diagonal.push(d);
        diagonal_error.push(e);
    }

    Ok(HadamardTable {
        metric: ncs.metric.name.clone(),
        base: ncs.base.clone(),
        frame: (0..n).map(|a| (0..n).map(|i| ncs.frame[(i, a)]).collect()).collect(),
        order,
        grid: *grid,
        directions: dirs,
        radii,
        values,
        diagonal,
        diagonal_error,
        diagnostics: diag,
        breaks,
    })
}

/// Richardson in t² over the three smallest radii of each antipodal pair.
fn extrapolate_diagonal(level: &[Vec<f64>], radii: &[f64], anti: &[usize]) -> Result<(f64, f64)> {
    let hs: Vec<f64> = radii[..3].iter().map(|t| t * t).collect();
    let mut vals = Vec::new();
    let mut err = 0.0f64;
    for (r, &a) in anti.iter().enumerate() {
        if a < r {
            continue;
        }
        let fs: Vec<Complex64> = (0..3).map(|q| Complex64::new(0.5 * (level[r][q] + level[a][q]), 0.0)).collect();
        let e = richardson(&hs, &fs)?;
        vals.push(e.value.re);
        err = err.max(e.error);
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if !mean.is_finite() {
        return Err(Error::Extrapolation("non-finite diagonal value".into()));
    }
    Ok((mean, err.max(spread)))
}

/// P f at every station from weighted local least-squares polynomial fits.
/// Stations are the origin followed by `per_ray` stations on each ray; a
/// stencil takes at most `degree + 1` stations from any one ray so that it
/// spreads across rays.
fn mls_apply_p(n: usize, st: &[Station], f: &[f64], per_ray: usize, k: usize, degree: usize) -> Result<(Vec<f64>, f64)> {
    let basis = jet::basis(n, degree);
    let npar = basis.len();
    let k = k.min(st.len());
    if k < npar {
        return Err(Error::Stencil(format!("{k} stations cannot fit {npar} polynomial coefficients")));
    }
    let res: Vec<(f64, f64)> = (0..st.len())
        .into_par_iter()
        .map(|s| {
            let h0 = &st[s].h;
            let mut d: Vec<(f64, usize)> = st
                .iter()
                .enumerate()
                .map(|(j, o)| (o.h.iter().zip(h0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), j))
                .collect();
            d.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let cap = degree + 1;
            let mut used = vec![0usize; (st.len() - 1) / per_ray.max(1) + 1];
            let mut near = Vec::with_capacity(k);
            for &(d2, j) in &d {
                let ray = if j == 0 { 0 } else { 1 + (j - 1) / per_ray };
                if ray > 0 && used[ray - 1] >= cap {
                    continue;
                }
                if ray > 0 {
                    used[ray - 1] += 1;
                }
                near.push((d2, j));
                if near.len() == k {
                    break;
                }
            }
            if near.len() < k {
                return Err(Error::Stencil(format!("only {} stations available for a {k}-point stencil", near.len())));
            }
            let rk = near.iter().map(|p| p.0).fold(0.0, f64::max).sqrt().max(1e-300);
            let mut a = DMatrix::<f64>::zeros(k, npar);
            let mut b = DVector::<f64>::zeros(k);
            for (row, &(d2, j)) in near.iter().enumerate() {
                let w = (-d2 / (rk * rk)).exp().sqrt();
                let dx: Vec<f64> = st[j].h.iter().zip(h0).map(|(p, q)| (p - q) / rk).collect();
                for col in 0..npar {
                    let e = basis.exponents(col);
                    let m: f64 = e.iter().zip(&dx).map(|(&p, v)| v.powi(p as i32)).product();
                    a[(row, col)] = w * m;
                }
                b[row] = w * f[j];
            }
            let svd = a.svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
            let c = svd.solve(&b, 1e-14 * smax).map_err(|e| Error::Stencil(e.to_string()))?;
            let cj = Jet::from_coeffs(n, degree, c.iter().copied().collect());
            let grad: Vec<f64> = cj.gradient().iter().map(|g| g / rk).collect();
            let hess: Vec<Vec<f64>> = cj.hessian().iter().map(|r| r.iter().map(|v| v / (rk * rk)).collect()).collect();
            let s0 = &st[s];
            Ok((apply_p(n, &s0.ginv, &s0.dginv, &s0.dl, &grad, &hess), cond))
        })
        .collect::<Result<_>>()?;
    let cond = res.iter().map(|r| r.1).fold(0.0, f64::max);
    if cond > 1e12 {
        return Err(Error::Stencil(format!("condition number {cond:e}; grid too coarse for the requested order")));
    }
    Ok((res.into_iter().map(|r| r.0).collect(), cond))
}

impl HadamardTable {
    /// Extrapolated diagonal values u_k(x, x) with error estimates.
    pub fn diagonal_coefficients(&self) -> Vec<(f64, f64)> {
        self.diagonal.iter().copied().zip(self.diagonal_error.iter().copied()).collect()
    }

    /// u_k at normal coordinates h (n = 2: trigonometric interpolation over
    /// rays, Lagrange interpolation in the radial panel).
    pub fn eval(&self, k: usize, h: &[f64]) -> Result<f64> {
        if h.len() != 2 {
            return Err(Error::Invalid("table interpolation implemented for n = 2".into()));
        }
        let t = (h[0] * h[0] + h[1] * h[1]).sqrt();
        if t > self.grid.radius * (1.0 + 1e-12) {
            return Err(Error::TrustRadius { norm: t, radius: self.grid.radius });
        }
        if t == 0.0 {
            return Ok(self.diagonal[k]);
        }
        let th = h[1].atan2(h[0]);
        let m = self.directions.len();
        let cum = self.radial_rule();
        let ray_vals: Vec<f64> = (0..m).map(|r| cum.interpolate(&self.values[k][r], t)).collect();
        Ok(trig_interp(&ray_vals, th))
    }

    fn radial_rule(&self) -> CumulativeRule {
        CumulativeRule::new(self.breaks.clone(), self.grid.panel_nodes)
    }

    /// Interpolator reusing the radial rule (for repeated evaluation).
    pub fn interpolator(&self, k: usize) -> Result<TableInterpolator<'_>> {
        if self.directions[0].len() != 2 {
            return Err(Error::Invalid("table interpolation implemented for n = 2".into()));
        }
        Ok(TableInterpolator { table: self, k, cum: self.radial_rule() })
    }
}

pub struct TableInterpolator<'a> {
    table: &'a HadamardTable,
    k: usize,
    cum: CumulativeRule,
}

impl TableInterpolator<'_> {
    pub fn eval(&self, h: &[f64]) -> f64 {
        let t = (h[0] * h[0] + h[1] * h[1]).sqrt();
        if t == 0.0 {
            return self.table.diagonal[self.k];
        }
        let th = h[1].atan2(h[0]);
        let vals: Vec<f64> = self.table.values[self.k].iter().map(|ray| self.cum.interpolate(ray, t)).collect();
        trig_interp(&vals, th)
    }
}

/// u_k along the ray through a fixed unit direction (n = 2).
pub struct RayProfile {
    cum: CumulativeRule,
    vals: Vec<f64>,
    diag: f64,
    radius: f64,
}

impl RayProfile {
    /// Value at distance r ∈ [0, radius] along the ray.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if r > self.radius * (1.0 + 1e-12) {
            return Err(Error::TrustRadius { norm: r, radius: self.radius });
        }
        if r == 0.0 {
            return Ok(self.diag);
        }
        Ok(self.cum.interpolate(&self.vals, r))
    }
}

impl HadamardTable {
    /// Radial profile of u_k in direction `w`, interpolated across rays once.
    pub fn ray_profile(&self, k: usize, w: &[f64]) -> Result<RayProfile> {
        if w.len() != 2 || self.directions[0].len() != 2 {
            return Err(Error::Invalid("table interpolation implemented for n = 2".into()));
        }
        if k > self.order {
            return Err(Error::MissingCoefficients { need: k + 1, have: self.order + 1 });
        }
        let th = w[1].atan2(w[0]);
        let rays = &self.values[k];
        let m = rays.len();
        let nq = rays[0].len();
        let weights: Vec<f64> = (0..m)
            .map(|j| {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                trig_interp(&e, th)
            })
            .collect();
        let vals = (0..nq).map(|q| (0..m).map(|j| weights[j] * rays[j][q]).sum()).collect();
        Ok(RayProfile { cum: self.radial_rule(), vals, diag: self.diagonal[k], radius: self.grid.radius })
    }
}

/// Trigonometric interpolation of equispaced samples (even count) at θ.
fn trig_interp(v: &[f64], th: f64) -> f64 {
    let m = v.len();
    let mut acc = 0.0;
    for (j, vj) in v.iter().enumerate() {
        let x = th - 2.0 * PI * j as f64 / m as f64;
        let s = (x / 2.0).sin();
        let w = if s.abs() < 1e-14 { 1.0 } else { (m as f64 * x / 2.0).sin() / (m as f64 * s) * (x / 2.0).cos() };
        acc += w * vj;
    }
    acc
}

/// Build normal coordinates and solve in one call.
pub fn solve_at(metric: &MetricExpr, x: &[f64], order: usize, grid: &GridParams) -> Result<HadamardTable> {
    let ncs = NormalCoordinateSystem::new(metric, x, grid.radius.max(0.5), GeoOptions::default())?;
    solve_transport(&ncs, order, grid)
}

/// Grid-refinement evidence for u_k(x, x): (coarse, coarse error, fine, |fine − coarse|).
pub fn refinement_check(ncs: &NormalCoordinateSystem, order: usize, k: usize, grid: &GridParams) -> Result<(f64, f64, f64, f64)> {
    let a = solve_transport(ncs, order, grid)?;
    let b = solve_transport(ncs, order, &grid.refined())?;
    Ok((a.diagonal[k], a.diagonal_error[k], b.diagonal[k], (a.diagonal[k] - b.diagonal[k]).abs()))
}

/// u_0 along a ray as a jet check: |g̃|^{−1/4} at h.
pub fn u0_closed_form(ncs: &NormalCoordinateSystem, h: &[f64]) -> Result<f64> {
    let g = ncs.pulled_back_metric(h, 0)?;
    let d: Jet<f64> = jet::det(&g).ok_or_else(|| Error::SingularMetric(h.to_vec()))?;
    Ok(d.value().abs().powf(-0.25))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metricspace::zoo;

    #[test]
    fn minkowski_is_trivial() {
        let m = zoo("minkowski2").unwrap();
        let t = solve_at(&m, &[0.0, 0.0], 2, &GridParams::default()).unwrap();
        assert_eq!(t.diagonal[0], 1.0);
        for k in 1..=2 {
            assert!(t.diagonal[k].abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_u1() {
        let m = zoo("sphere2").unwrap();
        let t = solve_at(&m, &m.default_point(), 1, &GridParams::default()).unwrap();
        assert!((t.diagonal[1] + 1.0 / 3.0).abs() < 1e-6, "{:?}", t.diagonal);
        assert!(t.diagnostics.u0_closed_form_defect < 1e-9);
    }

    #[test]
    fn cap_enforced() {
        let m = zoo("minkowski2").unwrap();
        assert!(matches!(solve_at(&m, &[0.0, 0.0], 5, &GridParams::default()), Err(Error::Cap(_))));
    }

    #[test]
    fn trig_interp_reproduces() {
        let m = 16;
        let v: Vec<f64> = (0..m).map(|j| (2.0 * PI * j as f64 / m as f64 * 3.0).cos()).collect();
        assert!((trig_interp(&v, 0.3) - (0.9f64).cos()).abs() < 1e-12);
    }
}
