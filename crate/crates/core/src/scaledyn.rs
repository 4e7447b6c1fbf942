//! Scaling dynamics: kernels pulled back by e^{−tX} with X = h·∂_h,
//! dynamical correlators ⟨e^{−tX}u, φ⟩, resonance fits with rank-2 Jordan
//! blocks and the Π_0 residue −b_0.
//!
//! Sign convention: the correlator is modelled as
//! Σ_k e^{−tk}(a_k + t b_k) and the dynamical residue read off the k = 0
//! block is −b_0, so u = log|h| has residue −1.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hadamard::{GridParams, HadamardTable, RayProfile};
use crate::metricspace::MetricExpr;
use crate::modeldist::{f_alpha_bessel_all, ModelQuadratic};
use crate::quadrature::{gauss_hermite, graded_breaks, richardson, ConeGrading, Rule, SphereQuadrature};

/// A kernel u(x, h), possibly singular at h = 0.
pub trait KernelFn: Send + Sync {
    fn eval(&self, x: &[f64], h: &[f64]) -> Complex64;

    /// Radial profile r ↦ u(x, r w); override when rays can be prepared once.
    fn ray<'a>(&'a self, x: &'a [f64], w: &'a [f64]) -> Result<Box<dyn Fn(f64) -> Complex64 + 'a>> {
        Ok(Box::new(move |r| {
            let h: Vec<f64> = w.iter().map(|v| v * r).collect();
            self.eval(x, &h)
        }))
    }
}

impl<F> KernelFn for F
where
    F: Fn(&[f64], &[f64]) -> Complex64 + Send + Sync,
{
    fn eval(&self, x: &[f64], h: &[f64]) -> Complex64 {
        self(x, h)
    }
}

/// Kernel with its sampling radius, singularity hint and accumulated scale.
#[derive(Clone)]
pub struct SampledKernel {
    inner: Arc<dyn KernelFn>,
    pub dim: usize,
    pub radius: f64,
    /// Leading homogeneity degree p at h = 0.
    pub leading_degree: i32,
    pub logarithmic: bool,
    scale: f64,
}

impl fmt::Debug for SampledKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledKernel")
            .field("dim", &self.dim)
            .field("radius", &self.radius)
            .field("leading_degree", &self.leading_degree)
            .field("logarithmic", &self.logarithmic)
            .field("scale", &self.scale)
            .finish()
    }
}

impl SampledKernel {
    pub fn new(dim: usize, radius: f64, leading_degree: i32, logarithmic: bool, f: impl KernelFn + 'static) -> Self {
        SampledKernel { inner: Arc::new(f), dim, radius, leading_degree, logarithmic, scale: 1.0 }
    }

    pub fn from_arc(dim: usize, radius: f64, leading_degree: i32, logarithmic: bool, f: Arc<dyn KernelFn>) -> Self {
        SampledKernel { inner: f, dim, radius, leading_degree, logarithmic, scale: 1.0 }
    }

    /// Multiplier applied to h before the underlying evaluator.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, x: &[f64], h: &[f64]) -> Result<Complex64> {
        let r = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 || r > self.radius * (1.0 + 1e-12) {
            return Err(Error::Invalid(format!("|h| = {r} outside (0, {}]", self.radius)));
        }
        let hs: Vec<f64> = h.iter().map(|v| v * self.scale).collect();
        let v = self.inner.eval(x, &hs);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("kernel at x = {x:?}, h = {h:?}")));
        }
        Ok(v)
    }
}

/// (x, h) ↦ u(x, e^{−t} h).
pub fn scale_kernel(u: &SampledKernel, t: f64) -> Result<SampledKernel> {
    if !(t >= 0.0) {
        return Err(Error::Invalid(format!("scaling time must be ≥ 0, got {t}")));
    }
    Ok(SampledKernel { scale: u.scale * (-t).exp(), ..u.clone() })
}

/// Polar rule on the h-ball: graded radial Gauss panels with weight r^{n−1}
/// on [0, 1] (scaled to the test-function radius) times a sphere rule.
#[derive(Debug, Clone)]
pub struct CorrelatorQuadrature {
    pub dim: usize,
    pub radial: Rule,
    pub sphere: SphereQuadrature,
}

impl CorrelatorQuadrature {
    pub fn new(dim: usize, lorentzian: bool) -> Result<Self> {
        let br = graded_breaks(0.0, 1.0, &[0.0], 0.5, 10, 0.2);
        let radial = Rule::composite(&br, 10);
        let sphere = if lorentzian {
            SphereQuadrature::cone_adapted(dim, ConeGrading { panel_nodes: 8, levels: 8, ratio: 0.5, s2_order: 8 })?
        } else {
            SphereQuadrature::polynomial(dim, 24)?
        };
        Ok(CorrelatorQuadrature { dim, radial, sphere })
    }
}

/// φ(x, h) = (x-measure) ⊗ ψ(h): a discrete probability measure in x and a
/// smooth radial bump in h normalized to ∫ψ = 1 under the correlator rule.
#[derive(Debug, Clone, Serialize)]
pub struct TestFunction {
    pub x_nodes: Vec<Vec<f64>>,
    pub x_weights: Vec<f64>,
    pub radius: f64,
    /// ψ vanishes like |h|^{origin_order} at the origin.
    pub origin_order: u32,
    norm: f64,
}

impl TestFunction {
    /// Point mass at x0 times the bump exp(1 − 1/(1 − s²)), s = |h|/ρ.
    pub fn bump(x0: &[f64], radius: f64, quad: &CorrelatorQuadrature) -> Self {
        Self::with_x_measure(vec![x0.to_vec()], vec![1.0], radius, 0, quad)
    }

    pub fn with_x_measure(x_nodes: Vec<Vec<f64>>, x_weights: Vec<f64>, radius: f64, origin_order: u32, quad: &CorrelatorQuadrature) -> Self {
        let mut t = TestFunction { x_nodes, x_weights, radius, origin_order, norm: 1.0 };
        let s = quad.sphere.integrate(|_| 1.0);
        let n = quad.dim as i32;
        let r = quad.radial.integrate(|r| t.profile(r * radius) * r.powi(n - 1)) * radius.powi(n);
        t.norm = 1.0 / (s * r);
        t
    }

    /// ψ at distance r, unnormalized.
    fn profile(&self, r: f64) -> f64 {
        let s = r / self.radius;
        if s >= 1.0 {
            return 0.0;
        }
        (1.0 - 1.0 / (1.0 - s * s)).exp() * s.powi(self.origin_order as i32)
    }

    pub fn h_value(&self, h: &[f64]) -> f64 {
        let r = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.norm * self.profile(r)
    }
}

/// ⟨u(x, e^{−t}h), φ(x, h)⟩ for each t.
pub fn correlator(u: &SampledKernel, phi: &TestFunction, t_grid: &[f64], quad: &CorrelatorQuadrature) -> Result<Vec<Complex64>> {
    let n = u.dim;
    if quad.dim != n {
        return Err(Error::Dimension("correlator rule dimension".into()));
    }
    if phi.radius > u.radius * (1.0 + 1e-12) {
        return Err(Error::Invalid(format!("test function radius {} exceeds kernel radius {}", phi.radius, u.radius)));
    }
    if u.leading_degree + phi.origin_order as i32 <= -(n as i32) {
        return Err(Error::Quadrature(format!(
            "kernel of degree {} is not integrable against φ vanishing to order {}",
            u.leading_degree, phi.origin_order
        )));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Invalid("t grid must be ≥ 0".into()));
    }
    let scales: Vec<f64> = t_grid.iter().map(|t| u.scale * (-t).exp()).collect();
    let rad: Vec<(f64, f64)> = quad
        .radial
        .nodes
        .iter()
        .zip(&quad.radial.weights)
        .map(|(s, w)| {
            let r = s * phi.radius;
            (r, w * phi.radius.powi(n as i32) * s.powi(n as i32 - 1) * phi.norm * phi.profile(r))
        })
        .filter(|(_, w)| *w != 0.0)
        .collect();
    let jobs: Vec<(usize, usize)> = (0..phi.x_nodes.len())
        .flat_map(|i| (0..quad.sphere.len()).map(move |j| (i, j)))
        .collect();
    let parts: Vec<Result<Vec<Complex64>>> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let x = &phi.x_nodes[i];
            let w = &quad.sphere.nodes[j];
            let wt = phi.x_weights[i] * quad.sphere.weights[j];
            let ray = u.inner.ray(x, w)?;
            let mut acc = vec![Complex64::new(0.0, 0.0); scales.len()];
            for (r, rw) in &rad {
                for (a, s) in acc.iter_mut().zip(&scales) {
                    let v = ray(r * s);
                    if !v.is_finite() {
                        return Err(Error::NonFinite(format!("kernel at x = {x:?}, |h| = {}", r * s)));
                    }
                    *a += v * (rw * wt);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); scales.len()];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p?) {
            *o += v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitOptions {
    /// Largest accepted rms residual relative to max |sample|.
    pub max_residual: f64,
    pub max_condition: f64,
    /// Terms whose coefficients are all within this many standard errors of
    /// zero are pruned.
    pub prune_sigma: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_residual: 1e-6, max_condition: 1e12, prune_sigma: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResonanceTerm {
    pub k: i32,
    pub a: Complex64,
    pub b: Complex64,
    pub a_err: f64,
    pub b_err: f64,
}

/// correlator(t) ≈ Σ_k e^{−tk}(a_k + t b_k) on [t_min, t_max].
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceExpansion {
    pub terms: Vec<ResonanceTerm>,
    pub t_min: f64,
    pub t_max: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub condition: f64,
    pub pruned: Vec<i32>,
    pub jordan: bool,
}

impl ResonanceExpansion {
    pub fn term(&self, k: i32) -> Option<&ResonanceTerm> {
        self.terms.iter().find(|t| t.k == k)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|r| (r.a + r.b * t) * (-(r.k as f64) * t).exp()).sum()
    }

    /// max_{k<0} |b_k| / max_k |a_k|.
    pub fn tameness_defect(&self) -> f64 {
        let amax = self.terms.iter().map(|t| t.a.norm()).fold(0.0, f64::max);
        let bneg = self.terms.iter().filter(|t| t.k < 0).map(|t| t.b.norm()).fold(0.0, f64::max);
        if amax == 0.0 {
            bneg
        } else {
            bneg / amax
        }
    }
}

/// Least-squares fit of Σ_{k=p}^{N} e^{−tk}(a_k + t b_k); `jordan_max` = 1
/// drops the t e^{−tk} columns.
pub fn fit_resonances(t: &[f64], samples: &[Complex64], k_range: (i32, i32), jordan_max: usize, opts: &FitOptions) -> Result<ResonanceExpansion> {
    let (p, nmax) = k_range;
    if nmax < p || !(1..=2).contains(&jordan_max) {
        return Err(Error::Invalid("k range or Jordan size".into()));
    }
    if t.len() != samples.len() {
        return Err(Error::Invalid("t grid and samples differ in length".into()));
    }
    let nk = (nmax - p + 1) as usize;
    if t.len() < 2 * nk + 4 {
        return Err(Error::Fit(format!("{} samples, need at least {}", t.len(), 2 * nk + 4)));
    }
    let t_min = t.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if t_max - t_min < 3.0 {
        return Err(Error::Fit(format!("window [{t_min}, {t_max}] spans fewer than 3 e-folds")));
    }
    let jordan = jordan_max == 2;
    let mut ks: Vec<i32> = (p..=nmax).collect();
    let mut pruned = Vec::new();
    loop {
        let fit = solve_design(t, samples, &ks, jordan)?;
        if fit.condition > opts.max_condition {
            return Err(Error::Fit(format!("ill-conditioned design: condition {:e}; lengthen the window", fit.condition)));
        }
        let drop: Vec<i32> = fit
            .terms
            .iter()
            .filter(|r| r.a.norm() <= opts.prune_sigma * r.a_err && r.b.norm() <= opts.prune_sigma * r.b_err)
            .map(|r| r.k)
            .collect();
        let smax = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let rel = if smax > 0.0 { fit.residual / smax } else { fit.residual };
        if drop.is_empty() || drop.len() == ks.len() {
            if rel > opts.max_residual {
                return Err(Error::Fit(format!("relative residual {rel:e} above {:e}: model misfit", opts.max_residual)));
            }
            return Ok(ResonanceExpansion {
                terms: fit.terms,
                t_min,
                t_max,
                residual: fit.residual,
                relative_residual: rel,
                condition: fit.condition,
                pruned,
                jordan,
            });
        }
        ks.retain(|k| !drop.contains(k));
        pruned.extend(drop);
    }
}

struct DesignFit {
    terms: Vec<ResonanceTerm>,
    residual: f64,
    condition: f64,
}

fn solve_design(t: &[f64], y: &[Complex64], ks: &[i32], jordan: bool) -> Result<DesignFit> {
    let m = t.len();
    let per = if jordan { 2 } else { 1 };
    let ncol = ks.len() * per;
    let mut a = DMatrix::<f64>::zeros(m, ncol);
    for (i, &ti) in t.iter().enumerate() {
        for (j, &k) in ks.iter().enumerate() {
            let e = (-(k as f64) * ti).exp();
            a[(i, per * j)] = e;
            if jordan {
                a[(i, per * j + 1)] = ti * e;
            }
        }
    }
    let norms: Vec<f64> = (0..ncol).map(|j| a.column(j).norm()).collect();
    for (j, nj) in norms.iter().enumerate() {
        if *nj == 0.0 || !nj.is_finite() {
            return Err(Error::Fit("degenerate design column".into()));
        }
        a.column_mut(j).scale_mut(1.0 / nj);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() {
        return Err(Error::Fit("singular design".into()));
    }
    let yr = DVector::from_iterator(m, y.iter().map(|v| v.re));
    let yi = DVector::from_iterator(m, y.iter().map(|v| v.im));
    let xr = svd.solve(&yr, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    let xi = svd.solve(&yi, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    let rr = &yr - &a * &xr;
    let ri = &yi - &a * &xi;
    let rss = rr.norm_squared() + ri.norm_squared();
    let dof = (m.saturating_sub(ncol)).max(1) as f64;
    let s2 = rss / dof;
    // diag((AᵀA)^{-1}) = Σ_l V_{jl}² / σ_l²
    let v_t = svd.v_t.as_ref().expect("svd with V");
    let var: Vec<f64> = (0..ncol)
        .map(|j| (0..v_t.nrows()).map(|l| (v_t[(l, j)] / svd.singular_values[l]).powi(2)).sum::<f64>())
        .collect();
    let terms = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let c0 = per * j;
            let a_k = Complex64::new(xr[c0], xi[c0]) / norms[c0];
            let a_err = (s2 * var[c0]).sqrt() / norms[c0];
            let (b_k, b_err) = if jordan {
                let c1 = c0 + 1;
                (Complex64::new(xr[c1], xi[c1]) / norms[c1], (s2 * var[c1]).sqrt() / norms[c1])
            } else {
                (Complex64::new(0.0, 0.0), 0.0)
            };
            ResonanceTerm { k, a: a_k, b: b_k, a_err, b_err }
        })
        .collect();
    Ok(DesignFit { terms, residual: (rss / m as f64).sqrt(), condition })
}

/// Time grid and resonance model used by the Π_0 extraction.
#[derive(Debug, Clone, Serialize)]
pub struct FitSpec {
    pub t_grid: Vec<f64>,
    pub k_range: (i32, i32),
    pub jordan_max: usize,
    pub opts: FitOptions,
}

impl FitSpec {
    /// `count` equispaced samples on [t_min, t_max].
    pub fn uniform(t_min: f64, t_max: f64, count: usize, k_range: (i32, i32)) -> Self {
        let t_grid = (0..count).map(|i| t_min + (t_max - t_min) * i as f64 / (count - 1) as f64).collect();
        FitSpec { t_grid, k_range, jordan_max: 2, opts: FitOptions::default() }
    }
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec::uniform(1.0, 9.0, 40, (0, 5))
    }
}

/// Gaussian x-measures of shrinking width around x0 (tensor Gauss–Hermite).
#[derive(Debug, Clone, Serialize)]
pub struct ConcentratingFamily {
    pub x0: Vec<f64>,
    pub widths: Vec<f64>,
    pub nodes_per_dim: usize,
    pub h_radius: f64,
}

impl ConcentratingFamily {
    pub fn new(x0: &[f64], h_radius: f64) -> Self {
        ConcentratingFamily { x0: x0.to_vec(), widths: vec![0.1, 0.05, 0.025], nodes_per_dim: 3, h_radius }
    }

    /// (nodes, weights) of the width-w Gaussian measure.
    pub fn x_measure(&self, w: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let (g, gw) = gauss_hermite(self.nodes_per_dim);
        let n = self.x0.len();
        let total = self.nodes_per_dim.pow(n as u32);
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut x = self.x0.clone();
            let mut wt = 1.0;
            for xi in x.iter_mut() {
                let j = rem % self.nodes_per_dim;
                rem /= self.nodes_per_dim;
                *xi += w * std::f64::consts::SQRT_2 * g[j];
                wt *= gw[j] / std::f64::consts::PI.sqrt();
            }
            nodes.push(x);
            weights.push(wt);
        }
        (nodes, weights)
    }

    /// Every x node used across all widths.
    pub fn all_nodes(&self) -> Vec<Vec<f64>> {
        self.widths.iter().flat_map(|&w| self.x_measure(w).0).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WidthSample {
    pub width: f64,
    pub value: Complex64,
    pub b0_err: f64,
    pub fit: ResonanceExpansion,
}

/// Dynamical residue X Π_0(u) at x0 with its convergence estimate.
#[derive(Debug, Clone, Serialize)]
pub struct Pi0Residue {
    pub value: Complex64,
    pub error: f64,
    pub samples: Vec<WidthSample>,
}

/// −b_0 for each width of the family, extrapolated to zero width.
pub fn project_pi0_residue(u: &SampledKernel, family: &ConcentratingFamily, quad: &CorrelatorQuadrature, fit_spec: &FitSpec) -> Result<Pi0Residue> {
    let mut samples = Vec::new();
    for &w in &family.widths {
        let (nodes, weights) = family.x_measure(w);
        let phi = TestFunction::with_x_measure(nodes, weights, family.h_radius, 0, quad);
        let c = correlator(u, &phi, &fit_spec.t_grid, quad)?;
        let fit = fit_resonances(&fit_spec.t_grid, &c, fit_spec.k_range, fit_spec.jordan_max, &fit_spec.opts)?;
        let (value, b0_err) = match fit.term(0) {
            Some(t) if fit_spec.jordan_max == 2 => {
                if t.b_err > 1e-3 * t.b.norm().max(1e-12) && t.b.norm() > fit_spec.opts.prune_sigma * t.b_err {
                    return Err(Error::Fit(format!("b_0 = {} not resolved above noise {:e}", t.b, t.b_err)));
                }
                (-t.b, t.b_err)
            }
            _ => (Complex64::new(0.0, 0.0), 0.0),
        };
        samples.push(WidthSample { width: w, value, b0_err, fit });
    }
    let hs: Vec<f64> = samples.iter().map(|s| s.width * s.width).collect();
    let vs: Vec<Complex64> = samples.iter().map(|s| s.value).collect();
    let ex = richardson(&hs, &vs)?;
    let fit_err = samples.iter().map(|s| s.b0_err).fold(0.0, f64::max);
    let error = ex.error + fit_err;
    let scale = vs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if error > 1e-2 * scale.max(1e-8) {
        return Err(Error::Extrapolation(format!("concentrating limit not converged: {vs:?}")));
    }
    Ok(Pi0Residue { value: ex.value, error, samples })
}

/// The K_0 model kernel (2π)^{−1} K_0(|h|) of (−Δ + 1)^{−1} on ℝ².
pub fn bessel_k0_kernel(radius: f64) -> SampledKernel {
    SampledKernel::new(2, radius, 0, true, |_x: &[f64], h: &[f64]| {
        let r = (h[0] * h[0] + h[1] * h[1]).sqrt();
        crate::special::bessel_k(0, Complex64::new(r, 0.0)) / (2.0 * std::f64::consts::PI)
    })
}

/// Σ_{k≤N} u_k(x, h) F_k(z, Q(h) + i0) in normal coordinates at each x node.
pub struct HadamardKernel {
    q: ModelQuadratic,
    z: Complex64,
    tables: Vec<(Vec<f64>, HadamardTable)>,
}

impl HadamardKernel {
    /// Solves the transport equations at each x node (n = 2, Lorentzian).
    pub fn build(metric: &MetricExpr, x_nodes: &[Vec<f64>], z: Complex64, order: usize, grid: &GridParams) -> Result<Self> {
        if metric.dim != 2 || !metric.is_lorentzian() {
            return Err(Error::Cap("scaling route runs on Lorentzian n = 2 metrics".into()));
        }
        let tables = x_nodes
            .par_iter()
            .map(|x| crate::hadamard::solve_at(metric, x, order, grid).map(|t| (x.clone(), t)))
            .collect::<Result<Vec<_>>>()?;
        Ok(HadamardKernel { q: ModelQuadratic::lorentzian(2), z, tables })
    }

    pub fn radius(&self) -> f64 {
        self.tables.iter().map(|(_, t)| t.grid.radius).fold(f64::INFINITY, f64::min)
    }

    pub fn tables(&self) -> impl Iterator<Item = &HadamardTable> {
        self.tables.iter().map(|(_, t)| t)
    }

    fn table(&self, x: &[f64]) -> Option<&HadamardTable> {
        self.tables.iter().find(|(xx, _)| xx.as_slice() == x).map(|(_, t)| t)
    }

    fn sum(&self, profiles: &[RayProfile], h: &[f64], r: f64) -> Complex64 {
        let sigma = Complex64::new(self.q.eval(h), 0.0);
        let Ok(fs) = f_alpha_bessel_all(&self.q, profiles.len() - 1, self.z, sigma) else {
            return Complex64::new(f64::NAN, 0.0);
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, f) in profiles.iter().zip(fs) {
            let Ok(u) = p.eval(r) else {
                return Complex64::new(f64::NAN, 0.0);
            };
            acc += f * u;
        }
        acc
    }

    pub fn into_sampled(self) -> SampledKernel {
        let r = self.radius();
        SampledKernel::from_arc(2, r, 0, true, Arc::new(self))
    }
}

impl KernelFn for HadamardKernel {
    fn eval(&self, x: &[f64], h: &[f64]) -> Complex64 {
        let r = (h[0] * h[0] + h[1] * h[1]).sqrt();
        let Some(t) = self.table(x) else {
            return Complex64::new(f64::NAN, 0.0);
        };
        if r == 0.0 {
            return Complex64::new(f64::NAN, 0.0);
        }
        let w = [h[0] / r, h[1] / r];
        match (0..=t.order).map(|k| t.ray_profile(k, &w)).collect::<Result<Vec<_>>>() {
            Ok(p) => self.sum(&p, h, r),
            Err(_) => Complex64::new(f64::NAN, 0.0),
        }
    }

    fn ray<'a>(&'a self, x: &'a [f64], w: &'a [f64]) -> Result<Box<dyn Fn(f64) -> Complex64 + 'a>> {
        let t = self.table(x).ok_or_else(|| Error::Invalid(format!("no transport table at x = {x:?}")))?;
        let profiles = (0..=t.order).map(|k| t.ray_profile(k, w)).collect::<Result<Vec<_>>>()?;
        Ok(Box::new(move |r| {
            let h = [w[0] * r, w[1] * r];
            self.sum(&profiles, &h, r)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn scaling_examples() {
        let u = SampledKernel::new(2, 1.0, 1, false, |_x: &[f64], h: &[f64]| c((h[0] * h[0] + h[1] * h[1]).sqrt()));
        let v = scale_kernel(&u, 2f64.ln()).unwrap();
        assert!((v.eval(&[0.0, 0.0], &[0.6, 0.0]).unwrap() - c(0.3)).norm() < 1e-15);
        assert!(scale_kernel(&u, -1.0).is_err());
    }

    #[test]
    fn synthetic_fits() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.2).collect();
        let s: Vec<Complex64> = t.iter().map(|t| c(3.0 + 5.0 * t)).collect();
        let f = fit_resonances(&t, &s, (0, 2), 2, &FitOptions::default()).unwrap();
        let z = f.term(0).unwrap();
        assert!((z.a - c(3.0)).norm() < 1e-8 && (z.b - c(5.0)).norm() < 1e-8);
        let s: Vec<Complex64> = t.iter().map(|t| c(2.0 * t.exp() + 1.0)).collect();
        let f = fit_resonances(&t, &s, (-1, 1), 2, &FitOptions::default()).unwrap();
        assert!((f.term(-1).unwrap().a - c(2.0)).norm() < 1e-8);
        assert!(f.term(-1).unwrap().b.norm() < 1e-8);
        assert!((f.term(0).unwrap().a - c(1.0)).norm() < 1e-8);
    }

    #[test]
    fn log_kernel_residue() {
        let quad = CorrelatorQuadrature::new(2, false).unwrap();
        let u = SampledKernel::new(2, 0.5, 0, true, |_x: &[f64], h: &[f64]| {
            c(3.0 + 5.0 * (h[0] * h[0] + h[1] * h[1]).sqrt().ln())
        });
        let fam = ConcentratingFamily::new(&[0.0, 0.0], 0.4);
        let r = project_pi0_residue(&u, &fam, &quad, &FitSpec::default()).unwrap();
        assert!((r.value - c(5.0)).norm() < 1e-8, "{}", r.value);
    }
}
