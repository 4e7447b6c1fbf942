//! Geodesic exponential and log maps, orthonormal frames, normal
//! coordinates, the Kuranishi matrix, and polynomial normal forms of
//! Euler vector fields.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::jet::{self, Jet, JetMat};
use crate::metricspace::{christoffel_jets, MetricExpr};
use crate::ode::{self, OdeOptions};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy)]
pub struct GeoOptions {
    /// Largest admissible coordinate norm of an initial velocity.
    pub trust_radius: f64,
    pub ode: OdeOptions,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for GeoOptions {
    fn default() -> Self {
        GeoOptions {
            trust_radius: 2.0,
            ode: OdeOptions::default(),
            newton_tol: 1e-12,
            newton_max_iter: 40,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Signature-respecting Gram–Schmidt on the coordinate basis.
///
/// Columns of the result are the frame vectors e_a with g(e_a, e_b) = η_ab.
/// For Lorentzian metrics e_0 is oriented so that its time component is
/// positive.
pub fn build_frame(metric: &MetricExpr, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = metric.dim;
    metric.check_signature(x)?;
    let g = metric.eval(x);
    let eta = metric.eta();
    let ip = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &g * b)[(0, 0)];
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut v = DVector::<f64>::zeros(n);
        v[a] = 1.0;
        for (b, e) in frame.iter().enumerate() {
            let c = eta[b] * ip(&v, e);
            v -= e * c;
        }
        let q = ip(&v, &v);
        if q.abs() <= 1e-13 * scale {
            return Err(Error::SingularMetric(x.to_vec()));
        }
        if q.signum() != eta[a] {
            return Err(Error::Signature {
                point: x.to_vec(),
                declared: metric.signature.clone(),
                found: frame.iter().map(|e| ip(e, e).signum() as i8).chain([q.signum() as i8]).collect(),
            });
        }
        v /= q.abs().sqrt();
        frame.push(v);
    }
    if metric.is_lorentzian() && frame[0][0] < 0.0 {
        frame[0] = -frame[0].clone();
    }
    Ok(DMatrix::from_columns(&frame))
}

/// Γ^i_{jk} values at x.
fn christoffel_values(metric: &MetricExpr, x: &[f64]) -> Result<Vec<f64>> {
    Ok(christoffel_jets(metric, x, 0)?.iter().map(|j| j.value()).collect())
}

fn check_trust(v: &[f64], opts: &GeoOptions) -> Result<()> {
    let nv = norm(v);
    if nv > opts.trust_radius {
        return Err(Error::TrustRadius { norm: nv, radius: opts.trust_radius });
    }
    Ok(())
}

/// exp_x(v) by adaptive integration of the geodesic equation over [0, 1].
pub fn exp_map(metric: &MetricExpr, x: &[f64], v: &[f64], opts: &GeoOptions) -> Result<Vec<f64>> {
    let n = metric.dim;
    check_trust(v, opts)?;
    let mut y0 = x.to_vec();
    y0.extend_from_slice(v);
    let rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let gam = christoffel_values(metric, &y[..n])?;
        let mut out = y[n..].to_vec();
        for i in 0..n {
            let mut a = 0.0;
            for j in 0..n {
                for k in 0..n {
                    a -= gam[i * n * n + j * n + k] * y[n + j] * y[n + k];
                }
            }
            out.push(a);
        }
        Ok(out)
    };
    let out = ode::integrate(rhs, 0.0, &y0, &[1.0], &opts.ode)?;
    let y = out[0][..n].to_vec();
    if y.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("geodesic endpoint".into()));
    }
    Ok(y)
}

/// exp_x applied to a jet-valued initial velocity; returns the endpoint as jets.
///
/// The geodesic equation is integrated for every Taylor coefficient at once
/// (variational equations to the order of the jets).
pub fn exp_map_jet(metric: &MetricExpr, x: &[f64], v: &[Jet<f64>], opts: &GeoOptions) -> Result<Vec<Jet<f64>>> {
    let n = metric.dim;
    let vv: Vec<f64> = v.iter().map(|j| j.value()).collect();
    check_trust(&vv, opts)?;
    let (nv, order) = (v[0].nvars(), v[0].order());
    let len = v[0].coeffs().len();
    let mut y0 = Vec::with_capacity(2 * n * len);
    for xi in x {
        y0.extend(Jet::constant(nv, order, *xi).coeffs());
    }
    for vi in v {
        y0.extend(vi.coeffs());
    }
    let unpack = |y: &[f64], i: usize| Jet::from_coeffs(nv, order, y[i * len..(i + 1) * len].to_vec());
    let rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let pos: Vec<Jet<f64>> = (0..n).map(|i| unpack(y, i)).collect();
        let vel: Vec<Jet<f64>> = (0..n).map(|i| unpack(y, n + i)).collect();
        let acc = geodesic_accel(metric, &pos, &vel, order)?;
        let mut out = Vec::with_capacity(y.len());
        out.extend_from_slice(&y[n * len..]);
        for a in acc {
            out.extend(a.coeffs());
        }
        Ok(out)
    };
    let out = ode::integrate(rhs, 0.0, &y0, &[1.0], &opts.ode)?;
    let res: Vec<Jet<f64>> = (0..n).map(|i| unpack(&out[0], i)).collect();
    if res.iter().any(|j| !j.is_finite()) {
        return Err(Error::NonFinite("geodesic jet endpoint".into()));
    }
    Ok(res)
}

/// −Γ(x)(v, v) for jet-valued position and velocity.
fn geodesic_accel(metric: &MetricExpr, pos: &[Jet<f64>], vel: &[Jet<f64>], order: usize) -> Result<Vec<Jet<f64>>> {
    let n = metric.dim;
    let xc: Vec<f64> = pos.iter().map(|j| j.value()).collect();
    let gam = christoffel_jets(metric, &xc, order)?;
    let disp: Vec<Jet<f64>> = pos
        .iter()
        .map(|p| {
            let mut d = p.clone();
            d.coeffs_mut()[0] = 0.0;
            d
        })
        .collect();
    let mut idx = Vec::new();
    let mut polys: Vec<&Jet<f64>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                idx.push((i, j, k));
                polys.push(&gam[i * n * n + j * n + k]);
            }
        }
    }
    let g_at = Jet::compose_many(&polys, &disp);
    let mut vv: BTreeMap<(usize, usize), Jet<f64>> = BTreeMap::new();
    for j in 0..n {
        for k in j..n {
            let f = if j == k { 1.0 } else { 2.0 };
            vv.insert((j, k), vel[j].mul_ref(&vel[k]).scale(f));
        }
    }
    let mut acc: Vec<Jet<f64>> = (0..n).map(|_| Jet::zero(pos[0].nvars(), order)).collect();
    for ((i, j, k), gk) in idx.iter().zip(&g_at) {
        if gk.max_abs() != 0.0 {
            acc[*i] -= &gk.mul_ref(&vv[&(*j, *k)]);
        }
    }
    Ok(acc)
}

/// Jacobian of v ↦ exp_x(v) together with the endpoint.
fn exp_with_jacobian(metric: &MetricExpr, x: &[f64], v: &[f64], opts: &GeoOptions) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = metric.dim;
    let vj = Jet::variables(v, 1);
    let y = exp_map_jet(metric, x, &vj, opts)?;
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n {
        let g = y[i].gradient();
        for a in 0..n {
            jac[(i, a)] = g[a];
        }
    }
    Ok((y.iter().map(|j| j.value()).collect(), jac))
}

/// log_x(y) by damped Newton shooting on v ↦ exp_x(v) − y.
pub fn log_map(metric: &MetricExpr, x: &[f64], y: &[f64], opts: &GeoOptions) -> Result<Vec<f64>> {
    let n = metric.dim;
    let mut v: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let mut residual = f64::INFINITY;
    for _ in 0..opts.newton_max_iter {
        let (e, jac) = exp_with_jacobian(metric, x, &v, opts)?;
        let r: Vec<f64> = e.iter().zip(y).map(|(a, b)| a - b).collect();
        residual = norm(&r);
        if residual <= opts.newton_tol {
            return Ok(v);
        }
        let step = jac
            .lu()
            .solve(&DVector::from_vec(r))
            .ok_or_else(|| Error::NewtonFailed { iters: 0, residual })?;
        let mut lam = 1.0;
        loop {
            let trial: Vec<f64> = (0..n).map(|i| v[i] - lam * step[i]).collect();
            let ok = exp_map(metric, x, &trial, opts)
                .map(|e| norm(&e.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>()) < residual)
                .unwrap_or(false);
            if ok || lam < 1e-3 {
                v = trial;
                break;
            }
            lam *= 0.5;
        }
    }
    let e = exp_map(metric, x, &v, opts)?;
    let last = norm(&e.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
    if last <= 1e-9 {
        return Ok(v);
    }
    Err(Error::NewtonFailed { iters: opts.newton_max_iter, residual: last.min(residual) })
}

/// Normal coordinates h ↦ exp_x(E h) around a base point.
#[derive(Debug, Clone)]
pub struct NormalCoordinateSystem {
    pub metric: MetricExpr,
    pub base: Vec<f64>,
    /// Columns are the frame vectors.
    pub frame: DMatrix<f64>,
    pub frame_inv: DMatrix<f64>,
    pub eta: Vec<f64>,
    /// Trust radius in normal coordinates.
    pub radius: f64,
    pub opts: GeoOptions,
}

impl NormalCoordinateSystem {
    pub fn new(metric: &MetricExpr, x: &[f64], radius: f64, opts: GeoOptions) -> Result<Self> {
        Self::with_frame(metric, x, build_frame(metric, x)?, radius, opts)
    }

    /// Use a caller-supplied frame (must be orthonormal for g(x)).
    pub fn with_frame(metric: &MetricExpr, x: &[f64], frame: DMatrix<f64>, radius: f64, opts: GeoOptions) -> Result<Self> {
        let n = metric.dim;
        if x.len() != n || frame.nrows() != n || frame.ncols() != n {
            return Err(Error::Dimension(format!("base point/frame for dim {n}")));
        }
        let g = metric.eval(x);
        let eta = metric.eta();
        let gram = frame.transpose() * &g * &frame;
        for a in 0..n {
            for b in 0..n {
                let want = if a == b { eta[a] } else { 0.0 };
                if (gram[(a, b)] - want).abs() > 1e-10 {
                    return Err(Error::Invalid(format!("frame not orthonormal: g(e_{a}, e_{b}) = {}", gram[(a, b)])));
                }
            }
        }
        let frame_inv = frame.clone().try_inverse().ok_or_else(|| Error::SingularMetric(x.to_vec()))?;
        // coordinate trust radius large enough for every |h| ≤ radius
        let mut opts = opts;
        opts.trust_radius = opts.trust_radius.max(radius * frame.norm() * 1.01);
        Ok(NormalCoordinateSystem { metric: metric.clone(), base: x.to_vec(), frame, frame_inv, eta, radius, opts })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim
    }

    fn check(&self, h: &[f64]) -> Result<()> {
        let nh = norm(h);
        if nh > self.radius * (1.0 + 1e-12) {
            return Err(Error::TrustRadius { norm: nh, radius: self.radius });
        }
        Ok(())
    }

    fn to_coord(&self, h: &[f64]) -> Vec<f64> {
        (&self.frame * DVector::from_column_slice(h)).iter().copied().collect()
    }

    /// Point with normal coordinates h.
    pub fn exp(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check(h)?;
        exp_map(&self.metric, &self.base, &self.to_coord(h), &self.opts)
    }

    /// Normal coordinates of y.
    pub fn log(&self, y: &[f64]) -> Result<Vec<f64>> {
        let v = log_map(&self.metric, &self.base, y, &self.opts)?;
        let h: Vec<f64> = (&self.frame_inv * DVector::from_vec(v)).iter().copied().collect();
        self.check(&h)?;
        Ok(h)
    }

    /// exp(E(h̄ + δ)) as jets in δ of the given order.
    pub fn exp_jet(&self, hbar: &[f64], order: usize) -> Result<Vec<Jet<f64>>> {
        self.check(hbar)?;
        let n = self.dim();
        let hj = Jet::variables(hbar, order);
        let v: Vec<Jet<f64>> = (0..n)
            .map(|i| {
                let mut acc = Jet::zero(n, order);
                for (a, ha) in hj.iter().enumerate() {
                    acc.axpy(self.frame[(i, a)], ha);
                }
                acc
            })
            .collect();
        exp_map_jet(&self.metric, &self.base, &v, &self.opts)
    }

    /// Pulled-back metric g̃ = Jᵀ g(exp) J as jets of the given order at h̄.
    pub fn pulled_back_metric(&self, hbar: &[f64], order: usize) -> Result<JetMat<f64>> {
        let y = self.exp_jet(hbar, order + 1)?;
        Ok(pullback_from_exp_jet(&self.metric, &y, order)?)
    }

    /// max_i |g̃_ij(h)h^j − η_ij h^j|.
    pub fn gauss_lemma_defect(&self, h: &[f64]) -> Result<f64> {
        let gt = self.pulled_back_metric(h, 0)?;
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            let lhs: f64 = (0..n).map(|j| gt[i][j].value() * h[j]).sum();
            worst = worst.max((lhs - self.eta[i] * h[i]).abs());
        }
        Ok(worst)
    }

    /// exp map in normal coordinates as a polynomial in h (degree-recursion
    /// of the geodesic equation), valid inside its radius of convergence.
    pub fn exp_taylor(&self, order: usize) -> Result<Vec<Jet<f64>>> {
        let n = self.dim();
        let gam = christoffel_jets(&self.metric, &self.base, order.saturating_sub(1).max(1))?;
        let mut y: Vec<Jet<f64>> = (0..n)
            .map(|i| {
                let mut acc = Jet::zero(n, order);
                for a in 0..n {
                    acc.axpy(self.frame[(i, a)], &Jet::variable(n, order, a, 0.0));
                }
                acc
            })
            .collect();
        for m in 2..=order {
            // D Y = Σ k Y_k (Euler derivative)
            let dy: Vec<Jet<f64>> = y.iter().map(euler_derivative).collect();
            let polys: Vec<&Jet<f64>> = gam.iter().collect();
            let g_at = Jet::compose_many(&polys, &y);
            let mf = (m * (m - 1)) as f64;
            for i in 0..n {
                let mut rhs = Jet::zero(n, order);
                for j in 0..n {
                    for k in 0..n {
                        let t = g_at[i * n * n + j * n + k].mul_ref(&dy[j].mul_ref(&dy[k]));
                        rhs += &t;
                    }
                }
                let part = rhs.homogeneous_part(m);
                y[i].axpy(-1.0 / mf, &part);
            }
        }
        for (yi, xi) in y.iter_mut().zip(&self.base) {
            yi.coeffs_mut()[0] = *xi;
        }
        Ok(y)
    }
}

fn euler_derivative(j: &Jet<f64>) -> Jet<f64> {
    let mut out = j.clone();
    let b = j.basis();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= b.degree(i) as f64;
    }
    out
}

/// g̃ = Jᵀ g(y) J from the exp-map jets y (of order ≥ order + 1).
pub fn pullback_from_exp_jet(metric: &MetricExpr, y: &[Jet<f64>], order: usize) -> Result<JetMat<f64>> {
    let n = metric.dim;
    let yc: Vec<f64> = y.iter().map(|j| j.value()).collect();
    let gtay = metric.taylor(&yc, order)?;
    let disp: Vec<Jet<f64>> = y
        .iter()
        .map(|p| {
            let mut d = p.truncate(order);
            d.coeffs_mut()[0] = 0.0;
            d
        })
        .collect();
    let mut polys = Vec::new();
    for i in 0..n {
        for j in i..n {
            polys.push(&gtay[i][j]);
        }
    }
    let comp = Jet::compose_many(&polys, &disp);
    let mut g: JetMat<f64> = vec![vec![Jet::zero(n, order); n]; n];
    let mut it = comp.into_iter();
    for i in 0..n {
        for j in i..n {
            let v = it.next().expect("component");
            if i != j {
                g[j][i] = v.clone();
            }
            g[i][j] = v;
        }
    }
    // J_{ia} = ∂y^i/∂h^a
    let jac: JetMat<f64> = (0..n).map(|i| (0..n).map(|a| y[i].deriv(a).truncate(order)).collect()).collect();
    let jt: JetMat<f64> = (0..n).map(|a| (0..n).map(|i| jac[i][a].clone()).collect()).collect();
    Ok(jet::matmul(&jet::matmul(&jt, &g), &jac))
}

/// Kuranishi matrix M(x, h) with M(x, 0) = Id and M(x, h)·h = log_x(x + h)
/// (coordinate components), by Gauss–Legendre quadrature of d(log_x) along
/// the segment x + t h.
pub fn kuranishi_matrix(ncs: &NormalCoordinateSystem, h: &[f64], nodes: usize) -> Result<DMatrix<f64>> {
    let n = ncs.dim();
    let nh = norm(h);
    if nh > ncs.opts.trust_radius {
        return Err(Error::TrustRadius { norm: nh, radius: ncs.opts.trust_radius });
    }
    if nh == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let (ts, ws) = gauss_legendre(nodes);
    let mut m = DMatrix::zeros(n, n);
    for (t, w) in ts.iter().zip(&ws) {
        let s = 0.5 * (t + 1.0);
        let y: Vec<f64> = (0..n).map(|i| ncs.base[i] + s * h[i]).collect();
        let v = log_map(&ncs.metric, &ncs.base, &y, &ncs.opts)?;
        let (_, jac) = exp_with_jacobian(&ncs.metric, &ncs.base, &v, &ncs.opts)?;
        let dlog = jac.try_inverse().ok_or_else(|| Error::SingularMetric(y.clone()))?;
        m += dlog * (0.5 * w);
    }
    Ok(m)
}

/// Sparse polynomial with exact rational coefficients.
///
/// Variables are split into passive parameters (first `nparams`) and the
/// fibre variables h; degrees refer to h only.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub nparams: usize,
    pub nh: usize,
    pub terms: BTreeMap<Vec<u32>, BigRational>,
}

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

impl Poly {
    pub fn zero(nparams: usize, nh: usize) -> Self {
        Poly { nparams, nh, terms: BTreeMap::new() }
    }

    pub fn monomial(nparams: usize, nh: usize, c: BigRational, exps: &[u32]) -> Self {
        assert_eq!(exps.len(), nparams + nh, "monomial arity");
        let mut p = Self::zero(nparams, nh);
        if !c.is_zero() {
            p.terms.insert(exps.to_vec(), c);
        }
        p
    }

    /// The fibre coordinate h^i.
    pub fn h(nparams: usize, nh: usize, i: usize) -> Self {
        let mut e = vec![0; nparams + nh];
        e[nparams + i] = 1;
        Self::monomial(nparams, nh, BigRational::one(), &e)
    }

    fn nvars(&self) -> usize {
        self.nparams + self.nh
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn h_degree(&self, e: &[u32]) -> u32 {
        e[self.nparams..].iter().sum()
    }

    /// Lowest h-degree present.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|e| self.h_degree(e)).min()
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|e| self.h_degree(e)).max().unwrap_or(0)
    }

    pub fn homogeneous_part(&self, d: u32) -> Self {
        let mut p = Self::zero(self.nparams, self.nh);
        for (e, c) in &self.terms {
            if self.h_degree(e) == d {
                p.terms.insert(e.clone(), c.clone());
            }
        }
        p
    }

    pub fn truncate(&self, d: u32) -> Self {
        let mut p = Self::zero(self.nparams, self.nh);
        for (e, c) in &self.terms {
            if self.h_degree(e) <= d {
                p.terms.insert(e.clone(), c.clone());
            }
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        let zero = {
            let slot = self.terms.entry(e.clone()).or_insert_with(BigRational::zero);
            *slot += c;
            slot.is_zero()
        };
        if zero {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-BigRational::one()))
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut p = Self::zero(self.nparams, self.nh);
        if s.is_zero() {
            return p;
        }
        for (e, c) in &self.terms {
            p.terms.insert(e.clone(), c * s);
        }
        p
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut p = Self::zero(self.nparams, self.nh);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }

    /// ∂/∂h^i.
    pub fn deriv_h(&self, i: usize) -> Self {
        let v = self.nparams + i;
        let mut p = Self::zero(self.nparams, self.nh);
        for (e, c) in &self.terms {
            if e[v] > 0 {
                let mut e2 = e.clone();
                e2[v] -= 1;
                p.add_term(e2, c * BigInt::from(e[v]));
            }
        }
        p
    }

    pub fn eval_f64(&self, params: &[f64], h: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (k, &p) in e.iter().enumerate() {
                let base = if k < self.nparams { params[k] } else { h[k - self.nparams] };
                t *= base.powi(p as i32);
            }
            acc += t;
        }
        acc
    }

    pub fn coeff(&self, exps: &[u32]) -> BigRational {
        self.terms.get(exps).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn nvars_total(&self) -> usize {
        self.nvars()
    }
}

/// X = Σ_i (h^i + A_i(x, h)) ∂_{h^i} with polynomial A_i ∈ I².
#[derive(Debug, Clone)]
pub struct PolyEulerField {
    pub nparams: usize,
    pub dim: usize,
    /// Components X^i = h^i + A_i.
    pub components: Vec<Poly>,
}

impl PolyEulerField {
    /// Build from the nonlinear parts A_i; the linear part is the identity.
    pub fn from_nonlinear(nparams: usize, a: Vec<Poly>) -> Self {
        let dim = a.len();
        let components = a
            .into_iter()
            .enumerate()
            .map(|(i, ai)| Poly::h(nparams, dim, i).add(&ai))
            .collect();
        PolyEulerField { nparams, dim, components }
    }

    /// Euler condition: X^i − h^i vanishes to second order in h.
    pub fn check_euler(&self) -> Result<()> {
        for (i, xi) in self.components.iter().enumerate() {
            let rest = xi.sub(&Poly::h(self.nparams, self.dim, i));
            if let Some(o) = rest.order() {
                if o < 2 {
                    return Err(Error::NonEuler(format!("component {i} has h-order {o} remainder")));
                }
            }
        }
        Ok(())
    }

    /// X f.
    pub fn apply(&self, f: &Poly) -> Poly {
        let mut out = Poly::zero(self.nparams, self.dim);
        for (i, xi) in self.components.iter().enumerate() {
            out = out.add(&xi.mul(&f.deriv_h(i)));
        }
        out
    }

    /// Vector field values at (x, h) in floating point.
    pub fn eval(&self, params: &[f64], h: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval_f64(params, h)).collect()
    }
}

/// Polynomial coordinates h̃ with X h̃^i − h̃^i vanishing through h-degree N + 1.
///
/// Each step finds the lowest order m of X h̃ − h̃ and subtracts its
/// degree-m part divided by m − 1.
pub fn euler_normal_form(x: &PolyEulerField, n_order: u32) -> Result<Vec<Poly>> {
    x.check_euler()?;
    let target = n_order + 1;
    let mut out = Vec::with_capacity(x.dim);
    for i in 0..x.dim {
        let mut ht = Poly::h(x.nparams, x.dim, i);
        loop {
            let r = x.apply(&ht).sub(&ht).truncate(target);
            let m = match r.order() {
                Some(m) => m,
                None => break,
            };
            if m < 2 {
                return Err(Error::NonEuler(format!("linear defect in component {i}")));
            }
            let lead = r.homogeneous_part(m);
            ht = ht.sub(&lead.scale(&rat(1, (m - 1) as i64)));
        }
        out.push(ht);
    }
    Ok(out)
}

/// Worst |X h̃ − h̃| coefficient through degree N + 1 (exactly zero on success).
pub fn normal_form_defect(x: &PolyEulerField, ht: &[Poly], n_order: u32) -> BigRational {
    let mut worst = BigRational::zero();
    for h in ht {
        let r = x.apply(h).sub(h).truncate(n_order + 1);
        for c in r.terms.values() {
            if c.abs() > worst {
                worst = c.abs();
            }
        }
    }
    worst
}

/// Five polynomial Euler fields used by the normal-form checks:
/// (h + h²)∂_h, (h + h³)∂_h, (h + x h²)∂_h with one parameter, and two
/// coupled fields on ℝ².
pub fn example_euler_fields() -> Vec<(String, PolyEulerField)> {
    let m = |np: usize, nh: usize, p: i64, q: i64, e: &[u32]| Poly::monomial(np, nh, rat(p, q), e);
    vec![
        ("(h+h^2)d_h".into(), PolyEulerField::from_nonlinear(0, vec![m(0, 1, 1, 1, &[2])])),
        ("(h+h^3)d_h".into(), PolyEulerField::from_nonlinear(0, vec![m(0, 1, 1, 1, &[3])])),
        ("(h+x h^2)d_h".into(), PolyEulerField::from_nonlinear(1, vec![m(1, 1, 1, 1, &[1, 2])])),
        (
            "(h1+h1 h2, h2+h1^2)".into(),
            PolyEulerField::from_nonlinear(0, vec![m(0, 2, 1, 1, &[1, 1]), m(0, 2, 1, 1, &[2, 0])]),
        ),
        (
            "(h1+h2^2/2+h1^3, h2-h1 h2)".into(),
            PolyEulerField::from_nonlinear(
                0,
                vec![m(0, 2, 1, 2, &[0, 2]).add(&m(0, 2, 1, 1, &[3, 0])), m(0, 2, -1, 1, &[1, 1])],
            ),
        ),
    ]
}

/// Backward-flow contraction ratio sup_t |h(t)| e^{t/2} / |h(0)| for
/// ḣ = −X(h), over the given initial points and time stations.
pub fn backward_flow_ratio(x: &PolyEulerField, params: &[f64], starts: &[Vec<f64>], t_max: f64) -> Result<f64> {
    let stations: Vec<f64> = (1..=40).map(|k| t_max * k as f64 / 40.0).collect();
    let mut worst = 0.0f64;
    for h0 in starts {
        let rhs = |_t: f64, h: &[f64]| -> Result<Vec<f64>> { Ok(x.eval(params, h).iter().map(|v| -v).collect()) };
        let out = ode::integrate(rhs, 0.0, h0, &stations, &OdeOptions::default())?;
        let n0 = norm(h0);
        for (t, h) in stations.iter().zip(&out) {
            worst = worst.max(norm(h) * (t / 2.0).exp() / n0);
        }
    }
    Ok(worst)
}
