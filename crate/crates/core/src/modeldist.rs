//! Constant-coefficient model: the quadratic form Q, regularized complex
//! powers (Q − z)^{−α}, sphere residue integrals, vanishing checks,
//! Laurent coefficients of pairings, and the normalized Fourier transforms
//! F_α.
//!
//! Branch convention: principal logarithm with arguments in (−π, π]. The
//! i0 limit is realized through an ε schedule ε_j = ε_0 2^{−j} with
//! Neville extrapolation to ε = 0.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::quadrature::{graded_breaks, richardson, sphere_volume, ConeGrading, Extrapolated, Rule, SphereQuadrature};
use crate::special::{bessel_k, cpow, rgamma};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Q(ξ) = −ξ0² + ξ1² + … (Lorentzian) or Σ ξi² (Euclidean).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelQuadratic {
    pub dim: usize,
    pub lorentzian: bool,
}

impl ModelQuadratic {
    pub fn lorentzian(dim: usize) -> Self {
        ModelQuadratic { dim, lorentzian: true }
    }

    pub fn euclidean(dim: usize) -> Self {
        ModelQuadratic { dim, lorentzian: false }
    }

    pub fn sign(&self, i: usize) -> f64 {
        if self.lorentzian && i == 0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        xi.iter().enumerate().map(|(i, v)| self.sign(i) * v * v).sum()
    }

    /// e^{−iπ(p−q)/4} for p positive and q negative squares.
    fn gaussian_phase(&self) -> Complex64 {
        let q = if self.lorentzian { 1 } else { 0 };
        let p = self.dim - q;
        (c(0.0, -PI * (p as f64 - q as f64) / 4.0)).exp()
    }

    fn check_even(&self) -> Result<()> {
        if self.dim % 2 != 0 || self.dim < 2 {
            return Err(Error::Dimension(format!("even n ≥ 2 required, got {}", self.dim)));
        }
        Ok(())
    }
}

/// ξ ↦ (Q(ξ) − z)^{−α}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegularizedPower {
    pub q: ModelQuadratic,
    pub alpha: Complex64,
    pub z: Complex64,
}

impl RegularizedPower {
    pub fn value(&self, xi: &[f64]) -> Result<Complex64> {
        power_value(&self.q, self.alpha, self.z, xi)
    }
}

/// (Q(ξ) − z)^{−α}, principal branch.
pub fn power_value(q: &ModelQuadratic, alpha: Complex64, z: Complex64, xi: &[f64]) -> Result<Complex64> {
    if z.im < 0.0 {
        return Err(Error::Invalid(format!("Im z must be ≥ 0, got {z}")));
    }
    let w = q.eval(xi) - z;
    if w.norm() == 0.0 {
        return Err(Error::Pole(format!("on-cone singularity at ξ = {xi:?}")));
    }
    Ok((-alpha * w.ln()).exp())
}

/// ε_j = ε_0 · 2^{−j}, j = 0..levels.
#[derive(Debug, Clone, Serialize)]
pub struct EpsSchedule {
    pub eps: Vec<f64>,
}

impl EpsSchedule {
    pub fn geometric(eps0: f64, levels: usize) -> Self {
        EpsSchedule { eps: (0..levels).map(|j| eps0 * 0.5f64.powi(j as i32)).collect() }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let eps: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("eps schedule '{t}': {e}"))))
            .collect::<Result<_>>()?;
        if eps.is_empty() || eps.iter().any(|&e| e <= 0.0) {
            return Err(Error::Config("eps schedule needs positive entries".into()));
        }
        Ok(EpsSchedule { eps })
    }
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::geometric(0.5, 8)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsExtrapolation {
    pub value: Complex64,
    pub error: f64,
    pub samples: Vec<(f64, Complex64)>,
}

fn extrapolate(eps: &[f64], vals: Vec<Complex64>) -> Result<EpsExtrapolation> {
    let Extrapolated { value, error } = richardson(eps, &vals)?;
    Ok(EpsExtrapolation { value, error, samples: eps.iter().copied().zip(vals).collect() })
}

/// Vol(S^{n−1})·Π_j (q_j − iε)^{−1/2}: closed form of ∫_{S^{n−1}} (Q − iε|ξ|²)^{−n/2}.
pub fn stokes_exact(q: &ModelQuadratic, eps: f64) -> Complex64 {
    let mut p = c(sphere_volume(q.dim), 0.0);
    for i in 0..q.dim {
        p /= (c(q.sign(i), -eps)).sqrt();
    }
    p
}

/// The i0 limit of the Stokes sphere integral: 2iπ^{n/2}/Γ(n/2) (Lorentzian).
pub fn stokes_limit(n: usize) -> Complex64 {
    I * sphere_volume(n)
}

/// ∫_{S^{n−1}} (Q(ξ) − iε)^{−n/2} dσ for each ε, extrapolated to ε = 0.
pub fn stokes_residue_integral(q: &ModelQuadratic, sched: &EpsSchedule, quad: &SphereQuadrature) -> Result<EpsExtrapolation> {
    q.check_even()?;
    if quad.dim != q.dim {
        return Err(Error::Dimension("sphere rule dimension".into()));
    }
    let a = q.dim as f64 / 2.0;
    let vals: Vec<Complex64> = sched
        .eps
        .iter()
        .map(|&e| quad.integrate_c(|x| (-a * (q.eval(x) - c(0.0, e)).ln()).exp()))
        .collect();
    let out = extrapolate(&sched.eps, vals)?;
    if !(out.error < 1e-2 * out.value.norm()) {
        return Err(Error::Extrapolation(format!(
            "Stokes integral error {:e} too large; refine the cone grading",
            out.error
        )));
    }
    Ok(out)
}

/// ∂^β [ξ^m (Q − iε|ξ|²)^{−α}] with |m| − 2α = |β| − n.
#[derive(Debug, Clone, Serialize)]
pub struct DerivIntegrand {
    pub monomial: Vec<u8>,
    pub alpha: f64,
    pub beta: Vec<u8>,
}

impl DerivIntegrand {
    fn check(&self, q: &ModelQuadratic) -> Result<()> {
        let n = q.dim;
        if self.monomial.len() != n || self.beta.len() != n {
            return Err(Error::Dimension("integrand multi-index length".into()));
        }
        let m: u32 = self.monomial.iter().map(|&v| v as u32).sum();
        let b: u32 = self.beta.iter().map(|&v| v as u32).sum();
        if b == 0 {
            return Err(Error::Invalid("|β| must be positive".into()));
        }
        let deg = m as f64 - 2.0 * self.alpha;
        if (deg - (b as f64 - n as f64)).abs() > 1e-12 {
            return Err(Error::Invalid(format!("degree {deg} before differentiation, need {}", b as f64 - n as f64)));
        }
        Ok(())
    }

    fn order(&self) -> usize {
        self.beta.iter().map(|&v| v as usize).sum()
    }

    /// (undifferentiated value, differentiated value) at ξ.
    fn eval(&self, q: &ModelQuadratic, eps: f64, xi: &[f64]) -> (Complex64, Complex64) {
        let n = q.dim;
        let k = self.order();
        let xs: Vec<Jet<Complex64>> = Jet::variables(&xi.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>(), k);
        let mut qe = Jet::zero(n, k);
        for (i, x) in xs.iter().enumerate() {
            qe += &x.mul_ref(x).scale(c(q.sign(i), -eps));
        }
        let mut u = qe.powf(-self.alpha);
        for (i, &p) in self.monomial.iter().enumerate() {
            if p > 0 {
                u = u.mul_ref(&xs[i].powi(p as i32));
            }
        }
        let vars: Vec<usize> = self
            .beta
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| std::iter::repeat_n(i, p as usize))
            .collect();
        (u.value(), u.partial(&vars))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingResult {
    pub value: Complex64,
    pub error: f64,
    /// ∫ |undifferentiated integrand| at the smallest ε
    pub scale: f64,
}

impl VanishingResult {
    pub fn relative(&self) -> f64 {
        self.value.norm() / self.scale
    }
}

/// Sphere integral of a derivative integrand, extrapolated to ε = 0.
pub fn vanishing_check(q: &ModelQuadratic, f: &DerivIntegrand, sched: &EpsSchedule, quad: &SphereQuadrature) -> Result<VanishingResult> {
    f.check(q)?;
    let mut vals = Vec::with_capacity(sched.eps.len());
    let mut scale = 0.0;
    for &e in &sched.eps {
        let mut acc = c(0.0, 0.0);
        let mut sc = 0.0;
        for (x, w) in quad.nodes.iter().zip(&quad.weights) {
            let (u, du) = f.eval(q, e, x);
            acc += du * *w;
            sc += u.norm() * w;
        }
        vals.push(acc);
        scale = sc;
    }
    let r = extrapolate(&sched.eps, vals)?;
    Ok(VanishingResult { value: r.value, error: r.error, scale })
}

/// The standard set of derivative integrands used by the vanishing suite.
pub fn standard_vanishing_cases() -> Vec<(ModelQuadratic, DerivIntegrand)> {
    let l2 = ModelQuadratic::lorentzian(2);
    let l4 = ModelQuadratic::lorentzian(4);
    let d = |m: &[u8], a: f64, b: &[u8]| DerivIntegrand { monomial: m.to_vec(), alpha: a, beta: b.to_vec() };
    vec![
        (l2, d(&[0, 0], 0.5, &[0, 1])),
        (l2, d(&[0, 0], 0.5, &[1, 0])),
        (l2, d(&[1, 0], 1.0, &[1, 0])),
        (l2, d(&[1, 1], 1.0, &[1, 1])),
        (l4, d(&[0, 0, 0, 0], 1.0, &[2, 0, 0, 0])),
        (l4, d(&[0, 0, 0, 0], 1.0, &[0, 1, 1, 0])),
        (l4, d(&[1, 0, 0, 0], 2.0, &[1, 0, 0, 0])),
        (l4, d(&[0, 0, 0, 0], 1.5, &[0, 0, 0, 1])),
    ]
}

/// Contour and quadrature controls for `laurent_pairing`.
#[derive(Debug, Clone, Serialize)]
pub struct ContourParams {
    pub radius: f64,
    pub points: usize,
    pub eps: EpsSchedule,
    /// φ is treated as zero beyond this radius.
    pub cutoff: f64,
    pub grading: ConeGrading,
}

impl Default for ContourParams {
    fn default() -> Self {
        ContourParams {
            radius: 0.25,
            points: 32,
            eps: EpsSchedule::geometric(0.5, 8),
            cutoff: 9.0,
            grading: ConeGrading { panel_nodes: 12, levels: 14, ratio: 0.5, s2_order: 0 },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LaurentResult {
    pub residue: Complex64,
    pub residue_error: f64,
    pub finite_part: Complex64,
    pub finite_part_error: f64,
}

/// Laurent coefficients at α = `center` of α ↦ ⟨(Q − i0)^{−α}, φ⟩ on ℝ².
///
/// Polar factorization: the pairing is Σ_ω (Q(ω) − iε)^{−α} M(α, ω) with
/// the radial Mellin transform M(α, ω) = ∫_0^∞ r^{1−2α} φ(rω) dr continued
/// by Taylor subtraction. Laurent coefficients come from the trapezoid rule
/// on the circle |α − center| = radius.
pub fn laurent_pairing(q: &ModelQuadratic, center: f64, phi: &Expr, p: &ContourParams) -> Result<LaurentResult> {
    if q.dim != 2 {
        return Err(Error::Cap("laurent_pairing runs at n = 2".into()));
    }
    // poles of the radial Mellin transform sit at α ∈ 1 + ℕ/2
    let nearest = (0..64)
        .map(|j| 1.0 + j as f64 / 2.0)
        .filter(|a| (a - center).abs() > 1e-12)
        .map(|a| (a - center).abs())
        .fold(f64::INFINITY, f64::min);
    if p.radius >= nearest {
        return Err(Error::Invalid(format!("contour radius {} encloses a neighbouring pole", p.radius)));
    }
    let ang = if q.lorentzian {
        SphereQuadrature::cone_adapted(2, p.grading)?
    } else {
        SphereQuadrature::polynomial(2, 64)?
    };
    let alphas: Vec<Complex64> = (0..p.points)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / p.points as f64;
            c(center, 0.0) + c(0.0, th).exp() * p.radius
        })
        .collect();
    let max_re = center + p.radius;
    let taylor = (2.0 * max_re).ceil() as usize + 2;
    // radial rule on [0, 1] graded toward 0, then unit panels to the cutoff
    let mut br = graded_breaks(0.0, 1.0, &[0.0], 0.5, 40, 0.25);
    br.dedup();
    let inner = Rule::composite(&br, 16);
    let outer_br: Vec<f64> = (0..=((p.cutoff - 1.0).ceil() as usize)).map(|k| 1.0 + k as f64).collect();
    let outer = Rule::composite(&outer_br, 20);
    let ln_in: Vec<f64> = inner.nodes.iter().map(|r| r.ln()).collect();
    let ln_out: Vec<f64> = outer.nodes.iter().map(|r| r.ln()).collect();

    // M(α_j, ω) for every angular node
    let mut mellin: Vec<Vec<Complex64>> = vec![vec![c(0.0, 0.0); ang.len()]; alphas.len()];
    for (a_idx, w) in ang.nodes.iter().enumerate() {
        let rj = Jet::<f64>::variable(1, taylor, 0, 0.0);
        let args: Vec<Jet<f64>> = w.iter().map(|wi| rj.scale(*wi)).collect();
        let tay = phi.eval(&args);
        let cj: Vec<f64> = (0..taylor).map(|j| tay.coeff(&[j as u8])).collect();
        let f_in: Vec<f64> = inner
            .nodes
            .iter()
            .map(|&r| {
                let v = phi.eval(&[r * w[0], r * w[1]]);
                let t: f64 = cj.iter().rev().fold(0.0, |acc, cc| acc * r + cc);
                v - t
            })
            .collect();
        let f_out: Vec<f64> = outer.nodes.iter().map(|&r| phi.eval(&[r * w[0], r * w[1]])).collect();
        if f_in.iter().chain(&f_out).any(|v| !v.is_finite()) {
            return Err(Error::Quadrature("test function not finite on the radial grid".into()));
        }
        for (j, &al) in alphas.iter().enumerate() {
            let ex = 1.0 - 2.0 * al;
            let mut m = c(0.0, 0.0);
            for ((f, wt), lr) in f_in.iter().zip(&inner.weights).zip(&ln_in) {
                m += (ex * lr).exp() * (f * wt);
            }
            for ((f, wt), lr) in f_out.iter().zip(&outer.weights).zip(&ln_out) {
                m += (ex * lr).exp() * (f * wt);
            }
            for (k, cc) in cj.iter().enumerate() {
                m += *cc / (k as f64 + 2.0 - 2.0 * al);
            }
            mellin[j][a_idx] = m;
        }
    }

    let qv: Vec<f64> = ang.nodes.iter().map(|w| q.eval(w)).collect();
    let mut res_eps = Vec::new();
    let mut fin_eps = Vec::new();
    let mut half_gap: f64 = 0.0;
    for &e in &p.eps.eps {
        let vals: Vec<Complex64> = alphas
            .iter()
            .enumerate()
            .map(|(j, &al)| {
                (0..ang.len())
                    .map(|i| (-al * (c(qv[i], -e)).ln()).exp() * mellin[j][i] * ang.weights[i])
                    .sum()
            })
            .collect();
        let (r, f) = circle_coefficients(&vals, &alphas, center, p.radius);
        let half: Vec<Complex64> = vals.iter().step_by(2).copied().collect();
        let ah: Vec<Complex64> = alphas.iter().step_by(2).copied().collect();
        let (rh, fh) = circle_coefficients(&half, &ah, center, p.radius);
        half_gap = half_gap.max((r - rh).norm()).max((f - fh).norm());
        res_eps.push(r);
        fin_eps.push(f);
    }
    let r = extrapolate(&p.eps.eps, res_eps)?;
    let f = extrapolate(&p.eps.eps, fin_eps)?;
    Ok(LaurentResult {
        residue: r.value,
        residue_error: r.error + half_gap,
        finite_part: f.value,
        finite_part_error: f.error + half_gap,
    })
}

/// (c_{−1}, c_0) from samples on a circle.
fn circle_coefficients(vals: &[Complex64], alphas: &[Complex64], center: f64, radius: f64) -> (Complex64, Complex64) {
    let m = vals.len() as f64;
    let mut r = c(0.0, 0.0);
    let mut f = c(0.0, 0.0);
    for (v, a) in vals.iter().zip(alphas) {
        r += v * (a - center);
        f += v;
    }
    let _ = radius;
    (r / m, f / m)
}

/// Pairing of (Q − i0)^{−α} (n = 2) with e^{−|ξ|²} in closed form.
pub fn gaussian_pairing_exact(q: &ModelQuadratic, alpha: Complex64) -> Complex64 {
    let radial = crate::special::cgamma(1.0 - alpha) * 0.5;
    if !q.lorentzian {
        return radial * 2.0 * PI;
    }
    let ang = (1.0 + (I * PI * alpha).exp()) * PI.sqrt() * crate::special::cgamma((1.0 - alpha) / 2.0) * rgamma(1.0 - alpha / 2.0);
    radial * ang
}

/// F_α(z, ·) = Γ(α+1)(2π)^{−n} ∫ e^{i⟨x,ξ⟩}(Q(ξ) − i0 − z)^{−α−1} dξ as a
/// function of σ = Q(x) (with Im σ ≥ 0), through the Bessel-K closed form.
///
/// Integer α only (the Bessel order is α + 1 − n/2).
pub fn f_alpha_bessel(q: &ModelQuadratic, alpha: i32, z: Complex64, sigma: Complex64) -> Result<Complex64> {
    q.check_even()?;
    check_f_args(z, sigma)?;
    let n = q.dim as i32;
    let nu = alpha + 1 - n / 2;
    let a = -I * z;
    let b = -I * sigma / 4.0;
    let w = 2.0 * a.sqrt() * b.sqrt();
    let ratio = cpow(b, c(nu as f64 / 2.0, 0.0)) * cpow(a, c(-(nu as f64) / 2.0, 0.0));
    let integral = 2.0 * ratio * bessel_k(nu, w);
    Ok(prefactor(q, c(alpha as f64, 0.0)) * integral)
}

/// F_0, …, F_{kmax} at one (z, σ), sharing the Bessel evaluations.
pub fn f_alpha_bessel_all(q: &ModelQuadratic, kmax: usize, z: Complex64, sigma: Complex64) -> Result<Vec<Complex64>> {
    q.check_even()?;
    check_f_args(z, sigma)?;
    let shift = q.dim as i32 / 2 - 1;
    let a = -I * z;
    let b = -I * sigma / 4.0;
    let w = 2.0 * a.sqrt() * b.sqrt();
    let top = (kmax as i32 - shift).unsigned_abs().max(shift.unsigned_abs()) as usize;
    let ks = crate::special::bessel_k_seq(top.max(1), w);
    let ratio = (b.ln() - a.ln()) * 0.5;
    Ok((0..=kmax)
        .map(|k| {
            let nu = k as i32 - shift;
            let integral = 2.0 * (ratio * nu as f64).exp() * ks[nu.unsigned_abs() as usize];
            prefactor(q, c(k as f64, 0.0)) * integral
        })
        .collect())
}

fn check_f_args(z: Complex64, sigma: Complex64) -> Result<()> {
    if !(z.im > 0.0) {
        return Err(Error::Invalid(format!("F_α needs Im z > 0, got {z}")));
    }
    if sigma.norm() == 0.0 {
        return Err(Error::Pole("F_α at σ = 0".into()));
    }
    if sigma.im < 0.0 {
        return Err(Error::Invalid("σ must lie in the closed upper half-plane".into()));
    }
    Ok(())
}

/// (2π)^{−n} π^{n/2} e^{−iπ(p−q)/4} i^{α+1}.
fn prefactor(q: &ModelQuadratic, alpha: Complex64) -> Complex64 {
    let n = q.dim as f64;
    (2.0 * PI).powf(-n) * PI.powf(n / 2.0) * q.gaussian_phase() * (I * PI / 2.0 * (alpha + 1.0)).exp()
}

/// F_α by proper-time quadrature on a rotated ray:
/// ∫_0^∞ s^{α−n/2} e^{isz} e^{iσ/(4s)} ds with s = τe^{iφ}, τ = e^u.
pub fn f_alpha_quad(q: &ModelQuadratic, alpha: Complex64, z: Complex64, sigma: Complex64) -> Result<(Complex64, f64)> {
    check_f_args(z, sigma)?;
    let n = q.dim as f64;
    let nu = alpha + 1.0 - n / 2.0;
    let (az, asg) = (z.arg(), if sigma.im == 0.0 && sigma.re < 0.0 { PI } else { sigma.arg() });
    let lo = (-az).max(asg - PI);
    let hi = (PI - az).min(asg);
    if !(hi > lo) {
        return Err(Error::Quadrature("no admissible rotation of the proper-time ray".into()));
    }
    let phi = 0.5 * (lo + hi);
    let e = c(0.0, phi).exp();
    let a = I * e * z;
    let b = I * sigma / (4.0 * e);
    let integrand = |u: f64| -> Complex64 {
        let t = u.exp();
        (nu * u + a * t + b / t).exp()
    };
    // window where the integrand is not negligible
    let (ar, br) = (-a.re, -b.re);
    let u_hi = ((60.0 + nu.re.abs() * 10.0) / ar).ln().max(1.0) + 1.0;
    let u_lo = -((60.0 + nu.re.abs() * 10.0) / br).ln().max(1.0) - 1.0;
    let trap = |h: f64| -> Complex64 {
        let m = ((u_hi - u_lo) / h).ceil() as usize;
        let hh = (u_hi - u_lo) / m as f64;
        (0..=m).map(|k| integrand(u_lo + k as f64 * hh)).sum::<Complex64>() * hh
    };
    let i1 = trap(0.1);
    let i2 = trap(0.05);
    let rot = (nu * c(0.0, phi)).exp();
    let pre = prefactor(q, alpha) * rot;
    Ok((pre * i2, (pre * (i1 - i2)).norm()))
}

/// Homogeneity defect |F_α(λ²z, x/λ) − λ^{n−2α−2} F_α(z, x)| / |F_α(z, x)|,
/// with F_α from proper-time quadrature.
pub fn f_alpha_homogeneity_check(q: &ModelQuadratic, alpha: f64, z: Complex64, x: &[f64], lambda: f64) -> Result<f64> {
    let sig = |xx: &[f64]| c(q.eval(xx), 0.0);
    let xs: Vec<f64> = x.iter().map(|v| v / lambda).collect();
    let (f1, _) = f_alpha_quad(q, c(alpha, 0.0), z, sig(x))?;
    let (f2, _) = f_alpha_quad(q, c(alpha, 0.0), z * lambda * lambda, sig(&xs))?;
    let pw = lambda.powf(q.dim as f64 - 2.0 * alpha - 2.0);
    Ok((f2 - f1 * pw).norm() / f1.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_value_examples() {
        let e = ModelQuadratic::euclidean(2);
        let v = power_value(&e, c(1.0, 0.0), I, &[0.0, 0.0]).unwrap();
        assert!((v - I).norm() < 1e-15);
        let l = ModelQuadratic::lorentzian(2);
        let v = power_value(&l, c(1.0, 0.0), I, &[1.0, 1.0]).unwrap();
        assert!((v - I).norm() < 1e-15);
        assert!(power_value(&l, c(1.0, 0.0), c(0.0, 0.0), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn stokes_quadrature_matches_closed_form() {
        for n in [2, 4] {
            let q = ModelQuadratic::lorentzian(n);
            let quad = SphereQuadrature::cone_adapted(n, ConeGrading::default()).unwrap();
            for e in [0.5, 0.05] {
                let a = n as f64 / 2.0;
                let v = quad.integrate_c(|x| (-a * (q.eval(x) - c(0.0, e)).ln()).exp());
                let w = stokes_exact(&q, e);
                assert!((v - w).norm() < 1e-9 * w.norm(), "n={n} eps={e}: {v} vs {w}");
            }
        }
    }

    #[test]
    fn bessel_and_quadrature_routes_agree() {
        for (q, sig) in [
            (ModelQuadratic::euclidean(2), c(0.7, 0.0)),
            (ModelQuadratic::lorentzian(2), c(0.4, 0.05)),
            (ModelQuadratic::lorentzian(2), c(-0.4, 0.05)),
            (ModelQuadratic::lorentzian(4), c(0.3, 0.02)),
        ] {
            for alpha in 0..3 {
                let z = c(0.1, 1.0);
                let a = f_alpha_bessel(&q, alpha, z, sig).unwrap();
                let (b, _) = f_alpha_quad(&q, c(alpha as f64, 0.0), z, sig).unwrap();
                assert!((a - b).norm() < 1e-9 * a.norm(), "{q:?} α={alpha}: {a} vs {b}");
                let all = f_alpha_bessel_all(&q, 2, z, sig).unwrap();
                assert!((all[alpha as usize] - a).norm() < 1e-12 * a.norm());
            }
        }
    }

    #[test]
    fn stokes_limit_and_vanishing() {
        for n in [2, 4] {
            let q = ModelQuadratic::lorentzian(n);
            let quad = SphereQuadrature::cone_adapted(n, ConeGrading::default()).unwrap();
            let r = stokes_residue_integral(&q, &EpsSchedule::default(), &quad).unwrap();
            let w = stokes_limit(n);
            assert!((r.value - w).norm() < 1e-8 * w.norm());
        }
        for (q, f) in standard_vanishing_cases() {
            let quad = SphereQuadrature::cone_adapted(q.dim, ConeGrading::default()).unwrap();
            let r = vanishing_check(&q, &f, &EpsSchedule::default(), &quad).unwrap();
            assert!(r.relative() < 1e-6);
        }
    }

    #[test]
    fn gaussian_laurent() {
        let phi = crate::expr::parse_expr("exp(-(x0^2 + x1^2))", 2).unwrap();
        for q in [ModelQuadratic::lorentzian(2), ModelQuadratic::euclidean(2)] {
            let r = laurent_pairing(&q, 1.0, &phi, &ContourParams::default()).unwrap();
            let want = if q.lorentzian { c(0.0, -PI) } else { c(-PI, 0.0) };
            assert!((r.residue - want).norm() < 1e-6);
            let r = laurent_pairing(&q, 0.5, &phi, &ContourParams::default()).unwrap();
            let want = gaussian_pairing_exact(&q, c(0.5, 0.0));
            assert!(r.residue.norm() < 1e-6);
            assert!((r.finite_part - want).norm() < 1e-6, "{} vs {want}", r.finite_part);
        }
    }
}
