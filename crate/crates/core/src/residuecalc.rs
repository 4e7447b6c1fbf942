//! Closed-form residue formulas: Wodzicki density of classical symbols,
//! dynamical residues of the Hadamard parametrix and of complex powers,
//! spectral zeta residues, the complex-power Γ coefficient and the
//! Littlewood–Paley continuation factor.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::SphereQuadrature;
use crate::special::{cgamma, factorial, rgamma};

const I: Complex64 = Complex64::new(0.0, 1.0);

pub type SymbolFn = Arc<dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync>;

/// One homogeneous term a_d(x, ξ) of a classical symbol.
#[derive(Clone)]
pub struct SymbolTerm {
    pub degree: Complex64,
    pub eval: SymbolFn,
}

impl fmt::Debug for SymbolTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymbolTerm(degree {})", self.degree)
    }
}

/// a ~ Σ_j a_{m−j}, each term homogeneous in ξ.
#[derive(Debug, Clone)]
pub struct SymbolExpansion {
    pub dim: usize,
    pub order: Complex64,
    pub terms: Vec<SymbolTerm>,
    pub chart: String,
}

impl SymbolExpansion {
    pub fn new(dim: usize, order: Complex64, terms: Vec<SymbolTerm>, chart: &str) -> Result<Self> {
        for (j, t) in terms.iter().enumerate() {
            let want = order - j as f64;
            if (t.degree - want).norm() > 1e-12 {
                return Err(Error::Invalid(format!("term {j} has degree {}, expected {want}", t.degree)));
            }
        }
        Ok(SymbolExpansion { dim, order, terms, chart: chart.to_string() })
    }

    /// Largest relative defect of a(x, λξ) = λ^d a(x, ξ) over the given probes.
    pub fn homogeneity_defect(&self, x: &[f64], probes: &[(Vec<f64>, f64)]) -> f64 {
        let mut worst: f64 = 0.0;
        for t in &self.terms {
            for (xi, lam) in probes {
                let a = (t.eval)(x, xi);
                let xs: Vec<f64> = xi.iter().map(|v| v * lam).collect();
                let b = (t.eval)(x, &xs);
                let want = a * (t.degree * lam.ln()).exp();
                worst = worst.max((b - want).norm() / want.norm().max(1e-300));
            }
        }
        worst
    }

    /// Symbol of (−Δ + 1)^{−1}: |ξ|^{−2} − |ξ|^{−4} + … with `count` terms.
    /// Only even-degree terms are nonzero; odd slots hold zero.
    pub fn resolvent_model(dim: usize, count: usize) -> Self {
        let terms = (0..count)
            .map(|j| {
                let f: SymbolFn = if j % 2 == 0 {
                    let p = j / 2;
                    let sgn = if p % 2 == 0 { 1.0 } else { -1.0 };
                    Arc::new(move |_x: &[f64], xi: &[f64]| {
                        let r2: f64 = xi.iter().map(|v| v * v).sum();
                        Complex64::new(sgn * r2.powi(-(p as i32) - 1), 0.0)
                    })
                } else {
                    Arc::new(|_x: &[f64], _xi: &[f64]| Complex64::new(0.0, 0.0))
                };
                SymbolTerm { degree: Complex64::new(-2.0 - j as f64, 0.0), eval: f }
            })
            .collect();
        SymbolExpansion { dim, order: Complex64::new(-2.0, 0.0), terms, chart: "flat".into() }
    }
}

/// (2π)^{−n} ∫_{S^{n−1}} a_{−n}(x, ω) dσ(ω); zero when there is no degree −n term.
pub fn wodzicki_density(s: &SymbolExpansion, x: &[f64], quad: &SphereQuadrature) -> Result<Complex64> {
    if quad.dim != s.dim {
        return Err(Error::Dimension(format!("sphere rule in dimension {} for symbol in {}", quad.dim, s.dim)));
    }
    let n = s.dim as f64;
    let Some(t) = s.terms.iter().find(|t| (t.degree + n).norm() < 1e-12) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let v = quad.integrate_c(|w| (t.eval)(x, w));
    if !v.is_finite() {
        return Err(Error::Quadrature("non-finite symbol values on the sphere".into()));
    }
    Ok(v * (2.0 * PI).powf(-n))
}

fn check_even(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Dimension(format!("even n ≥ 2 required, got {n}")));
    }
    Ok(())
}

/// i Σ_{p=0}^{n/2−1} z^p u_{n/2−p−1} / (p! 2^{n−1} π^{n/2}).
pub fn hadamard_dynres(n: usize, z: Complex64, u: &[Complex64]) -> Result<Complex64> {
    complex_power_dynres(n, 1, z, u)
}

/// i Σ_{p=0}^{n/2−α} z^p u_{n/2−p−α} / (p! (α−1)! 2^{n−1} π^{n/2}) for
/// α ∈ {1, …, n/2}, zero for other integers.
pub fn complex_power_dynres(n: usize, alpha: i64, z: Complex64, u: &[Complex64]) -> Result<Complex64> {
    check_even(n)?;
    let half = (n / 2) as i64;
    if alpha < 1 || alpha > half {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let top = (half - alpha) as usize;
    if u.len() <= top {
        return Err(Error::MissingCoefficients { need: top + 1, have: u.len() });
    }
    let den = factorial((alpha - 1) as usize) * 2f64.powi(n as i32 - 1) * PI.powf(n as f64 / 2.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zp = Complex64::new(1.0, 0.0);
    for p in 0..=top {
        acc += zp * u[top - p] / factorial(p);
        zp *= z;
    }
    Ok(I * acc / den)
}

/// res_{α=k} of the spectral zeta density of P − iε: half the dynamical residue.
pub fn zeta_residue(n: usize, k: i64, eps: f64, u: &[Complex64]) -> Result<Complex64> {
    check_even(n)?;
    if k < 1 || k > (n / 2) as i64 {
        return Err(Error::Invalid(format!("k = {k} outside 1..={}", n / 2)));
    }
    Ok(complex_power_dynres(n, k, Complex64::new(0.0, eps), u)? / 2.0)
}

/// (−1)^m Γ(1−α) / (Γ(1−α−m) Γ(α+m)), evaluated as 1/Γ(α).
pub fn gamma_coefficient(alpha: Complex64, m: u32) -> Result<Complex64> {
    let _ = m;
    if alpha.im == 0.0 && alpha.re <= 0.0 && alpha.re.fract() == 0.0 {
        return Err(Error::Pole(format!("Γ(α) singular at α = {}", alpha.re)));
    }
    Ok(rgamma(alpha))
}

/// The unsimplified three-Γ ratio; undefined at positive integer α.
pub fn gamma_coefficient_ratio(alpha: Complex64, m: u32) -> Complex64 {
    let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
    cgamma(1.0 - alpha) * sgn * rgamma(1.0 - alpha - m as f64) * rgamma(alpha + m as f64)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceFactor {
    pub value: Complex64,
    /// |e − 2πik/log 2| for the nearest lattice point.
    pub pole_distance: f64,
    pub near_pole: bool,
}

/// 2 / (1 − 2^e) with e = n + δ − 2s.
pub fn canonical_trace_factor(n: usize, deltamod: u32, s: Complex64) -> Result<TraceFactor> {
    let e = Complex64::new((n + deltamod as usize) as f64, 0.0) - 2.0 * s;
    let period = 2.0 * PI / LN_2;
    let k = (e.im / period).round();
    let dist = (e - Complex64::new(0.0, k * period)).norm();
    if dist == 0.0 {
        return Err(Error::Pole(format!("2^e = 1 at e = {e}")));
    }
    let value = 2.0 / (1.0 - (e * LN_2).exp());
    Ok(TraceFactor { value, pole_distance: dist, near_pole: dist < 1e-6 })
}

/// One (point, α, z) row of a residue run.
#[derive(Debug, Clone, Serialize)]
pub struct ResidueReport {
    pub point: Vec<f64>,
    pub alpha: i64,
    pub z: Complex64,
    pub analytic: Complex64,
    pub numeric: Option<Complex64>,
    pub zeta: Option<Complex64>,
    pub deltas: Vec<Delta>,
    pub u_provenance: String,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Delta {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Delta {
    pub fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Delta { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

impl ResidueReport {
    pub fn all_pass(&self) -> bool {
        self.deltas.iter().all(|d| d.pass)
    }
}
