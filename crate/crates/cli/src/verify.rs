//! Verification suites run by `resdyn verify <suite>`.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resdyn_core::modeldist::{
    f_alpha_homogeneity_check, stokes_limit, stokes_residue_integral, standard_vanishing_cases, vanishing_check, ModelQuadratic,
};
use resdyn_core::normalgeo::{euler_normal_form, example_euler_fields, normal_form_defect, rat};
use resdyn_core::quadrature::{sphere_volume, ConeGrading, SphereQuadrature};
use resdyn_core::residuecalc::{wodzicki_density, SymbolExpansion};
use resdyn_core::scaledyn::{bessel_k0_kernel, project_pi0_residue, ConcentratingFamily, CorrelatorQuadrature, FitSpec};
use serde::Serialize;

use crate::config::{Mode, RunConfig};

pub const SUITES: &[&str] = &["stokes", "vanishing", "wodzicki", "normalform", "homogeneity"];

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64, detail: String) -> Self {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance, detail }
    }
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<SuiteReport> {
    let checks = match name {
        "stokes" => stokes(cfg)?,
        "vanishing" => vanishing(cfg)?,
        "wodzicki" => wodzicki()?,
        "normalform" => normalform()?,
        "homogeneity" => homogeneity(cfg)?,
        _ => bail!("unknown suite '{name}'; expected one of {}", SUITES.join(", ")),
    };
    Ok(SuiteReport { suite: name.into(), pass: checks.iter().all(|c| c.pass), checks })
}

fn stokes(cfg: &RunConfig) -> Result<Vec<Check>> {
    let lorentzian = cfg.mode != Some(Mode::Euclidean);
    let mut out = Vec::new();
    for n in [2, 4] {
        let (q, quad, want) = if lorentzian {
            let quad = SphereQuadrature::cone_adapted(n, ConeGrading::default())?;
            (ModelQuadratic::lorentzian(n), quad, stokes_limit(n))
        } else {
            let quad = SphereQuadrature::polynomial(n, 16)?;
            (ModelQuadratic::euclidean(n), quad, Complex64::new(sphere_volume(n), 0.0))
        };
        let r = stokes_residue_integral(&q, &cfg.eps, &quad)?;
        let rel = (r.value - want).norm() / want.norm();
        out.push(Check::new(
            format!("stokes n={n}"),
            rel,
            1e-3,
            format!("value {} expected {} extrapolation error {:.2e}", r.value, want, r.error),
        ));
    }
    Ok(out)
}

fn vanishing(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (q, f) in standard_vanishing_cases() {
        let quad = SphereQuadrature::cone_adapted(q.dim, ConeGrading::default())?;
        let r = vanishing_check(&q, &f, &cfg.eps, &quad)?;
        out.push(Check::new(
            format!("n={} monomial {:?} alpha {} beta {:?}", q.dim, f.monomial, f.alpha, f.beta),
            r.relative(),
            1e-6,
            format!("value {} scale {:.3e}", r.value, r.scale),
        ));
    }
    Ok(out)
}

fn wodzicki() -> Result<Vec<Check>> {
    let sym = SymbolExpansion::resolvent_model(2, 4);
    let w = wodzicki_density(&sym, &[0.0, 0.0], &SphereQuadrature::polynomial(2, 16)?)?;
    let quad = CorrelatorQuadrature::new(2, false)?;
    let fam = ConcentratingFamily::new(&[0.0, 0.0], 0.4);
    let r = project_pi0_residue(&bessel_k0_kernel(0.5), &fam, &quad, &FitSpec::default())?;
    let exact = 1.0 / (2.0 * PI);
    Ok(vec![
        Check::new(
            "symbol route = 1/(2π)",
            (w - exact).norm() / exact,
            1e-12,
            format!("wodzicki density {w}"),
        ),
        Check::new(
            "kernel route = symbol route",
            (r.value - w).norm() / w.norm(),
            1e-3,
            format!(
                "scaling residue {} (error {:.1e}); |numeric + symbol| / |symbol| = {:.2e}",
                r.value,
                r.error,
                (r.value + w).norm() / w.norm()
            ),
        ),
    ])
}

fn normalform() -> Result<Vec<Check>> {
    let order = 6;
    let mut out = Vec::new();
    for (name, x) in example_euler_fields() {
        let ht = euler_normal_form(&x, order)?;
        let d = normal_form_defect(&x, &ht, order);
        out.push(Check::new(
            format!("X h̃ − h̃ through degree {} for {name}", order + 1),
            if d.is_zero() { 0.0 } else { 1.0 },
            0.0,
            format!("largest coefficient {d}"),
        ));
    }
    // h/(1+h) for (h + h²)∂_h
    let (_, x) = &example_euler_fields()[0];
    let ht = euler_normal_form(x, order)?;
    let mut bad = 0usize;
    for k in 1..=order + 1 {
        let want = if k % 2 == 1 { rat(1, 1) } else { rat(-1, 1) };
        if ht[0].coeff(&[k]) != want {
            bad += 1;
        }
    }
    out.push(Check::new(
        "1D Taylor coefficients match h/(1+h)",
        bad as f64,
        0.0,
        format!("{bad} mismatching coefficients through degree {}", order + 1),
    ));
    Ok(out)
}

fn homogeneity(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for (q, alpha) in [
        (ModelQuadratic::euclidean(2), 0.0),
        (ModelQuadratic::euclidean(2), 1.0),
        (ModelQuadratic::euclidean(4), 1.0),
        (ModelQuadratic::lorentzian(2), 0.0),
        (ModelQuadratic::lorentzian(2), 1.5),
        (ModelQuadratic::lorentzian(4), 2.0),
    ] {
        let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(0.3..1.5));
        let x: Vec<f64> = (0..q.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lam = rng.random_range(0.5..2.0);
        let d = f_alpha_homogeneity_check(&q, alpha, z, &x, lam)?;
        out.push(Check::new(
            format!("F_{alpha} homogeneity n={} {}", q.dim, if q.lorentzian { "lorentzian" } else { "euclidean" }),
            d,
            1e-6,
            format!("z {z} x {x:?} lambda {lam:.4}"),
        ));
    }
    Ok(out)
}
