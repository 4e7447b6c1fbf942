//! Scaling flow, correlators, resonance fits and the Π_0 projection.

use std::f64::consts::PI;

use num_complex::Complex64;
use resdyn_core::scaledyn::{
    bessel_k0_kernel, correlator, fit_resonances, project_pi0_residue, scale_kernel, ConcentratingFamily,
    CorrelatorQuadrature, FitOptions, FitSpec, SampledKernel, TestFunction,
};

// bump exp(1 − 1/(1 − s²)) on the disc of radius 0.4, normalized (mpmath)
const INV_R_MEAN: f64 = 7.47486953995956290549;
const LOG_R_MEAN: f64 = -1.78469067546919746587;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn norm2(h: &[f64]) -> f64 {
    (h[0] * h[0] + h[1] * h[1]).sqrt()
}

#[test]
fn scale_kernel_examples() {
    let u = SampledKernel::new(2, 1.0, 1, false, |_x: &[f64], h: &[f64]| c(norm2(h)));
    let x = [0.0, 0.0];
    let v0 = scale_kernel(&u, 0.0).unwrap();
    assert_eq!(v0.eval(&x, &[0.3, 0.4]).unwrap(), c(0.5));
    let v = scale_kernel(&u, 2f64.ln()).unwrap();
    assert!((v.eval(&x, &[0.3, 0.4]).unwrap() - c(0.25)).norm() < 1e-15);
    // composition adds times
    let w = scale_kernel(&v, 2f64.ln()).unwrap();
    assert!((w.scale() - 0.25).abs() < 1e-15);

    let l = SampledKernel::new(2, 1.0, 0, true, |_x: &[f64], h: &[f64]| c(norm2(h).ln()));
    let h = [0.6, 0.0];
    let d = scale_kernel(&l, 1.0).unwrap().eval(&x, &h).unwrap() - l.eval(&x, &h).unwrap();
    assert!((d - c(-1.0)).norm() < 1e-15);

    assert!(scale_kernel(&u, -0.1).is_err());
    assert!(u.eval(&x, &[0.0, 0.0]).is_err());
    assert!(u.eval(&x, &[2.0, 0.0]).is_err());
}

#[test]
fn correlator_examples() {
    let quad = CorrelatorQuadrature::new(2, false).unwrap();
    let phi = TestFunction::bump(&[0.0, 0.0], 0.4, &quad);
    let t = [0.0, 0.5, 1.0, 3.0];

    let one = SampledKernel::new(2, 0.5, 0, false, |_x: &[f64], _h: &[f64]| c(1.0));
    for v in correlator(&one, &phi, &t, &quad).unwrap() {
        assert!((v - c(1.0)).norm() < 1e-13);
    }

    let abs = SampledKernel::new(2, 0.5, 1, false, |_x: &[f64], h: &[f64]| c(norm2(h)));
    let vs = correlator(&abs, &phi, &t, &quad).unwrap();
    for (ti, v) in t.iter().zip(&vs) {
        assert!((v / vs[0] - c((-ti).exp())).norm() < 1e-13);
    }

    let log = SampledKernel::new(2, 0.5, 0, true, |_x: &[f64], h: &[f64]| c(norm2(h).ln()));
    let vs = correlator(&log, &phi, &t, &quad).unwrap();
    assert!((vs[0] - c(LOG_R_MEAN)).norm() < 5e-8 * LOG_R_MEAN.abs(), "{}", vs[0]);
    for (ti, v) in t.iter().zip(&vs) {
        assert!((v - vs[0] - c(-ti)).norm() < 1e-12);
    }
}

#[test]
fn synthetic_resonance_fits() {
    let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
    let s: Vec<Complex64> = t.iter().map(|t| c(3.0 + 5.0 * t)).collect();
    let f = fit_resonances(&t, &s, (0, 3), 2, &FitOptions::default()).unwrap();
    let z = f.term(0).unwrap();
    assert!((z.a - c(3.0)).norm() < 1e-8 && (z.b - c(5.0)).norm() < 1e-8);
    assert!(f.tameness_defect() < 1e-8);

    let s: Vec<Complex64> = t.iter().map(|t| c(2.0 * t.exp() + 1.0)).collect();
    let f = fit_resonances(&t, &s, (-1, 2), 2, &FitOptions::default()).unwrap();
    assert!((f.term(-1).unwrap().a - c(2.0)).norm() < 1e-8);
    assert!((f.term(0).unwrap().a - c(1.0)).norm() < 1e-8);
    assert!((f.eval(2.5) - c(2.0 * 2.5f64.exp() + 1.0)).norm() < 1e-7);

    // Jordan block at k = 1 is resolved, not absorbed into neighbours
    let s: Vec<Complex64> = t.iter().map(|t| c((-t).exp() * (0.5 - 2.0 * t))).collect();
    let f = fit_resonances(&t, &s, (0, 3), 2, &FitOptions::default()).unwrap();
    let k1 = f.term(1).unwrap();
    assert!((k1.a - c(0.5)).norm() < 1e-7 && (k1.b - c(-2.0)).norm() < 1e-7);
}

#[test]
fn singular_kernel_fit_matches_quadrature_oracle() {
    let quad = CorrelatorQuadrature::new(2, false).unwrap();
    let phi = TestFunction::bump(&[0.0, 0.0], 0.4, &quad);
    let u = SampledKernel::new(2, 0.5, -1, true, |_x: &[f64], h: &[f64]| {
        let r = norm2(h);
        c(1.0 / r + 7.0 * r.ln())
    });
    let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
    let vs = correlator(&u, &phi, &t, &quad).unwrap();
    let f = fit_resonances(&t, &vs, (-1, 2), 2, &FitOptions::default()).unwrap();
    let m1 = f.term(-1).unwrap();
    let z = f.term(0).unwrap();
    assert!((m1.a - c(INV_R_MEAN)).norm() < 5e-8 * INV_R_MEAN, "{}", m1.a);
    assert!((z.b - c(-7.0)).norm() < 1e-8, "{}", z.b);
    assert!((z.a - c(7.0 * LOG_R_MEAN)).norm() < 5e-8 * 7.0 * LOG_R_MEAN.abs(), "{}", z.a);
}

#[test]
fn pi0_projection_examples() {
    let quad = CorrelatorQuadrature::new(2, false).unwrap();
    let fam = ConcentratingFamily::new(&[0.1, -0.2], 0.4);

    let log = SampledKernel::new(2, 0.5, 0, true, |_x: &[f64], h: &[f64]| c(3.0 + 5.0 * norm2(h).ln()));
    let r = project_pi0_residue(&log, &fam, &quad, &FitSpec::default()).unwrap();
    assert!((r.value - c(5.0)).norm() < 1e-8, "{}", r.value);

    // homogeneous of degree −1: no logarithm, no residue
    let inv = SampledKernel::new(2, 0.5, -1, false, |_x: &[f64], h: &[f64]| c(1.0 / norm2(h)));
    let fit_spec = FitSpec::uniform(0.0, 4.0, 40, (-1, 3));
    let r = project_pi0_residue(&inv, &fam, &quad, &fit_spec).unwrap();
    assert!(r.value.norm() < 1e-8, "{}", r.value);

    // x-dependent log coefficient: the concentrating limit picks out the value at x0
    let xl = SampledKernel::new(2, 0.5, 0, true, |x: &[f64], h: &[f64]| c((1.0 + x[0] * x[0]) * norm2(h).ln()));
    let r = project_pi0_residue(&xl, &fam, &quad, &FitSpec::default()).unwrap();
    assert!((r.value - c(1.01)).norm() < 1e-6, "{}", r.value);
}

#[test]
fn bessel_k0_residue_is_the_log_coefficient() {
    let quad = CorrelatorQuadrature::new(2, false).unwrap();
    let fam = ConcentratingFamily::new(&[0.0, 0.0], 0.4);
    // K_0(r)/(2π) = −log(r)/(2π) + smooth + r² log r terms
    let want = c(-1.0 / (2.0 * PI));

    let lead = SampledKernel::new(2, 0.5, 0, true, |_x: &[f64], h: &[f64]| c(-norm2(h).ln() / (2.0 * PI)));
    let r = project_pi0_residue(&lead, &fam, &quad, &FitSpec::default()).unwrap();
    assert!((r.value - want).norm() < 1e-8, "{}", r.value);

    let r = project_pi0_residue(&bessel_k0_kernel(0.5), &fam, &quad, &FitSpec::default()).unwrap();
    assert!((r.value - want).norm() < 1e-6, "{}", r.value);
}
