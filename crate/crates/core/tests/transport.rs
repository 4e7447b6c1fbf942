//! Transport coefficients against closed forms and heat-kernel values.

use resdyn_core::hadamard::{refinement_check, solve_at, solve_transport, u0_closed_form, GridParams, MAX_ORDER};
use resdyn_core::metricspace::zoo;
use resdyn_core::normalgeo::{GeoOptions, NormalCoordinateSystem};
use resdyn_core::Error;

// u_2(x, x) on the unit sphere: R²/72 − |Ric|²/180 + |Riem|²/180 with R = 2
const SPHERE_U2: f64 = 1.0 / 15.0;
// same combination on de Sitter with R = −12
const DS_U2: f64 = 29.0 / 15.0;

#[test]
fn minkowski_coefficients_vanish() {
    for name in ["minkowski2", "minkowski4", "euclidean2"] {
        let m = zoo(name).unwrap();
        let t = solve_at(&m, &m.default_point(), 2, &GridParams::for_dim(m.dim)).unwrap();
        assert_eq!(t.diagonal[0], 1.0, "{name}");
        for k in 1..=2 {
            assert!(t.diagonal[k].abs() < 1e-10, "{name} u{k} = {}", t.diagonal[k]);
        }
        for ray in &t.values[1] {
            assert!(ray.iter().all(|v| v.abs() < 1e-10));
        }
    }
}

#[test]
fn sphere_u0_matches_van_vleck() {
    let m = zoo("sphere2").unwrap();
    let t = solve_at(&m, &m.default_point(), 0, &GridParams::default()).unwrap();
    assert!(t.diagnostics.u0_closed_form_defect < 1e-9);
    assert!(t.diagnostics.gauss_lemma_max < 1e-9);
    let prof = t.ray_profile(0, &[0.6, 0.8]).unwrap();
    for r in [0.05, 0.13, 0.29] {
        let want = (r / f64::sin(r)).sqrt();
        assert!((prof.eval(r).unwrap() - want).abs() < 1e-9, "r = {r}");
    }
    assert!(matches!(prof.eval(0.31), Err(Error::TrustRadius { .. })));
    assert!(t.eval(0, &[0.3, 0.1]).is_err());
}

#[test]
fn sphere_u2_with_refinement() {
    let m = zoo("sphere2").unwrap();
    let x = m.default_point();
    let ncs = NormalCoordinateSystem::new(&m, &x, 0.5, GeoOptions::default()).unwrap();
    let grid = GridParams::default();
    let (coarse, err, fine, gap) = refinement_check(&ncs, 2, 2, &grid).unwrap();
    assert!((fine - SPHERE_U2).abs() < 1e-3, "coarse {coarse} ± {err}, fine {fine}");
    assert!(gap < 1e-3, "{gap}");
    let t = solve_transport(&ncs, 2, &grid).unwrap();
    assert!((t.diagonal[1] + 1.0 / 3.0).abs() < 1e-6);
    let h = [0.1, -0.2];
    assert!((t.eval(0, &h).unwrap() - u0_closed_form(&ncs, &h).unwrap()).abs() < 1e-8);
}

#[test]
fn de_sitter_u1_and_u2() {
    let m = zoo("desitter4").unwrap();
    let t = solve_at(&m, &m.default_point(), 2, &GridParams::for_dim(4)).unwrap();
    assert!((t.diagonal[0] - 1.0).abs() < 1e-12);
    assert!((t.diagonal[1] - 2.0).abs() < 1e-4, "{:?}", t.diagonal);
    assert!((t.diagonal[2] - DS_U2).abs() < 3e-3, "{:?}", t.diagonal);
}

#[test]
fn order_is_capped() {
    let m = zoo("sphere2").unwrap();
    let r = solve_at(&m, &m.default_point(), MAX_ORDER + 1, &GridParams::default());
    assert!(r.is_err());
    let t = solve_at(&m, &m.default_point(), 1, &GridParams::default()).unwrap();
    assert!(matches!(t.ray_profile(2, &[1.0, 0.0]), Err(Error::MissingCoefficients { .. })));
}
