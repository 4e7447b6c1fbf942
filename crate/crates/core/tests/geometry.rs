//! Curvature, wave operator, exponential map, frames, Kuranishi matrix and
//! Euler normal forms against independent oracles.
//!
//! Frozen values were computed symbolically (sympy, exact Christoffel and
//! Riemann tensors) or from closed forms; they are not outputs of this crate.

use std::f64::consts::PI;

use resdyn_core::expr::parse_expr;
use resdyn_core::metricspace::{curvature_at, parse_metric, wave_apply_expr, zoo};
use resdyn_core::normalgeo::{
    backward_flow_ratio, build_frame, euler_normal_form, example_euler_fields, exp_map, kuranishi_matrix, log_map,
    normal_form_defect, rat, GeoOptions, NormalCoordinateSystem, Poly, PolyEulerField,
};
use resdyn_core::Error;

const METRIC3: &str = r#"
name = "warped3"
dim = 3
signature = "+++"
g00 = "1 + x1^2"
g01 = "0.3*sin(x2)"
g11 = "2 + cos(x0)"
g12 = "0.1*x0"
g22 = "exp(x0*x1/2)"
"#;
const POINT3: [f64; 3] = [0.3, -0.7, 1.1];
// sympy: scalar curvature and |g|^{-1/2} ∂_j(|g|^{1/2} g^{jk} ∂_k f) at POINT3
const R3: f64 = -0.099_688_319_249_187_783;
const WAVE3: f64 = -0.647_755_013_856_831_04;
// sympy: bump2 scalar curvature at (0.25, -0.5)
const R_BUMP2: f64 = -0.334_291_809_885_706_81;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn flat_metrics_have_no_curvature() {
    for name in ["minkowski2", "minkowski4", "euclidean2", "euclidean4"] {
        let m = zoo(name).unwrap();
        let x: Vec<f64> = (0..m.dim).map(|i| 0.3 * i as f64 - 0.1).collect();
        let c = curvature_at(&m, &x).unwrap();
        assert!(c.christoffel.iter().all(|v| *v == 0.0));
        assert_eq!(c.scalar, 0.0);
    }
}

#[test]
fn sphere_scalar_curvature_is_two() {
    let s = zoo("sphere2").unwrap();
    for x in [[1.0, 0.3], [0.4, 2.0], [2.7, -1.0]] {
        let r = curvature_at(&s, &x).unwrap().scalar;
        assert!(close(r, 2.0, 1e-12), "R = {r} at {x:?}");
    }
}

#[test]
fn de_sitter_scalar_curvature() {
    // mostly-minus signature: R = −12 for g = dt² − e^{2t} dx²
    let ds = zoo("desitter4").unwrap();
    for x in [[0.0, 0.0, 0.0, 0.0], [0.2, 0.1, -0.3, 0.5], [-0.8, 1.0, 2.0, -1.5]] {
        let r = curvature_at(&ds, &x).unwrap().scalar;
        assert!(close(r, -12.0, 1e-12), "R = {r} at {x:?}");
    }
}

#[test]
fn non_diagonal_metric_matches_symbolic_oracle() {
    let m = parse_metric(METRIC3).unwrap();
    let c = curvature_at(&m, &POINT3).unwrap();
    assert!(close(c.scalar, R3, 1e-10), "R = {} want {R3}", c.scalar);
    let f = parse_expr("x0*x1^2 + sin(x2)", 3).unwrap();
    let w = wave_apply_expr(&m, &f, &POINT3).unwrap();
    assert!(close(w, WAVE3, 1e-10), "Pf = {w} want {WAVE3}");

    let b = zoo("bump2").unwrap();
    let r = curvature_at(&b, &[0.25, -0.5]).unwrap().scalar;
    assert!(close(r, R_BUMP2, 1e-10), "bump2 R = {r}");
}

#[test]
fn riemann_symmetries() {
    let m = parse_metric(METRIC3).unwrap();
    let c = curvature_at(&m, &POINT3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    assert!((c.riemann(i, j, k, l) + c.riemann(i, j, l, k)).abs() < 1e-12);
                }
                assert!((c.ricci(i, j) - c.ricci(j, i)).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn wave_operator_examples() {
    let mk = zoo("minkowski4").unwrap();
    let x = [0.3, -0.2, 0.5, 1.0];
    let sq0 = parse_expr("x0^2", 4).unwrap();
    let sq1 = parse_expr("x1^2", 4).unwrap();
    assert_eq!(wave_apply_expr(&mk, &sq0, &x).unwrap(), 2.0);
    assert_eq!(wave_apply_expr(&mk, &sq1, &x).unwrap(), -2.0);
    // e^{−3t} ∂_t(e^{3t}) = 3
    let ds = zoo("desitter4").unwrap();
    let t = parse_expr("x0", 4).unwrap();
    let v = wave_apply_expr(&ds, &t, &[0.2, 0.0, 0.0, 0.0]).unwrap();
    assert!(close(v, 3.0, 1e-13), "{v}");
}

#[test]
fn parse_errors() {
    let e = parse_metric("name = \"bad\"\ndim = 4\nsignature = \"+---\"\ng = \"diag(1, -1, -1, -x9)\"").unwrap_err();
    assert!(e.to_string().contains("unknown variable"), "{e}");
    let e = parse_metric("name = \"bad\"\ndim = 2\nsignature = \"+-\"\ng00 = \"1 +\"\ng11 = \"-1\"").unwrap_err();
    assert!(matches!(e, Error::Syntax { .. }), "{e}");
    let c = parse_metric("diag(1, -1, -1, -1)").unwrap();
    let g = c.eval(&[5.0, 1.0, 2.0, 3.0]);
    assert_eq!((g[(0, 0)], g[(3, 3)], g[(0, 1)]), (1.0, -1.0, 0.0));
}

#[test]
fn frames() {
    let mk = zoo("minkowski4").unwrap();
    let e = build_frame(&mk, &[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(e, nalgebra::DMatrix::identity(4, 4));
    let m = parse_metric("diag(4, -1, -1, -1)").unwrap();
    let e = build_frame(&m, &[0.0; 4]).unwrap();
    assert_eq!(e[(0, 0)], 0.5);
    let ds = zoo("desitter4").unwrap();
    let e = build_frame(&ds, &[1.0, 0.0, 0.0, 0.0]).unwrap();
    for i in 1..4 {
        assert!(close(e[(i, i)], (-1.0f64).exp(), 1e-14));
    }
}

/// Great-circle endpoint in chart coordinates (θ, φ).
fn great_circle(x: [f64; 2], v: [f64; 2]) -> [f64; 2] {
    let (th, ph) = (x[0], x[1]);
    let p = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
    let d_th = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
    let d_ph = [-th.sin() * ph.sin(), th.sin() * ph.cos(), 0.0];
    let t: Vec<f64> = (0..3).map(|i| v[0] * d_th[i] + v[1] * d_ph[i]).collect();
    let s = (v[0] * v[0] + (th.sin() * v[1]).powi(2)).sqrt();
    let q: Vec<f64> = (0..3).map(|i| s.cos() * p[i] + s.sin() * t[i] / s).collect();
    [q[2].acos(), q[1].atan2(q[0])]
}

#[test]
fn sphere_exponential_map() {
    let s = zoo("sphere2").unwrap();
    let opts = GeoOptions::default();
    let y = exp_map(&s, &[PI / 2.0, 0.3], &[-PI / 2.0, 0.0], &opts).unwrap();
    assert!(y[0].abs() < 1e-8, "{y:?}");
    for (x, v) in [([PI / 2.0, 0.0], [0.3, 0.5]), ([1.1, 0.4], [-0.4, 0.7]), ([0.8, -1.0], [0.6, -0.2])] {
        let y = exp_map(&s, &x, &v, &opts).unwrap();
        let want = great_circle(x, v);
        assert!((y[0] - want[0]).abs() < 1e-8 && (y[1] - want[1]).abs() < 1e-8, "{y:?} vs {want:?}");
    }
}

#[test]
fn exp_log_round_trip_and_geodesic_symmetry() {
    let opts = GeoOptions::default();
    for (name, x, v) in [
        ("desitter4", vec![0.1, 0.0, 0.2, -0.1], vec![0.2, 0.1, -0.15, 0.05]),
        ("bump2", vec![0.25, -0.5], vec![0.3, 0.2]),
        ("sphere2", vec![1.0, 0.5], vec![0.4, -0.3]),
    ] {
        let m = zoo(name).unwrap();
        let y = exp_map(&m, &x, &v, &opts).unwrap();
        let w = log_map(&m, &x, &y, &opts).unwrap();
        for (a, b) in w.iter().zip(&v) {
            assert!((a - b).abs() < 1e-9, "{name}: {w:?} vs {v:?}");
        }
        // x is the midpoint of the geodesic from exp(−v) to exp(v)
        let minus: Vec<f64> = v.iter().map(|c| -c).collect();
        let a = exp_map(&m, &x, &minus, &opts).unwrap();
        let b = exp_map(&m, &x, &v, &opts).unwrap();
        let to_b = log_map(&m, &a, &b, &opts).unwrap();
        let to_x = log_map(&m, &a, &x, &opts).unwrap();
        for (p, q) in to_b.iter().zip(&to_x) {
            assert!((p - 2.0 * q).abs() < 1e-8, "{name}: {to_b:?} vs 2·{to_x:?}");
        }
    }
}

#[test]
fn trust_radius_is_enforced() {
    let s = zoo("sphere2").unwrap();
    let e = exp_map(&s, &[1.0, 0.0], &[5.0, 0.0], &GeoOptions::default()).unwrap_err();
    assert!(matches!(e, Error::TrustRadius { .. }), "{e}");
}

#[test]
fn gauss_lemma_in_normal_coordinates() {
    for (name, x) in [("desitter4", vec![0.1, 0.0, 0.0, 0.0]), ("bump2", vec![0.25, -0.5]), ("sphere2", vec![1.0, 0.0])] {
        let m = zoo(name).unwrap();
        let ncs = NormalCoordinateSystem::new(&m, &x, 0.4, GeoOptions::default()).unwrap();
        let h: Vec<f64> = (0..m.dim).map(|i| 0.1 + 0.05 * i as f64).collect();
        let d = ncs.gauss_lemma_defect(&h).unwrap();
        assert!(d < 1e-9, "{name}: {d}");
        let y = ncs.exp(&h).unwrap();
        let back = ncs.log(&y).unwrap();
        for (a, b) in back.iter().zip(&h) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn kuranishi_matrix_examples() {
    let s = zoo("sphere2").unwrap();
    let x = [1.0, 0.2];
    let ncs = NormalCoordinateSystem::new(&s, &x, 0.5, GeoOptions::default()).unwrap();
    let id = kuranishi_matrix(&ncs, &[0.0, 0.0], 8).unwrap();
    assert_eq!(id, nalgebra::DMatrix::identity(2, 2));

    let h = [0.3 * 0.6, 0.3 * 0.8];
    let m = kuranishi_matrix(&ncs, &h, 12).unwrap();
    let y = [x[0] + h[0], x[1] + h[1]];
    let want = log_map(&s, &x, &y, &GeoOptions::default()).unwrap();
    let got = &m * nalgebra::DVector::from_column_slice(&h);
    for i in 0..2 {
        assert!((got[i] - want[i]).abs() < 1e-8, "{got:?} vs {want:?}");
    }

    let mk = zoo("minkowski2").unwrap();
    let ncs = NormalCoordinateSystem::new(&mk, &[0.5, 0.5], 0.5, GeoOptions::default()).unwrap();
    let m = kuranishi_matrix(&ncs, &[0.2, -0.1], 8).unwrap();
    assert!((m - nalgebra::DMatrix::identity(2, 2)).abs().max() < 1e-12);
}

#[test]
fn normal_form_of_linear_field_is_identity() {
    let x = PolyEulerField::from_nonlinear(0, vec![Poly::zero(0, 1)]);
    let ht = euler_normal_form(&x, 5).unwrap();
    assert_eq!(ht[0], Poly::h(0, 1, 0));
}

#[test]
fn one_dimensional_normal_form_is_h_over_one_plus_h() {
    let x = &example_euler_fields()[0].1;
    let ht = euler_normal_form(x, 2).unwrap();
    let mut want = Poly::zero(0, 1);
    for (k, c) in [(1u32, 1i64), (2, -1), (3, 1)] {
        want = want.add(&Poly::monomial(0, 1, rat(c, 1), &[k]));
    }
    assert_eq!(ht[0], want);
    // longer expansion keeps matching h/(1+h) = Σ (−1)^{k+1} h^k
    let ht = euler_normal_form(x, 9).unwrap();
    for k in 1..=10u32 {
        let sign = if k % 2 == 1 { 1 } else { -1 };
        assert_eq!(ht[0].coeff(&[k]), rat(sign, 1), "degree {k}");
    }
}

#[test]
fn coupled_field_defect_vanishes_to_order_three() {
    // X = (h¹ + h¹h²)∂₁ + h²∂₂
    let a1 = Poly::monomial(0, 2, rat(1, 1), &[1, 1]);
    let x = PolyEulerField::from_nonlinear(0, vec![a1, Poly::zero(0, 2)]);
    let ht = euler_normal_form(&x, 2).unwrap();
    assert_eq!(normal_form_defect(&x, &ht, 2), rat(0, 1));
    // brute force over degree-3 monomials: h̃¹ = h¹ − h¹h² + ½h¹(h²)²
    let want = Poly::h(0, 2, 0)
        .sub(&Poly::monomial(0, 2, rat(1, 1), &[1, 1]))
        .add(&Poly::monomial(0, 2, rat(1, 2), &[1, 2]));
    assert_eq!(ht[0].truncate(3), want);
    assert_eq!(ht[1], Poly::h(0, 2, 1));
}

#[test]
fn all_example_fields_reach_exact_normal_form() {
    for (name, x) in example_euler_fields() {
        for n in [1, 4, 7] {
            let ht = euler_normal_form(&x, n).unwrap();
            assert_eq!(normal_form_defect(&x, &ht, n), rat(0, 1), "{name} N = {n}");
        }
    }
}

#[test]
fn non_euler_field_rejected() {
    // X = 2h ∂_h has a linear defect
    let x = PolyEulerField::from_nonlinear(0, vec![Poly::h(0, 1, 0)]);
    assert!(matches!(euler_normal_form(&x, 3), Err(Error::NonEuler(_))));
}

#[test]
fn backward_flow_contracts_near_zero() {
    for (name, x) in example_euler_fields() {
        let params = vec![0.5; x.nparams];
        let starts: Vec<Vec<f64>> = (0..4)
            .map(|k| {
                let a = 0.7 * k as f64 + 0.2;
                (0..x.dim).map(|i| 0.05 * if i == 0 { a.cos() } else { a.sin() }).collect()
            })
            .collect();
        let r = backward_flow_ratio(&x, &params, &starts, 6.0).unwrap();
        assert!(r < 1.2, "{name}: {r}");
    }
}
