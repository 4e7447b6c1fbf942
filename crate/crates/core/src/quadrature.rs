//! Gauss rules, graded composite panels, sphere quadratures and
//! Richardson extrapolation.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Legendre polynomial P_m(x) and its derivative.
fn legendre_with_deriv(m: usize, x: f64) -> (f64, f64) {
    if m == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Legendre values P_0..=P_m at x.
fn legendre_all(m: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; m + 1];
    p[0] = 1.0;
    if m >= 1 {
        p[1] = x;
    }
    for k in 2..=m {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
    }
    p
}

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton
        let theta = PI * (i as f64 + 0.75) / (mf + 0.5);
        let mut t = (1.0 - (mf - 1.0) / (8.0 * mf * mf * mf)) * theta.cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(m, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(m, t);
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[m - 1 - i] = t;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Hermite rule for weight e^{-x²} (Golub–Welsch).
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let b = (k as f64 / 2.0).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// A one-dimensional quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn gauss(a: f64, b: f64, m: usize) -> Self {
        let (x, w) = gauss_legendre(m);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        Rule {
            nodes: x.iter().map(|t| c + h * t).collect(),
            weights: w.iter().map(|wi| h * wi).collect(),
        }
    }

    /// Composite Gauss rule over consecutive breakpoints.
    pub fn composite(breaks: &[f64], m: usize) -> Self {
        let (x, w) = gauss_legendre(m);
        let mut nodes = Vec::with_capacity(m * breaks.len());
        let mut weights = Vec::with_capacity(m * breaks.len());
        for p in breaks.windows(2) {
            let (c, h) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            for (t, wi) in x.iter().zip(&w) {
                nodes.push(c + h * t);
                weights.push(h * wi);
            }
        }
        Rule { nodes, weights }
    }

    /// Periodic trapezoid rule with `m` nodes on [a, a + period).
    pub fn periodic(a: f64, period: f64, m: usize) -> Self {
        let h = period / m as f64;
        Rule {
            nodes: (0..m).map(|i| a + h * i as f64).collect(),
            weights: vec![h; m],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_c(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }
}

/// Breakpoints on [a, b] refined geometrically toward each singular point.
///
/// Around a singular point s, breakpoints sit at s ± d·ratio^k for
/// k = 0..levels, where d is the largest offset that stays inside [a, b]
/// and away from the neighbouring singular points. Panels longer than
/// `hmax` are split.
pub fn graded_breaks(a: f64, b: f64, singular: &[f64], ratio: f64, levels: usize, hmax: f64) -> Vec<f64> {
    let mut sing: Vec<f64> = singular.iter().copied().filter(|&s| s >= a && s <= b).collect();
    sing.sort_by(f64::total_cmp);
    let mut pts = vec![a, b];
    for (i, &s) in sing.iter().enumerate() {
        pts.push(s);
        let left = if i > 0 { sing[i - 1] } else { a };
        let right = if i + 1 < sing.len() { sing[i + 1] } else { b };
        let dl = 0.5 * (s - left);
        let dr = 0.5 * (right - s);
        for k in 0..=levels {
            let f = ratio.powi(k as i32);
            if dl > 0.0 {
                pts.push(s - dl * f);
            }
            if dr > 0.0 {
                pts.push(s + dr * f);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    let mut out = vec![pts[0]];
    for w in pts.windows(2) {
        let len = w[1] - w[0];
        let pieces = (len / hmax).ceil().max(1.0) as usize;
        for j in 1..=pieces {
            out.push(w[0] + len * j as f64 / pieces as f64);
        }
    }
    out
}

/// Spectral cumulative integration on composite Gauss panels.
///
/// For nodes t_i of the composite rule, `apply` returns ∫_a^{t_i} f.
#[derive(Debug, Clone)]
pub struct CumulativeRule {
    pub rule: Rule,
    breaks: Vec<f64>,
    m: usize,
    /// s[i][j] = ∫_{-1}^{x_i} ℓ_j on the reference panel
    s: Vec<Vec<f64>>,
}

impl CumulativeRule {
    pub fn new(breaks: Vec<f64>, m: usize) -> Self {
        let (x, w) = gauss_legendre(m);
        // ℓ_j = Σ_q c_{jq} P_q with c_{jq} = w_j P_q(x_j)(2q+1)/2
        let pj: Vec<Vec<f64>> = x.iter().map(|&t| legendre_all(m, t)).collect();
        let mut s = vec![vec![0.0; m]; m];
        for (i, &xi) in x.iter().enumerate() {
            let p = legendre_all(m, xi);
            // ∫_{-1}^{x} P_q
            let mut iq = vec![0.0; m];
            iq[0] = xi + 1.0;
            for q in 1..m {
                iq[q] = (p[q + 1] - p[q - 1]) / (2.0 * q as f64 + 1.0);
            }
            for j in 0..m {
                s[i][j] = (0..m)
                    .map(|q| w[j] * pj[j][q] * (2.0 * q as f64 + 1.0) / 2.0 * iq[q])
                    .sum();
            }
        }
        let rule = Rule::composite(&breaks, m);
        CumulativeRule { rule, breaks, m, s }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; f.len()];
        let mut acc = 0.0;
        for (p, win) in self.breaks.windows(2).enumerate() {
            let h = 0.5 * (win[1] - win[0]);
            let fs = &f[p * m..(p + 1) * m];
            for i in 0..m {
                let v: f64 = (0..m).map(|j| self.s[i][j] * fs[j]).sum();
                out[p * m + i] = acc + h * v;
            }
            acc += (0..m).map(|j| self.rule.weights[p * m + j] * fs[j]).sum::<f64>();
        }
        out
    }

    /// Barycentric-free Lagrange evaluation of node data at an arbitrary t.
    pub fn interpolate(&self, f: &[f64], t: f64) -> f64 {
        let m = self.m;
        let np = self.breaks.len() - 1;
        let p = match self.breaks.windows(2).position(|w| t <= w[1]) {
            Some(p) => p,
            None => np - 1,
        };
        let ts = &self.rule.nodes[p * m..(p + 1) * m];
        let fs = &f[p * m..(p + 1) * m];
        lagrange_eval(ts, fs, t)
    }
}

/// Lagrange interpolation through (xs, ys) evaluated at t.
pub fn lagrange_eval(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
        let mut l = 1.0;
        for (k, &xk) in xs.iter().enumerate() {
            if k != j {
                l *= (t - xk) / (xj - xk);
            }
        }
        acc += l * yj;
    }
    acc
}

/// Nodes and weights on S^{n-1} for the standard surface measure.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Nominal order parameter the rule was built with.
    pub order: usize,
}

/// Refinement of a cone-adapted sphere rule.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ConeGrading {
    /// Gauss nodes per panel.
    pub panel_nodes: usize,
    /// Geometric levels toward each cone point.
    pub levels: usize,
    pub ratio: f64,
    /// Polynomial order of the S² factor (n = 4 only).
    pub s2_order: usize,
}

impl Default for ConeGrading {
    fn default() -> Self {
        ConeGrading { panel_nodes: 12, levels: 14, ratio: 0.5, s2_order: 12 }
    }
}

impl ConeGrading {
    pub fn doubled(&self) -> Self {
        ConeGrading {
            panel_nodes: 2 * self.panel_nodes,
            s2_order: 2 * self.s2_order,
            ..*self
        }
    }
}

impl SphereQuadrature {
    /// Rule exact for polynomials of degree ≤ `order` on S^{n-1}, n ∈ {2, 3, 4}.
    pub fn polynomial(n: usize, order: usize) -> Result<Self> {
        match n {
            2 => {
                let r = Rule::periodic(0.0, 2.0 * PI, order + 1);
                Ok(Self::circle_from(&r, order))
            }
            3 => Ok(Self::s2(order)),
            4 => {
                // ξ0 = t with weight √(1-t²): Gauss–Chebyshev of the second kind
                let m = order / 2 + 1;
                let s2 = Self::s2(order);
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for k in 1..=m {
                    let th = k as f64 * PI / (m as f64 + 1.0);
                    let (t, st) = (th.cos(), th.sin());
                    let wt = PI / (m as f64 + 1.0) * st * st;
                    for (eta, w2) in s2.nodes.iter().zip(&s2.weights) {
                        nodes.push(vec![t, st * eta[0], st * eta[1], st * eta[2]]);
                        weights.push(wt * w2);
                    }
                }
                Ok(SphereQuadrature { dim: 4, nodes, weights, order })
            }
            _ => Err(Error::Dimension(format!("sphere rules implemented for n ∈ {{2,3,4}}, got {n}"))),
        }
    }

    fn circle_from(r: &Rule, order: usize) -> Self {
        SphereQuadrature {
            dim: 2,
            nodes: r.nodes.iter().map(|&t| vec![t.cos(), t.sin()]).collect(),
            weights: r.weights.clone(),
            order,
        }
    }

    fn s2(order: usize) -> Self {
        let m = order / 2 + 1;
        let (t, wt) = gauss_legendre(m);
        let phi = Rule::periodic(0.0, 2.0 * PI, order + 1);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (ti, wi) in t.iter().zip(&wt) {
            let s = (1.0 - ti * ti).sqrt();
            for (p, wp) in phi.nodes.iter().zip(&phi.weights) {
                nodes.push(vec![*ti, s * p.cos(), s * p.sin()]);
                weights.push(wi * wp);
            }
        }
        SphereQuadrature { dim: 3, nodes, weights, order }
    }

    /// Rule clustered toward the light cone of Q = -ξ0² + Σ ξi².
    ///
    /// For n = 2 the cone meets the circle at θ = π/4 + kπ/2. For n = 4 we use
    /// ξ = (cos ψ, sin ψ·η), η ∈ S², with the cone at ψ = π/4, 3π/4.
    pub fn cone_adapted(n: usize, g: ConeGrading) -> Result<Self> {
        match n {
            2 => {
                let cones: Vec<f64> = (0..4).map(|k| PI / 4.0 + k as f64 * PI / 2.0).collect();
                let br = graded_breaks(0.0, 2.0 * PI, &cones, g.ratio, g.levels, PI / 8.0);
                let r = Rule::composite(&br, g.panel_nodes);
                Ok(Self::circle_from(&r, g.panel_nodes))
            }
            4 => {
                let br = graded_breaks(0.0, PI, &[PI / 4.0, 3.0 * PI / 4.0], g.ratio, g.levels, PI / 8.0);
                let r = Rule::composite(&br, g.panel_nodes);
                let s2 = Self::s2(g.s2_order);
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for (&psi, &wp) in r.nodes.iter().zip(&r.weights) {
                    let (c, s) = (psi.cos(), psi.sin());
                    for (eta, w2) in s2.nodes.iter().zip(&s2.weights) {
                        nodes.push(vec![c, s * eta[0], s * eta[1], s * eta[2]]);
                        weights.push(wp * s * s * w2);
                    }
                }
                Ok(SphereQuadrature { dim: 4, nodes, weights, order: g.panel_nodes })
            }
            _ => Err(Error::Dimension(format!("cone-adapted rules implemented for n ∈ {{2,4}}, got {n}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, &w)| w * f(x)).sum()
    }

    pub fn integrate_c(&self, f: impl Fn(&[f64]) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(x, &w)| f(x) * w).sum()
    }
}

/// Surface area of S^{n-1}.
pub fn sphere_volume(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / crate::special::gamma(n as f64 / 2.0)
}

/// Result of an extrapolation with a crude error estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Extrapolated {
    pub value: Complex64,
    pub error: f64,
}

/// Neville extrapolation of samples f(h_j) to h = 0.
///
/// The error estimate is the larger of the last two corrections on the
/// diagonal of the tableau.
pub fn richardson(hs: &[f64], fs: &[Complex64]) -> Result<Extrapolated> {
    let m = hs.len();
    if m == 0 || fs.len() != m {
        return Err(Error::Extrapolation("empty or mismatched sample set".into()));
    }
    if m == 1 {
        return Ok(Extrapolated { value: fs[0], error: f64::INFINITY });
    }
    let mut t: Vec<Complex64> = fs.to_vec();
    let mut diag = vec![t[m - 1]];
    let mut prev_row_last = t[m - 1];
    let mut last_corr = f64::INFINITY;
    for k in 1..m {
        for j in (k..m).rev() {
            let den = hs[j - k] - hs[j];
            t[j] = t[j] + (t[j] - t[j - 1]) * (hs[j] / den);
        }
        last_corr = (t[m - 1] - prev_row_last).norm();
        prev_row_last = t[m - 1];
        diag.push(t[m - 1]);
    }
    let v = t[m - 1];
    let e2 = if diag.len() >= 3 { (diag[diag.len() - 2] - diag[diag.len() - 3]).norm() } else { last_corr };
    let error = last_corr.max(e2.min(last_corr * 1e3));
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::Extrapolation("non-finite tableau".into()));
    }
    Ok(Extrapolated { value: v, error })
}

/// Real convenience wrapper.
pub fn richardson_real(hs: &[f64], fs: &[f64]) -> Result<(f64, f64)> {
    let c: Vec<Complex64> = fs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let r = richardson(hs, &c)?;
    Ok((r.value.re, r.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_and_symmetric() {
        for m in [1, 2, 5, 16, 40, 101] {
            let (x, w) = gauss_legendre(m);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "m={m} sum={s}");
            for d in 0..(2 * m).min(30) {
                let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "m={m} d={d}");
            }
        }
    }

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(12);
        let m2: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t * t).sum();
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12);
        let m0: f64 = w.iter().sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let br = graded_breaks(0.0, 2.0, &[0.0], 0.5, 6, 0.5);
        let c = CumulativeRule::new(br, 10);
        let f: Vec<f64> = c.nodes().iter().map(|t| t.cos()).collect();
        let g = c.apply(&f);
        for (t, v) in c.nodes().iter().zip(&g) {
            assert!((v - t.sin()).abs() < 1e-13);
        }
        assert!((c.interpolate(&f, 1.234) - 1.234f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn sphere_rules_integrate_monomials() {
        // ∫_{S^{n-1}} ξ0² = Vol/n, ∫ ξ0²ξ1² = Vol/(n(n+2))
        for n in [2usize, 3, 4] {
            let q = SphereQuadrature::polynomial(n, 8).unwrap();
            let vol = sphere_volume(n);
            let nf = n as f64;
            assert!((q.integrate(|_| 1.0) - vol).abs() < 1e-12);
            assert!((q.integrate(|x| x[0] * x[0]) - vol / nf).abs() < 1e-12);
            assert!((q.integrate(|x| x[0] * x[0] * x[1] * x[1]) - vol / (nf * (nf + 2.0))).abs() < 1e-12);
            assert!(q.integrate(|x| x[0] * x[1] * x[1]).abs() < 1e-12);
        }
        for n in [2usize, 4] {
            let q = SphereQuadrature::cone_adapted(n, ConeGrading::default()).unwrap();
            let vol = sphere_volume(n);
            assert!((q.integrate(|x| x[0] * x[0]) - vol / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn richardson_removes_polynomial_error() {
        let hs: Vec<f64> = (0..6).map(|j| 0.5 * 0.5f64.powi(j)).collect();
        let fs: Vec<Complex64> = hs
            .iter()
            .map(|h| Complex64::new(1.0 + 3.0 * h - h * h + 0.5 * h.powi(4), *h))
            .collect();
        let r = richardson(&hs, &fs).unwrap();
        assert!((r.value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
