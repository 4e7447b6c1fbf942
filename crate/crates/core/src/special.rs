//! Gamma function and modified Bessel K of integer order for complex
//! arguments.

use num_complex::Complex64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Γ(z) for complex z (Lanczos with reflection).
pub fn cgamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return PI / ((z * PI).sin() * cgamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut x = c(LANCZOS[0], 0.0);
    for (i, &ci) in LANCZOS.iter().enumerate().skip(1) {
        x += ci / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// Γ(x) for real x.
pub fn gamma(x: f64) -> f64 {
    if x == x.floor() && x > 0.0 && x < 171.0 {
        return factorial(x as usize - 1);
    }
    cgamma(c(x, 0.0)).re
}

/// 1/Γ(z), entire, exactly zero at the non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return c(0.0, 0.0);
    }
    if z.im == 0.0 && z.re > 0.0 && z.re == z.re.floor() && z.re < 171.0 {
        return c(1.0 / factorial(z.re as usize - 1), 0.0);
    }
    if z.re < 0.5 {
        // 1/Γ(z) = sin(πz)Γ(1−z)/π
        return (z * PI).sin() * cgamma(1.0 - z) / PI;
    }
    1.0 / cgamma(z)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// ψ(k+1) = −γ + H_k.
fn digamma_int(k: usize) -> f64 {
    -EULER_GAMMA + (1..=k).map(|j| 1.0 / j as f64).sum::<f64>()
}

/// Principal power w^p.
pub fn cpow(w: Complex64, p: Complex64) -> Complex64 {
    if w == c(0.0, 0.0) {
        return c(0.0, 0.0);
    }
    (p * w.ln()).exp()
}

/// K_n(w) for integer n and Re w > 0 (principal branch elsewhere off the
/// negative real axis).
pub fn bessel_k(n: i32, w: Complex64) -> Complex64 {
    let n = n.unsigned_abs() as usize;
    if w.norm() <= 2.0 {
        return bessel_k_series(n, w);
    }
    let (mut k0, mut k1) = bessel_k01_cf2(w);
    if n == 0 {
        return k0;
    }
    for j in 1..n {
        let k2 = k0 + k1 * (2.0 * j as f64) / w;
        k0 = k1;
        k1 = k2;
    }
    k1
}

/// K_0(w), …, K_{nmax}(w) by upward recurrence.
pub fn bessel_k_seq(nmax: usize, w: Complex64) -> Vec<Complex64> {
    let (k0, k1) = if w.norm() <= 2.0 { (bessel_k_series(0, w), bessel_k_series(1, w)) } else { bessel_k01_cf2(w) };
    let mut out = vec![k0, k1];
    for j in 1..nmax {
        let next = out[j - 1] + out[j] * (2.0 * j as f64) / w;
        out.push(next);
    }
    out.truncate(nmax + 1);
    out
}

/// Ascending series for small |w|.
fn bessel_k_series(n: usize, w: Complex64) -> Complex64 {
    let half = w / 2.0;
    let q = half * half;
    let lg = half.ln();
    // I_n(w)
    let mut term = half.powu(n as u32) / factorial(n);
    let mut i_n = term;
    for k in 1..200 {
        term = term * q / (k as f64 * (n + k) as f64);
        i_n += term;
        if term.norm() < 1e-17 * i_n.norm() {
            break;
        }
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    // finite sum ½(w/2)^{-n} Σ_{k<n} (n−k−1)!/k! (−w²/4)^k
    let mut fin = c(0.0, 0.0);
    if n > 0 {
        let inv = half.powi(-(n as i32));
        let mut mq = c(1.0, 0.0);
        for k in 0..n {
            fin += mq * (factorial(n - k - 1) / factorial(k));
            mq *= -q;
        }
        fin = fin * inv * 0.5;
    }
    // ψ-series
    let mut qs = c(1.0, 0.0);
    let mut ser = c(0.0, 0.0);
    let pre = half.powu(n as u32);
    for k in 0..200 {
        let t = qs * ((digamma_int(k) + digamma_int(n + k)) / (factorial(k) * factorial(n + k)));
        ser += t;
        if k > 2 && t.norm() < 1e-17 * ser.norm().max(1e-300) {
            break;
        }
        qs *= q;
    }
    fin - sign * lg * i_n + sign * 0.5 * pre * ser
}

/// Steed/Temme continued fraction for (K_0, K_1), |w| > 2.
fn bessel_k01_cf2(w: Complex64) -> (Complex64, Complex64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + w);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = c(0.0, 0.0);
    let mut q2 = c(1.0, 0.0);
    let mut a = -a1;
    let mut cc = c(a1, 0.0);
    let mut q = cc;
    let mut s = 1.0 + q * delh;
    for i in 1..100_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        cc = -cc * a / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += cc * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-17 * s.norm() {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * w)).sqrt() * (-w).exp() / s;
    let k1 = k0 * (w + 0.5 - h) / w;
    (k0, k1)
}

#[cfg(test)]
mod tests {
    use super::*;

    // mpmath besselk, 30 digits
    const K_TABLE: &[(f64, f64, [(f64, f64); 4])] = &[
        (0.1, 0.0, [(2.4270690247020164, 0.0), (9.853844780870606, 0.0), (199.5039646421141, 0.0), (7990.012430465435, 0.0)]),
        (0.7071067811865476, -0.7071067811865476, [(0.28670620872831604, 0.4949946365187199), (0.2419959664297382, 0.7403222768419827), (-0.41803361794402505, 1.884202418720101), (-6.26971088723924, 4.887273882413629)]),
        (1.7677669529663689, -1.7677669529663689, [(-0.06968797258904534, 0.11069609915567485), (-0.0933137881353575, 0.11725613585987055), (-0.18880430952581467, 0.12423993630249844), (-0.44748292259396355, 0.04420988605304485)]),
        (7.0710678118654755, 7.0710678118654755, [(0.0001294663302148061, -0.0003075245690881442), (0.0001235196023118019, -0.0003228018625896036), (0.00010128356269228289, -0.0003706439559723237), (4.733297804324503e-05, -0.0004562831220601173)]),
        (1.9, 0.5, [(0.10359331690445044, -0.07352827878987049), (0.1229210107273645, -0.09580643927766168), (0.19978331728950832, -0.19969032023610855), (0.4128102778071692, -0.5924937626904704)]),
        (0.05, 2.1, [(-0.7705536394273663, -0.25744968681147357), (-0.8507914801345129, -0.08892022396377894), (-0.8744729796338985, 0.5503536433117165), (0.1572710712290313, 1.6007440837046834)]),
        (3.0, -4.0, [(-0.007239051213570155, -0.026510418350267677), (-0.005673420401323307, -0.028666936579007818), (0.0005727475953947533, -0.035205977657653015), (0.0171333241453641, -0.04519924739362862)]),
        (0.3, -0.01, [(1.371882416391636, 0.03054733829143002), (3.052219070345533, 0.1154667050965185), (21.6717948259964, 1.4769891192550455), (291.03306509060616, 29.40801649583915)]),
        (25.0, 3.0, [(-3.4403070007286894e-12, -2.8428976723934324e-13), (-3.5081612804068174e-12, -2.818545651949329e-13), (-3.7196432647846995e-12, -2.7331778076821664e-13), (-4.100029008873203e-12, -2.5456128270188127e-13)]),
    ];

    #[test]
    fn bessel_k_matches_mpmath() {
        for (re, im, vals) in K_TABLE {
            let w = c(*re, *im);
            for (n, (vr, vi)) in vals.iter().enumerate() {
                let got = bessel_k(n as i32, w);
                let want = c(*vr, *vi);
                let rel = (got - want).norm() / want.norm();
                assert!(rel < 1e-12, "K_{n}({w}) = {got}, want {want}, rel {rel:e}");
            }
        }
    }

    #[test]
    fn gamma_matches_mpmath() {
        let cases = [
            (c(0.3, 0.2), c(1.9803581728234425, -1.4145760083733032)),
            (c(-2.5, 1.0), c(-0.04173662580789361, -0.08636910736976348)),
            (c(7.1, -3.0), c(389.66175899084914, 224.21334530785023)),
            (c(0.5, 0.0), c(1.772453850905516, 0.0)),
        ];
        for (z, want) in cases {
            let rel = (cgamma(z) - want).norm() / want.norm();
            assert!(rel < 1e-13, "Γ({z}) rel {rel:e}");
        }
        assert_eq!(rgamma(c(-3.0, 0.0)), c(0.0, 0.0));
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
    }
}
