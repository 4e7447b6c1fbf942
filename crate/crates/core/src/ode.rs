//! Adaptive Dormand–Prince 5(4) integration on flat state vectors.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub hmin: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-11, atol: 1e-12, h0: 0.05, hmin: 1e-12, max_steps: 200_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates y' = f(t, y) from `t0` and returns the state at each station
/// (stations must be increasing and ≥ t0; use negated time for backward flows).
pub fn integrate<F>(f: F, t0: f64, y0: &[f64], stations: &[f64], opt: &OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = opt.h0;
    let mut out = Vec::with_capacity(stations.len());
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut steps = 0usize;
    k[0] = f(t, &y)?;
    for &ts in stations {
        while ts - t > 1e-15 * ts.abs().max(1.0) {
            steps += 1;
            if steps > opt.max_steps {
                return Err(Error::StepUnderflow { t });
            }
            let last = h >= ts - t;
            let hs = if last { ts - t } else { h };
            if !last && hs < opt.hmin * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for j in 0..s {
                        acc += hs * A[s][j] * k[j][i];
                    }
                    tmp[i] = acc;
                }
                k[s] = f(t + C[s] * hs, &tmp)?;
            }
            // k[6] was evaluated at the 5th-order solution (FSAL)
            let mut err = 0.0f64;
            for i in 0..n {
                let mut e = 0.0;
                for s in 0..7 {
                    e += (B5[s] - B4[s]) * k[s][i];
                }
                let sc = opt.atol + opt.rtol * y[i].abs().max(tmp[i].abs());
                err = err.max((hs * e).abs() / sc);
            }
            if !err.is_finite() {
                h = hs * 0.25;
                if h < opt.hmin {
                    return Err(Error::StepUnderflow { t });
                }
                continue;
            }
            if err <= 1.0 {
                t += hs;
                y.copy_from_slice(&tmp);
                k[0] = k[6].clone();
                if !last || err > 0.0 {
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if !last {
                        h = hs * fac;
                    } else {
                        h = h.min(hs * fac).max(h * 0.2);
                    }
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < opt.hmin {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_t: f64, y: &[f64]| Ok(vec![y[1], -y[0]]);
        let st: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let out = integrate(f, 0.0, &[1.0, 0.0], &st, &OdeOptions::default()).unwrap();
        for (t, y) in st.iter().zip(&out) {
            assert!((y[0] - t.cos()).abs() < 1e-9, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn blowup_reports_underflow() {
        let f = |_t: f64, y: &[f64]| Ok(vec![y[0] * y[0]]);
        let r = integrate(f, 0.0, &[1.0], &[2.0], &OdeOptions::default());
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
    }
}
