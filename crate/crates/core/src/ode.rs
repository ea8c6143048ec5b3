//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use crate::{Error, Result};

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
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` with mixed absolute/relative
/// local error tolerance `tol`.
pub fn integrate<const N: usize, F>(mut f: F, t0: f64, t1: f64, y0: [f64; N], tol: f64) -> Result<([f64; N], OdeStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let span = t1 - t0;
    let mut stats = OdeStats::default();
    if span == 0.0 {
        return Ok((y0, stats));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = span.abs() / 64.0;
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);
    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected > 2_000_000 {
            return Err(Error::NoConvergence(format!("ODE step limit at t = {t}")));
        }
        let last = h >= (t1 - t).abs();
        let step = if last { t1 - t } else { h * dir };
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                *v += step * acc;
            }
            k[s] = f(t + C[s] * step, &ys);
        }
        let mut y_new = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut acc = 0.0;
            let mut eacc = 0.0;
            for s in 0..6 {
                acc += A[6][s] * k[s][i];
            }
            for s in 0..7 {
                eacc += E[s] * k[s][i];
            }
            y_new[i] = y[i] + step * acc;
            let scale = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err = err.max((step * eacc).abs() / scale);
        }
        if !err.is_finite() {
            return Err(Error::NoConvergence(format!("non-finite ODE state at t = {t}")));
        }
        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + step };
            y = y_new;
            k[0] = k[6];
        } else {
            stats.rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = step.abs() * factor;
        if h < 1e-14 * span.abs() {
            return Err(Error::NoConvergence(format!("ODE step underflow at t = {t}, error ratio {err:e}")));
        }
    }
    Ok((y, stats))
}
