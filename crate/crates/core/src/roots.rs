//! Bracketed scalar root finding (Brent's method) and bracket expansion.

use crate::{Error, Result};

/// Finds a root of `f` in `[a, b]` where `f(a)` and `f(b)` differ in sign.
/// Stops when the bracket is narrower than `xtol + 4·eps·|x|` or `f(x) = 0`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NotBracketed { lo: a, hi: b, flo: fa, fhi: fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::NoConvergence(format!("NaN in root search at x = {b}")));
        }
    }
    Err(Error::NoConvergence("Brent iteration limit".into()))
}

/// For increasing `f`, walks `lo` down and `hi` up by `step` until
/// `f(lo) < 0 < f(hi)`, within `limit` steps each way.
pub fn expand_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    step: f64,
    limit: usize,
) -> Result<(f64, f64)> {
    let mut flo = f(lo);
    let mut k = 0;
    while flo >= 0.0 {
        k += 1;
        if k > limit {
            return Err(Error::NoConvergence(format!("lower bracket search stopped at {lo} (f = {flo})")));
        }
        hi = lo;
        lo -= step;
        flo = f(lo);
    }
    let mut fhi = f(hi);
    let mut k = 0;
    while fhi <= 0.0 {
        k += 1;
        if k > limit {
            return Err(Error::NoConvergence(format!("upper bracket search stopped at {hi} (f = {fhi})")));
        }
        lo = hi;
        hi += step;
        fhi = f(hi);
    }
    Ok((lo, hi))
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
/// Returns `(x, f(x))`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
