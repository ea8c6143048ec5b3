//! Carlson symmetric elliptic integrals by the duplication theorem.
//!
//! Arguments outside the domain of convergence produce NaN; the Legendre-form
//! wrappers in the parent module validate their inputs first.

const THIRD: f64 = 1.0 / 3.0;

/// R_F(x, y, z) for x, y, z ≥ 0 with at most one of them zero.
pub fn rf(x: f64, y: f64, z: f64) -> f64 {
    const ERRTOL: f64 = 0.0025;
    const C1: f64 = 1.0 / 24.0;
    const C2: f64 = 0.1;
    const C3: f64 = 3.0 / 44.0;
    const C4: f64 = 1.0 / 14.0;
    if x.min(y).min(z) < 0.0 || (x + y).min(x + z).min(y + z) == 0.0 || x.is_nan() || y.is_nan() || z.is_nan() {
        return f64::NAN;
    }
    let (mut x, mut y, mut z) = (x, y, z);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let ave = THIRD * (x + y + z);
        let (dx, dy, dz) = ((ave - x) / ave, (ave - y) / ave, (ave - z) / ave);
        if dx.abs().max(dy.abs()).max(dz.abs()) <= ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (C1 * e2 - C2 - C3 * e3) * e2 + C4 * e3) / ave.sqrt();
        }
    }
}

/// R_D(x, y, z) for x, y ≥ 0 (not both zero) and z > 0.
pub fn rd(x: f64, y: f64, z: f64) -> f64 {
    const ERRTOL: f64 = 0.0015;
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 6.0;
    const C3: f64 = 9.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    const C5: f64 = 0.25 * C3;
    const C6: f64 = 1.5 * C4;
    if x.min(y) < 0.0 || x + y == 0.0 || !(z > 0.0) || x.is_nan() || y.is_nan() {
        return f64::NAN;
    }
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lambda));
        fac *= 0.25;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let ave = 0.2 * (x + y + 3.0 * z);
        let (dx, dy, dz) = ((ave - x) / ave, (ave - y) / ave, (ave - z) / ave);
        if dx.abs().max(dy.abs()).max(dz.abs()) <= ERRTOL {
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            return 3.0 * sum
                + fac * (1.0 + ed * (-C1 + C5 * ed - C6 * dz * ee) + dz * (C2 * ee + dz * (-C3 * ec + dz * C4 * ea)))
                    / (ave * ave.sqrt());
        }
    }
}

/// R_C(x, y) for x ≥ 0, y > 0.
pub fn rc(x: f64, y: f64) -> f64 {
    const ERRTOL: f64 = 0.0012;
    const C1: f64 = 0.3;
    const C2: f64 = 1.0 / 7.0;
    const C3: f64 = 0.375;
    const C4: f64 = 9.0 / 22.0;
    if x < 0.0 || !(y > 0.0) || x.is_nan() {
        return f64::NAN;
    }
    let (mut x, mut y) = (x, y);
    loop {
        let lambda = 2.0 * x.sqrt() * y.sqrt() + y;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        let ave = THIRD * (x + y + y);
        let s = (y - ave) / ave;
        if s.abs() <= ERRTOL {
            return (1.0 + s * s * (C1 + s * (C2 + s * (C3 + s * C4)))) / ave.sqrt();
        }
    }
}

/// R_J(x, y, z, p) for x, y, z ≥ 0 (at most one zero) and p > 0.
pub fn rj(x: f64, y: f64, z: f64, p: f64) -> f64 {
    const ERRTOL: f64 = 0.0015;
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 3.0;
    const C3: f64 = 3.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    const C5: f64 = 0.75 * C3;
    const C6: f64 = 1.5 * C4;
    const C7: f64 = 0.5 * C2;
    const C8: f64 = C3 + C3;
    if x.min(y).min(z) < 0.0 || (x + y).min(x + z).min(y + z) == 0.0 || !(p > 0.0) || x.is_nan() || y.is_nan() || z.is_nan() {
        return f64::NAN;
    }
    let (mut x, mut y, mut z, mut p) = (x, y, z, p);
    let mut sum = 0.0;
    let mut fac = 1.0;
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        let alpha = (p * (sx + sy + sz) + sx * sy * sz).powi(2);
        let beta = p * (p + lambda).powi(2);
        sum += fac * rc(alpha, beta);
        fac *= 0.25;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        p = 0.25 * (p + lambda);
        let ave = 0.2 * (x + y + z + p + p);
        let (dx, dy, dz, dp) = ((ave - x) / ave, (ave - y) / ave, (ave - z) / ave, (ave - p) / ave);
        if dx.abs().max(dy.abs()).max(dz.abs()).max(dp.abs()) <= ERRTOL {
            let ea = dx * (dy + dz) + dy * dz;
            let eb = dx * dy * dz;
            let ec = dp * dp;
            let ed = ea - 3.0 * ec;
            let ee = eb + 2.0 * dp * (ea - ec);
            return 3.0 * sum
                + fac
                    * (1.0 + ed * (-C1 + C5 * ed - C6 * ee) + eb * (C7 + dp * (-C8 + dp * C4)) + dp * ea * (C2 - dp * C3)
                        - C2 * dp * ec)
                    / (ave * ave.sqrt());
        }
    }
}
