use super::carlson::rf;
use super::{complete_k, incomplete_f, EllipticParam};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Values of the Jacobi elliptic functions at one argument. `am` is the
/// continuous amplitude, `am(u + 2K) = am(u) + π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiValues {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
    pub am: f64,
}

/// Amplitude of `u ∈ [-K, K]` by the descending Landen (AGM) sequence.
fn am_agm(u: f64, m: EllipticParam) -> f64 {
    let mut a = [0.0f64; 64];
    let mut c = [0.0f64; 64];
    a[0] = 1.0;
    c[0] = m.m().sqrt();
    let mut b = m.mc().sqrt();
    let mut n = 0;
    while c[n].abs() > f64::EPSILON * a[n] && n < 62 {
        let an = 0.5 * (a[n] + b);
        // c_{n+1} = (a_n - b_n)/2 = c_n² / (4 a_{n+1}), the latter free of cancellation.
        c[n + 1] = c[n] * c[n] / (4.0 * an);
        b = (a[n] * b).sqrt();
        a[n + 1] = an;
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    phi
}

/// `sn, cn, dn` and the unwrapped amplitude at `u`.
pub fn jacobi(u: f64, m: EllipticParam) -> JacobiValues {
    if m.m() == 0.0 {
        let (sn, cn) = u.sin_cos();
        return JacobiValues { sn, cn, dn: 1.0, am: u };
    }
    if m.mc() == 0.0 {
        let sech = 1.0 / u.cosh();
        return JacobiValues { sn: u.tanh(), cn: sech, dn: sech, am: u.sinh().atan() };
    }
    let k = complete_k(m).expect("m < 1 checked above");
    let j = (u / (2.0 * k)).round();
    let u0 = u - 2.0 * k * j;
    let mut am0 = am_agm(u0, m);
    if m.mc() < 0.5 {
        // Near m = 1 the Landen recursion passes asin close to ±1 and loses
        // digits; one Newton step on F(am) = u restores full accuracy.
        let (s, c) = am0.sin_cos();
        let d2 = m.mc() + m.m() * c * c;
        am0 -= (s * rf(c * c, d2, 1.0) - u0) * d2.sqrt();
    }
    let (s, c) = am0.sin_cos();
    let sign = if j.rem_euclid(2.0) == 0.0 { 1.0 } else { -1.0 };
    JacobiValues { sn: sign * s, cn: sign * c, dn: (m.mc() + m.m() * c * c).sqrt(), am: am0 + j * PI }
}

/// Inverse of the amplitude, `am⁻¹(φ) = F(φ|m)`.
pub fn inverse_am(phi: f64, m: EllipticParam) -> Result<f64> {
    incomplete_f(phi, m)
}

/// Principal inverse of `sn` on `[-K, K]`.
pub fn inverse_sn(x: f64, m: EllipticParam) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("sn⁻¹ needs |x| ≤ 1, got {x}")));
    }
    incomplete_f(x.asin(), m)
}
