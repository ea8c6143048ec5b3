//! Legendre elliptic integrals of the three kinds and Jacobi elliptic
//! functions, built on Carlson's symmetric forms.
//!
//! The parameter is carried together with its complement `1 - m` so that
//! callers who know `1 - m` more accurately than `m` itself (moduli very close
//! to 1) lose nothing to cancellation. Third-kind integrals have the same
//! option for `1 - n`.

pub mod carlson;
mod jacobi;

pub use jacobi::{inverse_am, inverse_sn, jacobi, JacobiValues};

use crate::{Error, Result};
use carlson::{rd, rf, rj};
use std::f64::consts::{FRAC_PI_2, PI};

/// The parameter `m = k²` of the elliptic integrals, with its complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParam {
    m: f64,
    mc: f64,
}

impl EllipticParam {
    pub fn new(m: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::Domain(format!("parameter m = {m} outside [0, 1]")));
        }
        Ok(EllipticParam { m, mc: 1.0 - m })
    }

    /// Builds the parameter from `1 - m`.
    pub fn from_complement(mc: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mc) {
            return Err(Error::Domain(format!("complementary parameter {mc} outside [0, 1]")));
        }
        Ok(EllipticParam { m: 1.0 - mc, mc })
    }

    /// Builds the parameter from separately computed `m` and `1 - m`.
    pub fn from_parts(m: f64, mc: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&m) || !(0.0..=1.0).contains(&mc) || (m + mc - 1.0).abs() > 4.0 * f64::EPSILON {
            return Err(Error::Domain(format!("inconsistent parameter pair m = {m}, 1 - m = {mc}")));
        }
        Ok(EllipticParam { m, mc })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `1 - m`.
    pub fn mc(&self) -> f64 {
        self.mc
    }
}

/// Complete integral of the first kind `K(m)`; diverges at `m = 1`.
pub fn complete_k(m: EllipticParam) -> Result<f64> {
    if m.mc == 0.0 {
        return Err(Error::Domain("K(m) diverges at m = 1".into()));
    }
    if m.m == 0.0 {
        return Ok(FRAC_PI_2);
    }
    Ok(rf(0.0, m.mc, 1.0))
}

/// Complete integral of the second kind `E(m)`, with `E(1) = 1`.
pub fn complete_e(m: EllipticParam) -> f64 {
    if m.mc == 0.0 {
        return 1.0;
    }
    if m.m == 0.0 {
        return FRAC_PI_2;
    }
    rf(0.0, m.mc, 1.0) - m.m / 3.0 * rd(0.0, m.mc, 1.0)
}

/// Complete integral of the third kind `Π(n|m) = ∫₀^{π/2} dψ / ((1 - n sin²ψ) √(1 - m sin²ψ))`.
pub fn complete_pi(n: f64, m: EllipticParam) -> Result<f64> {
    complete_pi_split(n, 1.0 - n, m)
}

/// As [`complete_pi`], with `1 - n` supplied separately (for `n` close to 1).
pub fn complete_pi_split(n: f64, one_minus_n: f64, m: EllipticParam) -> Result<f64> {
    if !(one_minus_n > 0.0) {
        return Err(Error::Domain(format!("Π(n|m) needs n < 1, got n = {n}")));
    }
    let k = complete_k(m)?;
    if n == 0.0 {
        return Ok(k);
    }
    if n < -1.0 {
        return Ok(negative_pi_via_transform(n, FRAC_PI_2, m, k));
    }
    Ok(k + n / 3.0 * rj(0.0, m.mc, 1.0, one_minus_n))
}

/// Splits an amplitude as `jπ + ψ` with `ψ ∈ [-π/2, π/2]`.
fn reduce_amplitude(phi: f64) -> (f64, f64) {
    let j = (phi / PI).round();
    (j, phi - j * PI)
}

/// Incomplete integral of the first kind `F(φ|m)`, any real amplitude.
pub fn incomplete_f(phi: f64, m: EllipticParam) -> Result<f64> {
    let (j, psi) = reduce_amplitude(phi);
    let (s, c) = psi.sin_cos();
    if m.mc == 0.0 && (j != 0.0 || c == 0.0) {
        return Err(Error::Domain(format!("F(φ|1) diverges at |φ| ≥ π/2, φ = {phi}")));
    }
    let base = s * rf(c * c, m.mc + m.m * c * c, 1.0);
    if j == 0.0 {
        return Ok(base);
    }
    Ok(2.0 * j * complete_k(m)? + base)
}

/// Incomplete integral of the second kind `E(φ|m)`, any real amplitude.
pub fn incomplete_e(phi: f64, m: EllipticParam) -> f64 {
    let (j, psi) = reduce_amplitude(phi);
    let (s, c) = psi.sin_cos();
    let (c2, d2) = (c * c, m.mc + m.m * c * c);
    let base = if m.mc == 0.0 {
        s
    } else {
        s * rf(c2, d2, 1.0) - m.m / 3.0 * s * s * s * rd(c2, d2, 1.0)
    };
    2.0 * j * complete_e(m) + base
}

/// Incomplete integral of the third kind `Π(n; φ|m)`, any real amplitude.
pub fn incomplete_pi(n: f64, phi: f64, m: EllipticParam) -> Result<f64> {
    incomplete_pi_split(n, 1.0 - n, phi, m)
}

/// As [`incomplete_pi`], with `1 - n` supplied separately.
pub fn incomplete_pi_split(n: f64, one_minus_n: f64, phi: f64, m: EllipticParam) -> Result<f64> {
    if !(one_minus_n > 0.0) {
        return Err(Error::Domain(format!("Π(n; φ|m) needs n < 1, got n = {n}")));
    }
    let (j, psi) = reduce_amplitude(phi);
    let full = if j != 0.0 { 2.0 * j * complete_pi_split(n, one_minus_n, m)? } else { 0.0 };
    if m.mc == 0.0 && psi.cos() == 0.0 {
        return Err(Error::Domain("Π(n; ±π/2|1) diverges".into()));
    }
    let base = if n < -1.0 {
        let k = if m.mc == 0.0 { f64::INFINITY } else { complete_k(m)? };
        negative_pi_via_transform(n, psi, m, k)
    } else {
        reduced_pi(n, one_minus_n, psi, m)
    };
    Ok(full + base)
}

/// `Π(n; ψ|m)` for `|ψ| ≤ π/2` straight from Carlson's forms.
fn reduced_pi(n: f64, one_minus_n: f64, psi: f64, m: EllipticParam) -> f64 {
    let (s, c) = psi.sin_cos();
    let c2 = c * c;
    let d2 = m.mc + m.m * c2;
    // 1 - n sin²ψ written without cancellation for n near 1.
    let p = if n > 0.0 { one_minus_n + n * c2 } else { 1.0 - n * s * s };
    s * rf(c2, d2, 1.0) + n / 3.0 * s * s * s * rj(c2, d2, 1.0, p)
}

/// `Π(n; ψ|m)` for `n < -1` and `|ψ| ≤ π/2` through the characteristic map
/// `n ↦ N = (m - n)/(1 - n) ∈ (m, 1)`:
///
/// `w(n) Π(n; ψ) = w(N) Π(N; ψ) + (m/ρ) F(ψ) + atan(ρ sinψ cosψ / Δ)`,
///
/// with `w(x) = √((1 - x)(1 - m/x))`, `ρ = √(-n (m - n)/(1 - n))` and
/// `Δ = √(1 - m sin²ψ)`. The direct form `K + (n/3) R_J` cancels badly here.
/// `k` is `K(m)`, used only at `ψ = ±π/2`.
fn negative_pi_via_transform(n: f64, psi: f64, m: EllipticParam, k: f64) -> f64 {
    let one_minus_n = 1.0 - n;
    let eps = m.mc / one_minus_n; // 1 - N
    let big_n = 1.0 - eps;
    let w_n = (one_minus_n * (1.0 - m.m / n)).sqrt();
    let rho = (-n * (m.m - n) / one_minus_n).sqrt();
    let (s, c) = psi.sin_cos();
    let delta = (m.mc + m.m * c * c).sqrt();
    let (pi_big, f) = if psi.abs() == FRAC_PI_2 {
        let pi_big = k + big_n / 3.0 * rj(0.0, m.mc, 1.0, eps);
        (pi_big.copysign(psi), k.copysign(psi))
    } else {
        (reduced_pi(big_n, eps, psi, m), s * rf(c * c, delta * delta, 1.0))
    };
    let w_big = if m.m == 0.0 { eps.sqrt() } else { (eps * (big_n - m.m) / big_n).sqrt() };
    let mut rhs = w_big * pi_big + (rho * s * c / delta).atan();
    if m.m != 0.0 {
        rhs += m.m / rho * f;
    }
    rhs / w_n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn p(m: f64) -> EllipticParam {
        EllipticParam::new(m).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    /// K(m) = π / (2 AGM(1, √(1-m))), independent of the Carlson path.
    fn k_by_agm(m: f64) -> f64 {
        let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
        for _ in 0..60 {
            let an = 0.5 * (a + b);
            b = (a * b).sqrt();
            a = an;
        }
        PI / (2.0 * a)
    }

    fn pi_by_quadrature(n: f64, phi: f64, m: f64) -> f64 {
        integrate(|t: f64| 1.0 / ((1.0 - n * t.sin().powi(2)) * (1.0 - m * t.sin().powi(2)).sqrt()), 0.0, phi, 1e-14)
            .unwrap()
            .value
    }

    #[test]
    fn complete_k_matches_agm() {
        assert!(rel(complete_k(p(0.5)).unwrap(), 1.854_074_677_301_372) < 1e-15);
        for m in [0.0, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-9] {
            assert!(rel(complete_k(p(m)).unwrap(), k_by_agm(m)) < 1e-14, "m = {m}");
        }
        assert_eq!(complete_k(p(0.0)).unwrap(), FRAC_PI_2);
        assert!(complete_k(p(1.0)).is_err());
    }

    #[test]
    fn complete_k_near_one_follows_log_asymptote() {
        let mc: f64 = 1e-8;
        let k = complete_k(p(1.0 - mc)).unwrap();
        assert!(k > 9.0);
        assert!((k - 0.5 * (16.0 / mc).ln()).abs() < 1e-6);
        // The complement form keeps working far below double resolution of m.
        let tiny = EllipticParam::from_complement(1e-200).unwrap();
        assert!(rel(complete_k(tiny).unwrap(), 0.5 * (16e200f64).ln()) < 1e-14);
    }

    #[test]
    fn complete_e_matches_quadrature() {
        let q = integrate(|t: f64| (1.0 - 0.5 * t.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2, 1e-15).unwrap().value;
        assert!(rel(complete_e(p(0.5)), q) < 1e-14);
        assert!(rel(complete_e(p(0.5)), 1.350_643_881_047_675_5) < 1e-15);
        assert_eq!(complete_e(p(1.0)), 1.0);
        assert_eq!(complete_e(p(0.0)), FRAC_PI_2);
    }

    #[test]
    fn legendre_relation() {
        for i in 1..20 {
            let m = 0.05 * i as f64;
            let (k, e) = (complete_k(p(m)).unwrap(), complete_e(p(m)));
            let (kc, ec) = (complete_k(p(1.0 - m)).unwrap(), complete_e(p(1.0 - m)));
            assert!((e * kc + ec * k - k * kc - FRAC_PI_2).abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn e_k_bracket() {
        for i in 1..20 {
            let m = 0.05 * i as f64;
            let (k, e) = (complete_k(p(m)).unwrap(), complete_e(p(m)));
            assert!(e < k && k < e / (1.0 - m));
        }
    }

    #[test]
    fn complete_pi_special_values() {
        for m in [0.0, 0.3, 0.9] {
            assert!(rel(complete_pi(0.0, p(m)).unwrap(), complete_k(p(m)).unwrap()) < 1e-15);
        }
        for n in [-50.0, -3.0, -0.5, 0.2, 0.9, 0.999] {
            let want = FRAC_PI_2 / (1.0f64 - n).sqrt();
            assert!(rel(complete_pi(n, p(0.0)).unwrap(), want) < 1e-14, "n = {n}");
        }
        let big = complete_pi(-1e6, p(0.3)).unwrap();
        assert!(rel(big, FRAC_PI_2 / 1e3) < 0.01);
        assert!(complete_pi(1.0, p(0.3)).is_err());
    }

    #[test]
    fn complete_pi_matches_quadrature() {
        for &m in &[0.1, 0.5, 0.95] {
            for &n in &[-1e4, -30.0, -2.0, -1.0, -0.3, 0.05, 0.6, 0.97] {
                let want = pi_by_quadrature(n, FRAC_PI_2, m);
                assert!(rel(complete_pi(n, p(m)).unwrap(), want) < 5e-14, "n = {n}, m = {m}");
            }
        }
    }

    #[test]
    fn complete_pi_is_increasing_on_both_branches() {
        let m = p(0.4);
        let neg: Vec<f64> = [-1e5, -100.0, -5.0, -1.0, -0.1].iter().map(|&n| complete_pi(n, m).unwrap()).collect();
        assert!(neg.windows(2).all(|w| w[0] < w[1]));
        let pos: Vec<f64> = [0.45, 0.6, 0.9, 0.999].iter().map(|&n| complete_pi(n, m).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn incomplete_integrals_match_quadrature() {
        for &m in &[0.0, 0.3, 0.9] {
            for &phi in &[-2.9, -0.4, 0.7, 1.3, 2.9, 7.5] {
                let f = integrate(|t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, phi, 1e-15).unwrap().value;
                let e = integrate(|t: f64| (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, phi, 1e-15).unwrap().value;
                assert!((incomplete_f(phi, p(m)).unwrap() - f).abs() < 1e-13 * f.abs().max(1.0));
                assert!((incomplete_e(phi, p(m)) - e).abs() < 1e-13 * e.abs().max(1.0));
                for &n in &[-200.0, -2.0, -0.5, 0.5, 0.95] {
                    let want = pi_by_quadrature(n, phi, m);
                    let got = incomplete_pi(n, phi, p(m)).unwrap();
                    assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "n={n} phi={phi} m={m}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn incomplete_pi_structure() {
        let m = p(0.25);
        assert_eq!(incomplete_pi(-1.0, 0.0, m).unwrap(), 0.0);
        let full = complete_pi(-1.0, m).unwrap();
        assert!(rel(incomplete_pi(-1.0, FRAC_PI_2, m).unwrap(), full) < 1e-14);
        assert!(rel(incomplete_pi(-1.0, PI, m).unwrap(), 2.0 * full) < 1e-14);
        assert_eq!(incomplete_pi(-7.0, -0.8, m).unwrap(), -incomplete_pi(-7.0, 0.8, m).unwrap());
    }

    #[test]
    fn split_form_handles_characteristic_near_one() {
        // Π(N|m) for 1 - N = 1e-20: with N = 1 - ε the plain form cannot even represent N.
        let m = p(0.3);
        let eps = 1e-20;
        let v = complete_pi_split(1.0, eps, m).unwrap();
        // Π(N|m) ≈ (π/2) / √(ε (1 - m)) as N → 1.
        let lead = FRAC_PI_2 / (eps * 0.7f64).sqrt();
        assert!(rel(v, lead) < 1e-8);
    }
}
