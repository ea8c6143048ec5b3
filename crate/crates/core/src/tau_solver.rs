//! Solves for the triple `τ₁ ≤ τ₂ ≤ 1 ≤ τ₃` that fixes the map `u^{p,q,r}_{a,b}`.
//!
//! With `m = (τ₂ - τ₁)/(τ₃ - τ₁)`, `n₀ = -(τ₂ - τ₁)/τ₁`, `n₁ = (τ₂ - τ₁)/(1 - τ₁)`
//! the three period conditions become
//!
//! ```text
//! Φ(n₀|m) = πp/q,   Φ(n₁|m) = π|r + a|/q,   (1/n₁ - 1/n₀) m K(m)² = (πb/q)²
//! ```
//!
//! with `Φ(n|m) = √((1 - n)(n - m)/n) Π(n|m)`. Φ is monotone on each branch
//! and the last left-hand side (Ψ) is increasing in `m`, so everything is
//! solved by nested bracketed searches.
//!
//! Both characteristics are handled through a point `N ∈ [m, 1]`: `n₁ = N`
//! directly, and `n₀ = -(N - m)/(1 - N)` through the characteristic map
//! `n ↦ (m - n)/(1 - n)`, under which
//! `Φ(n₀|m) = Φ(N|m) + m K √((1 - N)/(N (N - m)))`. `N` is carried as the pair
//! `(N - m, 1 - N)`, each at full relative precision, so the limits
//! `n₀ → -∞` and `n₁ → 1` are reached without cancellation.

use crate::elliptic::carlson::rj;
use crate::elliptic::{complete_k, EllipticParam};
use crate::moduli::{MapParams, ModuliPoint, Regime};
use crate::quad::integrate;
use crate::roots::{brent, expand_bracket};
use crate::{Error, Result, Tolerances};
use std::f64::consts::{FRAC_PI_2, PI};

/// Which of the two characteristic branches a target value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `n < 0`, target `πp/q ≥ π/2` (the θ profile).
    Theta,
    /// `m ≤ n ≤ 1`, target `π|r + a|/q ∈ [0, π/2]` (the α profile).
    Alpha,
}

/// A point `N` of `[m, 1]` with its distances to both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub big_n: f64,
    /// `N - m`.
    pub above_m: f64,
    /// `1 - N`.
    pub below_one: f64,
}

impl Split {
    /// The point at logistic coordinate `σ`: `N - m = (1 - m)/(1 + e^{-σ})`.
    fn from_logit(sigma: f64, m: EllipticParam) -> Split {
        let t = 1.0 / (1.0 + (-sigma).exp());
        let tc = 1.0 / (1.0 + sigma.exp());
        let (above_m, below_one) = (m.mc() * t, m.mc() * tc);
        let big_n = if t < 0.5 { m.m() + above_m } else { 1.0 - below_one };
        Split { big_n, above_m, below_one }
    }

    fn at_m(m: EllipticParam) -> Split {
        Split { big_n: m.m(), above_m: 0.0, below_one: m.mc() }
    }

    fn at_one(m: EllipticParam) -> Split {
        Split { big_n: 1.0, above_m: m.mc(), below_one: 0.0 }
    }

    /// The negative characteristic `n = -(N - m)/(1 - N)` mapped to this point
    /// (`-∞` when `N = 1`).
    pub fn theta_n(&self) -> f64 {
        if self.below_one == 0.0 {
            f64::NEG_INFINITY
        } else {
            -self.above_m / self.below_one
        }
    }

    /// Splits a characteristic of either branch.
    fn from_characteristic(n: f64, m: EllipticParam) -> Result<Split> {
        if n == f64::NEG_INFINITY || n == 1.0 {
            return Ok(Split::at_one(m));
        }
        if n < 0.0 {
            let below_one = m.mc() / (1.0 - n);
            return Ok(Split { big_n: 1.0 - below_one, above_m: -n * below_one, below_one });
        }
        if n >= m.m() && n < 1.0 {
            return Ok(Split { big_n: n, above_m: n - m.m(), below_one: 1.0 - n });
        }
        Err(Error::Domain(format!("characteristic n = {n} outside (-∞, 0) ∪ [m, 1] with m = {}", m.m())))
    }
}

/// `Φ(N|m)` for `N ∈ [m, 1]`, with `Φ(m|m) = 0` and `Φ(1|m) = π/2`.
pub(crate) fn phi_split(s: &Split, m: EllipticParam, k: f64) -> f64 {
    if s.above_m == 0.0 {
        return 0.0;
    }
    if s.below_one == 0.0 {
        return FRAC_PI_2;
    }
    let pi = k + s.big_n / 3.0 * rj(0.0, m.mc(), 1.0, s.below_one);
    (s.below_one * s.above_m / s.big_n).sqrt() * pi
}

/// `Φ(n₀|m)` for the negative characteristic mapped to `s`.
pub(crate) fn phi_theta(s: &Split, m: EllipticParam, k: f64) -> f64 {
    if s.above_m == 0.0 {
        return f64::INFINITY;
    }
    phi_split(s, m, k) + m.m() * k * (s.below_one / (s.big_n * s.above_m)).sqrt()
}

/// `Φ(n|m) = √((1 - n)(n - m)/n) Π(n|m)` for `n < 0` or `m ≤ n ≤ 1`.
pub fn phi_fn(n: f64, m: EllipticParam) -> Result<f64> {
    if !(m.m() > 0.0 && m.mc() > 0.0) {
        return Err(Error::Domain(format!("Φ needs 0 < m < 1, got {}", m.m())));
    }
    let s = Split::from_characteristic(n, m)?;
    let k = complete_k(m)?;
    Ok(if n < 0.0 { phi_theta(&s, m, k) } else { phi_split(&s, m, k) })
}

pub(crate) fn solve_split(target: f64, branch: Branch, m: EllipticParam, k: f64, tol: f64) -> Result<Split> {
    match branch {
        Branch::Theta => {
            if !(target >= FRAC_PI_2) || !target.is_finite() {
                return Err(Error::Infeasible(format!("theta-branch target {target} below π/2 (p/q < 1/2)")));
            }
            if target == FRAC_PI_2 {
                return Ok(Split::at_one(m));
            }
            let f = |sigma: f64| target - phi_theta(&Split::from_logit(sigma, m), m, k);
            let (lo, hi) = expand_bracket(f, -4.0, 4.0, 16.0, 50)?;
            Ok(Split::from_logit(brent(f, lo, hi, tol)?, m))
        }
        Branch::Alpha => {
            if !(0.0..=FRAC_PI_2).contains(&target) {
                return Err(Error::Infeasible(format!("alpha-branch target {target} outside [0, π/2] (|r+a|/q > 1/2)")));
            }
            if target == 0.0 {
                return Ok(Split::at_m(m));
            }
            if target == FRAC_PI_2 {
                return Ok(Split::at_one(m));
            }
            let f = |sigma: f64| phi_split(&Split::from_logit(sigma, m), m, k) - target;
            let (lo, hi) = expand_bracket(f, -4.0, 4.0, 16.0, 50)?;
            Ok(Split::from_logit(brent(f, lo, hi, tol)?, m))
        }
    }
}

/// The characteristic `n` on `branch` with `Φ(n|m) = target`. Returns `-∞` for
/// target π/2 on the θ branch, `1` for π/2 on the α branch and `m` for 0.
pub fn solve_n(target: f64, branch: Branch, m: EllipticParam) -> Result<f64> {
    let k = complete_k(m)?;
    let s = solve_split(target, branch, m, k, Tolerances::default().solver)?;
    Ok(match branch {
        Branch::Theta => s.theta_n(),
        Branch::Alpha => s.big_n,
    })
}

/// Targets `πp/q` and `π|r + a|/q` with exact values at the limit cases.
fn targets(p: u32, q: u32, r_plus_a: f64, regime: Option<Regime>) -> (f64, f64) {
    let theta = if regime.is_some_and(|r| r.is_first_limit()) { FRAC_PI_2 } else { PI * p as f64 / q as f64 };
    let alpha = if regime.is_some_and(|r| r.is_second_limit()) { FRAC_PI_2 } else { PI * r_plus_a.abs() / q as f64 };
    (theta, alpha)
}

struct PsiEval {
    psi: f64,
    theta: Split,
    alpha: Split,
}

fn psi_eval(m: EllipticParam, theta_target: f64, alpha_target: f64, tol: f64) -> Result<PsiEval> {
    let k = complete_k(m)?;
    let theta = solve_split(theta_target, Branch::Theta, m, k, tol)?;
    let alpha = solve_split(alpha_target, Branch::Alpha, m, k, tol)?;
    // 1/n₁ - 1/n₀ times m: m/N₁ + m (1 - N₀)/(N₀ - m).
    let g = m.m() / alpha.big_n + m.m() * theta.below_one / theta.above_m;
    Ok(PsiEval { psi: g * k * k, theta, alpha })
}

/// `Ψ(m) = (1/n₁ - 1/n₀) m K(m)²` with `n₀, n₁` solved at this `m`.
pub fn psi_fn(m: EllipticParam, p: u32, q: u32, r_plus_a: f64) -> Result<f64> {
    if m.m() == 0.0 {
        let (p, q) = (p as f64, q as f64);
        return Ok(PI * PI * (p * p - r_plus_a * r_plus_a) / (q * q));
    }
    if m.mc() == 0.0 {
        return Ok(f64::INFINITY);
    }
    let (tt, ta) = targets(p, q, r_plus_a, None);
    Ok(psi_eval(m, tt, ta, Tolerances::default().solver)?.psi)
}

fn logistic_param(mu: f64) -> EllipticParam {
    let m = 1.0 / (1.0 + (-mu).exp());
    let mc = 1.0 / (1.0 + mu.exp());
    EllipticParam::from_parts(m, mc).expect("logistic pair is consistent")
}

/// The solved triple with the derived elliptic data.
#[derive(Debug, Clone, PartialEq)]
pub struct TauTriple {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    /// `1 - τ₂`, exact zero in the second limit case.
    pub one_minus_tau2: f64,
    /// `τ₃ - 1`, exact zero when `r + a = 0`.
    pub tau3_minus_one: f64,
    pub m: f64,
    /// `1 - m`.
    pub mc: f64,
    /// Negative characteristic, `-∞` in the first limit case.
    pub n0: f64,
    /// Characteristic in `[m, 1]`.
    pub n1: f64,
    /// Image `(m - n₀)/(1 - n₀)` of `n₀` in `[m, 1]`.
    pub theta_char: Split,
    pub alpha_char: Split,
    /// `A = 4π²(τ₁ + τ₂ + τ₃ - 1)`.
    pub a_const: f64,
    /// `c = θ' cos²φ ≥ 0`.
    pub c: f64,
    /// `d = α' sin²φ`, of sign opposite to `r + a`.
    pub d: f64,
    /// Sign of `r + a` (-1, 0 or 1).
    pub shift_sign: f64,
}

impl TauTriple {
    fn from_splits(m: EllipticParam, theta: Split, alpha: Split, shift_sign: f64) -> TauTriple {
        let mm = m.m();
        let minus_nu0 = mm * theta.below_one / theta.above_m;
        let g = mm / alpha.big_n + minus_nu0;
        let tau1 = minus_nu0 / g;
        let mut tau2 = (mm + minus_nu0) / g;
        let tau3 = (1.0 + minus_nu0) / g;
        let one_minus_tau2 = mm * alpha.below_one / (alpha.big_n * g);
        let tau3_minus_one = alpha.above_m / alpha.big_n / g;
        if alpha.below_one == 0.0 {
            tau2 = 1.0;
        }
        let tau3 = if alpha.above_m == 0.0 { 1.0 } else { tau3 };
        TauTriple::assemble(tau1, tau2, tau3, one_minus_tau2, tau3_minus_one, m, theta, alpha, shift_sign)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        tau1: f64,
        tau2: f64,
        tau3: f64,
        one_minus_tau2: f64,
        tau3_minus_one: f64,
        m: EllipticParam,
        theta: Split,
        alpha: Split,
        shift_sign: f64,
    ) -> TauTriple {
        let two_pi = 2.0 * PI;
        TauTriple {
            tau1,
            tau2,
            tau3,
            one_minus_tau2,
            tau3_minus_one,
            m: m.m(),
            mc: m.mc(),
            n0: theta.theta_n(),
            n1: alpha.big_n,
            theta_char: theta,
            alpha_char: alpha,
            a_const: 4.0 * PI * PI * (tau1 + tau2 + tau3 - 1.0),
            c: two_pi * (tau1 * tau2 * tau3).sqrt(),
            d: -shift_sign * two_pi * ((1.0 - tau1) * one_minus_tau2 * tau3_minus_one).sqrt(),
            shift_sign,
        }
    }

    /// Builds the triple directly from `τ₁ < τ₂ ≤ 1 ≤ τ₃`, `τ₂ < τ₃`, without
    /// any period conditions. Used for asymptotic triples and for controls.
    pub fn from_taus(tau1: f64, tau2: f64, tau3: f64, shift_sign: f64) -> Result<TauTriple> {
        if !(0.0 <= tau1 && tau1 < tau2 && tau2 <= 1.0 && 1.0 <= tau3 && tau2 < tau3) {
            return Err(Error::Domain(format!("need 0 ≤ τ₁ < τ₂ ≤ 1 ≤ τ₃, τ₂ < τ₃; got {tau1}, {tau2}, {tau3}")));
        }
        let d = tau2 - tau1;
        let spread = tau3 - tau1;
        let m = EllipticParam::from_parts(d / spread, (tau3 - tau2) / spread)
            .or_else(|_| EllipticParam::new(d / spread))?;
        let theta = Split {
            big_n: d * tau3 / (tau2 * spread),
            above_m: d * (tau3 - tau2) / (tau2 * spread),
            below_one: tau1 * (tau3 - tau2) / (tau2 * spread),
        };
        let alpha = Split {
            big_n: d / (1.0 - tau1),
            above_m: d * (tau3 - 1.0) / ((1.0 - tau1) * spread),
            below_one: (1.0 - tau2) / (1.0 - tau1),
        };
        Ok(TauTriple::assemble(tau1, tau2, tau3, 1.0 - tau2, tau3 - 1.0, m, theta, alpha, shift_sign))
    }

    pub fn param(&self) -> EllipticParam {
        EllipticParam::from_parts(self.m, self.mc).expect("stored parameter pair is consistent")
    }

    /// `K(m)`.
    pub fn k(&self) -> f64 {
        complete_k(self.param()).expect("m < 1 for a solved triple")
    }

    /// The cubic `P(t) = t³ - (1 + A/4π²) t² + ((c² - d² + A)/4π²) t - c²/4π²`,
    /// whose roots are τ₁, τ₂, τ₃.
    pub fn cubic(&self, t: f64) -> f64 {
        let fp2 = 4.0 * PI * PI;
        t * t * t - (1.0 + self.a_const / fp2) * t * t + (self.c * self.c - self.d * self.d + self.a_const) / fp2 * t
            - self.c * self.c / fp2
    }

    /// The three period integrals evaluated by adaptive quadrature, each
    /// already multiplied by its prefactor:
    ///
    /// `∫ dt/√Q`, `√(τ₁τ₂τ₃) ∫ dt/(t√Q)`, `√((1-τ₁)(1-τ₂)(τ₃-1)) ∫ dt/((1-t)√Q)`
    ///
    /// over `[τ₁, τ₂]` with `Q = (t - τ₁)(τ₂ - t)(τ₃ - t)`. With
    /// `t = τ₁ + (τ₂ - τ₁) sin²s` the endpoint singularities disappear. When
    /// τ₁ = 0 or τ₂ = 1 the prefactor vanishes against a divergent integral and
    /// the limit value π is returned.
    pub fn period_integrals(&self, rel_tol: f64) -> Result<[f64; 3]> {
        let (t1, t2, t3) = (self.tau1, self.tau2, self.tau3);
        let d = t2 - t1;
        let gap3 = t3 - t2;
        let gap1 = self.one_minus_tau2;
        let t_of = |s: f64| t1 + d * s.sin().powi(2);
        let tail = |s: f64| (gap3 + d * s.cos().powi(2)).sqrt();
        let ia = integrate(|s| 2.0 / tail(s), 0.0, FRAC_PI_2, rel_tol)?.value;
        let ib = if t1 == 0.0 {
            PI
        } else {
            (t1 * t2 * t3).sqrt() * integrate(|s| 2.0 / (t_of(s) * tail(s)), 0.0, FRAC_PI_2, rel_tol)?.value
        };
        let ic = if gap1 == 0.0 {
            PI
        } else if self.tau3_minus_one == 0.0 {
            0.0
        } else {
            ((1.0 - t1) * gap1 * self.tau3_minus_one).sqrt()
                * integrate(|s| 2.0 / ((gap1 + d * s.cos().powi(2)) * tail(s)), 0.0, FRAC_PI_2, rel_tol)?.value
        };
        Ok([ia, ib, ic])
    }

    /// Quadrature values minus `2πb/q`, `2πp/q`, `2π|r + a|/q`.
    pub fn residuals(&self, point: &ModuliPoint, params: &MapParams) -> Result<[f64; 3]> {
        self.residuals_with(point, params, Tolerances::default().quadrature)
    }

    pub fn residuals_with(&self, point: &ModuliPoint, params: &MapParams, rel_tol: f64) -> Result<[f64; 3]> {
        let [ia, ib, ic] = self.period_integrals(rel_tol)?;
        let q = params.q as f64;
        Ok([
            ia - 2.0 * PI * point.b / q,
            ib - 2.0 * PI * params.p as f64 / q,
            ic - 2.0 * PI * params.r_plus_a().abs() / q,
        ])
    }
}

/// Solves the period conditions for `(a, b)` and `(p, q, r)`.
pub fn solve_tau(point: &ModuliPoint, params: &MapParams) -> Result<TauTriple> {
    solve_tau_with(point, params, &Tolerances::default())
}

pub fn solve_tau_with(point: &ModuliPoint, params: &MapParams, tol: &Tolerances) -> Result<TauTriple> {
    if params.regime() == Regime::CircleFamily {
        return Err(Error::Infeasible(
            "(r+a)^2+b^2 > p^2 violated: equality holds, use the circle-family map".into(),
        ));
    }
    let (p, q) = (params.p, params.q);
    let (theta_target, alpha_target) = targets(p, q, params.r_plus_a(), Some(params.regime()));
    let alpha_target = if params.shift_is_zero() { 0.0 } else { alpha_target };
    let target = (PI * point.b / q as f64).powi(2);
    let f = |mu: f64| match psi_eval(logistic_param(mu), theta_target, alpha_target, tol.solver) {
        Ok(e) => e.psi - target,
        Err(_) => f64::NAN,
    };
    let (lo, hi) = expand_bracket(f, -2.0, 2.0, 8.0, 90).map_err(|e| {
        Error::NoConvergence(format!("no bracket for the modulus (Ψ(m) = (πb/q)²): {e}"))
    })?;
    let mu = brent(f, lo, hi, tol.solver)?;
    let m = logistic_param(mu);
    let e = psi_eval(m, theta_target, alpha_target, tol.solver)?;
    Ok(TauTriple::from_splits(m, e.theta, e.alpha, params.r_plus_a().signum() * (!params.shift_is_zero()) as u8 as f64))
}

/// Limit of the triple as `(r + a)² + b²` decreases to `p²`, where the maps
/// degenerate to the circle family with angle φ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdLimit {
    /// Common limit of τ₁ and τ₂: `(4p² - q²)/(4b²)`.
    pub tau12: f64,
    /// `p²/b²`.
    pub tau3: f64,
    /// `arccos(√(4p² - q²)/(2b))`.
    pub phi0: f64,
}

pub fn third_limit_asymptote(point: &ModuliPoint, params: &MapParams) -> Result<ThirdLimit> {
    let (p, q) = (params.p as f64, params.q as f64);
    let ra = params.r_plus_a();
    let gap = ra * ra + point.b * point.b - p * p;
    if gap.abs() > 1e-9 * p * p {
        return Err(Error::Domain(format!("(r+a)^2+b^2 = p^2 needed, off by {gap:e}")));
    }
    let disc = 4.0 * p * p - q * q;
    if disc < 0.0 {
        return Err(Error::Domain(format!("4p^2 >= q^2 needed, got p = {p}, q = {q}")));
    }
    let x = disc.sqrt() / (2.0 * point.b);
    if x > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("sqrt(4p^2-q^2)/(2b) = {x} exceeds 1")));
    }
    Ok(ThirdLimit { tau12: disc / (4.0 * point.b * point.b), tau3: p * p / (point.b * point.b), phi0: x.min(1.0).acos() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(m: f64) -> EllipticParam {
        EllipticParam::new(m).unwrap()
    }

    fn setup(a: &str, b: f64, pp: u32, q: u32, r: i32) -> (ModuliPoint, MapParams) {
        let pt = ModuliPoint::parse(a, b).unwrap();
        let mp = MapParams::classify(&pt, pp, q, r).unwrap();
        (pt, mp)
    }

    #[test]
    fn phi_limits() {
        let m = p(0.4);
        assert!((phi_fn(-1e6, m).unwrap() - FRAC_PI_2).abs() < 0.002 * FRAC_PI_2);
        assert_eq!(phi_fn(0.4, m).unwrap(), 0.0);
        assert!(phi_fn(0.4 + 1e-12, m).unwrap() < 1e-5);
        assert!(phi_fn(-1e-12, m).unwrap() > 1e3);
        assert!((phi_fn(1.0 - 1e-14, m).unwrap() - FRAC_PI_2).abs() < 1e-5);
        assert!(phi_fn(0.2, m).is_err());
        assert!(phi_fn(0.0, m).is_err());
    }

    #[test]
    fn phi_matches_direct_definition() {
        let m = p(0.35);
        for n in [-40.0f64, -3.0, -0.7, 0.5, 0.8, 0.99] {
            let direct = ((1.0 - n) * (n - 0.35) / n).sqrt() * crate::elliptic::complete_pi(n, m).unwrap();
            assert!((phi_fn(n, m).unwrap() - direct).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn solve_n_inverts_phi() {
        let m = p(0.5);
        let n0 = solve_n(2.0 * PI / 3.0, Branch::Theta, m).unwrap();
        assert!(n0 < 0.0);
        assert!((phi_fn(n0, m).unwrap() - 2.0 * PI / 3.0).abs() < 1e-12);
        let n1 = solve_n(PI / 5.0, Branch::Alpha, m).unwrap();
        assert!(n1 > 0.5 && n1 < 1.0);
        assert!((phi_fn(n1, m).unwrap() - PI / 5.0).abs() < 1e-12);
        assert_eq!(solve_n(FRAC_PI_2, Branch::Theta, m).unwrap(), f64::NEG_INFINITY);
        assert_eq!(solve_n(FRAC_PI_2, Branch::Alpha, m).unwrap(), 1.0);
        assert_eq!(solve_n(0.0, Branch::Alpha, m).unwrap(), 0.5);
        assert!(matches!(solve_n(1.0, Branch::Theta, m), Err(Error::Infeasible(_))));
        assert!(matches!(solve_n(2.0, Branch::Alpha, m), Err(Error::Infeasible(_))));
    }

    #[test]
    fn psi_limits_and_monotonicity() {
        let l0 = psi_fn(p(0.0), 1, 1, 0.25).unwrap();
        assert!((l0 - PI * PI * (1.0 - 0.0625)).abs() < 1e-14);
        let near0 = psi_fn(p(1e-9), 1, 1, 0.25).unwrap();
        assert!((near0 - l0).abs() < 1e-6);
        assert!(psi_fn(p(0.3), 1, 1, 0.25).unwrap() < psi_fn(p(0.6), 1, 1, 0.25).unwrap());
        assert!(psi_fn(EllipticParam::from_complement(1e-30).unwrap(), 1, 1, 0.25).unwrap() > 1e3);
    }

    #[test]
    fn figure_sets_round_trip() {
        for (a, b, pp, q, r) in [("1/4", 2.1, 2, 3, 0), ("1/4", 1.25, 1, 2, 0), ("1/2", 2.0, 2, 3, 1)] {
            let (pt, mp) = setup(a, b, pp, q, r);
            let t = solve_tau(&pt, &mp).unwrap();
            let res = t.residuals(&pt, &mp).unwrap();
            assert!(res.iter().all(|x| x.abs() < 1e-9), "{a} {b}: {res:?}");
            assert!(0.0 <= t.tau1 && t.tau1 < t.tau2 && t.tau2 <= 1.0 && 1.0 <= t.tau3);
        }
        let (pt, mp) = setup("1/4", 1.25, 1, 2, 0);
        assert_eq!(solve_tau(&pt, &mp).unwrap().tau1, 0.0);
        let (pt, mp) = setup("1/2", 2.0, 2, 3, 1);
        assert_eq!(solve_tau(&pt, &mp).unwrap().tau2, 1.0);
    }

    #[test]
    fn zero_shift_gives_unit_tau3() {
        let (pt, mp) = setup("0", 1.7, 1, 1, 0);
        let t = solve_tau(&pt, &mp).unwrap();
        assert_eq!(t.tau3, 1.0);
        assert_eq!(t.d, 0.0);
        assert_eq!(t.n1, t.m);
    }

    #[test]
    fn hybrid_case() {
        let (pt, mp) = setup("0", 1.3, 1, 2, 1);
        let t = solve_tau(&pt, &mp).unwrap();
        assert_eq!((t.tau1, t.tau2), (0.0, 1.0));
        assert!((t.tau3 - 1.0 / t.m).abs() < 1e-14);
    }

    #[test]
    fn cubic_vanishes_at_the_roots() {
        let (pt, mp) = setup("1/4", 2.1, 2, 3, 0);
        let t = solve_tau(&pt, &mp).unwrap();
        for x in [t.tau1, t.tau2, t.tau3] {
            assert!(t.cubic(x).abs() < 1e-13);
        }
    }

    #[test]
    fn from_taus_reproduces_solver_data() {
        let (pt, mp) = setup("1/4", 2.1, 2, 3, 0);
        let t = solve_tau(&pt, &mp).unwrap();
        let u = TauTriple::from_taus(t.tau1, t.tau2, t.tau3, t.shift_sign).unwrap();
        assert!((u.m - t.m).abs() < 1e-14);
        assert!((u.n0 - t.n0).abs() < 1e-12 * t.n0.abs());
        assert!((u.n1 - t.n1).abs() < 1e-14);
        assert!((u.d - t.d).abs() < 1e-12);
    }

    #[test]
    fn circle_family_is_rejected() {
        let (pt, mp) = setup("0", 1.0, 1, 1, 0);
        assert!(matches!(solve_tau(&pt, &mp), Err(Error::Infeasible(_))));
    }

    #[test]
    fn third_limit_values() {
        let (pt, mp) = setup("0", 1.0, 1, 2, 0);
        let lim = third_limit_asymptote(&pt, &mp).unwrap();
        assert_eq!((lim.tau12, lim.tau3), (0.0, 1.0));
        assert!((lim.phi0 - FRAC_PI_2).abs() < 1e-15);
        let b0: f64 = 0.9;
        let pt = ModuliPoint::new((1.0 - b0 * b0).sqrt(), b0).unwrap();
        let mp = MapParams::classify(&pt, 1, 1, 0).unwrap();
        let lim = third_limit_asymptote(&pt, &mp).unwrap();
        assert!((lim.phi0 - (3f64.sqrt() / (2.0 * b0)).acos()).abs() < 1e-15);
        let (pt, mp) = setup("0", 1.0, 1, 3, 0);
        assert!(third_limit_asymptote(&pt, &mp).is_err());
    }

    #[test]
    fn approaches_third_limit_continuously() {
        // (r+a)^2 + b^2 = p^2 + 1e-4 with (p, q, r) = (1, 1, 0), a = 0.3.
        let a = 0.3f64;
        let b0 = (1.0 - a * a).sqrt();
        let b = (1.0 - a * a + 1e-4).sqrt();
        let pt = ModuliPoint::new(a, b).unwrap();
        let mp = MapParams::classify(&pt, 1, 1, 0).unwrap();
        let t = solve_tau(&pt, &mp).unwrap();
        let lim_pt = ModuliPoint::new(a, b0).unwrap();
        let lim = third_limit_asymptote(&lim_pt, &MapParams::classify(&lim_pt, 1, 1, 0).unwrap()).unwrap();
        assert!((t.tau1 - lim.tau12).abs() < 1e-2 && (t.tau2 - lim.tau12).abs() < 1e-2);
        assert!((t.tau3 - lim.tau3).abs() < 1e-2);
    }
}
