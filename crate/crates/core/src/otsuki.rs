//! The minimal members of the family. They are conformal exactly when
//! `τ₁ + τ₂ = 1` and `τ₃ = 1`, i.e. `n₀ = -m/(1 - m)`, `n₁ = m`, `r + a = 0`,
//! and then `m` solves `Ω(m) = πp̃/q̃`.

use crate::elliptic::{complete_k, EllipticParam};
use crate::map_builder::{build_profiles, real_dot, ProfileSet, TorusMap, CHECK_SAMPLES};
use crate::moduli::{MapParams, ModuliPoint, Rational};
use crate::roots::{brent, expand_bracket};
use crate::tau_solver::{phi_theta, solve_tau, Split, TauTriple};
use crate::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

/// `Ω(0) = π/√2`.
pub const OMEGA_AT_ZERO: f64 = PI / SQRT_2;
/// `lim Ω(m) = π/2` as `m → 1`.
pub const OMEGA_AT_ONE: f64 = FRAC_PI_2;

/// `Ω(m) = √((2 - m)/(1 - m)) Π(-m/(1 - m) | m)`.
///
/// This is `Φ(n₀|m)` at `n₀ = -m/(1 - m)`, whose image `N = m(2 - m)` has
/// `1 - N = (1 - m)²` and `N - m = m(1 - m)`; those are formed from `mc`
/// directly so the evaluation stays accurate as `m → 1`, where the raw
/// characteristic diverges.
pub fn omega_fn(m: EllipticParam) -> f64 {
    if m.m() == 0.0 {
        return OMEGA_AT_ZERO;
    }
    if m.mc() == 0.0 {
        return OMEGA_AT_ONE;
    }
    let k = complete_k(m).expect("m < 1");
    let mc = m.mc();
    let below_one = mc * mc;
    let split = Split { big_n: m.m() * (1.0 + mc), above_m: m.m() * mc, below_one };
    phi_theta(&split, m, k)
}

fn logistic(mu: f64) -> EllipticParam {
    EllipticParam::from_parts(1.0 / (1.0 + (-mu).exp()), 1.0 / (1.0 + mu.exp())).expect("logistic lies in (0, 1)")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsukiParams {
    pub p_t: u32,
    pub q_t: u32,
    pub m_star: f64,
    pub mc_star: f64,
    /// `b̃ = (q̃/π) √(2 - m) K(m)`.
    pub b_t: f64,
}

impl OtsukiParams {
    pub fn param(&self) -> EllipticParam {
        EllipticParam::from_parts(self.m_star, self.mc_star).expect("solved modulus")
    }

    /// `(τ₁, τ₂, τ₃) = ((1 - m)/(2 - m), 1/(2 - m), 1)`.
    pub fn tau(&self) -> [f64; 3] {
        let two_minus_m = 1.0 + self.mc_star;
        [self.mc_star / two_minus_m, 1.0 / two_minus_m, 1.0]
    }

    /// The lattice and parameters of `u^{kp̃, kq̃, r̃}_{-r̃, kb̃}`.
    pub fn map_params(&self, k: u32, r_t: i32) -> Result<(ModuliPoint, MapParams)> {
        if k == 0 {
            return Err(Error::Domain("covering number k must be ≥ 1".into()));
        }
        let point = ModuliPoint::with_rational(Rational::integer(-r_t as i64), k as f64 * self.b_t)?;
        let params = MapParams::classify(&point, k * self.p_t, k * self.q_t, r_t)?;
        Ok((point, params))
    }

    /// The map for `(k, r̃)` through the general τ-solver.
    pub fn profiles(&self, k: u32, r_t: i32) -> Result<ProfileSet> {
        let (point, params) = self.map_params(k, r_t)?;
        let tau = solve_tau(&point, &params)?;
        build_profiles(&tau, &params, &point)
    }

    /// The `k = 1`, `r̃ = 0` map built from the closed-form triple, skipping the
    /// general solver.
    pub fn direct_profiles(&self) -> Result<ProfileSet> {
        let (point, params) = self.map_params(1, 0)?;
        let [t1, t2, t3] = self.tau();
        let tau = TauTriple::from_taus(t1, t2, t3, 1.0)?;
        build_profiles(&tau, &params, &point)
    }
}

/// Solves `Ω(m) = πp̃/q̃` for coprime `p̃, q̃` with `p̃/q̃ ∈ (½, √2/2)`.
pub fn solve_otsuki(p_t: u32, q_t: u32) -> Result<OtsukiParams> {
    if p_t == 0 || q_t == 0 || Rational::new(p_t as i64, q_t as i64)?.num() != p_t as i64 {
        return Err(Error::Domain(format!("need coprime positive p̃, q̃, got {p_t}/{q_t}")));
    }
    let (p, q) = (p_t as u64, q_t as u64);
    // ½ < p/q < √2/2 ⇔ q < 2p and 2p² < q².
    if 2 * p <= q || 2 * p * p >= q * q {
        return Err(Error::Infeasible(format!("p̃/q̃ = {p_t}/{q_t} outside (1/2, √2/2): no minimal representative")));
    }
    let target = PI * p_t as f64 / q_t as f64;
    // Ω decreases, the bracket search wants an increasing function.
    let f = |mu: f64| target - omega_fn(logistic(mu));
    let (lo, hi) = expand_bracket(f, -4.0, 4.0, 16.0, 50)?;
    let m = logistic(brent(f, lo, hi, 1e-15)?);
    let k = complete_k(m)?;
    Ok(OtsukiParams {
        p_t,
        q_t,
        m_star: m.m(),
        mc_star: m.mc(),
        b_t: q_t as f64 / PI * (1.0 + m.mc()).sqrt() * k,
    })
}

/// Conformality defects over a grid: largest `||∂_x u|² - |∂_y u|²|` and
/// largest `|⟨∂_x u, ∂_y u⟩|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalityResidual {
    pub diag: f64,
    pub offdiag: f64,
}

impl ConformalityResidual {
    pub fn max(&self) -> f64 {
        self.diag.max(self.offdiag)
    }
}

pub fn conformality_residual<M: TorusMap + ?Sized>(map: &M) -> ConformalityResidual {
    let b = map.lattice().b;
    let mut res = ConformalityResidual { diag: 0.0, offdiag: 0.0 };
    for i in 0..4 {
        let x = i as f64 / 4.0;
        for j in 0..CHECK_SAMPLES {
            let y = b * j as f64 / CHECK_SAMPLES as f64;
            let (ux, uy) = (map.dx(x, y), map.dy(x, y));
            res.diag = res.diag.max((real_dot(&ux, &ux) - real_dot(&uy, &uy)).abs());
            res.offdiag = res.offdiag.max(real_dot(&ux, &uy).abs());
        }
    }
    res
}
