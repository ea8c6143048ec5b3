//! Values of the normalized eigenvalue functional on the induced metrics,
//! the flat comparison values, the Hopf-differential derivative identity and
//! moduli scans.
//!
//! For a harmonic map `u` the metric `g = ½|du|² (dx² + dy²)` has `2` as an
//! eigenvalue of index `N(2)`, and `λ̄_{N(2)} = 2 · area(g) = 2∫₀ᵇ ρ dy`.

use crate::elliptic::{complete_e, complete_k, EllipticParam};
use crate::exec::Execution;
use crate::map_builder::{build_profiles, hopf_constants, HopfConstants, ProfileSet};
use crate::moduli::{MapParams, ModuliPoint};
use crate::quad::integrate;
use crate::spectral::assemble_n2_with;
use crate::tau_solver::{psi_fn, solve_split, solve_tau, solve_tau_with, Branch, TauTriple};
use crate::tolerances::Tolerances;
use crate::{Error, Result};
use std::f64::consts::PI;
use std::io::Write;

/// `8π`, the value at the round sphere's first eigenvalue.
pub const EIGHT_PI: f64 = 8.0 * PI;

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalValue {
    /// `λ̄_{N(2)}` from the closed form.
    pub lambda_bar: f64,
    /// `2∫₀ᵇ ρ dy` by adaptive quadrature.
    pub lambda_bar_quadrature: f64,
    /// `λ̄₁` of the flat metric in the same conformal class.
    pub flat_value: f64,
    pub petrides_floor: f64,
    pub n2: Option<usize>,
}

impl FunctionalValue {
    /// `λ̄ - max(λ̄₁(flat), 8π)`.
    pub fn margin(&self) -> f64 {
        self.lambda_bar - self.flat_value.max(self.petrides_floor)
    }

    /// The map's value strictly beats both comparison values.
    pub fn exceeds_bounds(&self) -> bool {
        self.margin() > 1e-9
    }

    pub fn relative_gap(&self) -> f64 {
        (self.lambda_bar - self.lambda_bar_quadrature).abs() / self.lambda_bar.abs()
    }
}

/// `4π²b(τ₁ + τ₂ - τ₃) + 8πq√(τ₃ - τ₁) E(m)`.
pub fn closed_form_value(tau: &TauTriple, params: &MapParams, point: &ModuliPoint) -> f64 {
    let e = complete_e(tau.param());
    4.0 * PI * PI * point.b * (tau.tau1 + tau.tau2 - tau.tau3) + 8.0 * PI * params.q as f64 * (tau.tau3 - tau.tau1).sqrt() * e
}

/// `2∫₀ᵇ ρ dy` by adaptive Gauss–Kronrod quadrature.
pub fn quadrature_value(profiles: &ProfileSet) -> Result<f64> {
    Ok(2.0 * integrate(|y| profiles.rho(y), 0.0, profiles.point.b, 1e-13)?.value)
}

/// Closed-form value, quadrature cross-check and flat value; `N(2)` is
/// attached when `with_n2`.
pub fn functional_value(
    tau: &TauTriple,
    params: &MapParams,
    point: &ModuliPoint,
    with_n2: bool,
    exec: Execution,
) -> Result<FunctionalValue> {
    functional_value_with(tau, params, point, with_n2, &Tolerances::default(), exec)
}

pub fn functional_value_with(
    tau: &TauTriple,
    params: &MapParams,
    point: &ModuliPoint,
    with_n2: bool,
    tol: &Tolerances,
    exec: Execution,
) -> Result<FunctionalValue> {
    let profiles = build_profiles(tau, params, point)?;
    let n2 = if with_n2 { Some(assemble_n2_with(&profiles, tol, exec)?.n2) } else { None };
    Ok(FunctionalValue {
        lambda_bar: closed_form_value(tau, params, point),
        lambda_bar_quadrature: quadrature_value(&profiles)?,
        flat_value: flat_lambda1(point),
        petrides_floor: EIGHT_PI,
        n2,
    })
}

/// Shortest nonzero vector of the lattice spanned by `u`, `v` (Gauss reduction).
fn shortest_vector(mut u: [f64; 2], mut v: [f64; 2]) -> [f64; 2] {
    let n2 = |w: [f64; 2]| w[0] * w[0] + w[1] * w[1];
    if n2(u) > n2(v) {
        std::mem::swap(&mut u, &mut v);
    }
    loop {
        let mu = ((u[0] * v[0] + u[1] * v[1]) / n2(u)).round();
        v = [v[0] - mu * u[0], v[1] - mu * u[1]];
        if n2(v) >= n2(u) {
            return u;
        }
        std::mem::swap(&mut u, &mut v);
    }
}

/// `λ̄₁` of the flat torus `R²/(Z(1,0) + Z(a,b))`: `4π² b |γ*|²` with `γ*`
/// a shortest nonzero vector of the dual lattice.
pub fn flat_lambda1(point: &ModuliPoint) -> f64 {
    let (a, b) = (point.a, point.b);
    let g = shortest_vector([1.0, -a / b], [0.0, 1.0 / b]);
    4.0 * PI * PI * b * (g[0] * g[0] + g[1] * g[1])
}

/// Dirichlet energy `E = ∫₀ᵇ ρ dy = λ̄/2` of `u^{p,q,r}_{a,b}`.
pub fn energy(point: &ModuliPoint, params: &MapParams) -> Result<f64> {
    let tau = solve_tau(point, params)?;
    Ok(0.5 * closed_form_value(&tau, params, point))
}

/// Central differences of the energy of `u^{1,1,0}` in `a` and `b` against
/// the Hopf-differential prediction `dE = 2(H_im da + H_re db)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfDerivativeReport {
    pub h: f64,
    /// Richardson-extrapolated `∂E/∂a` from steps `h` and `h/2`.
    pub de_da: f64,
    pub de_db: f64,
    pub two_h_im: f64,
    pub two_h_re: f64,
    pub tolerance: f64,
}

impl HopfDerivativeReport {
    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs().max(1e-300)
    }

    pub fn rel_err_a(&self) -> f64 {
        Self::rel(self.de_da, self.two_h_im)
    }

    pub fn rel_err_b(&self) -> f64 {
        Self::rel(self.de_db, self.two_h_re)
    }

    /// Both derivatives match within `max(1e-4, 10h²)`, absolute or relative.
    pub fn agrees(&self) -> bool {
        let ok = |d: f64, w: f64| (d - w).abs() <= self.tolerance * w.abs().max(1.0);
        ok(self.de_da, self.two_h_im) && ok(self.de_db, self.two_h_re)
    }
}

pub fn hopf_derivative_check(point: &ModuliPoint, h: f64) -> Result<HopfDerivativeReport> {
    let p110 = |pt: &ModuliPoint| -> Result<MapParams> {
        MapParams::classify(pt, 1, 1, 0).map_err(|e| Error::Domain(format!("step {h} leaves the feasible region: {e}")))
    };
    let params = p110(point)?;
    let e_at = |a: f64, b: f64| -> Result<f64> {
        let pt = ModuliPoint::new(a, b)?;
        energy(&pt, &p110(&pt)?)
    };
    let (a, b) = (point.a, point.b);
    let diff_a = |s: f64| -> Result<f64> { Ok((e_at(a + s, b)? - e_at(a - s, b)?) / (2.0 * s)) };
    let diff_b = |s: f64| -> Result<f64> { Ok((e_at(a, b + s)? - e_at(a, b - s)?) / (2.0 * s)) };
    let richardson = |d1: f64, d2: f64| (4.0 * d2 - d1) / 3.0;
    let de_da = richardson(diff_a(h)?, diff_a(h / 2.0)?);
    let de_db = richardson(diff_b(h)?, diff_b(h / 2.0)?);
    let tau = solve_tau(point, &params)?;
    let hc = hopf_constants(&build_profiles(&tau, &params, point)?);
    Ok(HopfDerivativeReport {
        h,
        de_da,
        de_db,
        two_h_im: 2.0 * hc.h_im,
        two_h_re: 2.0 * hc.h_re,
        tolerance: 1e-4f64.max(10.0 * h * h),
    })
}

/// `Ξ(m) = (m - m/n₀ - 1) K² + 2KE` for `(p, q) = (1, 1)` and shift `r + a`,
/// with `n₀, n₁` solved at this `m`; also returns `Ξ̃ = Ξ/√Ψ`.
pub fn xi_functions(m: EllipticParam, r_plus_a: f64) -> Result<(f64, f64)> {
    let k = complete_k(m)?;
    let e = complete_e(m);
    let psi = psi_fn(m, 1, 1, r_plus_a)?;
    // -m/n₀ = m(1 - N₀)/(N₀ - m) through the characteristic split.
    let s = solve_split(PI, Branch::Theta, m, k, Tolerances::default().solver)?;
    let minus_m_over_n0 = m.m() * s.below_one / s.above_m;
    let xi = (m.m() + minus_m_over_n0 - 1.0) * k * k + 2.0 * k * e;
    Ok((xi, xi / psi.sqrt()))
}

/// Polynomial extrapolation to `t = 0` through the points `(t_i, v_i)` (Neville).
fn extrapolate_to_zero(t: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    for k in 1..p.len() {
        for i in 0..p.len() - k {
            p[i] = (t[i + k] * p[i] - t[i] * p[i + 1]) / (t[i + k] - t[i]);
        }
    }
    p[0]
}

/// `Ξ(m)` as `m → 0`, extrapolated in `m` from `m = 10⁻⁴ … 10⁻⁷`.
pub fn xi_limit_at_zero(r_plus_a: f64) -> Result<f64> {
    let ms = [1e-4, 1e-5, 1e-6, 1e-7];
    let vals = ms.iter().map(|&m| Ok(xi_functions(EllipticParam::new(m)?, r_plus_a)?.0)).collect::<Result<Vec<_>>>()?;
    Ok(extrapolate_to_zero(&ms, &vals))
}

/// `Ξ̃(m)` as `m → 1`. The approach is like `1/K(m)`, far too slow to reach
/// directly, so the samples at `1 - m = 10⁻⁴⁰ … 10⁻¹⁴⁰` are extrapolated in
/// `1/K`.
pub fn xi_tilde_limit_at_one(r_plus_a: f64) -> Result<f64> {
    let mut t = Vec::new();
    let mut v = Vec::new();
    for e in [40, 60, 80, 100, 120, 140] {
        let m = EllipticParam::from_complement(10f64.powi(-e))?;
        t.push(1.0 / complete_k(m)?);
        v.push(xi_functions(m, r_plus_a)?.1);
    }
    Ok(extrapolate_to_zero(&t, &v))
}

/// Rectangular grid over moduli, `a` outer and `b` inner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub b_steps: usize,
}

impl GridSpec {
    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let bs = Self::axis(self.b_min, self.b_max, self.b_steps);
        Self::axis(self.a_min, self.a_max, self.a_steps)
            .into_iter()
            .flat_map(|a| bs.iter().map(move |&b| (a, b)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanValues {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub m: f64,
    pub lambda_bar: f64,
    pub flat_value: f64,
    pub n2: Option<usize>,
    pub hopf: HopfConstants,
}

#[derive(Debug)]
pub struct ScanRow {
    pub index: usize,
    pub a: f64,
    pub b: f64,
    pub outcome: Result<ScanValues>,
}

fn scan_point(a: f64, b: f64, p: u32, q: u32, r: i32, with_n2: bool, tol: &Tolerances) -> Result<ScanValues> {
    let point = ModuliPoint::new(a, b)?;
    let params = MapParams::classify(&point, p, q, r)?;
    let tau = solve_tau_with(&point, &params, tol)?;
    let profiles = build_profiles(&tau, &params, &point)?;
    let n2 = if with_n2 { Some(assemble_n2_with(&profiles, tol, Execution::Sequential)?.n2) } else { None };
    Ok(ScanValues {
        tau1: tau.tau1,
        tau2: tau.tau2,
        tau3: tau.tau3,
        m: tau.m,
        lambda_bar: closed_form_value(&tau, &params, &point),
        flat_value: flat_lambda1(&point),
        n2,
        hopf: hopf_constants(&profiles),
    })
}

/// Evaluates every grid point; rows come back in grid order and failed points
/// carry their error.
pub fn moduli_scan(grid: &GridSpec, p: u32, q: u32, r: i32, with_n2: bool, exec: Execution) -> Vec<ScanRow> {
    moduli_scan_with(grid, p, q, r, with_n2, &Tolerances::default(), exec)
}

pub fn moduli_scan_with(
    grid: &GridSpec,
    p: u32,
    q: u32,
    r: i32,
    with_n2: bool,
    tol: &Tolerances,
    exec: Execution,
) -> Vec<ScanRow> {
    let pts = grid.points();
    let outcomes = exec.map(&pts, |&(a, b)| scan_point(a, b, p, q, r, with_n2, tol));
    pts.into_iter()
        .zip(outcomes)
        .enumerate()
        .map(|(index, ((a, b), outcome))| ScanRow { index, a, b, outcome })
        .collect()
}

/// Post-hoc check of the scan: along every fixed-`a` line, λ̄ strictly
/// decreases in `b`; along every fixed-`b` line with `a ≥ 0`, it strictly
/// increases in `a`. Slack 1e-9.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monotonicity {
    pub decreasing_in_b: bool,
    pub increasing_in_a: bool,
}

pub fn scan_monotonicity(rows: &[ScanRow]) -> Monotonicity {
    const SLACK: f64 = 1e-9;
    let ok: Vec<(f64, f64, f64)> =
        rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|v| (r.a, r.b, v.lambda_bar))).collect();
    let check = |key: fn(&(f64, f64, f64)) -> f64, along: fn(&(f64, f64, f64)) -> f64, sign: f64| {
        let mut keys: Vec<f64> = ok.iter().map(key).collect();
        keys.sort_by(f64::total_cmp);
        keys.dedup();
        keys.iter().all(|&k| {
            let mut line: Vec<&(f64, f64, f64)> = ok.iter().filter(|r| key(r) == k).collect();
            line.sort_by(|x, y| along(x).total_cmp(&along(y)));
            line.windows(2).all(|w| sign * (w[1].2 - w[0].2) > -SLACK && w[1].2 != w[0].2 || along(w[0]) == along(w[1]))
        })
    };
    let decreasing_in_b = check(|r| r.0, |r| r.1, -1.0);
    let nonneg: Vec<&(f64, f64, f64)> = ok.iter().filter(|r| r.0 >= 0.0).collect();
    let increasing_in_a = {
        let mut keys: Vec<f64> = nonneg.iter().map(|r| r.1).collect();
        keys.sort_by(f64::total_cmp);
        keys.dedup();
        keys.iter().all(|&k| {
            let mut line: Vec<&&(f64, f64, f64)> = nonneg.iter().filter(|r| r.1 == k).collect();
            line.sort_by(|x, y| x.0.total_cmp(&y.0));
            line.windows(2).all(|w| w[1].2 - w[0].2 > -SLACK)
        })
    };
    Monotonicity { decreasing_in_b, increasing_in_a }
}

/// Column names of the scan CSV.
pub const SCAN_HEADER: &str = "a,b,tau1,tau2,tau3,m,lambda_bar,flat_value,8pi,N2,H_re,H_im";

/// Writes the successful rows as CSV (17 significant digits); `N2` is empty
/// when not computed.
pub fn write_scan_csv<W: Write>(mut w: W, rows: &[ScanRow]) -> std::io::Result<()> {
    use crate::map_builder::fmt_f64 as f;
    writeln!(w, "{SCAN_HEADER}")?;
    for row in rows {
        if let Ok(v) = &row.outcome {
            let n2 = v.n2.map(|n| n.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                f(row.a),
                f(row.b),
                f(v.tau1),
                f(v.tau2),
                f(v.tau3),
                f(v.m),
                f(v.lambda_bar),
                f(v.flat_value),
                f(EIGHT_PI),
                n2,
                f(v.hopf.h_re),
                f(v.hopf.h_im)
            )?;
        }
    }
    Ok(())
}
