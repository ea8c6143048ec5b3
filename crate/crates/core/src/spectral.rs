//! Floquet counting for the weighted problems
//!
//! ```text
//! -h'' + 4π²l² h = λ ρ h,    h(y + b) = e^{-2πila} h(y)
//! ```
//!
//! obtained from the Laplacian of `g = ρ (dx² + dy²)` by separating the
//! Fourier mode `l` in x. The count of eigenvalues below 2 over all modes is
//! `N(2)`, the index for which the metric is extremal.
//!
//! ρ has period `b/q`, so the monodromy over `[0, b]` is the `q`-th power of
//! the short-period monodromy `M_s`. With `x(λ) = tr M_s / 2` the boundary
//! condition `tr M = 2cos(2πla)` becomes `T_q(x) = cos(2πla)`, i.e.
//! `x(λ) = cos(2π(la + j)/q)` for `j = 0, ..., q - 1`.

use crate::exec::Execution;
use crate::map_builder::{build_profiles, ProfileSet};
use crate::moduli::{MapParams, ModuliPoint, Rational};
use crate::ode;
use crate::roots::{brent, golden_min};
use crate::tau_solver::{phi_fn, solve_n, solve_tau, Branch, TauTriple};
use crate::elliptic::{complete_k, EllipticParam};
use crate::{Error, Result, Tolerances};
use std::f64::consts::PI;

/// Points of the λ-grid on which sign changes are searched.
pub const GRID_POINTS: usize = 2000;
/// Eigenvalues this close to the threshold count as equal to it.
pub const AT_THRESHOLD: f64 = 1e-7;
/// `|tr M_s| - 2` below this at a local extremum is a double root.
pub const TANGENCY: f64 = 1e-6;
/// Distinct roots closer than this are reported as unresolved.
pub const CLUSTER: f64 = 1e-9;
const LAMBDA_START: f64 = 1e-9;

/// Boundary condition type of a Floquet problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcType {
    /// `la ∈ Z`.
    Periodic,
    /// `2la ∈ Z`, `la ∉ Z`.
    Antiperiodic,
    Generic,
}

impl BcType {
    pub fn name(&self) -> &'static str {
        match self {
            BcType::Periodic => "periodic",
            BcType::Antiperiodic => "antiperiodic",
            BcType::Generic => "generic",
        }
    }
}

/// One Floquet problem `-h'' + 4π²l²h = λρh`, `h(y + b) = e^{-2πi·phase} h(y)`.
pub struct SlProblem<'a> {
    pub l: u32,
    pub b: f64,
    /// Number of periods of ρ in `[0, b]`.
    pub sub_periods: u32,
    /// `la mod 1`.
    pub phase_turns: f64,
    phase_exact: Option<Rational>,
    rho: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    pub ode_tol: f64,
}

/// `la mod 1` exactly, when `a` is rational.
fn exact_phase(l: u32, a: Rational) -> Rational {
    let num = (l as i64 * a.num()).rem_euclid(a.den());
    Rational::new(num, a.den()).expect("positive denominator")
}

impl<'a> SlProblem<'a> {
    pub fn new(l: u32, b: f64, sub_periods: u32, phase_turns: f64, rho: impl Fn(f64) -> f64 + Sync + 'a) -> Self {
        SlProblem {
            l,
            b,
            sub_periods,
            phase_turns: phase_turns.rem_euclid(1.0),
            phase_exact: None,
            rho: Box::new(rho),
            ode_tol: Tolerances::default().ode,
        }
    }

    /// The mode-`l` problem for the metric `ρ(dx² + dy²)` of a map.
    pub fn for_map(profiles: &'a ProfileSet, l: u32) -> Self {
        let pt = profiles.point;
        let mut pr = SlProblem::new(l, pt.b, profiles.params.q, l as f64 * pt.a, move |y| profiles.rho(y));
        if let Some(a) = pt.a_exact() {
            let ph = exact_phase(l, a);
            pr.phase_turns = ph.to_f64();
            pr.phase_exact = Some(ph);
        }
        pr
    }

    pub fn with_ode_tol(mut self, tol: f64) -> Self {
        self.ode_tol = tol;
        self
    }

    pub fn bc_type(&self) -> BcType {
        match self.phase_exact {
            Some(ph) if ph.num() == 0 => BcType::Periodic,
            Some(ph) if 2 * ph.num() == ph.den() => BcType::Antiperiodic,
            Some(_) => BcType::Generic,
            None => {
                let t = self.phase_turns;
                if t.min(1.0 - t) < 1e-12 {
                    BcType::Periodic
                } else if (t - 0.5).abs() < 1e-12 {
                    BcType::Antiperiodic
                } else {
                    BcType::Generic
                }
            }
        }
    }

    /// Monodromy over one period `b/q` of ρ.
    pub fn short_monodromy(&self, lambda: f64) -> Result<[[f64; 2]; 2]> {
        let k2 = 4.0 * PI * PI * (self.l as f64).powi(2);
        let rho = &self.rho;
        let f = |y: f64, s: &[f64; 4]| {
            let w = k2 - lambda * rho(y);
            [s[1], w * s[0], s[3], w * s[2]]
        };
        let period = self.b / self.sub_periods as f64;
        let (s, _) = ode::integrate(f, 0.0, period, [1.0, 0.0, 0.0, 1.0], self.ode_tol)?;
        Ok([[s[0], s[2]], [s[1], s[3]]])
    }

    /// Fundamental matrix over `[0, b]`.
    pub fn monodromy(&self, lambda: f64) -> Result<[[f64; 2]; 2]> {
        let ms = self.short_monodromy(lambda)?;
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        for _ in 0..self.sub_periods {
            m = mat_mul(&m, &ms);
        }
        Ok(m)
    }

    /// ρ at the three Gauss nodes of each of `steps` equal steps of one short period.
    fn magnus_table(&self, steps: usize) -> MagnusTable {
        let h = self.b / self.sub_periods as f64 / steps as f64;
        let off = 15f64.sqrt() / 10.0;
        let rho = (0..steps)
            .map(|i| {
                let y0 = i as f64 * h;
                [(self.rho)(y0 + (0.5 - off) * h), (self.rho)(y0 + 0.5 * h), (self.rho)(y0 + (0.5 + off) * h)]
            })
            .collect();
        MagnusTable { h, rho }
    }

    /// Short-period monodromy by the sixth-order Magnus method on a table.
    fn magnus_monodromy(&self, table: &MagnusTable, lambda: f64) -> [[f64; 2]; 2] {
        let k2 = 4.0 * PI * PI * (self.l as f64).powi(2);
        let h = table.h;
        let c2 = 15f64.sqrt() * h / 3.0;
        let c3 = 10.0 * h / 3.0;
        let mut prod = [[1.0, 0.0], [0.0, 1.0]];
        for r in &table.rho {
            let w = [k2 - lambda * r[0], k2 - lambda * r[1], k2 - lambda * r[2]];
            let a1 = [[0.0, h], [h * w[1], 0.0]];
            let a2 = [[0.0, 0.0], [c2 * (w[2] - w[0]), 0.0]];
            let a3 = [[0.0, 0.0], [c3 * (w[2] - 2.0 * w[1] + w[0]), 0.0]];
            let c1 = comm(&a1, &a2);
            let c2 = scale(&comm(&a1, &add(&scale(&a3, 2.0), &c1)), -1.0 / 60.0);
            let left = add(&add(&scale(&a1, -20.0), &scale(&a3, -1.0)), &c1);
            let om = add(&add(&a1, &scale(&a3, 1.0 / 12.0)), &scale(&comm(&left, &add(&a2, &c2)), 1.0 / 240.0));
            prod = mat_mul(&expm_traceless(&om), &prod);
        }
        prod
    }

    /// Number of Magnus steps for which doubling changes `tr M_s / 2` at λ by
    /// less than `10 · ode_tol` (relative to `max(1, |tr|)`); the finer table is
    /// returned.
    fn tuned_table(&self, lambda: f64) -> Result<MagnusTable> {
        let mut steps = 128;
        let mut coarse = self.magnus_table(steps);
        loop {
            let fine = self.magnus_table(2 * steps);
            let x0 = half_tr(&self.magnus_monodromy(&coarse, lambda));
            let x1 = half_tr(&self.magnus_monodromy(&fine, lambda));
            if (x1 - x0).abs() <= MAGNUS_TOL_PER_ODE_TOL * self.ode_tol * x1.abs().max(1.0) {
                return Ok(fine);
            }
            steps *= 2;
            if steps > MAGNUS_MAX_STEPS {
                return Err(Error::NoConvergence(format!(
                    "Magnus step doubling reached {steps} steps at λ = {lambda}, change {:e}",
                    (x1 - x0).abs()
                )));
            }
            coarse = fine;
        }
    }

    /// Distinct levels `cos(2π(la + j)/q)` with multiplicity and whether the
    /// level is ±1.
    fn levels(&self) -> Vec<Level> {
        let q = self.sub_periods as i64;
        let mut out: Vec<Level> = Vec::new();
        for j in 0..q {
            let (value, edge) = match self.phase_exact {
                Some(ph) => {
                    // t = (num + j den) / (den q); 2t ∈ Z marks ±1.
                    let top = ph.num() + j * ph.den();
                    let bottom = ph.den() * q;
                    if (2 * top) % bottom == 0 {
                        (if ((2 * top) / bottom) % 2 == 0 { 1.0 } else { -1.0 }, true)
                    } else {
                        ((2.0 * PI * top as f64 / bottom as f64).cos(), false)
                    }
                }
                None => {
                    let t = (self.phase_turns + j as f64) / q as f64;
                    let two_t = 2.0 * t;
                    if (two_t - two_t.round()).abs() < 1e-12 {
                        (if (two_t.round() as i64) % 2 == 0 { 1.0 } else { -1.0 }, true)
                    } else {
                        ((2.0 * PI * t).cos(), false)
                    }
                }
            };
            match out.iter_mut().find(|lv| lv.edge == edge && (lv.value - value).abs() < 1e-12) {
                Some(lv) => lv.mult += 1,
                None => out.push(Level { value, mult: 1, edge }),
            }
        }
        out
    }

    /// Eigenvalues below `threshold` by a trace scan of `(0, 1.025·threshold]`.
    pub fn count_below(&self, threshold: f64, exec: Execution) -> Result<FloquetCount> {
        if !(threshold > 0.0) {
            return Err(Error::Domain(format!("threshold must be positive, got {threshold}")));
        }
        let hi = 1.025 * threshold;
        let n = GRID_POINTS;
        let grid: Vec<f64> = (0..n).map(|i| LAMBDA_START + (hi - LAMBDA_START) * i as f64 / (n - 1) as f64).collect();
        let table = self.tuned_table(hi)?;
        let half_trace = |lam: f64| half_tr(&self.magnus_monodromy(&table, lam));
        let xs = exec.map(&grid, |&lam| half_trace(lam));
        if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
            return Err(Error::NoConvergence(format!("monodromy failed at λ = {} (mode l = {})", grid[i], self.l)));
        }
        let tol = 1e-12;
        let mut roots = Vec::new();
        let mut warnings = Vec::new();
        for lv in self.levels() {
            let g = |lam: f64| half_trace(lam) - lv.value;
            // Simple roots at sign changes, keyed by cell index.
            let mut found: Vec<(usize, f64)> = Vec::new();
            for i in 0..n - 1 {
                if (xs[i] > lv.value) != (xs[i + 1] > lv.value) {
                    found.push((i, brent(g, grid[i], grid[i + 1], tol)?));
                }
            }
            let mut extra = Vec::new();
            if lv.edge {
                let s = lv.value;
                for i in 1..n - 1 {
                    let (xl, xm, xr) = (s * xs[i - 1], s * xs[i], s * xs[i + 1]);
                    if !(xm >= xl && xm > xr && xm > 0.5) {
                        continue;
                    }
                    let (lam_star, neg) = golden_min(|lam| -s * half_trace(lam), grid[i - 1], grid[i + 1], 1e-11);
                    let excess = -neg - 1.0;
                    if 2.0 * excess.abs() <= TANGENCY {
                        // Double root: drop the two crossings around it, if any were seen.
                        if xm > 1.0 {
                            let mut lo = i;
                            while lo > 0 && s * xs[lo] > 1.0 {
                                lo -= 1;
                            }
                            let mut hi_i = i;
                            while hi_i < n - 1 && s * xs[hi_i] > 1.0 {
                                hi_i += 1;
                            }
                            found.retain(|&(c, _)| c != lo && c + 1 != hi_i);
                        }
                        extra.push(lam_star);
                        extra.push(lam_star);
                    } else if excess > 0.0 && xm <= 1.0 {
                        // Both crossings inside one grid cell pair.
                        extra.push(brent(g, grid[i - 1], lam_star, tol)?);
                        extra.push(brent(g, lam_star, grid[i + 1], tol)?);
                    }
                }
            }
            for r in found.into_iter().map(|(_, r)| r).chain(extra) {
                for _ in 0..lv.mult {
                    roots.push(r);
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        for w in roots.windows(2) {
            let gap = w[1] - w[0];
            if gap > 0.0 && gap < CLUSTER {
                warnings.push(format!("unresolved multiplicity: roots {} and {} closer than {CLUSTER:e}", w[0], w[1]));
            }
        }
        for w in &warnings {
            log::warn!("mode l = {}: {w}", self.l);
        }
        let below = roots.iter().copied().filter(|&r| r < threshold - AT_THRESHOLD).collect();
        let at_threshold = roots.iter().copied().filter(|&r| (r - threshold).abs() <= AT_THRESHOLD).collect();
        Ok(FloquetCount { l: self.l, below, at_threshold, zero_mode: self.l == 0, warnings })
    }
}

/// Largest accepted change of `tr M_s / 2` under step doubling, in units of
/// the ODE tolerance (1e-11 at the default).
const MAGNUS_TOL_PER_ODE_TOL: f64 = 10.0;
const MAGNUS_MAX_STEPS: usize = 1 << 17;

struct MagnusTable {
    h: f64,
    rho: Vec<[f64; 3]>,
}

fn half_tr(m: &[[f64; 2]; 2]) -> f64 {
    0.5 * (m[0][0] + m[1][1])
}

fn add(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn scale(a: &[[f64; 2]; 2], c: f64) -> [[f64; 2]; 2] {
    [[c * a[0][0], c * a[0][1]], [c * a[1][0], c * a[1][1]]]
}

fn comm(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let (ab, ba) = (mat_mul(a, b), mat_mul(b, a));
    [[ab[0][0] - ba[0][0], ab[0][1] - ba[0][1]], [ab[1][0] - ba[1][0], ab[1][1] - ba[1][1]]]
}

/// `exp(Ω)` for traceless 2×2 `Ω`, using `Ω² = -det(Ω) I`.
fn expm_traceless(om: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let s2 = om[0][0] * om[0][0] + om[0][1] * om[1][0];
    let (c, sinc) = if s2.abs() < 1e-8 {
        (1.0 + s2 / 2.0 + s2 * s2 / 24.0, 1.0 + s2 / 6.0 + s2 * s2 / 120.0)
    } else if s2 > 0.0 {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    } else {
        let s = (-s2).sqrt();
        (s.cos(), s.sin() / s)
    };
    [[c + sinc * om[0][0], sinc * om[0][1]], [sinc * om[1][0], c + sinc * om[1][1]]]
}

struct Level {
    value: f64,
    mult: usize,
    edge: bool,
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Result of a Floquet count for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetCount {
    pub l: u32,
    /// Eigenvalues in `(0, threshold)`, repeated by multiplicity.
    pub below: Vec<f64>,
    /// Eigenvalues equal to the threshold within [`AT_THRESHOLD`].
    pub at_threshold: Vec<f64>,
    /// λ = 0 is an eigenvalue (constants, mode 0).
    pub zero_mode: bool,
    pub warnings: Vec<String>,
}

impl FloquetCount {
    pub fn count_positive(&self) -> usize {
        self.below.len()
    }

    /// Eigenvalues below the threshold including λ = 0.
    pub fn count(&self) -> usize {
        self.below.len() + self.zero_mode as usize
    }
}

/// Eigenvalue count of one mode, as reported.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCount {
    pub l: u32,
    pub bc: BcType,
    /// Eigenvalues below 2, λ = 0 included for l = 0.
    pub count: usize,
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues found at 2.
    pub at_two: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub counts_below_2: Vec<ModeCount>,
    pub n2: usize,
    pub bound_rhs: i64,
    pub equality: bool,
    /// `τ₂ + τ₃ - τ₁ ≤ 4` and (`p/q > 1/√3` or `|r + a|/q < √3/4`).
    pub sufficient_condition_met: bool,
    pub l_max: u32,
    /// `|tr M(2) - 2cos(2πla)|` for l = 0 and l = 1.
    pub certificates: [f64; 2],
    pub warnings: Vec<String>,
}

/// `2p - 1 + δ_{2p,q} + 2(⌈2|r + a| - 1⌉ + δ_{r+a,0})`.
pub fn bound_rhs(params: &MapParams, point: &ModuliPoint) -> i64 {
    let (p, q) = (params.p as i64, params.q as i64);
    let ceil_term = match point.a_exact() {
        Some(a) => {
            let num = (params.r as i64 * a.den() + a.num()).abs();
            // ⌈(2|num| - den)/den⌉
            (2 * num - a.den()).div_euclid(a.den()) + ((2 * num - a.den()).rem_euclid(a.den()) != 0) as i64
        }
        None => (2.0 * params.r_plus_a().abs() - 1.0 - 1e-12).ceil() as i64,
    };
    2 * p - 1 + (2 * p == q) as i64 + 2 * (ceil_term + params.shift_is_zero() as i64)
}

/// The last Fourier mode that can contribute eigenvalues below 2.
pub fn l_max(tau: &TauTriple) -> u32 {
    (tau.tau2 + tau.tau3 - tau.tau1).sqrt().ceil() as u32
}

/// `|tr M(2) - 2cos(2πla)|`, with M from the Magnus propagator.
///
/// For l = 1 and long periods the entries of M reach 1e6 and more, so the
/// adaptive RK route loses the trace to cancellation. Steps are doubled until
/// the change drops below 1e-10 or stops shrinking (roundoff floor).
pub fn certificate(problem: &SlProblem) -> Result<f64> {
    let target = 2.0 * (2.0 * PI * problem.phase_turns).cos();
    let trace = |steps: usize| {
        let ms = problem.magnus_monodromy(&problem.magnus_table(steps), 2.0);
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        for _ in 0..problem.sub_periods {
            m = mat_mul(&m, &ms);
        }
        m[0][0] + m[1][1]
    };
    let mut steps = 256;
    let mut prev = trace(steps);
    let mut prev_change = f64::INFINITY;
    loop {
        steps *= 2;
        let next = trace(steps);
        let change = (next - prev).abs();
        if change <= 1e-10 || change > prev_change / 8.0 || steps >= MAGNUS_MAX_STEPS {
            if !next.is_finite() {
                return Err(Error::NoConvergence(format!("monodromy at λ = 2 is {next}")));
            }
            return Ok((next - target).abs());
        }
        prev = next;
        prev_change = change;
    }
}

/// Counts all eigenvalues below 2 of the metric induced by the map.
pub fn assemble_n2(tau: &TauTriple, params: &MapParams, point: &ModuliPoint, exec: Execution) -> Result<SpectrumReport> {
    let profiles = build_profiles(tau, params, point)?;
    assemble_n2_for(&profiles, exec)
}

pub fn assemble_n2_for(profiles: &ProfileSet, exec: Execution) -> Result<SpectrumReport> {
    assemble_n2_with(profiles, &Tolerances::default(), exec)
}

/// As [`assemble_n2_for`], propagating with `tol.ode`.
pub fn assemble_n2_with(profiles: &ProfileSet, tol: &Tolerances, exec: Execution) -> Result<SpectrumReport> {
    let (tau, params, point) = (&profiles.tau, &profiles.params, &profiles.point);
    let problem = |l| SlProblem::for_map(profiles, l).with_ode_tol(tol.ode);
    let lm = l_max(tau);
    let mut counts = Vec::new();
    let mut warnings = Vec::new();
    let mut n2 = 0;
    for l in 0..=lm {
        let pr = problem(l);
        let fc = pr.count_below(2.0, exec)?;
        let count = fc.count();
        n2 += if l == 0 { count } else { 2 * count };
        let mut eigenvalues = fc.below.clone();
        if fc.zero_mode {
            eigenvalues.insert(0, 0.0);
        }
        warnings.extend(fc.warnings.iter().map(|w| format!("l = {l}: {w}")));
        counts.push(ModeCount { l, bc: pr.bc_type(), count, eigenvalues, at_two: fc.at_threshold.len() });
    }
    let certificates = [certificate(&problem(0))?, certificate(&problem(1))?];
    let bound = bound_rhs(params, point);
    let (p, q) = (params.p as f64, params.q as f64);
    let ra = params.r_plus_a();
    let sufficient = tau.tau2 + tau.tau3 - tau.tau1 <= 4.0 && (3.0 * p * p > q * q || 16.0 * ra * ra < 3.0 * q * q);
    Ok(SpectrumReport {
        counts_below_2: counts,
        n2,
        bound_rhs: bound,
        equality: n2 as i64 == bound,
        sufficient_condition_met: sufficient,
        l_max: lm,
        certificates,
        warnings,
    })
}

/// `T(m, n₀, n₁) = n₁/(n₁ - n₀) (1 - n₀/m + n₀)`, equal to `τ₁ + τ₃ - τ₂`.
pub fn strictness_t(m: f64, n0: f64, n1: f64) -> f64 {
    n1 / (n1 - n0) * (1.0 - n0 / m + n0)
}

/// Parameters with `N(2)` strictly above the lower bound, and the evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct StrictInstance {
    pub point: ModuliPoint,
    pub params: MapParams,
    pub m: f64,
    pub n0: f64,
    pub n1: f64,
    /// `T(m, n₀, n₁)`, above `4(a²/b² + 1)`.
    pub t0: f64,
    pub p0: u32,
    pub q0: u32,
    pub k: u32,
    /// Rayleigh-quotient bound `8(a²/b² + 1)/T₀` on λ₀(2).
    pub rayleigh_bound: f64,
    /// Lowest eigenvalue of mode 2 from the Floquet count, if below 2.
    pub lambda0_l2: Option<f64>,
    pub certified: bool,
}

/// Largest denominator tried when approximating `Φ(ñ₀|m)/π`.
pub const STRICT_SEARCH_Q0: u32 = 200;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Builds a map whose metric has `λ₀(2) < 2`, so `N(2)` exceeds the lower
/// bound. Seed `m = 1/6`, `ñ₀ = -6`, `n₁ = 9/10`; `n₀` is moved to a nearby
/// point where `Φ(n₀|m)/π = p₀/q₀` is rational, `b` is scaled by an integer
/// `k` until `b > max(1, 1/√(T₀ - 4))`, and `(r, a)` are read off from
/// `Φ(n₁|m) q/π`.
pub fn construct_strict_instance(exec: Execution) -> Result<StrictInstance> {
    let m_val = 1.0 / 6.0;
    let (seed_n0, n1) = (-6.0, 0.9);
    let m = EllipticParam::new(m_val)?;
    let eta0 = phi_fn(seed_n0, m)? / PI;
    let mut choice = None;
    'search: for q0 in 1..=STRICT_SEARCH_Q0 {
        let centre = (eta0 * q0 as f64).round() as i64;
        let mut cands: Vec<i64> = vec![centre, centre - 1, centre + 1];
        cands.sort_by(|x, y| (*x as f64 / q0 as f64 - eta0).abs().total_cmp(&(*y as f64 / q0 as f64 - eta0).abs()));
        for p0 in cands {
            if p0 <= 0 || gcd(p0 as u32, q0) != 1 || 2 * p0 <= q0 as i64 {
                continue;
            }
            let n0 = solve_n(PI * p0 as f64 / q0 as f64, Branch::Theta, m)?;
            let t0 = strictness_t(m_val, n0, n1);
            if t0 > 4.0 {
                choice = Some((p0 as u32, q0, n0, t0));
                break 'search;
            }
        }
    }
    let (p0, q0, n0, t0) = choice.ok_or_else(|| {
        Error::NoConvergence(format!("no p0/q0 with q0 <= {STRICT_SEARCH_Q0} gives T(m, n0, n1) > 4"))
    })?;
    let b_unit = q0 as f64 / PI * ((1.0 / n1 - 1.0 / n0) * m_val).sqrt() * complete_k(m)?;
    let b_min = 1f64.max(1.0 / (t0 - 4.0).sqrt());
    let k = (b_min / b_unit).floor() as u32 + 1;
    let b = k as f64 * b_unit;
    let (p, q) = (k * p0, k * q0);
    let eta = phi_fn(n1, m)? / PI;
    let x = eta * q as f64;
    let frac = x - x.floor();
    let (r, a) = if frac <= 0.5 { (x.floor() as i32, frac) } else { ((-x).floor() as i32, -x - (-x).floor()) };
    let point = ModuliPoint::new(a, b)?;
    let params = MapParams::classify(&point, p, q, r)?;
    let rayleigh_bound = 8.0 * (a * a / (b * b) + 1.0) / t0;
    let tau = solve_tau(&point, &params)?;
    let profiles = build_profiles(&tau, &params, &point)?;
    let fc = SlProblem::for_map(&profiles, 2).count_below(2.0, exec)?;
    let lambda0_l2 = fc.below.first().copied();
    Ok(StrictInstance {
        point,
        params,
        m: tau.m,
        n0,
        n1,
        t0,
        p0,
        q0,
        k,
        rayleigh_bound,
        lambda0_l2,
        certified: lambda0_l2.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(a: &str, b: f64, p: u32, q: u32, r: i32) -> ProfileSet {
        let pt = ModuliPoint::parse(a, b).unwrap();
        let mp = MapParams::classify(&pt, p, q, r).unwrap();
        build_profiles(&solve_tau(&pt, &mp).unwrap(), &mp, &pt).unwrap()
    }

    #[test]
    fn constant_density_trace() {
        let (b, c) = (1.3, 0.7);
        let pr = SlProblem::new(0, b, 1, 0.0, move |_| c);
        for lam in [0.3, 1.7, 5.0] {
            let m = pr.monodromy(lam).unwrap();
            assert!((m[0][0] + m[1][1] - 2.0 * (b * (lam * c).sqrt()).cos()).abs() < 1e-10);
        }
        let m = pr.monodromy(0.0).unwrap();
        assert!((m[0][0] + m[1][1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn unit_density_has_nothing_below_two() {
        let pr = SlProblem::new(0, 1.0, 1, 0.0, |_| 1.0);
        let fc = pr.count_below(2.0, Execution::Sequential).unwrap();
        assert_eq!(fc.count_positive(), 0);
        assert_eq!(fc.count(), 1);
    }

    #[test]
    fn constant_density_eigenvalues_with_multiplicity() {
        // ρ = 40 on [0, 1]: periodic eigenvalues 4π²k²/40 with multiplicity 2 for k ≥ 1.
        let pr = SlProblem::new(0, 1.0, 1, 0.0, |_| 40.0);
        let fc = pr.count_below(2.0, Execution::Sequential).unwrap();
        let want = 4.0 * PI * PI / 40.0;
        assert_eq!(fc.below.len(), 2);
        assert!(fc.below.iter().all(|l| (l - want).abs() < 1e-6));
        // Two periods of ρ in [0, b]: the same spectrum through the level split.
        let pr = SlProblem::new(0, 1.0, 2, 0.0, |_| 40.0);
        let fc2 = pr.count_below(2.0, Execution::Sequential).unwrap();
        assert_eq!(fc2.below.len(), 2);
        // Generic phase: one eigenvalue per band crossing.
        let pr = SlProblem::new(1, 1.0, 1, 0.3, |_| 60.0);
        let fc = pr.count_below(2.0, Execution::Sequential).unwrap();
        // -h'' + 4π²h = 60λh, h = e^{2πiκy}, κ ≡ -0.3 mod 1: λ = 4π²(1 + κ²)/60.
        let mut want: Vec<f64> = [-0.3f64, 0.7, -1.3].iter().map(|k| 4.0 * PI * PI * (1.0 + k * k) / 60.0).filter(|&l| l < 2.0).collect();
        want.sort_by(f64::total_cmp);
        assert_eq!(fc.below.len(), want.len());
        for (g, w) in fc.below.iter().zip(&want) {
            assert!((g - w).abs() < 1e-8);
        }
    }

    #[test]
    fn magnus_agrees_with_runge_kutta() {
        let ps = map("1/4", 2.1, 2, 3, 0);
        for l in [0, 1, 2] {
            let pr = SlProblem::for_map(&ps, l).with_ode_tol(1e-13);
            let table = pr.tuned_table(2.05).unwrap();
            for lam in [0.1, 1.0, 2.0] {
                let a = half_tr(&pr.magnus_monodromy(&table, lam));
                let b = half_tr(&pr.short_monodromy(lam).unwrap());
                assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "l = {l}, λ = {lam}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn magnus_is_sixth_order() {
        // Error ratio under step doubling approaches 2⁶ = 64.
        let pr = SlProblem::new(0, 1.0, 1, 0.0, |y: f64| 30.0 + 10.0 * (2.0 * PI * y).sin());
        let exact = half_tr(&pr.magnus_monodromy(&pr.magnus_table(4096), 1.5));
        let e1 = (half_tr(&pr.magnus_monodromy(&pr.magnus_table(16), 1.5)) - exact).abs();
        let e2 = (half_tr(&pr.magnus_monodromy(&pr.magnus_table(32), 1.5)) - exact).abs();
        assert!(e1 / e2 > 50.0 && e1 / e2 < 80.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn bc_types() {
        let pr = SlProblem::new(1, 1.0, 1, 0.5, |_| 1.0);
        assert_eq!(pr.bc_type(), BcType::Antiperiodic);
        let ps = map("1/4", 2.1, 2, 3, 0);
        assert_eq!(SlProblem::for_map(&ps, 0).bc_type(), BcType::Periodic);
        assert_eq!(SlProblem::for_map(&ps, 1).bc_type(), BcType::Generic);
        assert_eq!(SlProblem::for_map(&ps, 2).bc_type(), BcType::Antiperiodic);
        assert_eq!(SlProblem::for_map(&ps, 4).bc_type(), BcType::Periodic);
    }

    #[test]
    fn determinant_is_one() {
        let ps = map("1/4", 2.1, 2, 3, 0);
        for (l, lam) in [(0, 0.7), (0, 1.9), (1, 1.3), (1, 3.0)] {
            let m = SlProblem::for_map(&ps, l).monodromy(lam).unwrap();
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let scale = m.iter().flatten().map(|v| v * v).sum::<f64>();
            assert!((det - 1.0).abs() < 1e-10 * scale.max(1.0), "l = {l}, λ = {lam}: {det}");
        }
    }

    #[test]
    fn two_is_an_eigenvalue_of_modes_zero_and_one() {
        for ps in [map("1/4", 2.1, 2, 3, 0), map("0.3", 1.4, 1, 1, 0), map("1/2", 2.0, 2, 3, 1)] {
            for l in [0, 1] {
                let c = certificate(&SlProblem::for_map(&ps, l)).unwrap();
                assert!(c < 1e-7, "{:?} l = {l}: {c}", ps.params);
            }
        }
    }

    #[test]
    fn certificate_matches_runge_kutta_trace() {
        for ps in [map("1/4", 2.1, 2, 3, 0), map("0.3", 1.2, 1, 1, 0), map("0.2", 3.2, 3, 5, 1)] {
            for l in [0, 1] {
                let pr = SlProblem::for_map(&ps, l).with_ode_tol(1e-13);
                let m = pr.monodromy(2.0).unwrap();
                let rk = (m[0][0] + m[1][1] - 2.0 * (2.0 * PI * pr.phase_turns).cos()).abs();
                let c = certificate(&pr).unwrap();
                assert!((c - rk).abs() < 1e-9, "{:?} l = {l}: {c} vs {rk}", ps.params);
            }
        }
    }

    #[test]
    fn bound_values() {
        let pt = ModuliPoint::parse("1/4", 2.1).unwrap();
        assert_eq!(bound_rhs(&MapParams::classify(&pt, 2, 3, 0).unwrap(), &pt), 3);
        let pt = ModuliPoint::parse("0.3", 1.4).unwrap();
        assert_eq!(bound_rhs(&MapParams::classify(&pt, 1, 1, 0).unwrap(), &pt), 1);
        let pt = ModuliPoint::parse("0", 1.4).unwrap();
        assert_eq!(bound_rhs(&MapParams::classify(&pt, 1, 1, 0).unwrap(), &pt), 1);
        let pt = ModuliPoint::parse("1/2", 2.0).unwrap();
        // 2·2 - 1 + 0 + 2(⌈3 - 1⌉ + 0) = 7
        assert_eq!(bound_rhs(&MapParams::classify(&pt, 2, 3, 1).unwrap(), &pt), 7);
        let pt = ModuliPoint::new(0.25, 2.1).unwrap();
        assert_eq!(bound_rhs(&MapParams::classify(&pt, 2, 3, 0).unwrap(), &pt), 3);
    }

    #[test]
    fn strictness_seed() {
        assert!(strictness_t(1.0 / 6.0, -6.0, 0.9) > 4.0);
    }
}
