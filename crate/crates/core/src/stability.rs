//! Jacobi-operator diagnostics: the Fourier blocks of the circle-family maps,
//! the kernel at the special `φ₀`, the second variation of energy along a
//! Möbius direction, and index/nullity of `u^{1,1,0}` by a Galerkin
//! discretization.

use crate::exec::Execution;
use crate::map_builder::{build_circle_map, build_profiles, real_dot, CircleMap, ProfileSet, TorusMap};
use crate::moduli::{MapParams, ModuliPoint};
use crate::quad::{integrate, integrate_tol};
use crate::tau_solver::solve_tau;
use crate::{Error, Result};
use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// The block `J^{k,l}` acting on the coefficient of `e^{(2πi/b)(lbx + (k - la)y)}`
/// in the frame `ν₁, ν₂, ν₃`, scaled so that `J = (4π²/b²) J^{k,l}` on that mode.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiBlock {
    pub k: i64,
    pub l: i64,
    pub matrix: Matrix3<Complex64>,
    /// Determinant by cofactor expansion.
    pub det: Complex64,
    /// `s(s² - 4A²(lb² - (k - la)(r + a))² - 4B²p²(k - la)²)`, `s = l²b² + (k - la)²`.
    pub det_closed: f64,
}

impl JacobiBlock {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.matrix - self.matrix.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    /// Numerical rank from singular values relative to the largest.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let sv = self.matrix.singular_values();
        let top = sv.max();
        sv.iter().filter(|&&s| s > rel_tol * top).count()
    }

    pub fn det_gap(&self) -> f64 {
        (self.det - c(self.det_closed)).norm()
    }
}

fn det3(m: &Matrix3<Complex64>) -> Complex64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)]) - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// The block for `u^{p,r;φ₀}_{a,b}`. Meaningful when `(r + a)² + b² = p²`; the
/// matrix and both determinants are formed for any input.
pub fn jacobi_block(point: &ModuliPoint, p: u32, r: i32, phi0: f64, k: i64, l: i64) -> JacobiBlock {
    let (a, b) = (point.a, point.b);
    let (bs, ac) = phi0.sin_cos();
    let (p, ra) = (p as f64, r as f64 + a);
    let (lf, kla) = (l as f64, k as f64 - l as f64 * a);
    let s = lf * lf * b * b + kla * kla;
    let x_rot = 2.0 * lf * b * b * ac;
    let (bp, ar) = (bs * p, ac * ra);
    let y = 2.0 * kla;
    #[rustfmt::skip]
    let matrix = Matrix3::new(
        c(s),             c(0.0),           I * (y * bp),
        c(0.0),           c(s),             I * (y * ar - x_rot),
        I * (-y * bp),    I * (x_rot - y * ar), c(s),
    );
    let w = lf * b * b - kla * ra;
    let det_closed = s * (s * s - 4.0 * ac * ac * w * w - 4.0 * bs * bs * p * p * kla * kla);
    JacobiBlock { k, l, det: det3(&matrix), matrix, det_closed }
}

/// A sum of terms `c e^{i(ωₓx + ω_y y)}` with `c ∈ C²`, standing for an
/// `R⁴ = C²`-valued function; the Laplacian is exact.
#[derive(Debug, Clone, Default)]
struct TrigField {
    terms: Vec<([Complex64; 2], f64, f64)>,
}

impl TrigField {
    fn eval(&self, x: f64, y: f64) -> [Complex64; 2] {
        self.terms.iter().fold([c(0.0); 2], |acc, (v, wx, wy)| {
            let e = Complex64::from_polar(1.0, wx * x + wy * y);
            [acc[0] + v[0] * e, acc[1] + v[1] * e]
        })
    }

    fn laplacian(&self, x: f64, y: f64) -> [Complex64; 2] {
        self.terms.iter().fold([c(0.0); 2], |acc, (v, wx, wy)| {
            let e = Complex64::from_polar(1.0, wx * x + wy * y) * -(wx * wx + wy * wy);
            [acc[0] + v[0] * e, acc[1] + v[1] * e]
        })
    }
}

/// The real section `V = Σⱼ Re(cⱼ e_{k,l}) νⱼ` along a circle-family map, with
/// `ν₁ = (ie^{iθ}, 0)`, `ν₂ = (0, ie^{iψ})`, `ν₃ = (-Be^{iθ}, Ae^{iψ})` where
/// `u = (Ae^{iθ}, Be^{iψ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameField {
    pub map: CircleMap,
    pub k: i64,
    pub l: i64,
    pub coeffs: [Complex64; 3],
}

impl FrameField {
    fn mode_freqs(&self) -> (f64, f64) {
        let (a, b) = (self.map.point.a, self.map.point.b);
        (2.0 * PI * self.l as f64, 2.0 * PI / b * (self.k as f64 - self.l as f64 * a))
    }

    /// Frequencies of `θ` and `ψ` in `(x, y)`.
    fn phase_freqs(&self) -> ((f64, f64), (f64, f64)) {
        let (a, b) = (self.map.point.a, self.map.point.b);
        let ra = self.map.r as f64 + a;
        ((0.0, 2.0 * PI * self.map.p as f64 / b), (2.0 * PI, -2.0 * PI * ra / b))
    }

    fn trig(&self) -> TrigField {
        let (bs, ac) = self.map.phi0.sin_cos();
        let (mx, my) = self.mode_freqs();
        let ((tx, ty), (px, py)) = self.phase_freqs();
        // Frame vectors as (component values, which phase) pairs.
        let frame: [[(Complex64, bool); 2]; 3] = [
            [(I, true), (c(0.0), false)],
            [(c(0.0), true), (I, false)],
            [(c(-bs), true), (c(ac), false)],
        ];
        let mut f = TrigField::default();
        for (j, nu) in frame.iter().enumerate() {
            // Re(c e) = (c e + c̄ ē)/2.
            for (coef, sign) in [(self.coeffs[j] * 0.5, 1.0), (self.coeffs[j].conj() * 0.5, -1.0)] {
                f.terms.push(([coef * nu[0].0, c(0.0)], sign * mx + tx, sign * my + ty));
                f.terms.push(([c(0.0), coef * nu[1].0], sign * mx + px, sign * my + py));
            }
        }
        f
    }

    pub fn eval(&self, x: f64, y: f64) -> [Complex64; 2] {
        self.trig().eval(x, y)
    }

    /// `|J V|` at one point from the ambient form `J V = -(ΔV)ᵀ - |du|² V`,
    /// compared against the block prediction `(4π²/b²) Re((J^{k,l}c) e_{k,l})·ν`.
    /// Returns `(|J V|, |J V - prediction|)`.
    pub fn ambient_check(&self, x: f64, y: f64) -> (f64, f64) {
        let t = self.trig();
        let u = self.map.eval(x, y).to_array();
        let v = t.eval(x, y);
        let lap = t.laplacian(x, y);
        let du2 = 2.0 * self.map.energy();
        let lu = real_dot(&lap, &u);
        let jv = [-(lap[0] - u[0] * lu) - v[0] * du2, -(lap[1] - u[1] * lu) - v[1] * du2];
        let block = jacobi_block(&self.map.point, self.map.p, self.map.r, self.map.phi0, self.k, self.l);
        let jc = block.matrix * Vector3::from(self.coeffs);
        let scale = 4.0 * PI * PI / (self.map.point.b * self.map.point.b);
        let pred = FrameField { coeffs: [jc[0] * scale, jc[1] * scale, jc[2] * scale], ..*self }.eval(x, y);
        let norm = |w: [Complex64; 2]| (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        (norm(jv), norm([jv[0] - pred[0], jv[1] - pred[1]]))
    }
}

/// `φ₀ = arccos(√(4p² - q²)/(2b))`.
pub fn special_phi0(point: &ModuliPoint, p: u32, q: u32) -> Result<f64> {
    let disc = 4.0 * (p as f64).powi(2) - (q as f64).powi(2);
    if disc < 0.0 {
        return Err(Error::Domain(format!("4p^2 >= q^2 required, got p = {p}, q = {q}")));
    }
    let cos = disc.sqrt() / (2.0 * point.b);
    if cos > 1.0 {
        return Err(Error::Domain(format!("√(4p²-q²)/(2b) = {cos} > 1: no special φ₀")));
    }
    Ok(cos.acos())
}

/// The fields `V₁, V₂` spanning the kernel on the modes `(±q, 0)` and their
/// certification.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub phi0: f64,
    pub v1: FrameField,
    pub v2: FrameField,
    /// `|det J^{±q,0}|`.
    pub det: [f64; 2],
    pub rank: [usize; 2],
    /// Largest `|J^{q,0} c|` over both coefficient vectors.
    pub block_residual: f64,
    /// Largest ambient `|J Vᵢ|` over a sample grid.
    pub ambient_residual: f64,
    /// `∫ ⟨V₁, V₂⟩` over the torus.
    pub cross_inner: f64,
    pub nonintegrable: NonintegrabilityVerdict,
}

/// A harmonic deformation tangent to `V₁` would need both `q = 2p` and
/// `q = 2|r + a|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonintegrabilityVerdict {
    pub q_eq_2p: bool,
    pub q_eq_2ra: bool,
}

impl NonintegrabilityVerdict {
    pub fn nonintegrable(&self) -> bool {
        !(self.q_eq_2p && self.q_eq_2ra)
    }
}

pub fn special_phi0_kernel(point: &ModuliPoint, p: u32, r: i32, q: u32) -> Result<KernelReport> {
    let phi0 = special_phi0(point, p, q)?;
    let map = build_circle_map(point, p, r, phi0)?;
    let (bs, ac) = phi0.sin_cos();
    let ra = r as f64 + point.a;
    let qf = q as f64;
    // V₁ = Re(c e_{q,0})·ν and V₂ = Re(-i c e_{q,0})·ν.
    let c1 = [c(2.0 * bs * p as f64), c(2.0 * ac * ra), I * qf];
    let c2 = c1.map(|z| -I * z);
    let v1 = FrameField { map, k: q as i64, l: 0, coeffs: c1 };
    let v2 = FrameField { coeffs: c2, ..v1 };
    let plus = jacobi_block(point, p, r, phi0, q as i64, 0);
    let minus = jacobi_block(point, p, r, phi0, -(q as i64), 0);
    let block_residual = [c1, c2]
        .iter()
        .map(|cv| (plus.matrix * Vector3::from(*cv)).norm() / Vector3::from(*cv).norm())
        .fold(0.0, f64::max);
    let mut ambient_residual = 0.0f64;
    for i in 0..8 {
        for j in 0..32 {
            let (x, y) = (i as f64 / 8.0, point.b * j as f64 / 32.0);
            ambient_residual = ambient_residual.max(v1.ambient_check(x, y).0).max(v2.ambient_check(x, y).0);
        }
    }
    let cross = |y: f64| {
        let (a, b) = (v1.eval(0.0, y), v2.eval(0.0, y));
        real_dot(&a, &b)
    };
    let cross_inner = integrate_tol(cross, 0.0, point.b, 1e-13, 1e-12)?.value;
    let ra_abs = ra.abs();
    Ok(KernelReport {
        phi0,
        v1,
        v2,
        det: [plus.det.norm(), minus.det.norm()],
        rank: [plus.rank(1e-10), minus.rank(1e-10)],
        block_residual,
        ambient_residual,
        cross_inner,
        nonintegrable: NonintegrabilityVerdict {
            q_eq_2p: q == 2 * p,
            q_eq_2ra: (qf - 2.0 * ra_abs).abs() <= 1e-12 * qf,
        },
    })
}

/// `∫(3⟨u, γ₀⟩² - 1)|du|² dv` for `u = u^{1,0;φ₀}` on the rhombic class
/// `a₀ = √(1 - b₀²)`, `φ₀ = arccos(√3/(2b₀))`, `γ₀ = (1, 0, 0, 0)`, by 2D
/// quadrature, and the closed form `(4π²/b₀³)(9/8 - b₀²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HerschReport {
    pub b0: f64,
    pub quadrature: f64,
    pub closed_form: f64,
}

impl HerschReport {
    pub fn gap(&self) -> f64 {
        (self.quadrature - self.closed_form).abs()
    }
}

pub fn hersch_second_variation(b0: f64) -> Result<HerschReport> {
    if !(b0 > 0.0 && b0 <= 1.0) {
        return Err(Error::Domain(format!("b₀ must lie in (0, 1], got {b0}")));
    }
    let point = ModuliPoint::new((1.0 - b0 * b0).sqrt(), b0)?;
    let cos = 3f64.sqrt() / (2.0 * b0);
    if cos > 1.0 {
        return Err(Error::Domain(format!("√3/(2b₀) = {cos} > 1: φ₀ undefined")));
    }
    let map = build_circle_map(&point, 1, 0, cos.acos())?;
    let integrand = |x: f64, y: f64| {
        let g = map.eval(x, y).z1.re;
        (3.0 * g * g - 1.0) * 2.0 * map.energy_density(x, y)
    };
    // [0, 1) × [0, b₀) is a fundamental domain of the lattice.
    let inner = |y: f64| integrate(|x| integrand(x, y), 0.0, 1.0, 1e-13).map(|i| i.value).unwrap_or(f64::NAN);
    let quadrature = integrate(inner, 0.0, b0, 1e-13)?.value;
    Ok(HerschReport { b0, quadrature, closed_form: 4.0 * PI * PI / b0.powi(3) * (9.0 / 8.0 - b0 * b0) })
}

/// Index and nullity of the energy Hessian of `u^{1,1,0}_{a,b}` at one
/// truncation level.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinCount {
    /// Fourier modes `e^{(2πi/b)(k - na)y}`, `|k| ≤ kmax`, per x-frequency `n`.
    pub kmax: usize,
    pub index: usize,
    pub nullity: usize,
    /// Eigenvalues with `|λ| < 1`, sorted, for inspection.
    pub low_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexNullity {
    pub index: usize,
    pub nullity: usize,
    pub converged: bool,
    pub coarse: GalerkinCount,
    pub fine: GalerkinCount,
    pub warnings: Vec<String>,
}

/// Eigenvalues below this magnitude count toward the nullity.
pub const NULL_THRESHOLD: f64 = 1e-5;
/// Truncations compared for the convergence flag.
pub const GALERKIN_LEVELS: [usize; 2] = [32, 48];
/// Conjectured values at generic points; a mismatch is reported as a warning.
pub const EXPECTED_INDEX_NULLITY: (usize, usize) = (3, 7);

/// The Hessian `Q(V) = ∫ |dV|² - |du|²|V|²` on sections `V = Σ fⱼ νⱼ` in the
/// moving frame `ν₁ = (ie^{iθ}, 0)`, `ν₂ = (0, ie^{iψ})`,
/// `ν₃ = (-sin φ e^{iθ}, cos φ e^{iψ})`, one x-frequency `n` at a time.
/// Frequencies with `|n| > 1 + √(τ₂ + τ₃ - τ₁)` are positive definite because
/// `|∂ₓV|² ≥ 4π²(|n| - 1)²|V|²` and `|du|² ≤ 4π²(τ₂ + τ₃ - τ₁)`; they are skipped.
fn galerkin_count(point: &ModuliPoint, kmax: usize) -> Result<GalerkinCount> {
    let params = MapParams::classify(point, 1, 1, 0)?;
    let tau = solve_tau(point, &params)?;
    let prof = build_profiles(&tau, &params, point)?;
    let b = point.b;
    let nmax = (1.0 + (tau.tau2 + tau.tau3 - tau.tau1).sqrt()).floor() as i64;
    let nk = 2 * kmax + 1;
    let dim = 3 * nk;
    let half = frame_half_shifts(&prof)?;
    // Trapezoid nodes: exact for the band-limited products up to aliasing and
    // spectrally accurate for the analytic coefficients.
    let ny = 8 * nk;
    let samples: Vec<_> = (0..ny).map(|i| prof.at(b * i as f64 / ny as f64)).collect();
    // Frequency differences in half-units, 2(k' - k) + (dⱼ' - dⱼ).
    let span = 4 * kmax + 1;
    let mut eigs = Vec::new();
    for n in -nmax..=nmax {
        let nf = n as f64;
        // Components of ∂ₓV and ∂_yV in the frame (ν₁, ν₂, ν₃, u) are
        // Σⱼ (A_cj(y) fⱼ + D_cj fⱼ'), with D selecting f₁', f₂', f₃' in rows 4..7:
        //   ∂ₓV: ν₁: ∂ₓf₁; ν₂: ∂ₓf₂ + 2π cos φ f₃; ν₃: ∂ₓf₃ - 2π cos φ f₂; u: -2π sin φ f₂;
        //   ∂_yV: ν₁: f₁' - θ' sin φ f₃; ν₂: f₂' + α' cos φ f₃;
        //         ν₃: f₃' + θ' sin φ f₁ - α' cos φ f₂; u: -θ' cos φ f₁ - α' sin φ f₂ - φ' f₃.
        // With fⱼ = e^{iβ_{jk} y} the form is Toeplitz in k with symbols
        // P = A*A - |du|², S = DᵀA.
        let ix = I * (2.0 * PI * nf);
        let tp = 2.0 * PI;
        let mut p_hat = vec![[[c(0.0); 3]; 3]; 2 * span + 1];
        let mut s_hat = vec![[[c(0.0); 3]; 3]; 2 * span + 1];
        for (i, pp) in samples.iter().enumerate() {
            let (sp, cp) = (pp.sin_phi, pp.cos_phi);
            let (th, al, ph) = (pp.dtheta, pp.dalpha, pp.dphi);
            let du2 = 4.0 * PI * PI * sp * sp + ph * ph + th * th * cp * cp + al * al * sp * sp;
            #[rustfmt::skip]
            let a: [[Complex64; 3]; 8] = [
                [ix, c(0.0), c(0.0)],
                [c(0.0), ix, c(tp * cp)],
                [c(0.0), c(-tp * cp), ix],
                [c(0.0), c(-tp * sp), c(0.0)],
                [c(0.0), c(0.0), c(-th * sp)],
                [c(0.0), c(0.0), c(al * cp)],
                [c(th * sp), c(-al * cp), c(0.0)],
                [c(-th * cp), c(-al * sp), c(-ph)],
            ];
            let mut pm = [[c(0.0); 3]; 3];
            let mut sm = [[c(0.0); 3]; 3];
            for j in 0..3 {
                for jj in 0..3 {
                    pm[j][jj] = (0..8).map(|r| a[r][j].conj() * a[r][jj]).sum::<Complex64>();
                    sm[j][jj] = a[4 + j][jj];
                }
                pm[j][j] -= c(du2);
            }
            // f̂(h) = (1/ny) Σᵢ f(yᵢ) e^{πihi/ny}, h in half-units.
            let step = Complex64::from_polar(1.0, PI * i as f64 / ny as f64);
            let mut tw = Complex64::from_polar(1.0, -PI * (span * i) as f64 / ny as f64);
            for idx in 0..=2 * span {
                for j in 0..3 {
                    for jj in 0..3 {
                        p_hat[idx][j][jj] += pm[j][jj] * tw;
                        s_hat[idx][j][jj] += sm[j][jj] * tw;
                    }
                }
                tw *= step;
            }
        }
        let beta = |j: usize, k: usize| 2.0 * PI / b * (k as f64 - kmax as f64 + 0.5 * half[j] as f64 - nf * point.a);
        let scale = c(1.0 / ny as f64);
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        for k1 in 0..nk {
            for k2 in 0..nk {
                for j in 0..3 {
                    for jj in 0..3 {
                        let m = 2 * k2 + half[jj] + span - 2 * k1 - half[j];
                        let (b1, b2) = (beta(j, k1), beta(jj, k2));
                        // Q_{jj'} = Σ_c conj(A_cj) D_cj' = conj(S_{j'j}), read at -h.
                        let q = s_hat[2 * span - m][jj][j].conj() * (I * b2);
                        let mut v = (p_hat[m][j][jj] + q + s_hat[m][j][jj] * (-I * b1)) * scale;
                        if k1 == k2 && j == jj {
                            v += c(b1 * b2);
                        }
                        h[(j * nk + k1, jj * nk + k2)] = v;
                    }
                }
            }
        }
        let h = (&h + h.adjoint()) * c(0.5);
        eigs.extend(SymmetricEigen::new(h).eigenvalues.iter().copied());
    }
    eigs.sort_by(f64::total_cmp);
    Ok(GalerkinCount {
        kmax,
        index: eigs.iter().filter(|&&e| e < -NULL_THRESHOLD).count(),
        nullity: eigs.iter().filter(|&&e| e.abs() < NULL_THRESHOLD).count(),
        low_eigenvalues: eigs.into_iter().filter(|e| e.abs() < 1.0).collect(),
    })
}

/// Whether each frame vector changes sign along the lattice vector `(a, b)`:
/// `ν₁` follows `e^{iθ}`, `ν₂` follows `e^{iψ}`, `ν₃` their product. In the
/// limit regimes `cos φ` or `sin φ` is antiperiodic and so is the matching
/// phase; those components get half-shifted Floquet frequencies.
fn frame_half_shifts(prof: &ProfileSet) -> Result<[usize; 3]> {
    let (a, b) = (prof.point.a, prof.point.b);
    let y0 = 0.3 * b;
    let (p0, p1) = (prof.at(y0), prof.at(y0 + b));
    let sign = |d: f64| -> Result<usize> {
        let cd = d.cos();
        if (cd.abs() - 1.0).abs() > 1e-8 {
            return Err(Error::NoConvergence(format!("frame monodromy e^{{i{d}}} is not ±1")));
        }
        Ok(usize::from(cd < 0.0))
    };
    let s1 = sign(p1.theta - p0.theta)?;
    let s2 = sign(2.0 * PI * a + p1.alpha - p0.alpha)?;
    Ok([s1, s2, s1 ^ s2])
}

/// Energy index and nullity of `u^{1,1,0}_{a,b}` from two Galerkin truncations;
/// the counts are trusted when both agree.
pub fn index_nullity_estimate(point: &ModuliPoint, exec: Execution) -> Result<IndexNullity> {
    let mut runs = exec.map(&GALERKIN_LEVELS, |&k| galerkin_count(point, k)).into_iter();
    let coarse = runs.next().expect("two levels")?;
    let fine = runs.next().expect("two levels")?;
    let converged = coarse.index == fine.index && coarse.nullity == fine.nullity;
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!(
            "counts differ between truncations: ({}, {}) at kmax = {}, ({}, {}) at kmax = {}",
            coarse.index, coarse.nullity, coarse.kmax, fine.index, fine.nullity, fine.kmax
        ));
    }
    if (fine.index, fine.nullity) != EXPECTED_INDEX_NULLITY {
        warnings.push(format!(
            "(index, nullity) = ({}, {}) differs from the expected {:?}",
            fine.index, fine.nullity, EXPECTED_INDEX_NULLITY
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(IndexNullity { index: fine.index, nullity: fine.nullity, converged, coarse, fine, warnings })
}
