//! The equivariant harmonic maps
//!
//! ```text
//! u(x, y) = (cos φ(y) e^{iθ(y)}, sin φ(y) e^{i(2πx + α(y))})
//! ```
//!
//! from the flat torus with lattice `Z(1,0) + Z(a,b)` into S³, their energy
//! density and Hopf differential, the homogeneous circle-family maps, and
//! numerical harmonicity checks.

use crate::elliptic::{incomplete_pi_split, jacobi, EllipticParam};
use crate::moduli::{MapParams, ModuliPoint, Regime};
use crate::tau_solver::{phi_split, phi_theta, TauTriple};
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::Write;

/// A point of S³ ⊂ C².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl SpherePoint {
    pub fn norm_sqr(&self) -> f64 {
        self.z1.norm_sqr() + self.z2.norm_sqr()
    }

    pub fn to_array(self) -> [Complex64; 2] {
        [self.z1, self.z2]
    }
}

/// Euclidean inner product on C² = R⁴.
pub fn real_dot(u: &[Complex64; 2], v: &[Complex64; 2]) -> f64 {
    u[0].re * v[0].re + u[0].im * v[0].im + u[1].re * v[1].re + u[1].im * v[1].im
}

fn combine(terms: &[(f64, [Complex64; 2])]) -> [Complex64; 2] {
    let mut out = [Complex64::new(0.0, 0.0); 2];
    for (w, v) in terms {
        out[0] += v[0] * *w;
        out[1] += v[1] * *w;
    }
    out
}

/// Step of the first-derivative differences in y, in flat coordinates.
pub const FD_STEP: f64 = 1e-4;

/// Step of the second-derivative differences. Larger than [`FD_STEP`]: θ and
/// α carry absolute rounding noise of a few ulps of 4π, which the second
/// difference amplifies by `1/h²`; at 1e-3 that noise and the truncation error
/// are both around 1e-8.
pub const FD_STEP_SECOND: f64 = 1e-3;

/// A doubly periodic map from the flat torus `R²/(Z(1,0) + Z(a,b))` into S³.
pub trait TorusMap: Sync {
    fn lattice(&self) -> ModuliPoint;
    fn eval(&self, x: f64, y: f64) -> SpherePoint;
    /// Exact `∂u/∂x`.
    fn dx(&self, x: f64, y: f64) -> [Complex64; 2];
    /// Exact `∂²u/∂x²`.
    fn dxx(&self, x: f64, y: f64) -> [Complex64; 2];
    /// `e(u) = ½|du|²`.
    fn energy_density(&self, x: f64, y: f64) -> f64;

    /// `∂u/∂y` by the fourth-order central difference.
    fn dy(&self, x: f64, y: f64) -> [Complex64; 2] {
        let h = FD_STEP;
        let f = |k: f64| self.eval(x, y + k * h).to_array();
        combine(&[(-1.0 / (12.0 * h), f(2.0)), (8.0 / (12.0 * h), f(1.0)), (-8.0 / (12.0 * h), f(-1.0)), (1.0 / (12.0 * h), f(-2.0))])
    }

    /// Flat Laplacian: exact in x, fourth-order central difference in y.
    fn laplacian(&self, x: f64, y: f64) -> [Complex64; 2] {
        let h2 = FD_STEP_SECOND * FD_STEP_SECOND;
        let f = |k: f64| self.eval(x, y + k * FD_STEP_SECOND).to_array();
        let yy = combine(&[
            (-1.0 / (12.0 * h2), f(2.0)),
            (16.0 / (12.0 * h2), f(1.0)),
            (-30.0 / (12.0 * h2), f(0.0)),
            (16.0 / (12.0 * h2), f(-1.0)),
            (-1.0 / (12.0 * h2), f(-2.0)),
        ]);
        let xx = self.dxx(x, y);
        [xx[0] + yy[0], xx[1] + yy[1]]
    }
}

/// Number of y-samples for the grid checks.
pub const CHECK_SAMPLES: usize = 1000;

/// Largest `|Δu + 2e(u) u|` over a y-grid of one period (at x = 0).
pub fn harmonicity_residual<M: TorusMap + ?Sized>(map: &M) -> f64 {
    let b = map.lattice().b;
    (0..CHECK_SAMPLES)
        .map(|i| {
            let y = b * i as f64 / CHECK_SAMPLES as f64;
            let u = map.eval(0.0, y).to_array();
            let lap = map.laplacian(0.0, y);
            let two_e = 2.0 * map.energy_density(0.0, y);
            let r = [lap[0] + u[0] * two_e, lap[1] + u[1] * two_e];
            (r[0].norm_sqr() + r[1].norm_sqr()).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Values and first derivatives of the profiles at one `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub phi: f64,
    pub cos_phi: f64,
    pub sin_phi: f64,
    pub theta: f64,
    pub alpha: f64,
    pub dphi: f64,
    pub dtheta: f64,
    pub dalpha: f64,
}

/// The profiles φ, θ, α of the map `u^{p,q,r}_{a,b}` for a solved triple.
///
/// With `z = 2π√(τ₃ - τ₁) y`, `cos²φ = τ₁ + (τ₂ - τ₁) sn²(z|m)` in the
/// nonlimit case. θ and α are incomplete integrals of the third kind in
/// `am(z)`; `z` is first reduced to `[-K, K]` and every full period `2K`
/// contributes the complete value.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    pub tau: TauTriple,
    pub params: MapParams,
    pub point: ModuliPoint,
    param: EllipticParam,
    k: f64,
    z_scale: f64,
    theta: Option<ThirdKind>,
    alpha: Option<ThirdKind>,
}

/// `w Π(N; ψ|m) + (m/ρ) F(ψ) + atan(ρ sn cn/dn)` with its value `half` over `[0, K]`.
/// The last two terms are present only for the θ branch.
#[derive(Debug, Clone, Copy)]
struct ThirdKind {
    big_n: f64,
    below_one: f64,
    w: f64,
    rho: Option<f64>,
    half: f64,
}

impl ProfileSet {
    fn third_kind_value(&self, t: &ThirdKind, z: f64) -> f64 {
        let jv = jacobi(z, self.param);
        let j = (z / (2.0 * self.k)).round();
        let psi = jv.am - j * PI;
        let z_red = z - 2.0 * self.k * j;
        let mut v = 2.0 * j * t.half
            + t.w * incomplete_pi_split(t.big_n, t.below_one, psi, self.param).expect("N < 1 on a non-degenerate branch");
        if let Some(rho) = t.rho {
            v += self.param.m() / rho * z_red + (rho * jv.sn * jv.cn / jv.dn).atan();
        }
        v
    }

    pub fn regime(&self) -> Regime {
        self.params.regime()
    }

    /// Profiles and their y-derivatives at `y`.
    pub fn at(&self, y: f64) -> ProfilePoint {
        let t = &self.tau;
        let zs = self.z_scale;
        let z = zs * y;
        let jv = jacobi(z, self.param);
        let d = t.tau2 - t.tau1;
        let (cos_phi, sin_phi, phi, dphi) = match self.regime() {
            Regime::FirstLimit => {
                let c = t.tau2.sqrt() * jv.sn;
                let s = (t.one_minus_tau2 + t.tau2 * jv.cn * jv.cn).sqrt();
                (c, s, s.atan2(c), -t.tau2.sqrt() * jv.cn * jv.dn * zs / s)
            }
            Regime::SecondLimit => {
                let s = (1.0 - t.tau1).sqrt() * jv.cn;
                let c = (t.tau1 + d * jv.sn * jv.sn).sqrt();
                (c, s, s.atan2(c), -(1.0 - t.tau1).sqrt() * jv.sn * jv.dn * zs / c)
            }
            Regime::HybridLimit => (jv.sn, jv.cn, 0.5 * PI - jv.am, -jv.dn * zs),
            _ => {
                let c = (t.tau1 + d * jv.sn * jv.sn).sqrt();
                let s = (t.one_minus_tau2 + d * jv.cn * jv.cn).sqrt();
                (c, s, s.atan2(c), -d * jv.sn * jv.cn * jv.dn * zs / (s * c))
            }
        };
        let (theta, dtheta) = match &self.theta {
            Some(th) => (self.third_kind_value(th, z), t.c / (cos_phi * cos_phi)),
            None => (0.0, 0.0),
        };
        let (alpha, dalpha) = match &self.alpha {
            Some(al) => (-t.shift_sign * self.third_kind_value(al, z), t.d / (sin_phi * sin_phi)),
            None => (0.0, 0.0),
        };
        ProfilePoint { phi, cos_phi, sin_phi, theta, alpha, dphi, dtheta, dalpha }
    }

    /// `ρ(y) = 2π²(τ₁ + τ₂ + τ₃ - 2cos²φ(y))`, the energy density.
    pub fn rho(&self, y: f64) -> f64 {
        2.0 * PI * PI * (self.tau.tau1 + self.tau.tau2 + self.tau.tau3 - 2.0 * self.cos_sq_phi(y))
    }

    /// `cos²φ(y) = τ₁ + (τ₂ - τ₁) sn²(z)`, the same in every regime.
    pub fn cos_sq_phi(&self, y: f64) -> f64 {
        let sn = jacobi(self.z_scale * y, self.param).sn;
        self.tau.tau1 + (self.tau.tau2 - self.tau.tau1) * sn * sn
    }

    /// Minimal period `b/q` of ρ.
    pub fn rho_period(&self) -> f64 {
        self.point.b / self.params.q as f64
    }

    /// Exact `∂u/∂y`.
    pub fn dy_exact(&self, x: f64, y: f64) -> [Complex64; 2] {
        let pp = self.at(y);
        let i = Complex64::i();
        let e1 = Complex64::from_polar(1.0, pp.theta);
        let e2 = Complex64::from_polar(1.0, 2.0 * PI * x + pp.alpha);
        [
            e1 * (-pp.sin_phi * pp.dphi + i * pp.cos_phi * pp.dtheta),
            e2 * (pp.cos_phi * pp.dphi + i * pp.sin_phi * pp.dalpha),
        ]
    }
}

impl TorusMap for ProfileSet {
    fn lattice(&self) -> ModuliPoint {
        self.point
    }

    fn eval(&self, x: f64, y: f64) -> SpherePoint {
        let pp = self.at(y);
        SpherePoint {
            z1: Complex64::from_polar(pp.cos_phi, pp.theta),
            z2: Complex64::from_polar(pp.sin_phi, 2.0 * PI * x + pp.alpha),
        }
    }

    fn dx(&self, x: f64, y: f64) -> [Complex64; 2] {
        let u = self.eval(x, y);
        [Complex64::new(0.0, 0.0), u.z2 * Complex64::new(0.0, 2.0 * PI)]
    }

    fn dxx(&self, x: f64, y: f64) -> [Complex64; 2] {
        let u = self.eval(x, y);
        [Complex64::new(0.0, 0.0), u.z2 * (-4.0 * PI * PI)]
    }

    fn energy_density(&self, _x: f64, y: f64) -> f64 {
        self.rho(y)
    }
}

/// Profiles of `u^{p,q,r}_{a,b}` from a triple returned by the τ-solver.
pub fn build_profiles(tau: &TauTriple, params: &MapParams, point: &ModuliPoint) -> Result<ProfileSet> {
    if params.regime() == Regime::CircleFamily {
        return Err(Error::Domain("circle-family parameters: use build_circle_map".into()));
    }
    let param = tau.param();
    let k = tau.k();
    let th = &tau.theta_char;
    let theta = (tau.c != 0.0 && th.below_one > 0.0).then(|| ThirdKind {
        big_n: th.big_n,
        below_one: th.below_one,
        w: (th.below_one * th.above_m / th.big_n).sqrt(),
        rho: Some((th.above_m * th.big_n / th.below_one).sqrt()),
        half: phi_theta(th, param, k),
    });
    let al = &tau.alpha_char;
    let alpha = (tau.d != 0.0 && al.below_one > 0.0 && al.above_m > 0.0).then(|| ThirdKind {
        big_n: al.big_n,
        below_one: al.below_one,
        w: (al.below_one * al.above_m / al.big_n).sqrt(),
        rho: None,
        half: phi_split(al, param, k),
    });
    Ok(ProfileSet {
        tau: tau.clone(),
        params: *params,
        point: *point,
        param,
        k,
        z_scale: 2.0 * PI * (tau.tau3 - tau.tau1).sqrt(),
        theta,
        alpha,
    })
}

/// The Hopf differential `⟨∂_z u, ∂_z u⟩ = H_re + i H_im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfConstants {
    pub h_re: f64,
    pub h_im: f64,
}

/// Closed form `H_re = π² - A/4`, `H_im = -πd`.
pub fn hopf_constants(profiles: &ProfileSet) -> HopfConstants {
    HopfConstants { h_re: PI * PI - profiles.tau.a_const / 4.0, h_im: -PI * profiles.tau.d }
}

/// Hopf differential sampled from its definition,
/// `4H = |∂_x u|² - |∂_y u|² - 2i⟨∂_x u, ∂_y u⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfSample {
    pub mean: HopfConstants,
    /// Largest deviation of a sample from the mean, over both parts.
    pub max_dev: f64,
    pub stdev: f64,
}

pub fn hopf_sampled<M: TorusMap + ?Sized>(map: &M, nx: usize, ny: usize) -> HopfSample {
    let lat = map.lattice();
    let mut vals = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let x = i as f64 / nx as f64;
            let y = lat.b * j as f64 / ny as f64;
            let (ux, uy) = (map.dx(x, y), map.dy(x, y));
            let re = 0.25 * (real_dot(&ux, &ux) - real_dot(&uy, &uy));
            let im = -0.5 * real_dot(&ux, &uy);
            vals.push((re, im));
        }
    }
    let n = vals.len() as f64;
    let mre = vals.iter().map(|v| v.0).sum::<f64>() / n;
    let mim = vals.iter().map(|v| v.1).sum::<f64>() / n;
    let max_dev = vals.iter().map(|v| (v.0 - mre).abs().max((v.1 - mim).abs())).fold(0.0, f64::max);
    let var = vals.iter().map(|v| (v.0 - mre).powi(2) + (v.1 - mim).powi(2)).sum::<f64>() / n;
    HopfSample { mean: HopfConstants { h_re: mre, h_im: mim }, max_dev, stdev: var.sqrt() }
}

/// The homogeneous maps `(cos φ₀ e^{2πi py/b}, sin φ₀ e^{2πi(bx - (r+a)y)/b})`,
/// harmonic exactly when `(r + a)² + b² = p²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleMap {
    pub point: ModuliPoint,
    pub p: u32,
    pub r: i32,
    pub phi0: f64,
}

impl CircleMap {
    fn freq1(&self) -> f64 {
        2.0 * PI * self.p as f64 / self.point.b
    }

    fn freq2_y(&self) -> f64 {
        -2.0 * PI * (self.r as f64 + self.point.a) / self.point.b
    }

    /// `(2π²/b²)(p² cos²φ₀ + (b² + (r + a)²) sin²φ₀)`.
    pub fn energy(&self) -> f64 {
        let (b, ra, p) = (self.point.b, self.r as f64 + self.point.a, self.p as f64);
        let (s, c) = self.phi0.sin_cos();
        2.0 * PI * PI / (b * b) * (p * p * c * c + (b * b + ra * ra) * s * s)
    }
}

pub fn build_circle_map(point: &ModuliPoint, p: u32, r: i32, phi0: f64) -> Result<CircleMap> {
    let ra = r as f64 + point.a;
    let p2 = (p as f64).powi(2);
    let gap = ra * ra + point.b * point.b - p2;
    if gap.abs() > 1e-9 * p2.max(1.0) {
        return Err(Error::Domain(format!("(r+a)^2+b^2 = p^2 required, off by {gap:e}")));
    }
    if !(0.0..=0.5 * PI).contains(&phi0) {
        return Err(Error::Domain(format!("φ₀ must lie in [0, π/2], got {phi0}")));
    }
    Ok(CircleMap { point: *point, p, r, phi0 })
}

impl TorusMap for CircleMap {
    fn lattice(&self) -> ModuliPoint {
        self.point
    }

    fn eval(&self, x: f64, y: f64) -> SpherePoint {
        let (s, c) = self.phi0.sin_cos();
        SpherePoint {
            z1: Complex64::from_polar(c, self.freq1() * y),
            z2: Complex64::from_polar(s, 2.0 * PI * x + self.freq2_y() * y),
        }
    }

    fn dx(&self, x: f64, y: f64) -> [Complex64; 2] {
        let u = self.eval(x, y);
        [Complex64::new(0.0, 0.0), u.z2 * Complex64::new(0.0, 2.0 * PI)]
    }

    fn dxx(&self, x: f64, y: f64) -> [Complex64; 2] {
        let u = self.eval(x, y);
        [Complex64::new(0.0, 0.0), u.z2 * (-4.0 * PI * PI)]
    }

    fn energy_density(&self, _x: f64, _y: f64) -> f64 {
        self.energy()
    }

    fn dy(&self, x: f64, y: f64) -> [Complex64; 2] {
        let u = self.eval(x, y);
        [u.z1 * Complex64::new(0.0, self.freq1()), u.z2 * Complex64::new(0.0, self.freq2_y())]
    }

    /// Exact: both components are trigonometric.
    fn laplacian(&self, x: f64, y: f64) -> [Complex64; 2] {
        let u = self.eval(x, y);
        let f2 = 4.0 * PI * PI + self.freq2_y().powi(2);
        [u.z1 * -self.freq1().powi(2), u.z2 * -f2]
    }
}

/// One vertex of a sampled mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshVertex {
    pub x: f64,
    pub y: f64,
    pub u: SpherePoint,
}

impl MeshVertex {
    /// `[x, y, Re z₁, Im z₁, Re z₂, Im z₂]`.
    pub fn fields(&self) -> [f64; 6] {
        [self.x, self.y, self.u.z1.re, self.u.z1.im, self.u.z2.re, self.u.z2.im]
    }
}

/// Samples the map on the `nx × ny` grid of `[0, 1) × [0, b)`, row-major in y.
pub fn mesh<M: TorusMap + ?Sized>(map: &M, nx: usize, ny: usize) -> Vec<MeshVertex> {
    let b = map.lattice().b;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = b * j as f64 / ny as f64;
        for i in 0..nx {
            let x = i as f64 / nx as f64;
            out.push(MeshVertex { x, y, u: map.eval(x, y) });
        }
    }
    out
}

/// Formats a float with 17 significant digits, as a valid JSON/CSV number.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0.0000000000000000e0".into();
    }
    format!("{v:.16e}")
}

/// Writes vertices as JSON lines with keys x, y, re_z1, im_z1, re_z2, im_z2.
pub fn write_mesh_jsonl<W: Write>(mut w: W, vertices: &[MeshVertex]) -> std::io::Result<()> {
    const KEYS: [&str; 6] = ["x", "y", "re_z1", "im_z1", "re_z2", "im_z2"];
    for v in vertices {
        let body: Vec<String> = KEYS.iter().zip(v.fields()).map(|(k, f)| format!("\"{k}\":{}", fmt_f64(f))).collect();
        writeln!(w, "{{{}}}", body.join(","))?;
    }
    Ok(())
}
