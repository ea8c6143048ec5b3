//! S¹-equivariant harmonic maps from flat tori into S³, the critical metrics
//! they induce, and numerical diagnostics for their spectra and stability.
//!
//! The map `u(x, y) = (cos φ(y) e^{iθ(y)}, sin φ(y) e^{i(2πx + α(y))})` on the
//! torus with lattice `Z(1,0) + Z(a,b)` is fixed by three integers `(p, q, r)`
//! and a triple `τ₁ ≤ τ₂ ≤ 1 ≤ τ₃` solved from three elliptic-integral
//! conditions. Everything downstream (profiles, energy density, eigenvalue
//! counts, functional values) is derived from that triple.

pub mod elliptic;
pub mod exec;
pub mod functional;
pub mod map_builder;
pub mod moduli;
pub mod ode;
pub mod otsuki;
pub mod quad;
pub mod roots;
pub mod spectral;
pub mod stability;
pub mod tau_solver;

mod error;
mod tolerances;

pub use error::{Error, Result};
pub use exec::Execution;
pub use moduli::{AClass, MapParams, ModuliPoint, Rational, Regime};
pub use tau_solver::{solve_tau, TauTriple};
pub use tolerances::Tolerances;
