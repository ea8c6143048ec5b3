/// Numerical tolerances shared by the solvers. `scaled` multiplies all of them,
/// which is how the command line applies a global override.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance of bracketed root solves.
    pub solver: f64,
    /// Relative tolerance of adaptive quadrature.
    pub quadrature: f64,
    /// Local error tolerance of the ODE integrator.
    pub ode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { solver: 1e-15, quadrature: 1e-13, ode: 1e-12 }
    }
}

impl Tolerances {
    pub fn scaled(self, factor: f64) -> Self {
        Tolerances {
            solver: self.solver * factor,
            quadrature: self.quadrature * factor,
            ode: self.ode * factor,
        }
    }
}
