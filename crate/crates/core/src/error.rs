use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    /// The integers (p, q, r) are incompatible with the lattice; the message
    /// names the violated inequality.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("root not bracketed on [{lo}, {hi}] (f = {flo}, {fhi})")]
    NotBracketed { lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
