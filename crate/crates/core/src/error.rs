use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("rank deficient: numerical rank {rank} < {cols} columns")]
    Rank { rank: usize, cols: usize },

    #[error("ill-conditioned computation: {0}")]
    Conditioning(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(value: impl num_traits::ToPrimitive, domain: &'static str) -> Self {
        Error::Domain {
            value: value.to_f64().unwrap_or(f64::NAN),
            domain,
        }
    }
}
