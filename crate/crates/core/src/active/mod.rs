//! Active regression: choosing where to query a function or which rows of a
//! design to keep, then solving the reweighted ℓ_p problem.
//!
//! The theoretical guarantees hold for the function the oracle actually
//! computes; for tabulated data that is the piecewise-linear interpolant,
//! not whatever process produced the table.

mod fit;
mod matrix;
mod oracle;

pub use fit::{
    fit_constant_factor, fit_constant_factor_binomial, fit_linf, fit_relative_error, linf_default_p, linf_row_weight,
    second_stage_seed, FitReport,
};
pub use matrix::{
    full_objective, inclusion_probability, matrix_fit_constant, matrix_fit_relative, subsample_rows,
    subsampled_objective_pow, MatrixFit, RowSample,
};
pub use oracle::{lp_error, lp_norm, FunctionOracle, Oracle, OracleKind, Residual};
