//! Active polynomial regression under the ℓ_p norm.
//!
//! The crate samples query points from the Chebyshev density (or its clipped
//! variant), reweights the regression rows, and solves the resulting
//! discrete ℓ_p problem. Alongside the fitting pipelines it provides the
//! leverage, Lewis-weight and sensitivity computations behind the sampling
//! choices, and a [`verify`] harness that checks their predicted bounds
//! numerically.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases fix `f64`.

pub mod active;
pub mod error;
pub mod linalg;
pub mod lpsolve;
pub mod measures;
pub mod orthopoly;
pub mod quadrature;
pub mod scalar;
pub mod verify;
pub mod weights;

pub use active::{FitReport, FunctionOracle, Oracle, OracleKind};
pub use error::{Error, Result};
pub use lpsolve::{RegressionProblem, SolveOptions, SolveResult};
pub use measures::{MeasureKind, MeasureSpec, SampleSet};
pub use orthopoly::{BasisKind, PolyCoeffs};
pub use scalar::Scalar;
pub use weights::{DesignMatrix, WeightKind, WeightVector};

pub type Mat64 = linalg::Mat<f64>;
pub type PolyCoeffs64 = PolyCoeffs<f64>;
pub type BasisKind64 = BasisKind<f64>;
pub type MeasureSpec64 = MeasureSpec<f64>;
pub type SampleSet64 = SampleSet<f64>;
pub type DesignMatrix64 = DesignMatrix<f64>;
pub type WeightVector64 = WeightVector<f64>;
pub type RegressionProblem64 = RegressionProblem<f64>;
pub type SolveResult64 = SolveResult<f64>;
pub type FitReport64 = FitReport<f64>;
pub type FunctionOracle64 = FunctionOracle<f64>;
pub type RatioReport64 = verify::RatioReport<f64>;
pub type SensitivityReport64 = verify::SensitivityReport<f64>;
