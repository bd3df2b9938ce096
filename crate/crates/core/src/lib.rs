//! Monte Carlo standard errors for Markov chain output.
//!
//! The central object is an estimate of the asymptotic covariance Σ in the
//! Markov chain central limit theorem, computed from an `n × p`
//! [`SampleMatrix`] by batch means, spectral variance or initial sequence
//! estimators, optionally with a lugsail bias adjustment. On top of Σ the
//! crate provides standard errors, confidence regions, multivariate
//! effective sample size, a fixed-volume stopping rule, and simultaneous
//! intervals for mixed mean/quantile targets.
//!
//! ```
//! use mcse::{EstimatorSpec, SampleMatrix, LugsailConfig};
//!
//! let s = SampleMatrix::from_series(&[1.0, 2.0, 3.0, 4.0]).unwrap();
//! let sigma = EstimatorSpec::batch_means().with_batch_size(2).estimate(&s).unwrap();
//! assert_eq!(sigma.scalar(), 4.0);
//! # let _ = LugsailConfig::over();
//! ```

pub mod batch;
pub mod chain;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod initseq;
pub mod linalg;
pub mod mvn;
pub mod quantiles;
pub mod spectral;

pub use batch::{BatchConfig, BatchRule, LugsailConfig, LugsailRegime};
pub use chain::{lag_covariance, mean_vector, sample_covariance, LagCovariance, SampleMatrix};
pub use diagnostics::{StoppingConfig, StoppingDecision};
pub use error::{Error, Result};
pub use estimate::{EstimatorSpec, Family, LrvEstimate, LugsailChoice, Method, MethodInfo};
pub use quantiles::{JointEstimate, SimultaneousRegion, TargetKind, TargetSpec};
pub use spectral::LagWindow;
