//! Gaussian process regression with optional monotonicity constraints.
//!
//! The classical model ([`gp_regression`]) is an exact zero-mean GP with a
//! squared-exponential kernel. The constrained model ([`ep_monotonic`]) adds
//! virtual derivative observations at inducing locations, each carrying a
//! probit likelihood on the sign of the derivative, and approximates the
//! resulting posterior with expectation propagation.
//!
//! Inner loops that are embarrassingly parallel (covariance assembly,
//! batched prediction, optimizer restarts, seed sweeps) go through
//! [`exec::Execution`], which dispatches to rayon when the `parallel`
//! feature is enabled and runs sequentially otherwise.

pub mod bench;
pub mod datasets;
pub mod ep_monotonic;
pub mod error;
pub mod exec;
pub mod gp_regression;
pub mod hyperopt;
pub mod kernel;
pub mod linalg;
pub mod metrics;

pub use error::{GpError, Result};
pub use exec::Execution;
pub use kernel::{DerivativePointSet, Hyperparameters};
