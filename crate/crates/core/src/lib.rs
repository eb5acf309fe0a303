//! Online prediction of observations from an unknown, partially observed
//! linear system driven by Gaussian noise.
//!
//! The learner regresses the next observation on a window of past
//! observations with ridge-regularized least squares, growing the window
//! logarithmically across doubling epochs. The steady-state Kalman filter
//! of the true model serves as the baseline against which regret is
//! measured, and the [`analysis`] module houses the empirical checks of the
//! supporting inequalities (self-normalization, ARMA residual bound,
//! persistency of excitation).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod kalman;
pub mod linalg;
pub mod predictor;
pub mod sysmodel;

pub use error::{Error, Result};

pub use kalman::{FilterRun, KalmanSolution};
pub use linalg::{Matrix, MinimalPolynomial};
pub use predictor::{EpochSchedule, PredictionLog, PredictorState};
pub use sysmodel::{ModelValidation, Preset, StateSpaceModel, Trajectory};
