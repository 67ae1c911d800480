//! Forecasting with stationary Gaussian pairwise Markov models (PMM).
//!
//! A PMM treats the pair `Z_n = (X_n, Y_n)` as a joint Markov chain, where
//! `X` is the hidden series to forecast and `Y` is the observed one. Under
//! stationarity with zero means and unit variances the whole model is fixed
//! by five correlations `(a, b, c, d, e)`; the classic hidden Markov model
//! (HMM) is the special case `c = ab²`, `d = e = ab`.
//!
//! The crate provides:
//!
//! - [`model`]: parameter containers, validation and the Markov form
//!   `Z_{n+1} = A Z_n + B W_{n+1}`.
//! - [`filter`]: the exact pairwise Kalman filter for `E[X_n | Y_1:n]`.
//! - [`forecast`]: `k`-step predictive mean and variance.
//! - [`error_analysis`]: exact theoretical MSE of the optimal PMM forecaster
//!   and of a misspecified HMM forecaster when the data follow a PMM.
//! - [`simulate`]: reproducible trajectory sampling and Monte Carlo MSE.
//! - [`pipeline`]: harmonic detrending, standardization, empirical
//!   parameter estimation and sliding-window evaluation on real series.
//! - [`oracle`]: brute-force Gaussian conditioning on the explicit joint
//!   covariance, used as ground truth on small instances.
//! - [`cli`]: the `pmm` command-line tool.

pub mod cli;
pub mod error;
pub mod error_analysis;
pub mod filter;
pub mod forecast;
pub mod io;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod simulate;

pub use error::{Error, Result};
pub use error_analysis::{
    filter_coefficients, forecast_coefficients, mse_sweep, observation_covariance,
    theoretical_mse_hmm_under_pmm, theoretical_mse_pmm, CoefficientVector, ModelLabel, MseCurve,
    ObservationCovariance, SweepAxis,
};
pub use filter::FilterState;
pub use forecast::{forecast, forecast_mean, forecast_variance, ForecastResult};
pub use model::{
    MatrixPowerCoeffs, PmmParams, StationaryBlockCovariance, TransitionModel, ValidationReport,
};
pub use pipeline::{DetrendModel, FittedModel, StandardizationParams};
pub use simulate::{monte_carlo_mse, sample, MonteCarloEstimate, Trajectory};
