//! `k`-step-ahead predictive mean and variance of the hidden series.
//!
//! By the tower property `E[X_{n+k} | Y_1:n] = α₁,ₖ E[X_n | Y_1:n] + α₂,ₖ Y_n`,
//! where `α·,ₖ` are the entries of `Aᵏ`. The predictive covariance of the
//! pair starts from `S₀ = [[P, 0], [0, 0]]` (`Y_n` is known) and follows
//! `Sⱼ₊₁ = A Sⱼ Aᵀ + Q`. Cost is `O(k)`.

use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::FilterState;
use crate::model::TransitionModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForecastResult {
    pub k: usize,
    pub mean: f64,
    pub variance: f64,
}

/// `E[X_{n+k} | Y_1:n]`. `k = 0` returns the filtered mean.
pub fn forecast_mean(state: &FilterState, model: &TransitionModel, k: usize) -> f64 {
    let p = model.power(k);
    p.x_from_x * state.mean + p.x_from_y * state.last_y
}

/// `V[X_{n+k} | Y_1:n]`. `k = 0` returns the filtered variance.
pub fn forecast_variance(state: &FilterState, model: &TransitionModel, k: usize) -> f64 {
    let mut s = initial_covariance(state);
    for _ in 0..k {
        s = propagate(model, &s);
    }
    s[(0, 0)]
}

pub fn forecast(state: &FilterState, model: &TransitionModel, k: usize) -> Result<ForecastResult> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "forecast horizon must be at least 1".into(),
        ));
    }
    Ok(ForecastResult {
        k,
        mean: forecast_mean(state, model, k),
        variance: forecast_variance(state, model, k),
    })
}

/// Forecasts for every horizon `1..=k` in a single `O(k)` pass.
pub fn forecast_path(
    state: &FilterState,
    model: &TransitionModel,
    k: usize,
) -> Result<Vec<ForecastResult>> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "forecast horizon must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(k);
    let mut cov = initial_covariance(state);
    let mut mean = nalgebra::Vector2::new(state.mean, state.last_y);
    for j in 1..=k {
        cov = propagate(model, &cov);
        mean = model.transition * mean;
        out.push(ForecastResult {
            k: j,
            mean: mean[0],
            variance: cov[(0, 0)],
        });
    }
    Ok(out)
}

fn initial_covariance(state: &FilterState) -> Matrix2<f64> {
    Matrix2::new(state.variance, 0.0, 0.0, 0.0)
}

fn propagate(model: &TransitionModel, s: &Matrix2<f64>) -> Matrix2<f64> {
    model.transition * s * model.transition.transpose() + model.noise_cov
}
