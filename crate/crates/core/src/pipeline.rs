//! Real-data workflow: harmonic detrending of the observed series,
//! standardization, empirical estimation of `(a, b, c, d, e)` and
//! sliding-window evaluation of the standardized forecast MSE.
//!
//! The seasonal component of `Y` is
//!
//! ```text
//! f(i) = θ₀ + θ₁ cos(2πi/p₁) + θ₂ sin(2πi/p₁) + θ₃ cos(2πi/p₂) + θ₄ sin(2πi/p₂)
//! ```
//!
//! with `i` the 1-based sample index. The weighting `W = I/σ` of the
//! weighted normal equations is a scalar multiple of the identity and does
//! not change `θ`; the fit is an ordinary least-squares solve (by SVD of the
//! design matrix), and `σ` is stored for reference only.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterState;
use crate::model::{MatrixPowerCoeffs, PmmParams, TransitionModel};

pub const DEFAULT_PERIODS: [f64; 2] = [24.0, 8772.0];
/// Minimum fitting-window length for parameter estimation.
pub const MIN_ESTIMATION_LEN: usize = 30;
/// Bisection tolerance on the shrinkage factor used to repair estimates.
pub const REPAIR_TOL: f64 = 1e-6;
/// Reciprocal condition number below which the design matrix is rank deficient.
const RCOND_MIN: f64 = 1e-12;
const EVAL_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetrendModel {
    /// `(θ₀, …, θ₄)` for columns `(1, cos p₁, sin p₁, cos p₂, sin p₂)`.
    pub theta: [f64; 5],
    pub periods: [f64; 2],
    /// Empirical variance of the fitted series.
    pub sigma: f64,
}

fn design_row(i: usize, periods: &[f64; 2]) -> [f64; 5] {
    let t = i as f64;
    let w1 = 2.0 * PI * t / periods[0];
    let w2 = 2.0 * PI * t / periods[1];
    [1.0, w1.cos(), w1.sin(), w2.cos(), w2.sin()]
}

impl DetrendModel {
    /// Seasonal component at 1-based index `i`.
    pub fn value(&self, i: usize) -> f64 {
        design_row(i, &self.periods)
            .iter()
            .zip(&self.theta)
            .map(|(j, t)| j * t)
            .sum()
    }

    /// `y − f` with `y[0]` at index `first_index`.
    pub fn apply(&self, y: &[f64], first_index: usize) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(o, v)| v - self.value(first_index + o))
            .collect()
    }

    /// `residual + f`.
    pub fn restore(&self, residual: &[f64], first_index: usize) -> Vec<f64> {
        residual
            .iter()
            .enumerate()
            .map(|(o, v)| v + self.value(first_index + o))
            .collect()
    }
}

/// Least-squares fit of the two-harmonic seasonal model to `y`, indexed `1..=N`.
pub fn fit_detrend(y: &[f64], periods: [f64; 2]) -> Result<DetrendModel> {
    if y.len() <= 5 {
        return Err(Error::InsufficientData(format!(
            "detrending needs more than 5 samples, got {}",
            y.len()
        )));
    }
    if periods.iter().any(|p| !p.is_finite() || *p <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "periods must be greater than 1, got {periods:?}"
        )));
    }
    let n = y.len();
    let j = DMatrix::from_fn(n, 5, |r, c| design_row(r + 1, &periods)[c]);
    let svd = j.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if rcond < RCOND_MIN {
        return Err(Error::RankDeficient(rcond));
    }
    let rhs = DVector::from_column_slice(y);
    let theta = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::RankDeficient(rcond))?;
    let mean = y.iter().sum::<f64>() / n as f64;
    let sigma = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(DetrendModel {
        theta: [theta[0], theta[1], theta[2], theta[3], theta[4]],
        periods,
        sigma,
    })
}

/// Subtracts the fitted seasonal component, indexing from 1.
pub fn detrend(y: &[f64], d: &DetrendModel) -> Vec<f64> {
    d.apply(y, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: f64,
    pub std: f64,
}

impl StandardizationParams {
    /// Sample mean and `1/(N−1)` standard deviation.
    pub fn fit(v: &[f64]) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::InsufficientData(
                "standardization needs at least 2 samples".into(),
            ));
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        if std.is_nan() || std <= 1e-12 * mean.abs().max(1.0) {
            return Err(Error::ZeroVariance);
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| (x - self.mean) / self.std).collect()
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Lag-0/lag-1 covariances of already standardized series, each sum divided
/// by `N − 1`.
fn lagged_covariances(x: &[f64], y: &[f64]) -> PmmParams {
    let n = x.len();
    let denom = (n - 1) as f64;
    let lag = |u: &[f64], v: &[f64]| -> f64 {
        u[..n - 1].iter().zip(&v[1..]).map(|(p, q)| p * q).sum::<f64>() / denom
    };
    let b = x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() / denom;
    PmmParams {
        a: lag(x, x),
        b,
        c: lag(y, y),
        d: lag(x, y),
        e: lag(y, x),
    }
}

/// Standardizes both series and returns their empirical `(a, b, c, d, e)`.
pub fn empirical_params(x: &[f64], y: &[f64]) -> Result<PmmParams> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let xs = StandardizationParams::fit(x)?.apply(x);
    let ys = StandardizationParams::fit(y)?.apply(y);
    Ok(lagged_covariances(&xs, &ys))
}

/// Parameters and preprocessing fitted on a window of a paired series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub params: PmmParams,
    pub detrend: Option<DetrendModel>,
    pub x_standardize: StandardizationParams,
    pub y_standardize: StandardizationParams,
    /// Half-open `[start, end)` row range (0-based) used for estimation.
    #[serde(default)]
    pub fit_window: (usize, usize),
    pub repaired: bool,
    /// Shrinkage factor applied when `repaired` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_factor: Option<f64>,
}

/// Largest `λ ∈ [0, 1]` (to within `REPAIR_TOL`) such that `λ·p` is admissible.
pub fn repair_params(p: &PmmParams) -> (PmmParams, Option<f64>) {
    if p.validate().is_valid() {
        return (*p, None);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > REPAIR_TOL {
        let mid = 0.5 * (lo + hi);
        if p.scaled(mid).validate().is_valid() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (p.scaled(lo), Some(lo))
}

/// Estimates a model from aligned series (no detrending).
pub fn estimate_params(x: &[f64], y: &[f64]) -> Result<FittedModel> {
    estimate_inner(x, y, None, (0, x.len()))
}

fn estimate_inner(
    x: &[f64],
    y: &[f64],
    detrend: Option<DetrendModel>,
    window: (usize, usize),
) -> Result<FittedModel> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MIN_ESTIMATION_LEN {
        return Err(Error::InsufficientData(format!(
            "estimation needs at least {MIN_ESTIMATION_LEN} samples, got {}",
            x.len()
        )));
    }
    let x_standardize = StandardizationParams::fit(x)?;
    let y_standardize = StandardizationParams::fit(y)?;
    let raw = lagged_covariances(&x_standardize.apply(x), &y_standardize.apply(y));
    let (params, repair_factor) = repair_params(&raw);
    if let Some(f) = repair_factor {
        log::warn!("estimated parameters inadmissible; shrunk by factor {f}");
    }
    Ok(FittedModel {
        params,
        detrend,
        x_standardize,
        y_standardize,
        fit_window: window,
        repaired: repair_factor.is_some(),
        repair_factor,
    })
}

/// Full fitting workflow on a paired series: optionally detrend `y` over
/// the whole series, then standardize and estimate on `window`.
pub fn fit_series(
    x: &[f64],
    y: &[f64],
    window: (usize, usize),
    detrend_periods: Option<[f64; 2]>,
) -> Result<FittedModel> {
    let (start, end) = window;
    if start >= end || end > x.len() || x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "fit window {start}..{end} is not within a series of length {}",
            x.len().min(y.len())
        )));
    }
    let (y_work, detrend) = match detrend_periods {
        Some(periods) => {
            let d = fit_detrend(y, periods)?;
            (d.apply(y, 1), Some(d))
        }
        None => (y.to_vec(), None),
    };
    estimate_inner(&x[start..end], &y_work[start..end], detrend, window)
}

impl FittedModel {
    pub fn transition(&self) -> Result<TransitionModel> {
        self.params.markov_form()
    }

    /// The HMM built from the fitted `(a, b)`, sharing all preprocessing.
    pub fn hmm_restriction(&self) -> Result<Self> {
        Ok(Self {
            params: self.params.hmm_restriction()?,
            repaired: false,
            repair_factor: None,
            ..self.clone()
        })
    }

    /// Detrends (if fitted) and standardizes raw series whose first sample
    /// sits at 1-based index `first_index` of the original series.
    pub fn prepare(&self, x: &[f64], y: &[f64], first_index: usize) -> (Vec<f64>, Vec<f64>) {
        let y = match &self.detrend {
            Some(d) => d.apply(y, first_index),
            None => y.to_vec(),
        };
        (self.x_standardize.apply(x), self.y_standardize.apply(&y))
    }

    pub fn prepare_y(&self, y: &[f64], first_index: usize) -> Vec<f64> {
        let y = match &self.detrend {
            Some(d) => d.apply(y, first_index),
            None => y.to_vec(),
        };
        self.y_standardize.apply(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub mse: f64,
    /// Batch-means standard error (windows overlap, so squared errors are
    /// serially correlated).
    pub stderr: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub n: usize,
    pub k: usize,
    pub mse_pmm: f64,
    pub mse_hmm: f64,
    /// Batch-means standard error of `mse_hmm − mse_pmm`.
    pub diff_stderr: f64,
    pub windows: usize,
}

/// Squared standardized errors for every window: the window starting at
/// `s` filters `Y_s..Y_{s+n−1}` and forecasts `X_{s+n−1+k}`. Windows slide
/// by one sample.
fn window_errors(
    model: &TransitionModel,
    xs: &[f64],
    ys: &[f64],
    n: usize,
    k: usize,
) -> Result<Vec<f64>> {
    let power = model.power(k);
    let span = n + k;
    if n == 0 || xs.len() < span || ys.len() != xs.len() {
        return Err(Error::InsufficientData(format!(
            "need at least n + k = {span} test samples, got {}",
            xs.len()
        )));
    }
    (0..=xs.len() - span)
        .map(|s| {
            let state = FilterState::run(model, &ys[s..s + n])?;
            let err = predict(&power, &state) - xs[s + span - 1];
            Ok(err * err)
        })
        .collect()
}

fn predict(power: &MatrixPowerCoeffs, state: &FilterState) -> f64 {
    power.x_from_x * state.mean + power.x_from_y * state.last_y
}

fn batch_stderr(v: &[f64]) -> f64 {
    let m = v.len();
    if m < 2 {
        return f64::NAN;
    }
    let (groups, size) = if m >= 2 * EVAL_BATCHES {
        (EVAL_BATCHES, m / EVAL_BATCHES)
    } else {
        (m, 1)
    };
    let means: Vec<f64> = (0..groups)
        .map(|g| v[g * size..(g + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let gm = means.iter().sum::<f64>() / groups as f64;
    let var = means.iter().map(|x| (x - gm).powi(2)).sum::<f64>() / (groups - 1) as f64;
    (var / groups as f64).sqrt()
}

/// Standardized MSE of horizon-`k` forecasts from `n` observations over a
/// raw test segment starting at 1-based index `first_index`.
pub fn evaluate(
    model: &FittedModel,
    x_test: &[f64],
    y_test: &[f64],
    first_index: usize,
    n: usize,
    k: usize,
) -> Result<Evaluation> {
    let (xs, ys) = model.prepare(x_test, y_test, first_index);
    let errors = window_errors(&model.transition()?, &xs, &ys, n, k)?;
    let windows = errors.len();
    Ok(Evaluation {
        mse: errors.iter().sum::<f64>() / windows as f64,
        stderr: batch_stderr(&errors),
        windows,
    })
}

/// Evaluates the fitted PMM and its HMM restriction on identical windows.
pub fn compare(
    model: &FittedModel,
    x_test: &[f64],
    y_test: &[f64],
    first_index: usize,
    n: usize,
    k: usize,
) -> Result<Comparison> {
    let (xs, ys) = model.prepare(x_test, y_test, first_index);
    let pmm = window_errors(&model.transition()?, &xs, &ys, n, k)?;
    let hmm = window_errors(&model.hmm_restriction()?.transition()?, &xs, &ys, n, k)?;
    let windows = pmm.len();
    let diffs: Vec<f64> = hmm.iter().zip(&pmm).map(|(h, p)| h - p).collect();
    Ok(Comparison {
        n,
        k,
        mse_pmm: pmm.iter().sum::<f64>() / windows as f64,
        mse_hmm: hmm.iter().sum::<f64>() / windows as f64,
        diff_stderr: batch_stderr(&diffs),
        windows,
    })
}
