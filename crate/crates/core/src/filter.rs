//! Exact pairwise Kalman filter.
//!
//! Because the pair `(X_n, Y_n)` is Markov and `Y_n` is observed, the
//! filtering distribution of the pair given `Y_1:n` is `N((m, Y_n), [[P, 0], [0, 0]])`.
//! One step of the Markov form then gives the joint prediction of
//! `(X_{n+1}, Y_{n+1})`, and conditioning on `Y_{n+1}` is scalar Gaussian
//! conditioning with gain
//!
//! ```text
//! G = (α₁α₃P + β₂) / (α₃²P + β₃)
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::TransitionModel;

/// Smallest admissible predicted observation variance `α₃²P + β₃`.
pub const MIN_INNOVATION_VARIANCE: f64 = 1e-14;

/// `E[X_n | Y_1:n]` and `V[X_n | Y_1:n]` after `n` observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterState {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// `Y_n`; the next prediction needs it because the pair is the Markov state.
    pub last_y: f64,
}

/// Predicted second moments of `(X_{n+1}, Y_{n+1})` given `Y_1:n`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Prediction {
    pub var_x: f64,
    pub cov_xy: f64,
    pub var_y: f64,
}

impl Prediction {
    pub(crate) fn from_variance(model: &TransitionModel, variance: f64) -> Result<Self> {
        let t = &model.transition;
        let q = &model.noise_cov;
        let (a1, a3) = (t[(0, 0)], t[(1, 0)]);
        let pred = Self {
            var_x: a1 * a1 * variance + q[(0, 0)],
            cov_xy: a1 * a3 * variance + q[(0, 1)],
            var_y: a3 * a3 * variance + q[(1, 1)],
        };
        if pred.var_y <= MIN_INNOVATION_VARIANCE || !pred.var_y.is_finite() {
            return Err(Error::DegenerateObservation(pred.var_y));
        }
        Ok(pred)
    }

    pub(crate) fn gain(&self) -> f64 {
        self.cov_xy / self.var_y
    }

    pub(crate) fn posterior_variance(&self) -> f64 {
        let g = self.gain();
        (self.var_x - g * g * self.var_y).max(0.0)
    }
}

impl FilterState {
    /// Conditions `X_1` on `Y_1 = y1` under `(X_1, Y_1) ~ N(0, [[1, b], [b, 1]])`.
    pub fn init(model: &TransitionModel, y1: f64) -> Self {
        let b = model.b();
        Self {
            n: 1,
            mean: b * y1,
            variance: 1.0 - b * b,
            last_y: y1,
        }
    }

    pub fn step(&self, model: &TransitionModel, y_next: f64) -> Result<Self> {
        let pred = Prediction::from_variance(model, self.variance)?;
        let t = &model.transition;
        let g = pred.gain();
        let x_pred = t[(0, 0)] * self.mean + t[(0, 1)] * self.last_y;
        let y_pred = t[(1, 0)] * self.mean + t[(1, 1)] * self.last_y;
        Ok(Self {
            n: self.n + 1,
            mean: x_pred + g * (y_next - y_pred),
            variance: pred.posterior_variance(),
            last_y: y_next,
        })
    }

    /// Filters a whole observation sequence.
    pub fn run(model: &TransitionModel, ys: &[f64]) -> Result<Self> {
        let (first, rest) = ys
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("at least one observation is required".into()))?;
        rest.iter()
            .try_fold(Self::init(model, *first), |s, &y| s.step(model, y))
    }

    /// Filtered state after every prefix `Y_1:1, …, Y_1:n`.
    pub fn trace(model: &TransitionModel, ys: &[f64]) -> Result<Vec<Self>> {
        let mut out = Vec::with_capacity(ys.len());
        let Some((first, rest)) = ys.split_first() else {
            return Ok(out);
        };
        let mut s = Self::init(model, *first);
        out.push(s);
        for &y in rest {
            s = s.step(model, y)?;
            out.push(s);
        }
        Ok(out)
    }
}

/// `V[X_t | Y_1:t]` for `t = 1..=n`. The filter variance does not depend on
/// the observed values.
pub fn variance_trace(model: &TransitionModel, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    let b = model.b();
    let mut p = 1.0 - b * b;
    out.push(p);
    for _ in 1..n {
        p = Prediction::from_variance(model, p)?.posterior_variance();
        out.push(p);
    }
    Ok(out)
}
