//! Exact theoretical MSE of PMM and HMM forecasters when the data follow a
//! PMM.
//!
//! Both forecasters are linear in the observations, `Σᵢ αᵢ Yᵢ`. The PMM
//! forecaster under the true model is the orthogonal projection of
//! `X_{n+k}` onto `span(Y_1..Y_n)`, so any other linear forecaster `β` pays
//!
//! ```text
//! MSE(β) = MSE_PMM + δᵀ Σ_Y δ,   δ = α_PMM − β,
//! ```
//!
//! with `Σ_Y[i, j] = E[Yᵢ Yⱼ] = b·α₃,|i−j| + α₄,|i−j|` (unit diagonal).

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::{variance_trace, Prediction};
use crate::io::format_number;
use crate::model::{PmmParams, TransitionModel, HMM_TOL};

/// Weights `αᵢ` of a linear forecaster `Σᵢ αᵢ Yᵢ` of `X_{n+horizon}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientVector {
    pub n: usize,
    pub horizon: usize,
    pub weights: Vec<f64>,
}

impl CoefficientVector {
    pub fn apply(&self, ys: &[f64]) -> f64 {
        self.weights.iter().zip(ys).map(|(w, y)| w * y).sum()
    }
}

/// Coefficients of `E[X_n | Y_1:n]`, built by the gain recursion:
/// older weights are damped by `α₁ − α₃G`, the previous-step weight also
/// receives `α₂ − α₄G`, and the newest observation gets `G`.
pub fn filter_coefficients(model: &TransitionModel, n: usize) -> Result<CoefficientVector> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "need at least one observation".into(),
        ));
    }
    let t = &model.transition;
    let (a1, a2, a3, a4) = (t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]);
    let b = model.b();
    let mut weights = Vec::with_capacity(n);
    weights.push(b);
    let mut variance = 1.0 - b * b;
    for _ in 1..n {
        let pred = Prediction::from_variance(model, variance)?;
        let g = pred.gain();
        let damping = a1 - a3 * g;
        for w in weights.iter_mut() {
            *w *= damping;
        }
        if let Some(last) = weights.last_mut() {
            *last += a2 - a4 * g;
        }
        weights.push(g);
        variance = pred.posterior_variance();
    }
    Ok(CoefficientVector {
        n,
        horizon: 0,
        weights,
    })
}

/// Coefficients of `E[X_{n+k} | Y_1:n]`: filter weights scaled by `α₁,ₖ`,
/// with `α₂,ₖ` added to the weight of `Y_n`. `k = 0` gives the filter.
pub fn forecast_coefficients(
    model: &TransitionModel,
    n: usize,
    k: usize,
) -> Result<CoefficientVector> {
    let mut c = filter_coefficients(model, n)?;
    let p = model.power(k);
    for w in c.weights.iter_mut() {
        *w *= p.x_from_x;
    }
    if let Some(last) = c.weights.last_mut() {
        *last += p.x_from_y;
    }
    c.horizon = k;
    Ok(c)
}

/// `E[Yᵢ Yⱼ]` for `1 ≤ i, j ≤ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationCovariance {
    pub n: usize,
    pub matrix: DMatrix<f64>,
}

impl ObservationCovariance {
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, vi) in v.iter().enumerate() {
            let row: f64 = v
                .iter()
                .enumerate()
                .map(|(j, vj)| self.matrix[(i, j)] * vj)
                .sum();
            acc += vi * row;
        }
        acc
    }
}

pub fn observation_covariance(model: &TransitionModel, n: usize) -> ObservationCovariance {
    let b = model.b();
    let powers = model.powers(n.saturating_sub(1));
    let lag_cov: Vec<f64> = powers
        .iter()
        .enumerate()
        .map(|(lag, p)| {
            if lag == 0 {
                1.0
            } else {
                b * p[(1, 0)] + p[(1, 1)]
            }
        })
        .collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| lag_cov[i.abs_diff(j)]);
    ObservationCovariance { n, matrix }
}

/// `V[X_{n+k} | Y_1:n]` under `p`: the filter variance for `k = 0`, the
/// propagated predictive variance otherwise.
pub fn theoretical_mse_pmm(p: &PmmParams, n: usize, k: usize) -> Result<f64> {
    let model = p.markov_form()?;
    pmm_mse_for_model(&model, n, k)
}

fn pmm_mse_for_model(model: &TransitionModel, n: usize, k: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "need at least one observation".into(),
        ));
    }
    let p_n = *variance_trace(model, n)?
        .last()
        .expect("trace has n >= 1 entries");
    let t = &model.transition;
    let mut s = nalgebra::Matrix2::new(p_n, 0.0, 0.0, 0.0);
    for _ in 0..k {
        s = t * s * t.transpose() + model.noise_cov;
    }
    Ok(s[(0, 0)])
}

/// Both theoretical MSEs at one `(n, k)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MsePair {
    pub pmm: f64,
    pub hmm: f64,
    /// `δᵀ Σ_Y δ`, the excess paid by the HMM forecaster.
    pub excess: f64,
}

/// Theoretical MSE when the data follow `p_true` and the forecaster is the
/// optimal filter of the HMM `p_hmm` (using its own variance recursion).
pub fn theoretical_mse_pair(
    p_true: &PmmParams,
    p_hmm: &PmmParams,
    n: usize,
    k: usize,
) -> Result<MsePair> {
    if !p_hmm.is_hmm(HMM_TOL) {
        return Err(Error::NotHmm);
    }
    let truth = p_true.markov_form()?;
    let hmm = p_hmm.markov_form()?;
    let pmm = pmm_mse_for_model(&truth, n, k)?;
    let a = forecast_coefficients(&truth, n, k)?;
    let h = forecast_coefficients(&hmm, n, k)?;
    let delta: Vec<f64> = a.weights.iter().zip(&h.weights).map(|(x, y)| x - y).collect();
    let excess = observation_covariance(&truth, n).quadratic_form(&delta);
    Ok(MsePair {
        pmm,
        hmm: pmm + excess,
        excess,
    })
}

pub fn theoretical_mse_hmm_under_pmm(
    p_true: &PmmParams,
    p_hmm: &PmmParams,
    n: usize,
    k: usize,
) -> Result<f64> {
    theoretical_mse_pair(p_true, p_hmm, n, k).map(|m| m.hmm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelLabel {
    Pmm,
    Hmm,
}

impl fmt::Display for ModelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelLabel::Pmm => write!(f, "PMM"),
            ModelLabel::Hmm => write!(f, "HMM"),
        }
    }
}

/// Which coordinate varies along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    /// One curve per `k`, indexed by `n`.
    N,
    /// One curve per `n`, indexed by `k`.
    K,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseCurve {
    pub model_label: ModelLabel,
    pub sweep: SweepAxis,
    /// Value of the coordinate held fixed along the curve.
    pub fixed: usize,
    pub points: Vec<(usize, f64)>,
}

impl MseCurve {
    /// Label for the `sweep` CSV column, e.g. `n@k=0` or `k@n=5`.
    pub fn sweep_label(&self) -> String {
        match self.sweep {
            SweepAxis::N => format!("n@k={}", self.fixed),
            SweepAxis::K => format!("k@n={}", self.fixed),
        }
    }
}

/// Evaluates both theoretical MSEs over a grid. Points are computed in
/// parallel; output order is deterministic (PMM then HMM per fixed value).
pub fn mse_sweep(
    p_true: &PmmParams,
    p_hmm: &PmmParams,
    axis: SweepAxis,
    n_values: &[usize],
    k_values: &[usize],
) -> Result<Vec<MseCurve>> {
    if n_values.is_empty() || k_values.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let (fixed_values, swept) = match axis {
        SweepAxis::N => (k_values, n_values),
        SweepAxis::K => (n_values, k_values),
    };
    let mut curves = Vec::with_capacity(2 * fixed_values.len());
    for &fixed in fixed_values {
        let pairs: Vec<(usize, MsePair)> = swept
            .par_iter()
            .map(|&idx| {
                let (n, k) = match axis {
                    SweepAxis::N => (idx, fixed),
                    SweepAxis::K => (fixed, idx),
                };
                theoretical_mse_pair(p_true, p_hmm, n, k).map(|m| (idx, m))
            })
            .collect::<Result<_>>()?;
        for label in [ModelLabel::Pmm, ModelLabel::Hmm] {
            curves.push(MseCurve {
                model_label: label,
                sweep: axis,
                fixed,
                points: pairs
                    .iter()
                    .map(|(i, m)| {
                        let v = match label {
                            ModelLabel::Pmm => m.pmm,
                            ModelLabel::Hmm => m.hmm,
                        };
                        (*i, v)
                    })
                    .collect(),
            });
        }
    }
    Ok(curves)
}

/// Writes curves as CSV with header `model,sweep,index,mse`.
pub fn write_curves_csv<W: Write>(curves: &[MseCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "sweep", "index", "mse"])?;
    for c in curves {
        let label = c.model_label.to_string();
        let sweep = c.sweep_label();
        for (idx, mse) in &c.points {
            w.write_record([
                label.as_str(),
                sweep.as_str(),
                &idx.to_string(),
                &format_number(*mse),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
