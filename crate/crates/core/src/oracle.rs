//! Brute-force Gaussian conditioning on the explicit joint covariance of
//! `(X_1..X_{n+k}, Y_1..Y_n)`. Ground truth for the recursive modules on
//! small instances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::PmmParams;

pub const DEFAULT_CAP: usize = 16;

/// Joint covariance over the stacked variables `X_1..X_{n+k}, Y_1..Y_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCovariance {
    pub n: usize,
    pub k: usize,
    pub matrix: DMatrix<f64>,
}

impl JointCovariance {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Position of `X_t` (1-based `t ≤ n + k`).
    pub fn x_index(&self, t: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.n + self.k);
        t - 1
    }

    /// Position of `Y_t` (1-based `t ≤ n`).
    pub fn y_index(&self, t: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.n);
        self.n + self.k + t - 1
    }

    /// Positions of `Y_1..Y_n`.
    pub fn observation_indices(&self) -> Vec<usize> {
        (1..=self.n).map(|t| self.y_index(t)).collect()
    }
}

pub fn build_joint(p: &PmmParams, n: usize, k: usize) -> Result<JointCovariance> {
    build_joint_capped(p, n, k, DEFAULT_CAP)
}

/// Uses `Cov[Z_{i+j}, Z_i] = Aʲ M` for the Markov pair `Z = (X, Y)`.
pub fn build_joint_capped(p: &PmmParams, n: usize, k: usize, cap: usize) -> Result<JointCovariance> {
    let steps = n + k;
    if steps > cap {
        return Err(Error::OracleCapExceeded {
            requested: steps,
            cap,
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let model = p.markov_form()?;
    let lagged: Vec<_> = model
        .powers(steps.saturating_sub(1))
        .into_iter()
        .map(|a| a * model.marginal)
        .collect();
    // Full pair covariance over Z_1..Z_steps, interleaved (X_t, Y_t).
    let full = DMatrix::from_fn(2 * steps, 2 * steps, |r, c| {
        let (ti, vi) = (r / 2, r % 2);
        let (tj, vj) = (c / 2, c % 2);
        if ti >= tj {
            lagged[ti - tj][(vi, vj)]
        } else {
            lagged[tj - ti][(vj, vi)]
        }
    });
    let order: Vec<usize> = (0..steps)
        .map(|t| 2 * t)
        .chain((0..n).map(|t| 2 * t + 1))
        .collect();
    let matrix = full.select_rows(&order).select_columns(&order);
    Ok(JointCovariance { n, k, matrix })
}

/// `E[target | given] = weightsᵀ·given` and the conditional variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub weights: Vec<f64>,
    pub variance: f64,
}

fn blocks(joint: &JointCovariance, target: usize, given: &[usize]) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
    let dim = joint.dim();
    if target >= dim || given.iter().any(|&g| g >= dim || g == target) {
        return Err(Error::InvalidArgument(
            "conditioning indices out of range or overlapping the target".into(),
        ));
    }
    let gg = joint.matrix.select_rows(given).select_columns(given);
    let gt = DVector::from_iterator(given.len(), given.iter().map(|&g| joint.matrix[(g, target)]));
    Ok((gg, gt, joint.matrix[(target, target)]))
}

/// Schur-complement conditioning solved with a Cholesky factorization.
pub fn conditional(joint: &JointCovariance, target: usize, given: &[usize]) -> Result<Conditional> {
    let (gg, gt, tt) = blocks(joint, target, given)?;
    let chol = gg.cholesky().ok_or(Error::SingularConditioning)?;
    let w = chol.solve(&gt);
    Ok(Conditional {
        variance: tt - gt.dot(&w),
        weights: w.iter().copied().collect(),
    })
}

/// Same quantity solved with partial-pivoting LU, for cross-checking.
pub fn conditional_lu(joint: &JointCovariance, target: usize, given: &[usize]) -> Result<Conditional> {
    let (gg, gt, tt) = blocks(joint, target, given)?;
    let w = gg.lu().solve(&gt).ok_or(Error::SingularConditioning)?;
    Ok(Conditional {
        variance: tt - gt.dot(&w),
        weights: w.iter().copied().collect(),
    })
}

/// `E[(target − weightsᵀ·given)²]` for an arbitrary linear predictor.
pub fn linear_predictor_mse(
    joint: &JointCovariance,
    target: usize,
    given: &[usize],
    weights: &[f64],
) -> Result<f64> {
    if weights.len() != given.len() {
        return Err(Error::InvalidArgument("weights/given length mismatch".into()));
    }
    let (gg, gt, tt) = blocks(joint, target, given)?;
    let w = DVector::from_column_slice(weights);
    Ok(tt - 2.0 * w.dot(&gt) + (gg * &w).dot(&w))
}

/// Conditional of `X_{n+k}` given `Y_1..Y_n`.
pub fn forecast_conditional(p: &PmmParams, n: usize, k: usize) -> Result<Conditional> {
    let joint = build_joint(p, n, k)?;
    conditional(&joint, joint.x_index(n + k), &joint.observation_indices())
}
