//! Model parameters and the Markov (transition) form.
//!
//! The stationary PMM is described by the 4×4 covariance of
//! `(X_1, Y_1, X_2, Y_2)`:
//!
//! ```text
//!        X1  Y1  X2  Y2
//!  X1 [  1   b   a   d ]
//!  Y1 [  b   1   e   c ]
//!  X2 [  a   e   1   b ]
//!  Y2 [  d   c   b   1 ]
//! ```
//!
//! Equivalently `Z_1 ~ N(0, M)` with `M = [[1, b], [b, 1]]` and
//! `Z_{n+1} = A Z_n + B W_{n+1}` where `A = C M⁻¹`, `BBᵀ = M − C M⁻¹ Cᵀ`
//! and `C = [[a, e], [d, c]]` is the one-step cross covariance
//! `Cov[Z_{n+1}, Z_n]`.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive-definiteness threshold on the smallest eigenvalue of Γ.
pub const PD_EIGEN_TOL: f64 = 1e-10;
/// Margin required below 1 for the spectral radius of `A`.
pub const SPECTRAL_MARGIN: f64 = 1e-9;
/// Negative slack tolerated on the eigenvalues of `BBᵀ` before it is rejected.
pub const PSD_TOL: f64 = 1e-12;
/// Tolerance used when deciding whether a forecaster is an HMM.
pub const HMM_TOL: f64 = 1e-9;

/// The five stationary correlations of a standardized PMM.
///
/// - `a = Cov[X_n, X_{n+1}]`
/// - `b = Cov[X_n, Y_n]`
/// - `c = Cov[Y_n, Y_{n+1}]`
/// - `d = Cov[X_n, Y_{n+1}]`
/// - `e = Cov[X_{n+1}, Y_n]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmmParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl PmmParams {
    pub const fn new(a: f64, b: f64, c: f64, d: f64, e: f64) -> Self {
        Self { a, b, c, d, e }
    }

    /// The HMM with hidden autocorrelation `a` and observation correlation `b`:
    /// `(a, b, ab², ab, ab)`.
    pub fn hmm(a: f64, b: f64) -> Result<Self> {
        check_open_unit("a", a)?;
        check_open_unit("b", b)?;
        Ok(Self::new(a, b, a * b * b, a * b, a * b))
    }

    /// The HMM sharing this model's `a` and `b`.
    pub fn hmm_restriction(&self) -> Result<Self> {
        Self::hmm(self.a, self.b)
    }

    pub fn is_hmm(&self, tol: f64) -> bool {
        let ab = self.a * self.b;
        (self.c - ab * self.b).abs() <= tol
            && (self.d - ab).abs() <= tol
            && (self.e - ab).abs() <= tol
    }

    /// Multiplies all five correlations by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.a * factor,
            self.b * factor,
            self.c * factor,
            self.d * factor,
            self.e * factor,
        )
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.a, self.b, self.c, self.d, self.e]
    }

    pub fn gamma(&self) -> StationaryBlockCovariance {
        let Self { a, b, c, d, e } = *self;
        #[rustfmt::skip]
        let m = Matrix4::new(
            1.0, b,   a,   d,
            b,   1.0, e,   c,
            a,   e,   1.0, b,
            d,   c,   b,   1.0,
        );
        StationaryBlockCovariance(m)
    }

    /// One-step cross covariance `Cov[Z_{n+1}, Z_n] = [[a, e], [d, c]]`.
    pub fn cross_covariance(&self) -> Matrix2<f64> {
        Matrix2::new(self.a, self.e, self.d, self.c)
    }

    pub fn marginal(&self) -> Matrix2<f64> {
        Matrix2::new(1.0, self.b, self.b, 1.0)
    }

    pub fn markov_form(&self) -> Result<TransitionModel> {
        TransitionModel::from_params(self)
    }

    pub fn validate(&self) -> ValidationReport {
        ValidationReport::new(self)
    }
}

fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}

/// Covariance of `(X_1, Y_1, X_2, Y_2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryBlockCovariance(pub Matrix4<f64>);

impl StationaryBlockCovariance {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0).eigenvalues.min()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > PD_EIGEN_TOL
    }
}

/// Markov form of a PMM: `Z_{n+1} = A Z_n + B W_{n+1}` with `Q = BBᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionModel {
    /// `A`, row-major `[[α₁, α₂], [α₃, α₄]]`.
    pub transition: Matrix2<f64>,
    /// `Q = BBᵀ = [[β₁, β₂], [β₂, β₃]]`.
    pub noise_cov: Matrix2<f64>,
    /// Stationary marginal `[[1, b], [b, 1]]` of each pair `Z_n`.
    pub marginal: Matrix2<f64>,
}

impl TransitionModel {
    pub fn from_params(p: &PmmParams) -> Result<Self> {
        check_open_unit("b", p.b)?;
        let marginal = p.marginal();
        let det = 1.0 - p.b * p.b;
        let marginal_inv = Matrix2::new(1.0, -p.b, -p.b, 1.0) / det;
        let cross = p.cross_covariance();
        let transition = cross * marginal_inv;
        let mut noise_cov = marginal - transition * cross.transpose();
        // Exact symmetry; the two off-diagonal entries agree up to rounding.
        let off = 0.5 * (noise_cov[(0, 1)] + noise_cov[(1, 0)]);
        noise_cov[(0, 1)] = off;
        noise_cov[(1, 0)] = off;

        let eig = symmetric_eigenvalues(&noise_cov);
        if eig[0] < -PSD_TOL {
            return Err(Error::NoiseNotPsd(eig));
        }
        Ok(Self {
            transition,
            noise_cov,
            marginal,
        })
    }

    /// Builds the Markov form directly from `A` and `BBᵀ` (used for the
    /// closed-form HMM representation).
    pub fn from_parts(transition: Matrix2<f64>, noise_cov: Matrix2<f64>, b: f64) -> Self {
        Self {
            transition,
            noise_cov,
            marginal: Matrix2::new(1.0, b, b, 1.0),
        }
    }

    pub fn b(&self) -> f64 {
        self.marginal[(0, 1)]
    }

    pub fn power(&self, k: usize) -> MatrixPowerCoeffs {
        let mut acc = Matrix2::identity();
        for _ in 0..k {
            acc *= self.transition;
        }
        MatrixPowerCoeffs::from_matrix(k, &acc)
    }

    /// `[A⁰, A¹, …, A^max_k]`.
    pub fn powers(&self, max_k: usize) -> Vec<Matrix2<f64>> {
        let mut out = Vec::with_capacity(max_k + 1);
        let mut acc = Matrix2::identity();
        out.push(acc);
        for _ in 0..max_k {
            acc *= self.transition;
            out.push(acc);
        }
        out
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.transition)
    }

    pub fn noise_eigenvalues(&self) -> [f64; 2] {
        symmetric_eigenvalues(&self.noise_cov)
    }

    /// `A M Aᵀ + Q − M`; zero for a stationary model.
    pub fn stationarity_residual(&self) -> Matrix2<f64> {
        self.transition * self.marginal * self.transition.transpose() + self.noise_cov
            - self.marginal
    }

    /// Lower-triangular `B` with `BBᵀ = Q`. A zero pivot (rank-one `Q`) is
    /// handled by zeroing the corresponding column.
    pub fn noise_factor(&self) -> Result<Matrix2<f64>> {
        let q = &self.noise_cov;
        let eig = self.noise_eigenvalues();
        if eig[0] < -PSD_TOL {
            return Err(Error::NoiseNotPsd(eig));
        }
        let l11 = q[(0, 0)].max(0.0).sqrt();
        let l21 = if l11 > 0.0 { q[(1, 0)] / l11 } else { 0.0 };
        let l22 = (q[(1, 1)] - l21 * l21).max(0.0).sqrt();
        Ok(Matrix2::new(l11, 0.0, l21, l22))
    }
}

/// Entries of `A^k`. Read as regressions of `Z_{n+k}` on `Z_n`:
/// `E[X_{n+k} | X_n, Y_n] = x_from_x·X_n + x_from_y·Y_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixPowerCoeffs {
    pub k: usize,
    pub x_from_x: f64,
    pub x_from_y: f64,
    pub y_from_x: f64,
    pub y_from_y: f64,
}

impl MatrixPowerCoeffs {
    pub fn from_matrix(k: usize, m: &Matrix2<f64>) -> Self {
        Self {
            k,
            x_from_x: m[(0, 0)],
            x_from_y: m[(0, 1)],
            y_from_x: m[(1, 0)],
            y_from_y: m[(1, 1)],
        }
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.x_from_x, self.x_from_y, self.y_from_x, self.y_from_y)
    }
}

/// Admissibility checks for a parameter set. Never fails; the individual
/// flags carry the outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub params: PmmParams,
    pub in_range: bool,
    pub gamma_min_eigenvalue: f64,
    pub gamma_positive_definite: bool,
    /// Eigenvalues of `BBᵀ`, ascending; `None` when `|b| ≥ 1`.
    pub noise_eigenvalues: Option<[f64; 2]>,
    pub noise_psd: bool,
    pub spectral_radius: Option<f64>,
    pub spectral_radius_ok: bool,
    pub is_hmm: bool,
}

impl ValidationReport {
    fn new(p: &PmmParams) -> Self {
        let in_range = p.as_array().iter().all(|v| v.is_finite() && v.abs() < 1.0);
        let gamma_min_eigenvalue = p.gamma().min_eigenvalue();
        let (noise_eigenvalues, spectral_radius) = if p.b.abs() < 1.0 {
            let det = 1.0 - p.b * p.b;
            let inv = Matrix2::new(1.0, -p.b, -p.b, 1.0) / det;
            let a = p.cross_covariance() * inv;
            let q = p.marginal() - a * p.cross_covariance().transpose();
            (Some(symmetric_eigenvalues(&q)), Some(spectral_radius(&a)))
        } else {
            (None, None)
        };
        let noise_psd = noise_eigenvalues.is_some_and(|e| e[0] >= -PSD_TOL);
        let spectral_radius_ok = spectral_radius.is_some_and(|r| r < 1.0 - SPECTRAL_MARGIN);
        Self {
            params: *p,
            in_range,
            gamma_min_eigenvalue,
            gamma_positive_definite: gamma_min_eigenvalue > PD_EIGEN_TOL,
            noise_eigenvalues,
            noise_psd,
            spectral_radius,
            spectral_radius_ok,
            is_hmm: p.is_hmm(HMM_TOL),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.in_range && self.gamma_positive_definite && self.noise_psd && self.spectral_radius_ok
    }

    /// Human-readable list of failed checks.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.in_range {
            out.push("a correlation is outside (-1, 1)".to_string());
        }
        if !self.gamma_positive_definite {
            out.push(format!(
                "block covariance is not positive definite (min eigenvalue {:e})",
                self.gamma_min_eigenvalue
            ));
        }
        if !self.noise_psd {
            out.push("noise covariance BB^T is not positive semidefinite".to_string());
        }
        if !self.spectral_radius_ok {
            out.push(match self.spectral_radius {
                Some(r) => format!("spectral radius of A is {r} (must be < 1)"),
                None => "transition matrix undefined (|b| >= 1)".to_string(),
            });
        }
        out
    }

    pub fn into_result(self) -> Result<PmmParams> {
        if self.is_valid() {
            Ok(self.params)
        } else {
            Err(Error::InvalidParams(self.failures().join("; ")))
        }
    }
}

/// Ascending eigenvalues of a symmetric 2×2 matrix.
pub(crate) fn symmetric_eigenvalues(m: &Matrix2<f64>) -> [f64; 2] {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let r = half_diff.hypot(m[(0, 1)]);
    [mean - r, mean + r]
}

pub(crate) fn spectral_radius(m: &Matrix2<f64>) -> f64 {
    let half_trace = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m.determinant();
    let disc = half_trace * half_trace - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (half_trace + s).abs().max((half_trace - s).abs())
    } else {
        det.sqrt()
    }
}
