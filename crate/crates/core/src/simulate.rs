//! Trajectory sampling and Monte Carlo forecast error.
//!
//! Draws use ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64(seed)`. A single trajectory uses stream 0; Monte Carlo
//! replicate `r` uses stream `r + 1`, so replicates are independent of
//! execution order and can run in parallel.

use std::io::Write;

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::FilterState;
use crate::forecast::forecast_mean;
use crate::io::format_number;
use crate::model::{PmmParams, TransitionModel};

/// Recorded alongside simulated outputs.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9, seed_from_u64, stream = replicate + 1)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// CSV with header `t,x,y`, `t` starting at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y"])?;
        for (t, (x, y)) in self.x.iter().zip(&self.y).enumerate() {
            w.write_record([(t + 1).to_string(), format_number(*x), format_number(*y)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Precomputed square roots for sampling from one model.
struct Sampler {
    model: TransitionModel,
    initial_factor: Matrix2<f64>,
    noise_factor: Matrix2<f64>,
}

impl Sampler {
    fn new(p: &PmmParams) -> Result<Self> {
        p.validate().into_result()?;
        let model = p.markov_form()?;
        let noise_factor = model.noise_factor()?;
        let b = p.b;
        let initial_factor = Matrix2::new(1.0, 0.0, b, (1.0 - b * b).sqrt());
        Ok(Self {
            model,
            initial_factor,
            noise_factor,
        })
    }

    fn fill<R: rand::Rng>(&self, rng: &mut R, x: &mut Vec<f64>, y: &mut Vec<f64>, n: usize) {
        x.clear();
        y.clear();
        if n == 0 {
            return;
        }
        let mut z = self.initial_factor * standard_pair(rng);
        x.push(z[0]);
        y.push(z[1]);
        for _ in 1..n {
            z = self.model.transition * z + self.noise_factor * standard_pair(rng);
            x.push(z[0]);
            y.push(z[1]);
        }
    }
}

fn standard_pair<R: rand::Rng>(rng: &mut R) -> Vector2<f64> {
    Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn replicate_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples `(X_1:N, Y_1:N)`: `Z_1 = L W_1` with `LLᵀ = [[1, b], [b, 1]]`,
/// then `Z_{t+1} = A Z_t + B W_{t+1}` with lower-triangular `B`.
pub fn sample(p: &PmmParams, n_steps: usize, seed: u64) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    let sampler = Sampler::new(p)?;
    let mut rng = replicate_rng(seed, 0);
    let mut x = Vec::with_capacity(n_steps);
    let mut y = Vec::with_capacity(n_steps);
    sampler.fill(&mut rng, &mut x, &mut y, n_steps);
    Ok(Trajectory { x, y, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mse: f64,
    /// Standard error of `mse` (sample std of squared errors over `√reps`).
    pub stderr: f64,
    pub reps: usize,
}

/// Empirical MSE of forecasting `X_{n+k}` from `Y_1:n` with the optimal
/// filter of `forecaster` when data are drawn from `p_true`.
pub fn monte_carlo_mse(
    p_true: &PmmParams,
    forecaster: &PmmParams,
    n: usize,
    k: usize,
    reps: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if reps < 100 {
        return Err(Error::InvalidArgument(format!(
            "at least 100 replicates are required, got {reps}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let sampler = Sampler::new(p_true)?;
    let model_f = forecaster.markov_form()?;
    let len = n + k;
    let errors: Vec<f64> = (0..reps)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(len), Vec::with_capacity(len)),
            |(x, y), r| -> Result<f64> {
                let mut rng = replicate_rng(seed, r as u64 + 1);
                sampler.fill(&mut rng, x, y, len);
                let state = FilterState::run(&model_f, &y[..n])?;
                let err = forecast_mean(&state, &model_f, k) - x[len - 1];
                Ok(err * err)
            },
        )
        .collect::<Result<_>>()?;
    let count = errors.len() as f64;
    let mse = errors.iter().sum::<f64>() / count;
    let var = errors.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (count - 1.0);
    Ok(MonteCarloEstimate {
        mse,
        stderr: (var / count).sqrt(),
        reps,
    })
}
