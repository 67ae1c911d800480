#![allow(dead_code)]

use pmm_forecast::PmmParams;
use rand::Rng;

/// Rejection-samples admissible parameters with a well-conditioned Γ and
/// a transition matrix that is not too close to the unit circle.
pub fn random_valid_params<R: Rng>(rng: &mut R) -> PmmParams {
    loop {
        let mut v = [0.0; 5];
        for x in v.iter_mut() {
            *x = rng.random_range(-0.9..0.9);
        }
        let p = PmmParams::new(v[0], v[1], v[2], v[3], v[4]);
        let r = p.validate();
        if r.is_valid() && r.gamma_min_eigenvalue > 0.05 && r.spectral_radius.unwrap() < 0.98 {
            return p;
        }
    }
}

pub fn random_series<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.5..2.5)).collect()
}

/// Textbook scalar Kalman filter for `X' = aX + √(1−a²)U`, `Y = bX + √(1−b²)V`,
/// `X_1 ~ N(0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarHmmKalman {
    pub a: f64,
    pub b: f64,
    pub mean: f64,
    pub variance: f64,
}

impl ScalarHmmKalman {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b, mean: 0.0, variance: 1.0 }
    }

    fn update(&mut self, y: f64) {
        let r = 1.0 - self.b * self.b;
        let s = self.b * self.b * self.variance + r;
        let gain = self.b * self.variance / s;
        self.mean += gain * (y - self.b * self.mean);
        self.variance *= 1.0 - gain * self.b;
    }

    fn predict(&mut self) {
        self.mean *= self.a;
        self.variance = self.a * self.a * self.variance + 1.0 - self.a * self.a;
    }

    pub fn run(a: f64, b: f64, ys: &[f64]) -> Self {
        let mut kf = Self::new(a, b);
        for (i, &y) in ys.iter().enumerate() {
            if i > 0 {
                kf.predict();
            }
            kf.update(y);
        }
        kf
    }

    /// Mean and variance of `X_{n+k}`.
    pub fn forecast(&self, k: usize) -> (f64, f64) {
        let ak = self.a.powi(k as i32);
        (ak * self.mean, ak * ak * self.variance + 1.0 - ak * ak)
    }
}

pub fn fig2() -> PmmParams {
    let (a, b) = (0.9, -0.2);
    PmmParams::new(a, b, a * b * b, a * b, a * b - 0.4)
}

pub fn fig4() -> PmmParams {
    let (a, b) = (0.9, -0.2);
    PmmParams::new(a, b, a * b * b, a * b - 0.2, a * b - 0.4)
}

/// Parameters of the same order as a strongly persistent real-data fit.
pub fn persistent() -> PmmParams {
    PmmParams::new(0.996, -0.6, 0.986, -0.599, -0.602)
}
