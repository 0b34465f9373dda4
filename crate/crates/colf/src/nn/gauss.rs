//! Diagonal Gaussian distribution: log-density, entropy, reparameterized
//! sampling. Policies and the auxiliary leader-action predictor are all
//! diagonal Gaussians with a clamped log standard deviation head.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

pub const LOG_2PI: f64 = 1.8378770664093453; // ln(2*pi)

/// Mean and per-dimension log standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    pub mean: Array1<f64>,
    pub log_std: Array1<f64>,
}

impl DiagGaussian {
    /// Clamps `log_std` into `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn new(mean: Array1<f64>, log_std: Array1<f64>) -> Result<Self> {
        if mean.len() != log_std.len() {
            return Err(Error::DimensionMismatch("mean and log_std length differ".into()));
        }
        if mean.iter().any(|v| !v.is_finite()) || log_std.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("DiagGaussian parameters".into()));
        }
        let log_std = log_std.mapv(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
        Ok(Self { mean, log_std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Sum over dims of `-0.5*((a-mu)/sigma)^2 - log sigma - 0.5*log 2pi`.
    pub fn log_prob(&self, a: &Array1<f64>) -> Result<f64> {
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch("action length != distribution dim".into()));
        }
        let mut lp = 0.0;
        for d in 0..self.dim() {
            let sigma = self.log_std[d].exp();
            let z = (a[d] - self.mean[d]) / sigma;
            lp += -0.5 * z * z - self.log_std[d] - 0.5 * LOG_2PI;
        }
        Ok(lp)
    }

    /// Sum over dims of `0.5 + 0.5*log 2pi + log sigma`.
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| 0.5 + 0.5 * LOG_2PI + ls).sum()
    }

    /// Reparameterized draw `mu + sigma .* z` with `z ~ N(0, I)`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Array1<f64> {
        let z = Array1::from_shape_fn(self.dim(), |_| rng.sample::<f64, _>(StandardNormal));
        self.from_noise(&z)
    }

    /// The deterministic part of the reparameterization, exposed for
    /// gradient tests.
    pub fn from_noise(&self, z: &Array1<f64>) -> Array1<f64> {
        let mut a = self.mean.clone();
        for d in 0..self.dim() {
            a[d] += self.log_std[d].exp() * z[d];
        }
        a
    }
}

/// Per-row log-density of `actions` under row-wise (mean, log_std).
pub fn log_prob_batch(
    mean: &Array2<f64>,
    log_std: &Array2<f64>,
    actions: &Array2<f64>,
) -> Array1<f64> {
    assert_eq!(mean.dim(), actions.dim());
    assert_eq!(mean.dim(), log_std.dim());
    let (n, d) = mean.dim();
    Array1::from_shape_fn(n, |b| {
        let mut lp = 0.0;
        for k in 0..d {
            let sigma = log_std[[b, k]].exp();
            let z = (actions[[b, k]] - mean[[b, k]]) / sigma;
            lp += -0.5 * z * z - log_std[[b, k]] - 0.5 * LOG_2PI;
        }
        lp
    })
}

/// Per-row entropy from row-wise log_std.
pub fn entropy_batch(log_std: &Array2<f64>) -> Array1<f64> {
    let (n, d) = log_std.dim();
    Array1::from_shape_fn(n, |b| {
        (0..d).map(|k| 0.5 + 0.5 * LOG_2PI + log_std[[b, k]]).sum()
    })
}
