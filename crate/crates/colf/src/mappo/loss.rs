//! Clipped PPO surrogate losses with analytic gradients with respect to the
//! network outputs they consume.

use ndarray::Array1;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ActorLoss {
    pub loss: f64,
    /// d(loss)/d(new_log_prob) per sample.
    pub grad_log_prob: Array1<f64>,
    /// Samples dropped because their probability ratio was non-finite.
    pub excluded: usize,
}

/// Negated clipped surrogate: loss = -mean[min(rho*A, clip(rho)*A)].
pub fn actor_clip_loss(
    new_log_probs: &Array1<f64>,
    old_log_probs: &Array1<f64>,
    advantages: &Array1<f64>,
    epsilon: f64,
) -> Result<ActorLoss> {
    let n = new_log_probs.len();
    if old_log_probs.len() != n || advantages.len() != n {
        return Err(Error::Contract("actor loss batches must align".into()));
    }
    let mut grad = Array1::zeros(n);
    let mut excluded = 0usize;
    let mut acc = 0.0;
    let mut included = 0usize;
    for b in 0..n {
        let rho = (new_log_probs[b] - old_log_probs[b]).exp();
        if !rho.is_finite() {
            excluded += 1;
            continue;
        }
        included += 1;
        let a = advantages[b];
        let unclipped = rho * a;
        let clipped = rho.clamp(1.0 - epsilon, 1.0 + epsilon) * a;
        if unclipped <= clipped {
            acc += unclipped;
            grad[b] = -rho * a; // d(rho)/d(logp) = rho
        } else {
            acc += clipped;
            // Clipped branch binding: zero gradient.
        }
    }
    if included == 0 {
        return Err(Error::NonFinite("all probability ratios non-finite".into()));
    }
    let scale = 1.0 / included as f64;
    grad.mapv_inplace(|g| g * scale);
    Ok(ActorLoss { loss: -acc * scale, grad_log_prob: grad, excluded })
}

/// Per-sample objective of the clipped surrogate (un-negated), exposed for
/// branch-enumeration oracles.
pub fn clip_objective(rho: f64, advantage: f64, epsilon: f64) -> f64 {
    (rho * advantage).min(rho.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage)
}

/// Clipped value loss: mean[max((V - R)^2, (clip(V, V_old +- eps) - R)^2)].
/// Returns the loss and d(loss)/dV per sample.
pub fn value_clip_loss(
    values: &Array1<f64>,
    old_values: &Array1<f64>,
    returns: &Array1<f64>,
    epsilon: f64,
) -> Result<(f64, Array1<f64>)> {
    let n = values.len();
    if old_values.len() != n || returns.len() != n {
        return Err(Error::Contract("value loss batches must align".into()));
    }
    let mut grad = Array1::zeros(n);
    let mut acc = 0.0;
    for b in 0..n {
        let v = values[b];
        let clipped = v.clamp(old_values[b] - epsilon, old_values[b] + epsilon);
        let e_raw = v - returns[b];
        let e_clip = clipped - returns[b];
        if e_raw * e_raw >= e_clip * e_clip {
            acc += e_raw * e_raw;
            grad[b] = 2.0 * e_raw / n as f64;
        } else {
            acc += e_clip * e_clip;
            // Gradient flows through the clip only where it is inactive.
            grad[b] = if clipped == v { 2.0 * e_clip / n as f64 } else { 0.0 };
        }
    }
    Ok((acc / n as f64, grad))
}
