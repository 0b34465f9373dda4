//! Consistency loss between the follower's predicted leader-action
//! distribution g(.|o^F) and the leader's executed actions:
//!
//!   L_CE = -(1/B) sum_b log g(a^L_b | o^F_b)
//!
//! Leader actions enter as data only: no gradient flows back into the
//! leader. The loss's expectation plus the leader's entropy lower-bounds
//! the mutual information I(a^L; o^F), which is reported as a diagnostic.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::LOG_2PI;

#[derive(Debug, Clone)]
pub struct CeLoss {
    pub loss: f64,
    /// d(loss)/d(aux_mean), B x act.
    pub d_aux_mean: Array2<f64>,
    /// d(loss)/d(aux_log_std) before clamp masking, B x act.
    pub d_aux_log_std: Array2<f64>,
}

/// Cross-entropy of detached leader actions under the auxiliary heads.
pub fn ce_loss_from_heads(
    aux_mean: &Array2<f64>,
    aux_log_std: &Array2<f64>,
    leader_actions: &Array2<f64>,
) -> Result<CeLoss> {
    let (b, d) = aux_mean.dim();
    if b == 0 {
        return Err(Error::Contract("empty batch in consistency loss".into()));
    }
    if aux_log_std.dim() != (b, d) || leader_actions.dim() != (b, d) {
        return Err(Error::DimensionMismatch("consistency loss shapes must align".into()));
    }
    let mut loss = 0.0;
    let mut d_mean = Array2::zeros((b, d));
    let mut d_ls = Array2::zeros((b, d));
    let inv_b = 1.0 / b as f64;
    for i in 0..b {
        for k in 0..d {
            let mu = aux_mean[[i, k]];
            let ls = aux_log_std[[i, k]];
            let sigma = ls.exp();
            let z = (leader_actions[[i, k]] - mu) / sigma;
            // -log N = 0.5 z^2 + log sigma + 0.5 log 2pi
            loss += 0.5 * z * z + ls + 0.5 * LOG_2PI;
            d_mean[[i, k]] = -inv_b * z / sigma;
            d_ls[[i, k]] = inv_b * (1.0 - z * z);
        }
    }
    Ok(CeLoss { loss: loss * inv_b, d_aux_mean: d_mean, d_aux_log_std: d_ls })
}

/// Variational lower bound on I(a^L; o^F): H(a^L) - CE.
pub fn mi_bound_diagnostic(mean_leader_entropy: f64, ce_loss: f64) -> f64 {
    mean_leader_entropy - ce_loss
}
