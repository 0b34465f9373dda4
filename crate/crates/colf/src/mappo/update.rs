//! PPO update loop: advantage normalization, epoch/minibatch shuffling,
//! per-network loss assembly with analytic gradients, global-norm clipping,
//! and Adam.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mappo::loss::{actor_clip_loss, value_clip_loss};
use crate::mappo::rollout::RolloutBatch;
use crate::nn::{adam_step, entropy_batch, log_prob_batch, ParameterSet};
use crate::policy::{ce_loss_from_heads, ActorNet, CriticNet, PolicyPair};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub rollout_len: usize,
    pub n_envs: usize,
    pub lr: f64,
    pub c_ent: f64,
    pub lambda_ce: f64,
    pub max_grad_norm: f64,
    /// Multiplier applied to the shared reward before GAE and the value
    /// targets. Stands in for the value normalization used by large-scale
    /// MAPPO implementations: it keeps returns near O(1) so the absolute
    /// value-clip range stays meaningful. Metrics and episode statistics
    /// are reported unscaled.
    pub reward_scale: f64,
    /// Linear learning-rate annealing: the rate decays from `lr` at the
    /// first iteration to `lr * lr_end_frac` at the last. 1.0 disables
    /// annealing. Annealing stabilizes late training, where fast-converging
    /// methods otherwise oscillate around their plateau.
    pub lr_end_frac: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs: 5,
            minibatches: 4,
            rollout_len: 64,
            n_envs: 64,
            lr: 3e-4,
            c_ent: 0.003,
            lambda_ce: 0.03,
            max_grad_norm: 1.0,
            reward_scale: 0.05,
            lr_end_frac: 1.0,
        }
    }
}

/// Minibatch-averaged loss components from one update.
#[derive(Debug, Clone, Default)]
pub struct LossReport {
    pub leader_actor: f64,
    pub follower_actor: f64,
    pub value: f64,
    pub leader_entropy: f64,
    pub follower_entropy: f64,
    pub ce: f64,
    /// Variational lower bound on I(a^L; o^F): H(a^L) - CE.
    pub mi_bound: f64,
    pub excluded: usize,
}

/// Normalize to zero mean, unit (population) standard deviation.
pub fn normalize_advantages(adv: &Array1<f64>) -> Array1<f64> {
    let n = adv.len().max(1) as f64;
    let mean = adv.sum() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + 1e-8;
    adv.mapv(|a| (a - mean) / denom)
}

/// Scale gradients so their global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_grad_norm(grads: &mut ParameterSet, max_norm: f64) -> f64 {
    let norm = grads.sq_norm().sqrt();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

#[derive(Debug)]
pub struct ActorLossOut {
    pub total: f64,
    pub surrogate: f64,
    pub entropy: f64,
    pub ce: Option<f64>,
    pub excluded: usize,
    pub grads: ParameterSet,
}

/// Full actor loss (clipped surrogate - c_ent * entropy + lambda * CE) and
/// its gradient with respect to the network parameters. `ce_target`
/// supplies detached leader actions and the CE weight for auxiliary heads.
pub fn actor_loss_and_grads(
    net: &ActorNet,
    obs: &Array2<f64>,
    actions: &Array2<f64>,
    old_logp: &Array1<f64>,
    advantages: &Array1<f64>,
    clip_epsilon: f64,
    c_ent: f64,
    ce_target: Option<(&Array2<f64>, f64)>,
) -> Result<ActorLossOut> {
    let b = obs.nrows();
    if b == 0 {
        return Err(Error::Contract("empty actor minibatch".into()));
    }
    let fwd = net.forward_batch(obs)?;
    let logp = log_prob_batch(&fwd.mean, &fwd.log_std, actions);
    let al = actor_clip_loss(&logp, old_logp, advantages, clip_epsilon)?;
    let ent = entropy_batch(&fwd.log_std);
    let mean_entropy = ent.sum() / b as f64;

    let d = net.action_dim;
    let mut d_mean = Array2::zeros((b, d));
    let mut d_log_std = Array2::zeros((b, d));
    let ent_g = -c_ent / b as f64; // d(-c_ent * mean entropy)/d(log_std)
    for i in 0..b {
        let g = al.grad_log_prob[i];
        for k in 0..d {
            let sigma = fwd.log_std[[i, k]].exp();
            let z = (actions[[i, k]] - fwd.mean[[i, k]]) / sigma;
            // dlogp/dmu = z/sigma ; dlogp/dlog_std = z^2 - 1
            d_mean[[i, k]] = g * z / sigma;
            d_log_std[[i, k]] = g * (z * z - 1.0) + ent_g;
        }
    }

    let mut total = al.loss - c_ent * mean_entropy;
    let mut ce_val = None;
    let grads = match ce_target {
        Some((leader_actions, lambda)) if net.aux => {
            let aux_mean = fwd.aux_mean.as_ref().expect("aux mean");
            let aux_log_std = fwd.aux_log_std.as_ref().expect("aux log_std");
            let ce = ce_loss_from_heads(aux_mean, aux_log_std, leader_actions)?;
            total += lambda * ce.loss;
            ce_val = Some(ce.loss);
            let d_am = ce.d_aux_mean.mapv(|v| v * lambda);
            let d_als = ce.d_aux_log_std.mapv(|v| v * lambda);
            net.backward_heads(&fwd, &d_mean, &d_log_std, Some(&d_am), Some(&d_als))?
        }
        _ => net.backward_heads(&fwd, &d_mean, &d_log_std, None, None)?,
    };
    Ok(ActorLossOut {
        total,
        surrogate: al.loss,
        entropy: mean_entropy,
        ce: ce_val,
        excluded: al.excluded,
        grads,
    })
}

/// Clipped value loss and parameter gradients.
pub fn critic_loss_and_grads(
    net: &CriticNet,
    states: &Array2<f64>,
    old_values: &Array1<f64>,
    returns: &Array1<f64>,
    clip_epsilon: f64,
) -> Result<(f64, ParameterSet)> {
    let (values, cache) = net.forward_batch(states)?;
    let values = Array1::from(values);
    let (loss, d_v) = value_clip_loss(&values, old_values, returns, clip_epsilon)?;
    let grads = net.backward(&cache, d_v.as_slice().expect("contiguous"))?;
    Ok((loss, grads))
}

/// One PPO update over a collected rollout batch. On a non-finite loss the
/// update aborts with an error and no further optimizer steps are applied.
pub fn ppo_update<R: Rng>(
    pair: &mut PolicyPair,
    batch: &RolloutBatch,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<LossReport> {
    let b = batch.len();
    if b == 0 {
        return Err(Error::Contract("empty rollout batch".into()));
    }
    let wiring = pair.wiring();
    let lambda = wiring.lambda_ce(cfg.lambda_ce);
    let adv = normalize_advantages(&batch.advantages);

    let mut report = LossReport::default();
    let mut n_minibatches = 0usize;

    let mut idx: Vec<usize> = (0..b).collect();
    let chunk = b.div_ceil(cfg.minibatches.max(1));
    for _ in 0..cfg.epochs {
        idx.shuffle(rng);
        for mb in idx.chunks(chunk) {
            let l_obs = batch.leader_obs.select(Axis(0), mb);
            let f_obs = batch.follower_obs.select(Axis(0), mb);
            let g_states = batch.global_states.select(Axis(0), mb);
            let l_act = batch.leader_actions.select(Axis(0), mb);
            let f_act = batch.follower_actions.select(Axis(0), mb);
            let gather = |a: &Array1<f64>| Array1::from_iter(mb.iter().map(|&i| a[i]));
            let l_logp = gather(&batch.leader_logp);
            let f_logp = gather(&batch.follower_logp);
            let mb_adv = gather(&adv);
            let mb_ret = gather(&batch.returns);
            let mb_old_v = gather(&batch.values);

            let l_out = actor_loss_and_grads(
                &pair.leader, &l_obs, &l_act, &l_logp, &mb_adv, cfg.clip_epsilon, cfg.c_ent, None,
            )?;
            let ce_target = if wiring.follower_aux { Some((&l_act, lambda)) } else { None };
            let f_out = actor_loss_and_grads(
                &pair.follower, &f_obs, &f_act, &f_logp, &mb_adv, cfg.clip_epsilon, cfg.c_ent,
                ce_target,
            )?;
            let (v_loss, mut v_grads) =
                critic_loss_and_grads(&pair.critic, &g_states, &mb_old_v, &mb_ret, cfg.clip_epsilon)?;
            if !l_out.total.is_finite() || !f_out.total.is_finite() || !v_loss.is_finite() {
                return Err(Error::NonFinite("loss diverged during PPO update".into()));
            }

            let mut l_grads = l_out.grads;
            let mut f_grads = f_out.grads;
            clip_grad_norm(&mut l_grads, cfg.max_grad_norm);
            clip_grad_norm(&mut f_grads, cfg.max_grad_norm);
            clip_grad_norm(&mut v_grads, cfg.max_grad_norm);
            adam_step(&mut pair.leader.adam, &mut pair.leader.params, &l_grads)?;
            adam_step(&mut pair.follower.adam, &mut pair.follower.params, &f_grads)?;
            adam_step(&mut pair.critic.adam, &mut pair.critic.params, &v_grads)?;

            report.leader_actor += l_out.surrogate;
            report.follower_actor += f_out.surrogate;
            report.value += v_loss;
            report.leader_entropy += l_out.entropy;
            report.follower_entropy += f_out.entropy;
            report.ce += f_out.ce.unwrap_or(0.0);
            report.excluded += l_out.excluded + f_out.excluded;
            n_minibatches += 1;
        }
    }

    let inv = 1.0 / n_minibatches.max(1) as f64;
    report.leader_actor *= inv;
    report.follower_actor *= inv;
    report.value *= inv;
    report.leader_entropy *= inv;
    report.follower_entropy *= inv;
    report.ce *= inv;
    report.mi_bound = if wiring.follower_aux {
        report.leader_entropy - report.ce
    } else {
        0.0
    };
    Ok(report)
}
