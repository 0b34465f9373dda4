//! Rollout collection: step a batch of environments with the current
//! policies and produce flattened training arrays.
//!
//! Storage is time-major: flat index t * n_envs + e. Both agents share the
//! advantage/return targets, computed from the mean of the two per-agent
//! rewards (the shared-objective reading of the centralized critic).

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::env::{global_state, VecEnv};
use crate::error::Result;
use crate::mappo::gae::compute_gae;
use crate::nn::DiagGaussian;
use crate::policy::PolicyPair;

#[derive(Debug, Clone, Default)]
pub struct RolloutStats {
    /// Completed-episode mean per-agent returns.
    pub episode_returns: Vec<[f64; 2]>,
    /// Completed-episode mean r_obj per step.
    pub episode_r_obj: Vec<f64>,
    pub episode_lengths: Vec<usize>,
    /// Mean r_obj over every step of the rollout batch, regardless of
    /// episode boundaries. Dense: defined even when no episode finishes.
    pub mean_step_r_obj: f64,
}

#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub leader_obs: Array2<f64>,
    pub follower_obs: Array2<f64>,
    pub global_states: Array2<f64>,
    pub leader_actions: Array2<f64>,
    pub follower_actions: Array2<f64>,
    pub leader_logp: Array1<f64>,
    pub follower_logp: Array1<f64>,
    pub values: Array1<f64>,
    pub advantages: Array1<f64>,
    pub returns: Array1<f64>,
    /// Shared reward (mean over agents, times `reward_scale`) per sample.
    pub shared_rewards: Array1<f64>,
    pub dones: Vec<bool>,
    pub n_envs: usize,
    pub t_len: usize,
    pub stats: RolloutStats,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.n_envs * self.t_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn collect_rollouts<R: Rng>(
    pair: &PolicyPair,
    envs: &mut VecEnv,
    t_len: usize,
    gamma: f64,
    gae_lambda: f64,
    reward_scale: f64,
    rng: &mut R,
) -> Result<RolloutBatch> {
    let n = envs.len();
    let b = n * t_len;
    let wiring = pair.wiring();
    let f_dim = pair.follower.obs_dim;
    let g_dim = pair.critic.input_dim;

    let mut leader_obs = Array2::zeros((b, pair.leader.obs_dim));
    let mut follower_obs = Array2::zeros((b, f_dim));
    let mut global_states = Array2::zeros((b, g_dim));
    let mut leader_actions = Array2::zeros((b, pair.leader.action_dim));
    let mut follower_actions = Array2::zeros((b, pair.follower.action_dim));
    let mut leader_logp = Array1::zeros(b);
    let mut follower_logp = Array1::zeros(b);
    let mut values = Array1::zeros(b);
    let mut shared_rewards = Array1::zeros(b);
    let mut dones = vec![false; b];
    let mut stats = RolloutStats::default();

    let mut obs = envs.observations();
    for t in 0..t_len {
        // Stage observations and critic inputs for this step.
        let mut l_batch = Array2::zeros((n, pair.leader.obs_dim));
        let mut f_batch = Array2::zeros((n, f_dim));
        let mut g_batch = Array2::zeros((n, g_dim));
        for e in 0..n {
            for (k, v) in obs[e].leader.iter().enumerate() {
                l_batch[[e, k]] = *v;
            }
            for (k, v) in wiring.follower_input(&obs[e]).iter().enumerate() {
                f_batch[[e, k]] = *v;
            }
            for (k, v) in global_state(&envs.states[e], wiring.aac).iter().enumerate() {
                g_batch[[e, k]] = *v;
            }
        }
        let l_fwd = pair.leader.forward_batch(&l_batch)?;
        let f_fwd = pair.follower.forward_batch(&f_batch)?;
        let (v_batch, _) = pair.critic.forward_batch(&g_batch)?;

        // Sample actions and step.
        let mut actions = Vec::with_capacity(n);
        for e in 0..n {
            let idx = t * n + e;
            let ld = DiagGaussian::new(l_fwd.mean.row(e).to_owned(), l_fwd.log_std.row(e).to_owned())?;
            let fd = DiagGaussian::new(f_fwd.mean.row(e).to_owned(), f_fwd.log_std.row(e).to_owned())?;
            let la = ld.sample(rng);
            let fa = fd.sample(rng);
            leader_logp[idx] = ld.log_prob(&la)?;
            follower_logp[idx] = fd.log_prob(&fa)?;
            for k in 0..3 {
                leader_actions[[idx, k]] = la[k];
                follower_actions[[idx, k]] = fa[k];
            }
            values[idx] = v_batch[e];
            for k in 0..pair.leader.obs_dim {
                leader_obs[[idx, k]] = l_batch[[e, k]];
            }
            for k in 0..f_dim {
                follower_obs[[idx, k]] = f_batch[[e, k]];
            }
            for k in 0..g_dim {
                global_states[[idx, k]] = g_batch[[e, k]];
            }
            actions.push(([la[0], la[1], la[2]], [fa[0], fa[1], fa[2]]));
        }
        let step = envs.step_all(&actions)?;
        for e in 0..n {
            let idx = t * n + e;
            shared_rewards[idx] = reward_scale * 0.5 * (step.rewards[e][0] + step.rewards[e][1]);
            dones[idx] = step.dones[e];
            stats.mean_step_r_obj += step.r_obj[e];
        }
        for (ret, r_obj, len) in step.finished {
            stats.episode_returns.push(ret);
            stats.episode_r_obj.push(r_obj);
            stats.episode_lengths.push(len);
        }
        obs = step.obs;
    }
    stats.mean_step_r_obj /= b as f64;

    // Bootstrap values of the post-rollout states.
    let mut g_batch = Array2::zeros((n, g_dim));
    for e in 0..n {
        for (k, v) in global_state(&envs.states[e], wiring.aac).iter().enumerate() {
            g_batch[[e, k]] = *v;
        }
    }
    let (bootstrap, _) = pair.critic.forward_batch(&g_batch)?;

    // Per-environment GAE over the time-major storage.
    let mut advantages = Array1::zeros(b);
    let mut returns = Array1::zeros(b);
    for e in 0..n {
        let rewards_e: Vec<f64> = (0..t_len).map(|t| shared_rewards[t * n + e]).collect();
        let values_e: Vec<f64> = (0..t_len).map(|t| values[t * n + e]).collect();
        let dones_e: Vec<bool> = (0..t_len).map(|t| dones[t * n + e]).collect();
        let (adv, ret) =
            compute_gae(&rewards_e, &values_e, &dones_e, bootstrap[e], gamma, gae_lambda)?;
        for t in 0..t_len {
            advantages[t * n + e] = adv[t];
            returns[t * n + e] = ret[t];
        }
    }

    Ok(RolloutBatch {
        leader_obs,
        follower_obs,
        global_states,
        leader_actions,
        follower_actions,
        leader_logp,
        follower_logp,
        values,
        advantages,
        returns,
        shared_rewards,
        dones,
        n_envs: n,
        t_len,
        stats,
    })
}
