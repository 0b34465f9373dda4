//! A batch of independent environment instances with auto-reset. Instances
//! are stepped sequentially in index order so the whole batch is
//! deterministic given the master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use super::{reset, step, DoneReason, ObservationPair, ScenarioConfig, StepOutcome, WorldState};

pub struct VecEnv {
    pub config: ScenarioConfig,
    pub states: Vec<WorldState>,
    rngs: Vec<ChaCha8Rng>,
    /// Mean per-agent reward accumulated in the running episode.
    episode_return: Vec<[f64; 2]>,
    /// Sum of r_obj in the running episode.
    episode_r_obj: Vec<f64>,
    episode_len: Vec<usize>,
}

/// Per-step batch result.
pub struct VecStep {
    pub obs: Vec<ObservationPair>,
    pub rewards: Vec<[f64; 2]>,
    pub r_obj: Vec<f64>,
    pub dones: Vec<bool>,
    pub reasons: Vec<DoneReason>,
    /// Finished-episode stats (per-agent return, mean r_obj per step, length).
    pub finished: Vec<([f64; 2], f64, usize)>,
}

impl VecEnv {
    pub fn new(config: ScenarioConfig, n: usize, seed: u64) -> Result<Self> {
        let mut states = Vec::with_capacity(n);
        let mut rngs = Vec::with_capacity(n);
        for i in 0..n {
            // Distinct deterministic stream per instance.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i as u64 + 1)));
            let (state, _) = reset(&config, &mut rng)?;
            states.push(state);
            rngs.push(rng);
        }
        Ok(Self {
            config,
            states,
            rngs,
            episode_return: vec![[0.0; 2]; n],
            episode_r_obj: vec![0.0; n],
            episode_len: vec![0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn observations(&self) -> Vec<ObservationPair> {
        self.states
            .iter()
            .map(|s| super::obs::observation_pair(&super::obs_parts(s, &self.config)))
            .collect()
    }

    /// Step every instance; finished instances are reset in place and the
    /// returned observations are the post-reset ones.
    pub fn step_all(&mut self, actions: &[([f64; 3], [f64; 3])]) -> Result<VecStep> {
        assert_eq!(actions.len(), self.len());
        let mut out = VecStep {
            obs: Vec::with_capacity(self.len()),
            rewards: Vec::with_capacity(self.len()),
            r_obj: Vec::with_capacity(self.len()),
            dones: Vec::with_capacity(self.len()),
            reasons: Vec::with_capacity(self.len()),
            finished: Vec::new(),
        };
        for i in 0..self.len() {
            let StepOutcome { state, obs, reward, done, reason } =
                step(&self.states[i], &actions[i].0, &actions[i].1, &self.config)?;
            self.episode_return[i][0] += reward.total[0];
            self.episode_return[i][1] += reward.total[1];
            self.episode_r_obj[i] += reward.r_obj;
            self.episode_len[i] += 1;
            out.rewards.push(reward.total);
            out.r_obj.push(reward.r_obj);
            out.dones.push(done);
            out.reasons.push(reason);
            if done {
                let len = self.episode_len[i];
                out.finished.push((
                    self.episode_return[i],
                    self.episode_r_obj[i] / len as f64,
                    len,
                ));
                self.episode_return[i] = [0.0; 2];
                self.episode_r_obj[i] = 0.0;
                self.episode_len[i] = 0;
                let (fresh, fresh_obs) = reset(&self.config, &mut self.rngs[i])?;
                self.states[i] = fresh;
                out.obs.push(fresh_obs);
            } else {
                self.states[i] = state;
                out.obs.push(obs);
            }
        }
        Ok(out)
    }
}
