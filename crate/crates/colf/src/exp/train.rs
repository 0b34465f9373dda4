//! CTDE training loop: rollouts, PPO updates, metrics CSV, checkpoints.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{ScenarioConfig, VecEnv};
use crate::error::Result;
use crate::mappo::{collect_rollouts, ppo_update, TrainConfig};
use crate::nn::AdamConfig;
use crate::policy::{Method, PolicyPair};

/// Fixed metrics CSV column order.
pub const METRICS_COLUMNS: &str = "iteration,mean_r_obj,leader_return,follower_return,\
mean_episode_len,leader_actor_loss,follower_actor_loss,value_loss,leader_entropy,\
follower_entropy,ce_loss,mi_bound,excluded";

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Mean r_obj over every step of this iteration's rollout batch (the
    /// learning-curve quantity; dense, never NaN).
    pub mean_r_obj: f64,
    pub leader_return: f64,
    pub follower_return: f64,
    pub mean_episode_len: f64,
    pub leader_actor_loss: f64,
    pub follower_actor_loss: f64,
    pub value_loss: f64,
    pub leader_entropy: f64,
    pub follower_entropy: f64,
    pub ce_loss: f64,
    pub mi_bound: f64,
    pub excluded: usize,
}

impl IterationRecord {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.mean_r_obj,
            self.leader_return,
            self.follower_return,
            self.mean_episode_len,
            self.leader_actor_loss,
            self.follower_actor_loss,
            self.value_loss,
            self.leader_entropy,
            self.follower_entropy,
            self.ce_loss,
            self.mi_bound,
            self.excluded
        )
    }
}

#[derive(Debug)]
pub struct TrainResult {
    pub iterations_run: usize,
    pub metrics_path: PathBuf,
    pub final_checkpoint: PathBuf,
    pub aborted: bool,
    pub history: Vec<IterationRecord>,
    pub pair: PolicyPair,
}

/// Run the full training loop, writing `metrics.csv`, periodic
/// `ckpt_<iter>.ckpt` files, and `final.ckpt` into `out_dir`. A non-finite
/// loss aborts the run; the checkpoint written is the last iteration that
/// completed cleanly.
pub fn train_run(
    method: Method,
    scenario: &ScenarioConfig,
    tcfg: &TrainConfig,
    iterations: usize,
    checkpoint_every: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<TrainResult> {
    std::fs::create_dir_all(out_dir)?;
    scenario.validate()?;

    let adam = AdamConfig { lr: tcfg.lr, ..AdamConfig::default() };
    let mut pair = PolicyPair::new(method, scenario.goals.len(), adam, seed)?;
    let mut envs = VecEnv::new(scenario.clone(), tcfg.n_envs, seed)?;
    // Decouple the training stream from the per-env streams.
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1));

    let metrics_path = out_dir.join("metrics.csv");
    let mut csv = BufWriter::new(File::create(&metrics_path)?);
    writeln!(csv, "{METRICS_COLUMNS}")?;

    let extras = |iter: usize| {
        vec![
            ("seed".to_string(), seed.to_string()),
            ("iteration".to_string(), iter.to_string()),
        ]
    };

    let mut history = Vec::with_capacity(iterations);
    // Snapshot restored on divergence.
    let mut last_good = pair.clone();
    let mut aborted = false;
    let mut iterations_run = 0usize;

    for iter in 0..iterations {
        if tcfg.lr_end_frac != 1.0 && iterations > 1 {
            let progress = iter as f64 / (iterations - 1) as f64;
            pair.set_lr(tcfg.lr * (1.0 - (1.0 - tcfg.lr_end_frac) * progress));
        }
        let batch =
            collect_rollouts(
                &pair,
                &mut envs,
                tcfg.rollout_len,
                tcfg.gamma,
                tcfg.gae_lambda,
                tcfg.reward_scale,
                &mut rng,
            )?;
        let stats = &batch.stats;
        let n_ep = stats.episode_r_obj.len();
        let mean = |v: &[f64]| {
            if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 }
        };
        let mean_r_obj = stats.mean_step_r_obj;
        let leader_return = mean(&stats.episode_returns.iter().map(|r| r[0]).collect::<Vec<_>>());
        let follower_return = mean(&stats.episode_returns.iter().map(|r| r[1]).collect::<Vec<_>>());
        let mean_len = if n_ep == 0 {
            f64::NAN
        } else {
            stats.episode_lengths.iter().sum::<usize>() as f64 / n_ep as f64
        };

        let report = match ppo_update(&mut pair, &batch, tcfg, &mut rng) {
            Ok(r) => r,
            Err(e) => {
                log::error!("iteration {iter}: update aborted: {e}");
                aborted = true;
                pair = last_good.clone();
                break;
            }
        };

        let rec = IterationRecord {
            iteration: iter,
            mean_r_obj,
            leader_return,
            follower_return,
            mean_episode_len: mean_len,
            leader_actor_loss: report.leader_actor,
            follower_actor_loss: report.follower_actor,
            value_loss: report.value,
            leader_entropy: report.leader_entropy,
            follower_entropy: report.follower_entropy,
            ce_loss: report.ce,
            mi_bound: report.mi_bound,
            excluded: report.excluded,
        };
        writeln!(csv, "{}", rec.csv_row())?;
        history.push(rec);
        last_good = pair.clone();
        iterations_run = iter + 1;

        if checkpoint_every > 0 && (iter + 1) % checkpoint_every == 0 {
            pair.save(&out_dir.join(format!("ckpt_{:06}.ckpt", iter + 1)), &extras(iter + 1))?;
        }
        if (iter + 1) % 20 == 0 || iter + 1 == iterations {
            log::info!(
                "iter {}/{}: r_obj {:.4} value {:.4} ce {:.4}",
                iter + 1,
                iterations,
                mean_r_obj,
                report.value,
                report.ce
            );
        }
    }
    csv.flush()?;

    let final_checkpoint = out_dir.join("final.ckpt");
    pair.save(&final_checkpoint, &extras(iterations_run))?;
    Ok(TrainResult { iterations_run, metrics_path, final_checkpoint, aborted, history, pair })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Method;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig { n_envs: 4, rollout_len: 8, epochs: 2, minibatches: 2, ..TrainConfig::default() }
    }

    #[test]
    fn metrics_csv_bitwise_deterministic() {
        let scenario = ScenarioConfig::one_goal_small();
        let run = |dir: &Path| {
            train_run(Method::Colf, &scenario, &tiny_cfg(), 2, 0, 7, dir).unwrap();
            std::fs::read(dir.join("metrics.csv")).unwrap()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        assert_eq!(run(d1.path()), run(d2.path()));
    }

    #[test]
    fn lr_anneals_linearly_to_end_fraction() {
        let scenario = ScenarioConfig::one_goal_small();
        let tcfg = TrainConfig { lr_end_frac: 0.5, ..tiny_cfg() };
        let dir = tempfile::tempdir().unwrap();
        let res = train_run(Method::Mappo, &scenario, &tcfg, 3, 0, 5, dir.path()).unwrap();
        // Last iteration runs at lr * lr_end_frac.
        let want = tcfg.lr * 0.5;
        assert!((res.pair.critic.adam.config.lr - want).abs() < 1e-15);
        assert!((res.pair.leader.adam.config.lr - want).abs() < 1e-15);
    }

    #[test]
    fn checkpoints_and_history() {
        let scenario = ScenarioConfig::one_goal_small();
        let dir = tempfile::tempdir().unwrap();
        let res = train_run(Method::Mappo, &scenario, &tiny_cfg(), 2, 1, 5, dir.path()).unwrap();
        assert_eq!(res.iterations_run, 2);
        assert!(!res.aborted);
        assert_eq!(res.history.len(), 2);
        assert!(dir.path().join("ckpt_000001.ckpt").exists());
        assert!(dir.path().join("ckpt_000002.ckpt").exists());
        let (loaded, ckpt) = PolicyPair::load(&res.final_checkpoint).unwrap();
        assert_eq!(loaded.method, Method::Mappo);
        assert_eq!(ckpt.get("iteration"), Some("2"));
        // Header row is the fixed column order.
        let csv = std::fs::read_to_string(res.metrics_path).unwrap();
        assert!(csv.starts_with(METRICS_COLUMNS));
    }
}
