//! Generalized advantage estimation over a single environment's sequence.

use crate::error::{Error, Result};

/// Compute advantages and return targets.
///
/// `bootstrap` is the value estimate of the state following the last entry,
/// used when the sequence is truncated mid-episode.
///
/// delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
/// A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
/// R_t     = A_t + V_t
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let t_len = rewards.len();
    if values.len() != t_len || dones.len() != t_len {
        return Err(Error::Contract("GAE sequences must have equal length".into()));
    }
    let mut advantages = vec![0.0; t_len];
    let mut acc = 0.0;
    for t in (0..t_len).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let next_v = if t + 1 < t_len { values[t + 1] } else { bootstrap };
        let delta = rewards[t] + gamma * next_v * not_done - values[t];
        acc = delta + gamma * lambda * not_done * acc;
        advantages[t] = acc;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

/// Brute-force expansion of the GAE recursion, kept as an independent oracle
/// for tests and the acceptance suite: A_t = sum_k (gamma*lambda)^k delta_{t+k}
/// with the product truncated at the first done.
pub fn gae_brute_force(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let t_len = rewards.len();
    let delta = |t: usize| {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let next_v = if t + 1 < t_len { values[t + 1] } else { bootstrap };
        rewards[t] + gamma * next_v * not_done - values[t]
    };
    let mut advantages = vec![0.0; t_len];
    for t in 0..t_len {
        let mut a = 0.0;
        let mut w = 1.0;
        for k in t..t_len {
            a += w * delta(k);
            if dones[k] {
                break;
            }
            w *= gamma * lambda;
        }
        advantages[t] = a;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lambda_zero_is_one_step_td() {
        let rewards = [1.0, -0.5, 2.0];
        let values = [0.3, 0.7, -0.2];
        let dones = [false, false, false];
        let (adv, _) = compute_gae(&rewards, &values, &dones, 0.5, 0.99, 0.0).unwrap();
        for t in 0..3 {
            let next_v = if t + 1 < 3 { values[t + 1] } else { 0.5 };
            let delta = rewards[t] + 0.99 * next_v - values[t];
            assert!((adv[t] - delta).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_reduction() {
        // gamma = 1, lambda = 1, V = 0, single terminated episode:
        // A_t equals the reward-to-go.
        let rewards = [1.0, 2.0, 3.0, 4.0];
        let values = [0.0; 4];
        let dones = [false, false, false, true];
        let (adv, ret) = compute_gae(&rewards, &values, &dones, 9.9, 1.0, 1.0).unwrap();
        assert_eq!(adv, vec![10.0, 9.0, 7.0, 4.0]);
        assert_eq!(ret, adv);
    }

    #[test]
    fn matches_brute_force_on_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let t_len = rng.random_range(1..=10);
            let rewards: Vec<f64> = (0..t_len).map(|_| rng.random_range(-2.0..2.0)).collect();
            let values: Vec<f64> = (0..t_len).map(|_| rng.random_range(-2.0..2.0)).collect();
            let dones: Vec<bool> = (0..t_len).map(|_| rng.random_bool(0.25)).collect();
            let bootstrap = rng.random_range(-2.0..2.0);
            let gamma = rng.random_range(0.8..1.0);
            let lambda = rng.random_range(0.0..1.0);
            let (a, r) = compute_gae(&rewards, &values, &dones, bootstrap, gamma, lambda).unwrap();
            let (ao, ro) = gae_brute_force(&rewards, &values, &dones, bootstrap, gamma, lambda);
            for t in 0..t_len {
                assert!((a[t] - ao[t]).abs() < 1e-10);
                assert!((r[t] - ro[t]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(compute_gae(&[1.0], &[0.0, 0.0], &[false], 0.0, 0.99, 0.95).is_err());
    }
}
