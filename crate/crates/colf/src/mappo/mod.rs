//! PPO machinery for the two-agent centralized-critic setup: GAE,
//! clipped losses, rollout collection, and the update loop.

pub mod gae;
pub mod loss;
pub mod rollout;
pub mod update;

pub use gae::{compute_gae, gae_brute_force};
pub use loss::{actor_clip_loss, clip_objective, value_clip_loss, ActorLoss};
pub use rollout::{collect_rollouts, RolloutBatch, RolloutStats};
pub use update::{
    actor_loss_and_grads, clip_grad_norm, critic_loss_and_grads, normalize_advantages,
    ppo_update, LossReport, TrainConfig,
};
