//! Leader-follower multi-agent PPO with a consistency-enhancing loss, built
//! around a deterministic 2D cooperative-pushing environment and an
//! execution-time grounding pipeline with injectable perceptual misalignment.
//!
//! Crate layout:
//! - [`nn`]: minimal MLP engine (forward/backward, diagonal Gaussians, Adam).
//! - [`env`]: quasi-static two-robot pushing environment.
//! - [`mappo`]: rollout collection, GAE, clipped PPO losses, update loop.
//! - [`policy`]: leader/follower actor pair, auxiliary leader-action
//!   predictor, consistency loss.
//! - [`grounding`]: similarity-map thresholding, pinhole back-projection,
//!   synthetic scene renderer, misalignment models.
//! - [`exp`]: experiment harness (train / eval / export).

pub mod env;
pub mod error;
pub mod exp;
pub mod grounding;
pub mod mappo;
pub mod nn;
pub mod policy;

pub use error::{Error, Result};
