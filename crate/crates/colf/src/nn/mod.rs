//! Minimal feedforward network engine: MLP forward/backward with explicit
//! caches, diagonal Gaussian distribution math, Adam, and parameter
//! serialization. Everything computes in f64; checkpoints store f32 on disk.

mod adam;
mod checkpoint;
mod gauss;
mod mlp;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use gauss::{
    entropy_batch, log_prob_batch, DiagGaussian, LOG_2PI, LOG_STD_MAX, LOG_STD_MIN,
};
pub use mlp::{
    mlp_backward, mlp_backward_batch, mlp_forward, mlp_forward_batch, orthogonal_init,
    ForwardCache, LayerParams, MlpSpec, ParameterSet,
};
