//! Leader/follower policy pairs, method wiring, and checkpointing.

pub mod actor;
pub mod ce;
pub mod critic;

pub use actor::{ActMode, ActorForward, ActorNet};
pub use ce::{ce_loss_from_heads, mi_bound_diagnostic, CeLoss};
pub use critic::CriticNet;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{global_state_dim, ObservationPair, FOLLOWER_OBS_DIM, LEADER_OBS_DIM};
use crate::error::{Error, Result};
use crate::nn::{
    read_checkpoint, write_checkpoint, AdamConfig, Checkpoint, MlpSpec, ParameterSet,
    LOG_STD_MAX, LOG_STD_MIN,
};

pub const ACTION_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mappo,
    MappoAac,
    Colf,
    ColfNoAac,
    ColfNoCe,
}

/// How a method wires observations, critic inputs, and losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wiring {
    pub follower_sees_goal: bool,
    pub follower_aux: bool,
    pub aac: bool,
    /// Whether the consistency loss is active (lambda_ce > 0).
    pub uses_ce: bool,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Mappo, Method::MappoAac, Method::Colf, Method::ColfNoAac, Method::ColfNoCe];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mappo => "mappo",
            Method::MappoAac => "mappo_aac",
            Method::Colf => "colf",
            Method::ColfNoAac => "colf_no_aac",
            Method::ColfNoCe => "colf_no_ce",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }

    pub fn wiring(self) -> Wiring {
        match self {
            Method::Mappo => Wiring {
                follower_sees_goal: true,
                follower_aux: false,
                aac: false,
                uses_ce: false,
            },
            Method::MappoAac => Wiring {
                follower_sees_goal: true,
                follower_aux: false,
                aac: true,
                uses_ce: false,
            },
            Method::Colf => Wiring {
                follower_sees_goal: false,
                follower_aux: true,
                aac: true,
                uses_ce: true,
            },
            Method::ColfNoAac => Wiring {
                follower_sees_goal: false,
                follower_aux: true,
                aac: false,
                uses_ce: true,
            },
            Method::ColfNoCe => Wiring {
                follower_sees_goal: false,
                follower_aux: true,
                aac: true,
                uses_ce: false,
            },
        }
    }
}

impl Wiring {
    pub fn follower_obs_dim(self) -> usize {
        if self.follower_sees_goal { LEADER_OBS_DIM } else { FOLLOWER_OBS_DIM }
    }

    pub fn lambda_ce(self, base: f64) -> f64 {
        if self.uses_ce { base } else { 0.0 }
    }

    /// Select the follower's wired observation from an observation pair.
    pub fn follower_input<'a>(self, pair: &'a ObservationPair) -> &'a [f64] {
        if self.follower_sees_goal { &pair.follower_with_goal } else { &pair.follower }
    }
}

/// A leader actor, follower actor, and shared centralized critic.
#[derive(Debug, Clone)]
pub struct PolicyPair {
    pub method: Method,
    pub n_goals: usize,
    pub leader: ActorNet,
    pub follower: ActorNet,
    pub critic: CriticNet,
}

impl PolicyPair {
    pub fn new(method: Method, n_goals: usize, adam: AdamConfig, seed: u64) -> Result<Self> {
        let w = method.wiring();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let leader = ActorNet::new(LEADER_OBS_DIM, ACTION_DIM, false, adam, &mut rng)?;
        let follower =
            ActorNet::new(w.follower_obs_dim(), ACTION_DIM, w.follower_aux, adam, &mut rng)?;
        let critic = CriticNet::new(global_state_dim(n_goals, w.aac), adam, &mut rng)?;
        Ok(Self { method, n_goals, leader, follower, critic })
    }

    pub fn wiring(&self) -> Wiring {
        self.method.wiring()
    }

    /// Set the Adam learning rate on all three networks (LR scheduling).
    pub fn set_lr(&mut self, lr: f64) {
        self.leader.adam.config.lr = lr;
        self.follower.adam.config.lr = lr;
        self.critic.adam.config.lr = lr;
    }

    /// Serialize the three parameter sets with a self-describing header.
    /// Extra key=value pairs (seed, iteration, scenario, ...) are appended.
    pub fn save(&self, path: &Path, extra: &[(String, String)]) -> Result<()> {
        let w = self.wiring();
        let mut header = vec![
            ("method".into(), self.method.name().to_string()),
            ("n_goals".into(), self.n_goals.to_string()),
            ("action_dim".into(), ACTION_DIM.to_string()),
            ("leader_obs_dim".into(), self.leader.obs_dim.to_string()),
            ("follower_obs_dim".into(), self.follower.obs_dim.to_string()),
            ("follower_aux".into(), w.follower_aux.to_string()),
            ("aac".into(), w.aac.to_string()),
            ("log_std_min".into(), LOG_STD_MIN.to_string()),
            ("log_std_max".into(), LOG_STD_MAX.to_string()),
        ];
        header.extend(extra.iter().cloned());
        let ckpt = Checkpoint {
            header,
            arrays: vec![
                ("leader".into(), self.leader.params.to_flat()),
                ("follower".into(), self.follower.params.to_flat()),
                ("critic".into(), self.critic.params.to_flat()),
            ],
        };
        write_checkpoint(path, &ckpt)
    }

    pub fn load(path: &Path) -> Result<(Self, Checkpoint)> {
        let ckpt = read_checkpoint(path)?;
        let method = Method::parse(ckpt.require("method")?)?;
        let n_goals: usize = ckpt
            .require("n_goals")?
            .parse()
            .map_err(|_| Error::Checkpoint("bad n_goals".into()))?;
        let w = method.wiring();
        let follower_obs_dim: usize = ckpt
            .require("follower_obs_dim")?
            .parse()
            .map_err(|_| Error::Checkpoint("bad follower_obs_dim".into()))?;
        if follower_obs_dim != w.follower_obs_dim() {
            return Err(Error::Checkpoint(format!(
                "follower_obs_dim {} inconsistent with method {}",
                follower_obs_dim,
                method.name()
            )));
        }
        // Structure comes from the wiring; parameters from the arrays.
        let mut pair = PolicyPair::new(method, n_goals, AdamConfig::default(), 0)?;
        pair.leader.params = load_params(&ckpt, "leader", &pair.leader.spec)?;
        pair.follower.params = load_params(&ckpt, "follower", &pair.follower.spec)?;
        pair.critic.params = load_params(&ckpt, "critic", &pair.critic.spec)?;
        Ok((pair, ckpt))
    }
}

fn load_params(ckpt: &Checkpoint, name: &str, spec: &MlpSpec) -> Result<ParameterSet> {
    let flat = ckpt.array(name)?;
    if flat.len() != spec.param_count() {
        return Err(Error::Checkpoint(format!(
            "array '{}' has {} values, expected {}",
            name,
            flat.len(),
            spec.param_count()
        )));
    }
    ParameterSet::from_flat(spec, flat)
}
