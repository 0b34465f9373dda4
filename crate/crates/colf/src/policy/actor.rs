//! Actor network: shared ReLU trunk with Gaussian policy heads and,
//! optionally, auxiliary heads predicting the leader's action distribution.
//!
//! Output layout per sample: [mean, log_std_raw] and, with auxiliary heads,
//! [mean, log_std_raw, aux_mean, aux_log_std_raw]. Raw log-std outputs are
//! clamped to [LOG_STD_MIN, LOG_STD_MAX]; the clamp mask is kept so
//! gradients vanish at the bounds.

use ndarray::{s, Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{
    mlp_backward_batch, mlp_forward_batch, AdamConfig, AdamState, DiagGaussian, ForwardCache,
    MlpSpec, ParameterSet, LOG_STD_MAX, LOG_STD_MIN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    Sample,
    Mean,
}

#[derive(Debug, Clone)]
pub struct ActorForward {
    pub mean: Array2<f64>,
    pub log_std: Array2<f64>,
    /// 1 where the raw log-std is inside the clamp, 0 at the bounds.
    pub log_std_mask: Array2<f64>,
    pub aux_mean: Option<Array2<f64>>,
    pub aux_log_std: Option<Array2<f64>>,
    pub aux_mask: Option<Array2<f64>>,
    pub cache: ForwardCache,
}

#[derive(Debug, Clone)]
pub struct ActorNet {
    pub spec: MlpSpec,
    pub params: ParameterSet,
    pub adam: AdamState,
    pub obs_dim: usize,
    pub action_dim: usize,
    /// Whether this actor carries auxiliary leader-action heads.
    pub aux: bool,
}

fn clamp_split(raw: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let clamped = raw.mapv(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
    let mask = raw.mapv(|v| if v > LOG_STD_MIN && v < LOG_STD_MAX { 1.0 } else { 0.0 });
    (clamped, mask)
}

impl ActorNet {
    pub fn new<R: Rng>(
        obs_dim: usize,
        action_dim: usize,
        aux: bool,
        adam: AdamConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let heads = if aux { 4 } else { 2 };
        let spec = MlpSpec::with_default_hidden(obs_dim, heads * action_dim)?;
        // Policy mean heads (own and predicted) start small.
        let mut small_rows: Vec<usize> = (0..action_dim).collect();
        if aux {
            small_rows.extend(2 * action_dim..3 * action_dim);
        }
        let params = ParameterSet::init(&spec, &small_rows, rng);
        let adam = AdamState::new(&spec, adam);
        Ok(Self { spec, params, adam, obs_dim, action_dim, aux })
    }

    pub fn forward_batch(&self, obs: &Array2<f64>) -> Result<ActorForward> {
        if obs.ncols() != self.obs_dim {
            return Err(Error::DimensionMismatch(format!(
                "actor expects {}-dim observations, got {}",
                self.obs_dim,
                obs.ncols()
            )));
        }
        let (out, cache) = mlp_forward_batch(&self.params, &self.spec, obs)?;
        let d = self.action_dim;
        let mean = out.slice(s![.., 0..d]).to_owned();
        let (log_std, log_std_mask) = clamp_split(&out.slice(s![.., d..2 * d]).to_owned());
        let (aux_mean, aux_log_std, aux_mask) = if self.aux {
            let am = out.slice(s![.., 2 * d..3 * d]).to_owned();
            let (als, mask) = clamp_split(&out.slice(s![.., 3 * d..4 * d]).to_owned());
            (Some(am), Some(als), Some(mask))
        } else {
            (None, None, None)
        };
        Ok(ActorForward { mean, log_std, log_std_mask, aux_mean, aux_log_std, aux_mask, cache })
    }

    /// Assemble head gradients into the network output gradient and
    /// backpropagate. Clamp masks are applied to the log-std gradients here.
    pub fn backward_heads(
        &self,
        fwd: &ActorForward,
        d_mean: &Array2<f64>,
        d_log_std: &Array2<f64>,
        d_aux_mean: Option<&Array2<f64>>,
        d_aux_log_std: Option<&Array2<f64>>,
    ) -> Result<ParameterSet> {
        let batch = fwd.mean.nrows();
        let d = self.action_dim;
        let heads = if self.aux { 4 } else { 2 };
        let mut grad_out = Array2::zeros((batch, heads * d));
        grad_out.slice_mut(s![.., 0..d]).assign(d_mean);
        grad_out.slice_mut(s![.., d..2 * d]).assign(&(d_log_std * &fwd.log_std_mask));
        if self.aux {
            if let Some(g) = d_aux_mean {
                grad_out.slice_mut(s![.., 2 * d..3 * d]).assign(g);
            }
            if let Some(g) = d_aux_log_std {
                let mask = fwd.aux_mask.as_ref().expect("aux mask");
                grad_out.slice_mut(s![.., 3 * d..4 * d]).assign(&(g * mask));
            }
        }
        let (grads, _) = mlp_backward_batch(&self.params, &self.spec, &fwd.cache, &grad_out)?;
        Ok(grads)
    }

    /// Own-action distribution and, when present, the auxiliary
    /// leader-action distribution for a single observation.
    pub fn dist(&self, obs: &[f64]) -> Result<(DiagGaussian, Option<DiagGaussian>)> {
        let x = Array2::from_shape_vec((1, obs.len()), obs.to_vec())
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        let fwd = self.forward_batch(&x)?;
        let own = DiagGaussian::new(fwd.mean.row(0).to_owned(), fwd.log_std.row(0).to_owned())?;
        let aux = match (&fwd.aux_mean, &fwd.aux_log_std) {
            (Some(m), Some(ls)) => {
                Some(DiagGaussian::new(m.row(0).to_owned(), ls.row(0).to_owned())?)
            }
            _ => None,
        };
        Ok((own, aux))
    }

    /// Select an action; `Mean` mode returns the distribution mean.
    pub fn act<R: Rng>(
        &self,
        obs: &[f64],
        mode: ActMode,
        rng: &mut R,
    ) -> Result<(Array1<f64>, f64, Option<DiagGaussian>)> {
        let (own, aux) = self.dist(obs)?;
        let action = match mode {
            ActMode::Sample => own.sample(rng),
            ActMode::Mean => own.mean.clone(),
        };
        let log_prob = own.log_prob(&action)?;
        Ok((action, log_prob, aux))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn leader_net() -> ActorNet {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        ActorNet::new(13, 3, false, AdamConfig::default(), &mut rng).unwrap()
    }

    fn follower_net() -> ActorNet {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        ActorNet::new(11, 3, true, AdamConfig::default(), &mut rng).unwrap()
    }

    #[test]
    fn head_dims() {
        assert_eq!(leader_net().spec.output_dim, 6);
        assert_eq!(follower_net().spec.output_dim, 12);
        assert_eq!(leader_net().spec.hidden_dims, vec![256, 256, 128]);
    }

    #[test]
    fn mean_mode_returns_mean() {
        let net = leader_net();
        let obs = vec![0.1; 13];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, lp, _) = net.act(&obs, ActMode::Mean, &mut rng).unwrap();
        let (dist, _) = net.dist(&obs).unwrap();
        assert_eq!(a, dist.mean);
        assert!((lp - dist.log_prob(&dist.mean).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sample_mode_reproducible() {
        let net = leader_net();
        let obs = vec![0.3; 13];
        let a1 = net.act(&obs, ActMode::Sample, &mut ChaCha8Rng::seed_from_u64(9)).unwrap().0;
        let a2 = net.act(&obs, ActMode::Sample, &mut ChaCha8Rng::seed_from_u64(9)).unwrap().0;
        assert!(a1.iter().zip(a2.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn goal_leakage_guard() {
        let net = follower_net();
        // A 13-vector must be rejected by the 11-input follower.
        assert!(net.dist(&vec![0.0; 13]).is_err());
    }

    #[test]
    fn goal_sensitivity_of_leader() {
        // Nonzero Jacobian with respect to the goal slice on a random net.
        let net = leader_net();
        let mut obs = vec![0.2; 13];
        let (d0, _) = net.dist(&obs).unwrap();
        obs[2] += 1e-3;
        let (d1, _) = net.dist(&obs).unwrap();
        let diff: f64 = d0.mean.iter().zip(d1.mean.iter()).map(|(a, b)| (a - b).abs()).sum();
        assert!(diff > 0.0, "leader output insensitive to goal");
    }

    #[test]
    fn aux_heads_share_trunk() {
        let mut net = follower_net();
        let obs = vec![0.1; 11];
        let (_, aux0) = net.dist(&obs).unwrap();
        // Perturb a trunk weight: the auxiliary prediction must move.
        net.params.layers[0].weight[[0, 0]] += 0.5;
        let (_, aux1) = net.dist(&obs).unwrap();
        let a0 = aux0.unwrap();
        let a1 = aux1.unwrap();
        let diff: f64 = a0.mean.iter().zip(a1.mean.iter()).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff > 0.0, "aux heads decoupled from trunk");
    }
}
