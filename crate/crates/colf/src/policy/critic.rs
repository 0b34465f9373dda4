//! Centralized value network over the global state.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{
    mlp_backward_batch, mlp_forward_batch, AdamConfig, AdamState, ForwardCache, MlpSpec,
    ParameterSet,
};

#[derive(Debug, Clone)]
pub struct CriticNet {
    pub spec: MlpSpec,
    pub params: ParameterSet,
    pub adam: AdamState,
    pub input_dim: usize,
}

impl CriticNet {
    pub fn new<R: Rng>(input_dim: usize, adam: AdamConfig, rng: &mut R) -> Result<Self> {
        let spec = MlpSpec::with_default_hidden(input_dim, 1)?;
        let params = ParameterSet::init(&spec, &[], rng);
        let adam = AdamState::new(&spec, adam);
        Ok(Self { spec, params, adam, input_dim })
    }

    pub fn forward_batch(&self, states: &Array2<f64>) -> Result<(Vec<f64>, ForwardCache)> {
        if states.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "critic expects {}-dim state, got {}",
                self.input_dim,
                states.ncols()
            )));
        }
        let (out, cache) = mlp_forward_batch(&self.params, &self.spec, states)?;
        Ok((out.column(0).to_vec(), cache))
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        let x = Array2::from_shape_vec((1, state.len()), state.to_vec())
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Ok(self.forward_batch(&x)?.0[0])
    }

    /// Backpropagate per-sample d(loss)/dV.
    pub fn backward(&self, cache: &ForwardCache, d_values: &[f64]) -> Result<ParameterSet> {
        let grad_out = Array2::from_shape_vec((d_values.len(), 1), d_values.to_vec())
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        let (grads, _) = mlp_backward_batch(&self.params, &self.spec, cache, &grad_out)?;
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_output_and_dim_guard() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = CriticNet::new(14, AdamConfig::default(), &mut rng).unwrap();
        assert_eq!(net.spec.output_dim, 1);
        let v = net.value(&vec![0.1; 14]).unwrap();
        assert!(v.is_finite());
        assert!(net.value(&vec![0.1; 11]).is_err());
    }
}
