//! Bias-corrected Adam over a `ParameterSet`.

use crate::error::{Error, Result};
use crate::nn::mlp::{MlpSpec, ParameterSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 3e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    /// First-moment accumulator, same shape as the parameters.
    pub m: ParameterSet,
    /// Second-moment accumulator.
    pub v: ParameterSet,
    pub step: u64,
}

impl AdamState {
    pub fn new(spec: &MlpSpec, config: AdamConfig) -> Self {
        Self { config, m: ParameterSet::zeros(spec), v: ParameterSet::zeros(spec), step: 0 }
    }
}

/// One Adam update in place. Rejects non-finite gradients without touching
/// the parameters or the moments.
pub fn adam_step(state: &mut AdamState, params: &mut ParameterSet, grads: &ParameterSet) -> Result<()> {
    if params.layers.len() != grads.layers.len()
        || params
            .layers
            .iter()
            .zip(&grads.layers)
            .any(|(p, g)| p.weight.dim() != g.weight.dim() || p.bias.len() != g.bias.len())
    {
        return Err(Error::DimensionMismatch("gradient shape does not match parameters".into()));
    }
    if !grads.all_finite() {
        return Err(Error::NonFinite("gradients passed to adam_step".into()));
    }

    let c = state.config;
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - c.beta1.powf(t);
    let bc2 = 1.0 - c.beta2.powf(t);

    for l in 0..params.layers.len() {
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
        };
        let (pw, mw, vw, gw) = (
            &mut params.layers[l].weight,
            &mut state.m.layers[l].weight,
            &mut state.v.layers[l].weight,
            &grads.layers[l].weight,
        );
        for ((p, (m, v)), &g) in pw.iter_mut().zip(mw.iter_mut().zip(vw.iter_mut())).zip(gw.iter()) {
            update(p, m, v, g);
        }
        let (pb, mb, vb, gb) = (
            &mut params.layers[l].bias,
            &mut state.m.layers[l].bias,
            &mut state.v.layers[l].bias,
            &grads.layers[l].bias,
        );
        for ((p, (m, v)), &g) in pb.iter_mut().zip(mb.iter_mut().zip(vb.iter_mut())).zip(gb.iter()) {
            update(p, m, v, g);
        }
    }
    Ok(())
}
