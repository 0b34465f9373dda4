//! MLP with ReLU hidden layers and a linear output layer.
//!
//! Weights are row-major `(out_dim, in_dim)` matrices. The forward pass keeps
//! a cache of layer inputs so the backward pass can produce exact gradients
//! for the computation graph.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Layer shape description for the actor/critic trunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
}

impl MlpSpec {
    /// Default trunk width used by every network in this crate.
    pub const DEFAULT_HIDDEN: [usize; 3] = [256, 256, 128];

    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig("all MLP dims must be >= 1".into()));
        }
        if hidden_dims.is_empty() {
            return Err(Error::InvalidConfig("hidden_dims must be non-empty".into()));
        }
        Ok(Self { input_dim, hidden_dims, output_dim })
    }

    pub fn with_default_hidden(input_dim: usize, output_dim: usize) -> Result<Self> {
        Self::new(input_dim, Self::DEFAULT_HIDDEN.to_vec(), output_dim)
    }

    /// `(in, out)` per layer, in forward order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    pub fn num_layers(&self) -> usize {
        self.hidden_dims.len() + 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|&(i, o)| o * i + o).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `(out_dim, in_dim)`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Per-layer weights and biases of one network.
///
/// The flat index order (layer 0 weight row-major, layer 0 bias, layer 1
/// weight, ...) is the declared serialization order of the checkpoint format.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub layers: Vec<LayerParams>,
}

impl ParameterSet {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .layer_dims()
            .iter()
            .map(|&(i, o)| LayerParams { weight: Array2::zeros((o, i)), bias: Array1::zeros(o) })
            .collect();
        Self { layers }
    }

    /// Orthogonal init (gain sqrt(2)) for hidden layers, gain 1 for the output
    /// layer. `small_rows` selects output rows whose weights are scaled by
    /// 0.01 (policy mean heads).
    pub fn init<R: Rng>(spec: &MlpSpec, small_rows: &[usize], rng: &mut R) -> Self {
        let dims = spec.layer_dims();
        let last = dims.len() - 1;
        let layers = dims
            .iter()
            .enumerate()
            .map(|(l, &(i, o))| {
                let gain = if l == last { 1.0 } else { std::f64::consts::SQRT_2 };
                let mut weight = orthogonal_init(o, i, gain, rng);
                if l == last {
                    for &r in small_rows {
                        weight.row_mut(r).mapv_inplace(|w| w * 0.01);
                    }
                }
                LayerParams { weight, bias: Array1::zeros(o) }
            })
            .collect();
        Self { layers }
    }

    pub fn matches(&self, spec: &MlpSpec) -> bool {
        let dims = spec.layer_dims();
        self.layers.len() == dims.len()
            && self
                .layers
                .iter()
                .zip(&dims)
                .all(|(l, &(i, o))| l.weight.dim() == (o, i) && l.bias.len() == o)
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }

    pub fn flat_len(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Flatten in declared index order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn from_flat(spec: &MlpSpec, flat: &[f64]) -> Result<Self> {
        let mut set = Self::zeros(spec);
        if flat.len() != set.flat_len() {
            return Err(Error::DimensionMismatch(format!(
                "flat parameter vector has {} entries, spec needs {}",
                flat.len(),
                set.flat_len()
            )));
        }
        let mut idx = 0;
        for l in &mut set.layers {
            for w in l.weight.iter_mut() {
                *w = flat[idx];
                idx += 1;
            }
            for b in l.bias.iter_mut() {
                *b = flat[idx];
                idx += 1;
            }
        }
        Ok(set)
    }

    /// `self += scale * other`, used by the optimizer and gradient tests.
    pub fn axpy(&mut self, scale: f64, other: &Self) {
        assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.zip_mut_with(&b.weight, |x, &y| *x += scale * y);
            a.bias.zip_mut_with(&b.bias, |x, &y| *x += scale * y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weight.mapv_inplace(|w| w * s);
            l.bias.mapv_inplace(|b| b * s);
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| {
                l.weight.iter().map(|w| w * w).sum::<f64>()
                    + l.bias.iter().map(|b| b * b).sum::<f64>()
            })
            .sum()
    }
}

/// Random matrix with orthonormal rows (or columns, whichever fits), scaled
/// by `gain`. Modified Gram-Schmidt on a Gaussian draw.
pub fn orthogonal_init<R: Rng>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Array2<f64> {
    let (m, n) = (rows.max(cols), rows.min(cols));
    let mut a = Array2::from_shape_fn((m, n), |_| rng.sample::<f64, _>(StandardNormal));
    for j in 0..n {
        for i in 0..j {
            let qi = a.column(i).to_owned();
            let proj = qi.dot(&a.column(j));
            let mut cj = a.column_mut(j);
            cj.zip_mut_with(&qi, |x, &q| *x -= proj * q);
        }
        let norm = a.column(j).dot(&a.column(j)).sqrt();
        a.column_mut(j).mapv_inplace(|x| x / norm);
    }
    let q = if rows >= cols { a } else { a.reversed_axes().as_standard_layout().to_owned() };
    q.mapv(|x| x * gain)
}

/// Activations recorded during a forward pass: `inputs[l]` is the input to
/// layer `l` (post-ReLU for l > 0).
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub inputs: Vec<Array2<f64>>,
}

fn check_forward(params: &ParameterSet, spec: &MlpSpec, x: &Array2<f64>) -> Result<()> {
    if !params.matches(spec) {
        return Err(Error::Contract("parameters do not match spec".into()));
    }
    if x.ncols() != spec.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "input has {} features, spec expects {}",
            x.ncols(),
            spec.input_dim
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mlp_forward input".into()));
    }
    Ok(())
}

/// Batched forward pass: `x` is `(batch, input_dim)`.
pub fn mlp_forward_batch(
    params: &ParameterSet,
    spec: &MlpSpec,
    x: &Array2<f64>,
) -> Result<(Array2<f64>, ForwardCache)> {
    check_forward(params, spec, x)?;
    let n_layers = params.layers.len();
    let mut inputs = Vec::with_capacity(n_layers);
    let mut act = x.to_owned();
    for (l, layer) in params.layers.iter().enumerate() {
        inputs.push(act.clone());
        let mut z = act.dot(&layer.weight.t());
        z += &layer.bias;
        act = if l + 1 < n_layers { z.mapv(|v| v.max(0.0)) } else { z };
    }
    Ok((act, ForwardCache { inputs }))
}

/// Single-sample forward pass.
pub fn mlp_forward(
    params: &ParameterSet,
    spec: &MlpSpec,
    x: &Array1<f64>,
) -> Result<(Array1<f64>, ForwardCache)> {
    let xb = x.view().insert_axis(Axis(0)).to_owned();
    let (y, cache) = mlp_forward_batch(params, spec, &xb)?;
    Ok((y.row(0).to_owned(), cache))
}

/// Batched backward pass. Returns parameter gradients (summed over the
/// batch) and the gradient with respect to the input.
pub fn mlp_backward_batch(
    params: &ParameterSet,
    spec: &MlpSpec,
    cache: &ForwardCache,
    grad_output: &Array2<f64>,
) -> Result<(ParameterSet, Array2<f64>)> {
    if !params.matches(spec) {
        return Err(Error::Contract("parameters do not match spec".into()));
    }
    if cache.inputs.len() != params.layers.len() {
        return Err(Error::Contract("cache does not match network depth".into()));
    }
    let batch = cache.inputs[0].nrows();
    if grad_output.dim() != (batch, spec.output_dim) {
        return Err(Error::Contract(format!(
            "grad_output shape {:?} does not match cache batch {} x output {}",
            grad_output.dim(),
            batch,
            spec.output_dim
        )));
    }
    for (l, (layer, input)) in params.layers.iter().zip(&cache.inputs).enumerate() {
        if input.dim() != (batch, layer.weight.ncols()) {
            return Err(Error::Contract(format!("cache layer {l} shape mismatch")));
        }
    }

    let mut grads = ParameterSet::zeros(spec);
    let mut delta = grad_output.to_owned();
    for l in (0..params.layers.len()).rev() {
        let input = &cache.inputs[l];
        grads.layers[l].weight = delta.t().dot(input);
        grads.layers[l].bias = delta.sum_axis(Axis(0));
        let mut grad_in = delta.dot(&params.layers[l].weight);
        if l > 0 {
            // ReLU mask from the post-activation input of this layer.
            grad_in.zip_mut_with(input, |g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            });
        }
        delta = grad_in;
    }
    Ok((grads, delta))
}

/// Single-sample backward pass.
pub fn mlp_backward(
    params: &ParameterSet,
    spec: &MlpSpec,
    cache: &ForwardCache,
    grad_output: &Array1<f64>,
) -> Result<(ParameterSet, Array1<f64>)> {
    let g = grad_output.view().insert_axis(Axis(0)).to_owned();
    let (grads, gin) = mlp_backward_batch(params, spec, cache, &g)?;
    Ok((grads, gin.row(0).to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params<R: Rng>(spec: &MlpSpec, rng: &mut R) -> ParameterSet {
        let mut p = ParameterSet::zeros(spec);
        for l in &mut p.layers {
            l.weight.mapv_inplace(|_| rng.sample::<f64, _>(StandardNormal) * 0.5);
            l.bias.mapv_inplace(|_| rng.sample::<f64, _>(StandardNormal) * 0.1);
        }
        p
    }

    #[test]
    fn zero_weights_output_is_last_bias() {
        let spec = MlpSpec::new(4, vec![8, 8], 3).unwrap();
        let mut params = ParameterSet::zeros(&spec);
        params.layers[2].bias = array![1.0, -2.0, 0.5];
        let x = array![0.3, -1.0, 2.0, 0.0];
        let (y, _) = mlp_forward(&params, &spec, &x).unwrap();
        assert_eq!(y, array![1.0, -2.0, 0.5]);
    }

    #[test]
    fn relu_kills_negative_hidden() {
        let spec = MlpSpec::new(1, vec![1], 1).unwrap();
        let mut params = ParameterSet::zeros(&spec);
        params.layers[0].weight[[0, 0]] = 1.0;
        params.layers[1].weight[[0, 0]] = 1.0;
        let (y, _) = mlp_forward(&params, &spec, &array![-2.0]).unwrap();
        assert_eq!(y[0], 0.0);
    }

    /// Independent naive per-element matmul oracle.
    fn naive_forward(params: &ParameterSet, x: &[f64]) -> Vec<f64> {
        let mut act: Vec<f64> = x.to_vec();
        let n = params.layers.len();
        for (l, layer) in params.layers.iter().enumerate() {
            let out = layer.bias.len();
            let mut next = vec![0.0; out];
            for o in 0..out {
                let mut s = layer.bias[o];
                for (i, &a) in act.iter().enumerate() {
                    s += layer.weight[[o, i]] * a;
                }
                next[o] = if l + 1 < n && s < 0.0 { 0.0 } else { s };
            }
            act = next;
        }
        act
    }

    #[test]
    fn forward_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = MlpSpec::new(5, vec![11, 7], 4).unwrap();
        for _ in 0..10 {
            let params = random_params(&spec, &mut rng);
            let x = Array1::from_shape_fn(5, |_| rng.sample::<f64, _>(StandardNormal));
            let (y, _) = mlp_forward(&params, &spec, &x).unwrap();
            let oracle = naive_forward(&params, x.as_slice().unwrap());
            for (a, b) in y.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn forward_is_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = MlpSpec::new(6, vec![16, 16], 2).unwrap();
        let params = random_params(&spec, &mut rng);
        let x = Array1::from_shape_fn(6, |_| rng.sample::<f64, _>(StandardNormal));
        let (y1, _) = mlp_forward(&params, &spec, &x).unwrap();
        let (y2, _) = mlp_forward(&params, &spec, &x).unwrap();
        assert!(y1.iter().zip(y2.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn forward_rejects_bad_input() {
        let spec = MlpSpec::new(3, vec![4], 2).unwrap();
        let params = ParameterSet::zeros(&spec);
        assert!(mlp_forward(&params, &spec, &array![1.0, 2.0]).is_err());
        assert!(mlp_forward(&params, &spec, &array![1.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn backward_zero_grad_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = MlpSpec::new(3, vec![5], 2).unwrap();
        let params = random_params(&spec, &mut rng);
        let x = array![0.5, -0.2, 1.0];
        let (_, cache) = mlp_forward(&params, &spec, &x).unwrap();
        let (grads, gin) = mlp_backward(&params, &spec, &cache, &array![0.0, 0.0]).unwrap();
        assert_eq!(grads.sq_norm(), 0.0);
        assert_eq!(gin.iter().map(|v| v * v).sum::<f64>(), 0.0);
    }

    #[test]
    fn backward_single_linear_layer_analytic() {
        // One layer => no hidden ReLU, y = Wx + b.
        let spec = MlpSpec::new(2, vec![3], 2).unwrap();
        // Set hidden weights to pass-through-ish? Use direct: trunk [3] then
        // linear out; instead verify on the output layer gradient formula by
        // using positive activations.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = random_params(&spec, &mut rng);
        let x = array![0.4, 0.9];
        let (_, cache) = mlp_forward(&params, &spec, &x).unwrap();
        let g = array![1.5, -0.7];
        let (grads, _) = mlp_backward(&params, &spec, &cache, &g).unwrap();
        // grad_W_last = g . h^T, grad_b_last = g, with h the hidden activation.
        let h = &cache.inputs[1];
        for o in 0..2 {
            assert!((grads.layers[1].bias[o] - g[o]).abs() < 1e-15);
            for i in 0..3 {
                assert!((grads.layers[1].weight[[o, i]] - g[o] * h[[0, i]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = MlpSpec::new(4, vec![8, 6], 3).unwrap();
        for _ in 0..3 {
            let params = random_params(&spec, &mut rng);
            let x = Array1::from_shape_fn(4, |_| rng.sample::<f64, _>(StandardNormal));
            let g = Array1::from_shape_fn(3, |_| rng.sample::<f64, _>(StandardNormal));
            let (_, cache) = mlp_forward(&params, &spec, &x).unwrap();
            let (grads, _) = mlp_backward(&params, &spec, &cache, &g).unwrap();

            // Scalar loss L = g . f(x); central finite differences in the
            // flattened parameter vector.
            let flat = params.to_flat();
            let grad_flat = grads.to_flat();
            let h = 1e-5;
            let mut max_rel = 0.0f64;
            for k in (0..flat.len()).step_by(7) {
                let mut fp = flat.clone();
                fp[k] += h;
                let pp = ParameterSet::from_flat(&spec, &fp).unwrap();
                let (yp, _) = mlp_forward(&pp, &spec, &x).unwrap();
                fp[k] -= 2.0 * h;
                let pm = ParameterSet::from_flat(&spec, &fp).unwrap();
                let (ym, _) = mlp_forward(&pm, &spec, &x).unwrap();
                let fd = (g.dot(&yp) - g.dot(&ym)) / (2.0 * h);
                let denom = grad_flat[k].abs().max(fd.abs()).max(1e-6);
                max_rel = max_rel.max((grad_flat[k] - fd).abs() / denom);
            }
            assert!(max_rel < 1e-6, "max relative error {max_rel}");
        }
    }

    #[test]
    fn backward_rejects_stale_cache() {
        let spec = MlpSpec::new(3, vec![4], 2).unwrap();
        let other = MlpSpec::new(5, vec![4], 2).unwrap();
        let params = ParameterSet::zeros(&spec);
        let other_params = ParameterSet::zeros(&other);
        let (_, cache) = mlp_forward(&other_params, &other, &Array1::ones(5)).unwrap();
        assert!(mlp_backward(&params, &spec, &cache, &array![1.0, 1.0]).is_err());
    }

    #[test]
    fn orthogonal_init_rows_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = orthogonal_init(4, 9, 1.0, &mut rng);
        for i in 0..4 {
            for j in 0..4 {
                let d = w.row(i).dot(&w.row(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-10, "({i},{j}) -> {d}");
            }
        }
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = MlpSpec::new(3, vec![4, 5], 2).unwrap();
        let params = random_params(&spec, &mut rng);
        let back = ParameterSet::from_flat(&spec, &params.to_flat()).unwrap();
        assert_eq!(params, back);
    }
}
