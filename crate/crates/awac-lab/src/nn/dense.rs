//! Dense networks with cached forward passes and exact reverse-mode
//! gradients, including gradients with respect to the input (needed when a
//! policy gradient must flow through a critic's action input).

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::NnError;

/// One affine layer. `w` has shape `(out, in)`; the layer computes
/// `x · w^T + b` on row-major batches.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// A stack of linear layers with rectified-linear hidden activations and an
/// identity output activation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<LinearLayer>,
}

/// Cached intermediate state from [`DenseNet::forward_cached`], consumed by
/// [`DenseNet::backward`]. Holding the cache is the proof that a forward
/// pass happened, so a backward call can never observe stale activations.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Array2<f64>,
    /// Pre-activation values per layer, batch-major.
    pre: Vec<Array2<f64>>,
}

/// Parameter gradients shaped exactly like the network's layers.
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    w: Array2::zeros(l.w.dim()),
                    b: Array1::zeros(l.b.len()),
                })
                .collect(),
        }
    }

    /// Flattens in the same order as [`DenseNet`] flat parameter access:
    /// per layer, row-major weights then biases.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.w.mapv_inplace(|v| v * s);
            l.b.mapv_inplace(|v| v * s);
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        assert_eq!(self.layers.len(), other.layers.len(), "gradient layer counts differ");
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w += &b.w;
            a.b += &b.b;
        }
    }

    /// The first non-finite coordinate, if any, as (layer, tensor, index).
    pub fn first_non_finite(&self) -> Option<(usize, &'static str, usize)> {
        for (li, l) in self.layers.iter().enumerate() {
            if let Some(i) = l.w.iter().position(|v| !v.is_finite()) {
                return Some((li, "w", i));
            }
            if let Some(i) = l.b.iter().position(|v| !v.is_finite()) {
                return Some((li, "b", i));
            }
        }
        None
    }
}

impl DenseNet {
    /// Initializes with uniform draws in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// for both weights and biases. `sizes` lists every width, input first.
    pub fn init(sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(sizes.len() >= 2, "a net needs at least input and output widths");
        assert!(sizes.iter().all(|&s| s > 0), "layer widths must be positive");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for win in sizes.windows(2) {
            let (n_in, n_out) = (win[0], win[1]);
            let bound = 1.0 / (n_in as f64).sqrt();
            let w = Array2::from_shape_fn((n_out, n_in), |_| rng.random_range(-bound..bound));
            let b = Array1::from_shape_fn(n_out, |_| rng.random_range(-bound..bound));
            layers.push(LinearLayer { w, b });
        }
        DenseNet { layers }
    }

    pub fn from_layers(layers: Vec<LinearLayer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Checkpoint("a net needs at least one layer".into()));
        }
        for win in layers.windows(2) {
            if win[1].w.dim().1 != win[0].w.dim().0 {
                return Err(NnError::ShapeMismatch {
                    what: "layer input width",
                    expected: win[0].w.dim().0,
                    got: win[1].w.dim().1,
                });
            }
        }
        for l in &layers {
            if l.b.len() != l.w.dim().0 {
                return Err(NnError::ShapeMismatch {
                    what: "bias width",
                    expected: l.w.dim().0,
                    got: l.b.len(),
                });
            }
        }
        Ok(DenseNet { layers })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].w.dim().1];
        s.extend(self.layers.iter().map(|l| l.w.dim().0));
        s
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].w.dim().1
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().w.dim().0
    }

    pub fn layers(&self) -> &[LinearLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LinearLayer] {
        &mut self.layers
    }

    /// Forward pass over a row-major batch `(batch, input_width)`.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        self.forward_cached(x).0
    }

    /// Forward pass for a single input row.
    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        let input = Array2::from_shape_vec((1, x.len()), x.to_vec()).unwrap();
        self.forward(&input).row(0).to_vec()
    }

    /// Forward pass that also returns the activation cache needed by
    /// [`Self::backward`].
    pub fn forward_cached(&self, x: &Array2<f64>) -> (Array2<f64>, ForwardCache) {
        assert_eq!(
            x.ncols(),
            self.input_width(),
            "input width {} does not match the net's first layer {}",
            x.ncols(),
            self.input_width()
        );
        let n = self.layers.len();
        let mut pre = Vec::with_capacity(n);
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.w.t()) + &layer.b;
            pre.push(z.clone());
            a = if i + 1 < n { z.mapv(|v| v.max(0.0)) } else { z };
        }
        (a, ForwardCache { input: x.clone(), pre })
    }

    /// Exact reverse-mode pass. `grad_out` is the loss gradient at the
    /// network output, `(batch, output_width)`. Returns parameter gradients
    /// and the loss gradient with respect to the input batch.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Array2<f64>) -> (Gradients, Array2<f64>) {
        let n = self.layers.len();
        assert_eq!(cache.pre.len(), n, "cache does not belong to this net");
        assert_eq!(grad_out.ncols(), self.output_width(), "output gradient width mismatch");
        let mut grads = Vec::with_capacity(n);
        let mut delta = grad_out.clone();
        for l in (0..n).rev() {
            let a_prev = if l == 0 {
                cache.input.clone()
            } else {
                cache.pre[l - 1].mapv(|v| v.max(0.0))
            };
            let gw = delta.t().dot(&a_prev);
            let gb = delta.sum_axis(Axis(0));
            grads.push(LayerGrad { w: gw, b: gb });
            let upstream = delta.dot(&self.layers[l].w);
            delta = if l == 0 {
                upstream
            } else {
                &upstream * &cache.pre[l - 1].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 })
            };
        }
        grads.reverse();
        (Gradients { layers: grads }, delta)
    }

    /// Flat parameter count, ordering per layer: row-major weights, then
    /// biases.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn get_param(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.w.len() {
                return *l.w.as_slice().unwrap().get(idx).unwrap();
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                return l.b[idx];
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut idx: usize, value: f64) {
        for l in &mut self.layers {
            if idx < l.w.len() {
                l.w.as_slice_mut().unwrap()[idx] = value;
                return;
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                l.b[idx] = value;
                return;
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }
}

/// Mean squared error of a scalar-output net against per-row targets, with
/// its exact parameter gradients. Used by critic and value-function
/// regression.
pub fn mse_loss_grad(net: &DenseNet, inputs: &Array2<f64>, targets: &Array1<f64>) -> (f64, Gradients) {
    assert_eq!(net.output_width(), 1, "mse_loss_grad expects a scalar-output net");
    assert_eq!(inputs.nrows(), targets.len(), "batch and target sizes differ");
    let batch = inputs.nrows() as f64;
    let (out, cache) = net.forward_cached(inputs);
    let residual = &out.column(0).to_owned() - targets;
    let loss = residual.iter().map(|r| r * r).sum::<f64>() / batch;
    let grad_out = residual.mapv(|r| 2.0 * r / batch).insert_axis(Axis(1));
    let (grads, _) = net.backward(&cache, &grad_out);
    (loss, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use ndarray::arr2;

    #[test]
    fn zero_weights_pass_bias_through() {
        let mut rng = fixtures::rng(1);
        let mut net = DenseNet::init(&[3, 2], &mut rng);
        net.layers_mut()[0].w.fill(0.0);
        net.layers_mut()[0].b.assign(&ndarray::arr1(&[1.5, -0.5]));
        let out = net.forward_one(&[9.0, -4.0, 2.0]);
        assert_eq!(out, vec![1.5, -0.5]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut rng = fixtures::rng(2);
        let mut net = DenseNet::init(&[2, 2], &mut rng);
        net.layers_mut()[0].w.assign(&arr2(&[[1.0, 0.0], [0.0, 1.0]]));
        net.layers_mut()[0].b.fill(0.0);
        let out = net.forward_one(&[0.3, -0.7]);
        assert_eq!(out, vec![0.3, -0.7]);
    }

    #[test]
    fn two_layer_forward_matches_hand_composition() {
        let mut rng = fixtures::rng(3);
        let mut net = DenseNet::init(&[2, 3, 1], &mut rng);
        net.layers_mut()[0].w.assign(&arr2(&[[1.0, -1.0], [0.5, 0.5], [-2.0, 0.0]]));
        net.layers_mut()[0].b.assign(&ndarray::arr1(&[0.1, -0.2, 0.3]));
        net.layers_mut()[1].w.assign(&arr2(&[[1.0, 2.0, 3.0]]));
        net.layers_mut()[1].b.assign(&ndarray::arr1(&[-0.5]));
        let x = [0.4, 0.6];
        // Hidden pre-activations: (0.4-0.6+0.1, 0.2+0.3-0.2, -0.8+0.3)
        //                       = (-0.1, 0.3, -0.5); relu: (0, 0.3, 0).
        // Output: 2*0.3 - 0.5 = 0.1.
        let out = net.forward_one(&x);
        assert!((out[0] - 0.1).abs() < 1e-12, "got {}", out[0]);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_parameter_gradients() {
        let mut rng = fixtures::rng(4);
        let net = DenseNet::init(&[3, 4, 2], &mut rng);
        let x = Array2::from_shape_fn((5, 3), |_| 0.7);
        let (_, cache) = net.forward_cached(&x);
        let g = Array2::zeros((5, 2));
        let (grads, gx) = net.backward(&cache, &g);
        assert!(grads.flat().iter().all(|&v| v == 0.0));
        assert!(gx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_net_squared_loss_matches_least_squares_gradient() {
        // Single linear layer, scalar output: the MSE gradient must equal
        // the least-squares residual formula (2/B) X^T (Xw + b - y) laid out
        // against this crate's (out, in) weight convention.
        let mut rng = fixtures::rng(5);
        let net = DenseNet::init(&[3, 1], &mut rng);
        let x = Array2::from_shape_fn((6, 3), |_| rng_f(&mut rng));
        let y = Array1::from_shape_fn(6, |_| rng_f(&mut rng));
        let (_, grads) = mse_loss_grad(&net, &x, &y);
        let pred = x.dot(&net.layers()[0].w.t()) + &net.layers()[0].b;
        let resid = &pred.column(0).to_owned() - &y;
        let expected_w = resid.dot(&x).mapv(|v| 2.0 * v / 6.0);
        let expected_b = resid.sum() * 2.0 / 6.0;
        for (g, e) in grads.layers[0].w.row(0).iter().zip(expected_w.iter()) {
            assert!((g - e).abs() < 1e-12);
        }
        assert!((grads.layers[0].b[0] - expected_b).abs() < 1e-12);
    }

    fn rng_f(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        use rand::Rng;
        rng.random_range(-1.0..1.0)
    }

    #[test]
    fn backward_matches_finite_differences() {
        // Random small nets, random quadratic-ish loss: every coordinate of
        // the analytic gradient must match central differences. Fixtures are
        // resampled when any pre-activation sits near a rectifier kink,
        // where the finite-difference oracle itself is invalid.
        let mut rng = fixtures::rng(6);
        for trial in 0..10 {
            let sizes = [3usize, 6, 4, 2];
            let (net, x, target) = loop {
                let net = DenseNet::init(&sizes, &mut rng);
                let x = Array2::from_shape_fn((4, 3), |_| rng_f(&mut rng));
                let target = Array2::from_shape_fn((4, 2), |_| rng_f(&mut rng));
                let (_, cache) = net.forward_cached(&x);
                let clear = cache.pre[..cache.pre.len() - 1]
                    .iter()
                    .all(|z| z.iter().all(|&v| v.abs() > 1e-3));
                if clear {
                    break (net, x, target);
                }
            };
            let loss_of = |net: &DenseNet| -> f64 {
                let out = net.forward(&x);
                (&out - &target).iter().map(|d| d * d).sum::<f64>()
            };
            let (out, cache) = net.forward_cached(&x);
            let grad_out = (&out - &target).mapv(|d| 2.0 * d);
            let (grads, _) = net.backward(&cache, &grad_out);
            let flat = grads.flat();
            let h = 1e-5;
            let mut net_pert = net.clone();
            for i in 0..net.param_count() {
                let p0 = net.get_param(i);
                net_pert.set_param(i, p0 + h);
                let up = loss_of(&net_pert);
                net_pert.set_param(i, p0 - h);
                let down = loss_of(&net_pert);
                net_pert.set_param(i, p0);
                let fd = (up - down) / (2.0 * h);
                let denom = fd.abs().max(flat[i].abs()).max(1e-8);
                let rel = (fd - flat[i]).abs() / denom;
                assert!(
                    rel <= 1e-4,
                    "trial {trial} param {i}: analytic {} vs fd {fd} (rel {rel})",
                    flat[i]
                );
            }
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = fixtures::rng(7);
        let net = DenseNet::init(&[3, 5, 1], &mut rng);
        let x0: Vec<f64> = (0..3).map(|_| rng_f(&mut rng)).collect();
        let loss_of = |x: &[f64]| net.forward_one(x)[0];
        let x = Array2::from_shape_vec((1, 3), x0.clone()).unwrap();
        let (_, cache) = net.forward_cached(&x);
        let (_, gx) = net.backward(&cache, &Array2::from_elem((1, 1), 1.0));
        let h = 1e-6;
        for d in 0..3 {
            let mut xp = x0.clone();
            xp[d] += h;
            let up = loss_of(&xp);
            xp[d] -= 2.0 * h;
            let down = loss_of(&xp);
            let fd = (up - down) / (2.0 * h);
            assert!(
                (fd - gx[[0, d]]).abs() < 1e-6,
                "input dim {d}: analytic {} vs fd {fd}",
                gx[[0, d]]
            );
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut rng = fixtures::rng(8);
        let l1 = LinearLayer {
            w: Array2::zeros((3, 2)),
            b: Array1::zeros(3),
        };
        let l2 = LinearLayer {
            w: Array2::zeros((1, 4)),
            b: Array1::zeros(1),
        };
        assert!(matches!(
            DenseNet::from_layers(vec![l1, l2]),
            Err(NnError::ShapeMismatch { .. })
        ));
        let _ = &mut rng;
    }

    #[test]
    fn flat_param_access_round_trips() {
        let mut rng = fixtures::rng(9);
        let mut net = DenseNet::init(&[2, 3, 1], &mut rng);
        let n = net.param_count();
        assert_eq!(n, 2 * 3 + 3 + 3 + 1);
        for i in 0..n {
            let v = net.get_param(i);
            net.set_param(i, v + 1.0);
            assert_eq!(net.get_param(i), v + 1.0);
            net.set_param(i, v);
        }
    }
}
