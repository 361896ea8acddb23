//! Adaptive-moment optimizer with decoupled weight decay.
//!
//! The decay term is applied directly to the parameters, scaled by the
//! learning rate, rather than folded into the gradient; that keeps the
//! configured decay coefficient meaningful independent of the gradient
//! scale.

use super::dense::{DenseNet, Gradients, LayerGrad};
use super::NnError;
use ndarray::{Array1, Array2};

#[derive(Debug, Clone, Copy)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamWConfig {
    /// Learning rate 3e-4 with the given decoupled weight decay.
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamWConfig { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay }
    }
}

/// Optimizer state for one [`DenseNet`]: first and second moment
/// accumulators shaped like the parameters, plus the step count.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub cfg: AdamWConfig,
    step: u64,
    m: Vec<LayerGrad>,
    v: Vec<LayerGrad>,
}

impl AdamW {
    pub fn new(cfg: AdamWConfig, net: &DenseNet) -> Self {
        let zeros = || {
            net.layers()
                .iter()
                .map(|l| LayerGrad {
                    w: Array2::zeros(l.w.dim()),
                    b: Array1::zeros(l.b.len()),
                })
                .collect::<Vec<_>>()
        };
        AdamW { cfg, step: 0, m: zeros(), v: zeros() }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update. Rejects non-finite gradients before touching any
    /// parameter, naming the offending coordinate.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<(), NnError> {
        if let Some((layer, tensor, index)) = grads.first_non_finite() {
            return Err(NnError::NonFiniteGradient { layer, tensor, index });
        }
        assert_eq!(grads.layers.len(), self.m.len(), "gradient shape does not match optimizer state");
        self.step += 1;
        let t = self.step as i32;
        let AdamWConfig { lr, beta1, beta2, eps, weight_decay } = self.cfg;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for ((layer, g), (m, v)) in net
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * *p);
            };
            for ((p, &g), (m, v)) in layer
                .w
                .iter_mut()
                .zip(g.w.iter())
                .zip(m.w.iter_mut().zip(v.w.iter_mut()))
            {
                update(p, g, m, v);
            }
            for ((p, &g), (m, v)) in layer
                .b
                .iter_mut()
                .zip(g.b.iter())
                .zip(m.b.iter_mut().zip(v.b.iter_mut()))
            {
                update(p, g, m, v);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn zero_gradients_without_decay_leave_params_unchanged() {
        let mut rng = fixtures::rng(20);
        let mut net = DenseNet::init(&[2, 3, 1], &mut rng);
        let before = net.clone();
        let mut opt = AdamW::new(AdamWConfig::new(3e-4, 0.0), &net);
        let zeros = Gradients::zeros_like(&net);
        for _ in 0..10 {
            opt.step(&mut net, &zeros).unwrap();
        }
        assert_eq!(net, before);
        assert_eq!(opt.step_count(), 10);
    }

    #[test]
    fn constant_gradient_step_approaches_signed_learning_rate() {
        let mut rng = fixtures::rng(21);
        let mut net = DenseNet::init(&[1, 1], &mut rng);
        let mut opt = AdamW::new(AdamWConfig::new(3e-4, 0.0), &net);
        let mut grads = Gradients::zeros_like(&net);
        grads.layers[0].w[[0, 0]] = 0.7;
        grads.layers[0].b[0] = -2.3;
        let mut prev = (net.layers()[0].w[[0, 0]], net.layers()[0].b[0]);
        for _ in 0..200 {
            opt.step(&mut net, &grads).unwrap();
            prev = (net.layers()[0].w[[0, 0]], net.layers()[0].b[0]);
        }
        opt.step(&mut net, &grads).unwrap();
        let dw = net.layers()[0].w[[0, 0]] - prev.0;
        let db = net.layers()[0].b[0] - prev.1;
        assert!((dw + 3e-4).abs() < 1e-6, "positive gradient should step by -lr, got {dw}");
        assert!((db - 3e-4).abs() < 1e-6, "negative gradient should step by +lr, got {db}");
    }

    #[test]
    fn quadratic_loss_converges_to_minimum() {
        // Scalar quadratic 0.5 (p - c)^2 through a 1-parameter "net".
        let mut rng = fixtures::rng(22);
        let mut net = DenseNet::init(&[1, 1], &mut rng);
        net.layers_mut()[0].w[[0, 0]] = 0.0;
        net.layers_mut()[0].b[0] = 0.0;
        let c = 0.4;
        let mut opt = AdamW::new(AdamWConfig::new(3e-4, 0.0), &net);
        let mut steps = 0;
        for _ in 0..5000 {
            let p = net.layers()[0].b[0];
            let mut grads = Gradients::zeros_like(&net);
            grads.layers[0].b[0] = p - c;
            opt.step(&mut net, &grads).unwrap();
            steps += 1;
            if (net.layers()[0].b[0] - c).abs() < 1e-6 {
                break;
            }
        }
        let err = (net.layers()[0].b[0] - c).abs();
        assert!(err < 1e-6, "after {steps} steps the error is {err}");
    }

    #[test]
    fn weight_decay_shrinks_parameters_without_gradient() {
        let mut rng = fixtures::rng(23);
        let mut net = DenseNet::init(&[1, 1], &mut rng);
        net.layers_mut()[0].w[[0, 0]] = 1.0;
        let mut opt = AdamW::new(AdamWConfig::new(1e-2, 0.1), &net);
        let zeros = Gradients::zeros_like(&net);
        opt.step(&mut net, &zeros).unwrap();
        let w = net.layers()[0].w[[0, 0]];
        assert!((w - (1.0 - 1e-2 * 0.1)).abs() < 1e-15, "decoupled decay: got {w}");
    }

    #[test]
    fn non_finite_gradient_is_rejected_with_location() {
        let mut rng = fixtures::rng(24);
        let mut net = DenseNet::init(&[2, 2], &mut rng);
        let before = net.clone();
        let mut opt = AdamW::new(AdamWConfig::new(3e-4, 0.0), &net);
        let mut grads = Gradients::zeros_like(&net);
        grads.layers[0].w[[1, 0]] = f64::NAN;
        let err = opt.step(&mut net, &grads).unwrap_err();
        match err {
            NnError::NonFiniteGradient { layer, tensor, index } => {
                assert_eq!((layer, tensor, index), (0, "w", 2));
            }
            other => panic!("expected NonFiniteGradient, got {other:?}"),
        }
        assert_eq!(net, before, "a rejected step must not touch parameters");
    }
}
