//! Twin Q-networks with slowly tracking target copies.
//!
//! Each critic maps `concat(obs, action)` to a scalar. Two independent
//! critics are trained against the same targets and their pointwise minimum
//! is used wherever a Q-value is consumed, which damps overestimation.
//! Target copies track the online networks by Polyak averaging.

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;

use super::dense::{DenseNet, Gradients};
use super::NnError;

/// Stacks observation and action batches side by side into critic input.
pub fn concat_columns(obs: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    assert_eq!(obs.nrows(), actions.nrows(), "batch size mismatch");
    ndarray::concatenate(Axis(1), &[obs.view(), actions.view()]).unwrap()
}

#[derive(Debug, Clone)]
pub struct TwinCritic {
    pub q1: DenseNet,
    pub q2: DenseNet,
    pub target1: DenseNet,
    pub target2: DenseNet,
}

impl TwinCritic {
    /// Two fresh critics with the given hidden widths; targets start as
    /// exact copies of the online networks.
    pub fn init(obs_width: usize, action_width: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut sizes = vec![obs_width + action_width];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let q1 = DenseNet::init(&sizes, rng);
        let q2 = DenseNet::init(&sizes, rng);
        let target1 = q1.clone();
        let target2 = q2.clone();
        TwinCritic { q1, q2, target1, target2 }
    }

    pub fn input_width(&self) -> usize {
        self.q1.input_width()
    }

    /// `min(Q1, Q2)` from the online networks, one value per row.
    pub fn q_min(&self, inputs: &Array2<f64>) -> Array1<f64> {
        let a = self.q1.forward(inputs);
        let b = self.q2.forward(inputs);
        Array1::from_iter(a.column(0).iter().zip(b.column(0)).map(|(x, y)| x.min(*y)))
    }

    /// `min(Q1, Q2)` from the target networks.
    pub fn q_min_target(&self, inputs: &Array2<f64>) -> Array1<f64> {
        let a = self.target1.forward(inputs);
        let b = self.target2.forward(inputs);
        Array1::from_iter(a.column(0).iter().zip(b.column(0)).map(|(x, y)| x.min(*y)))
    }

    /// `min(Q1, Q2)` per row together with the gradient of that minimum
    /// with respect to the input columns. The gradient flows through
    /// whichever critic attains the minimum on each row, matching the
    /// subgradient convention used by the actor losses.
    pub fn q_min_with_input_grad(&self, inputs: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
        let batch = inputs.nrows();
        let (out1, cache1) = self.q1.forward_cached(inputs);
        let (out2, cache2) = self.q2.forward_cached(inputs);
        let mut pick1 = Array2::zeros((batch, 1));
        let mut pick2 = Array2::zeros((batch, 1));
        let mut values = Array1::zeros(batch);
        for i in 0..batch {
            if out1[[i, 0]] <= out2[[i, 0]] {
                values[i] = out1[[i, 0]];
                pick1[[i, 0]] = 1.0;
            } else {
                values[i] = out2[[i, 0]];
                pick2[[i, 0]] = 1.0;
            }
        }
        let (_, g1) = self.q1.backward(&cache1, &pick1);
        let (_, g2) = self.q2.backward(&cache2, &pick2);
        (values, g1 + g2)
    }

    /// Mean squared Bellman error of both online critics against fixed
    /// `targets`, with parameter gradients for each. The loss reported is
    /// the sum of the two per-critic MSE terms.
    pub fn bellman_mse_grad(
        &self,
        inputs: &Array2<f64>,
        targets: &Array1<f64>,
    ) -> Result<(f64, Gradients, Gradients), NnError> {
        let (l1, g1) = super::dense::mse_loss_grad(&self.q1, inputs, targets);
        let (l2, g2) = super::dense::mse_loss_grad(&self.q2, inputs, targets);
        Ok((l1 + l2, g1, g2))
    }

    /// Moves each target network a fraction `tau` toward its online
    /// counterpart: `target = (1 - tau) * target + tau * online`.
    pub fn polyak_update(&mut self, tau: f64) {
        assert!((0.0..=1.0).contains(&tau), "tau must lie in [0, 1], got {tau}");
        for (target, online) in [(&mut self.target1, &self.q1), (&mut self.target2, &self.q2)] {
            for (tl, ol) in target.layers_mut().iter_mut().zip(online.layers()) {
                tl.w.zip_mut_with(&ol.w, |t, o| *t = (1.0 - tau) * *t + tau * *o);
                tl.b.zip_mut_with(&ol.b, |t, o| *t = (1.0 - tau) * *t + tau * *o);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use ndarray::array;

    fn critic_param_span(c: &TwinCritic) -> (f64, f64) {
        (c.q1.get_param(0), c.target1.get_param(0))
    }

    #[test]
    fn concat_stacks_columns_in_order() {
        let obs = array![[1.0, 2.0], [3.0, 4.0]];
        let act = array![[5.0], [6.0]];
        let joined = concat_columns(&obs, &act);
        assert_eq!(joined, array![[1.0, 2.0, 5.0], [3.0, 4.0, 6.0]]);
    }

    #[test]
    fn targets_start_equal_to_online() {
        let mut rng = fixtures::rng(40);
        let critic = TwinCritic::init(3, 2, &[8], &mut rng);
        for i in 0..critic.q1.param_count() {
            assert_eq!(critic.q1.get_param(i), critic.target1.get_param(i));
            assert_eq!(critic.q2.get_param(i), critic.target2.get_param(i));
        }
        // The two online critics must differ (independent initialization).
        let same = (0..critic.q1.param_count())
            .all(|i| critic.q1.get_param(i) == critic.q2.get_param(i));
        assert!(!same, "twin critics should start at different parameters");
    }

    #[test]
    fn q_min_is_pointwise_minimum() {
        let mut rng = fixtures::rng(41);
        let critic = TwinCritic::init(2, 1, &[6], &mut rng);
        let inputs = Array2::from_shape_fn((7, 3), |_| {
            use rand::Rng;
            rng.random_range(-1.0..1.0)
        });
        let a = critic.q1.forward(&inputs);
        let b = critic.q2.forward(&inputs);
        let m = critic.q_min(&inputs);
        for i in 0..7 {
            assert_eq!(m[i], a[[i, 0]].min(b[[i, 0]]));
        }
    }

    #[test]
    fn polyak_endpoints_freeze_and_copy() {
        let mut rng = fixtures::rng(42);
        let mut critic = TwinCritic::init(2, 1, &[4], &mut rng);
        // Nudge online away from target first.
        critic.q1.set_param(0, critic.q1.get_param(0) + 1.0);
        let (online, target) = critic_param_span(&critic);
        assert_ne!(online, target);

        critic.polyak_update(0.0);
        let (_, target_after_zero) = critic_param_span(&critic);
        assert_eq!(target_after_zero, target, "tau = 0 must not move targets");

        critic.polyak_update(1.0);
        let (online_now, target_now) = critic_param_span(&critic);
        assert_eq!(target_now, online_now, "tau = 1 must copy online exactly");
    }

    #[test]
    fn polyak_half_twice_blends_quarter_three_quarters() {
        let mut rng = fixtures::rng(43);
        let mut critic = TwinCritic::init(2, 1, &[4], &mut rng);
        let t0 = critic.target1.get_param(0);
        let o = t0 + 2.0;
        critic.q1.set_param(0, o);
        critic.polyak_update(0.5);
        critic.polyak_update(0.5);
        let expect = 0.25 * t0 + 0.75 * o;
        assert!((critic.target1.get_param(0) - expect).abs() < 1e-15);
    }

    #[test]
    fn polyak_gap_decays_geometrically() {
        let mut rng = fixtures::rng(44);
        let mut critic = TwinCritic::init(2, 1, &[4], &mut rng);
        let tau = 0.005;
        let gap0 = 1.0;
        critic.q1.set_param(0, critic.target1.get_param(0) + gap0);
        let online = critic.q1.get_param(0);
        for _ in 0..200 {
            critic.polyak_update(tau);
        }
        let gap = online - critic.target1.get_param(0);
        let expect = gap0 * (1.0 - tau).powi(200);
        assert!(
            (gap - expect).abs() < 1e-12,
            "gap {gap} should decay to {expect}"
        );
    }

    #[test]
    fn bellman_mse_hits_zero_at_exact_targets() {
        let mut rng = fixtures::rng(45);
        let critic = TwinCritic::init(2, 1, &[5], &mut rng);
        let inputs = Array2::from_shape_fn((4, 3), |_| {
            use rand::Rng;
            rng.random_range(-1.0..1.0)
        });
        // Targets equal to q1's own outputs leave only q2's residual.
        let q1_out = critic.q1.forward(&inputs).column(0).to_owned();
        let (loss, _, _) = critic.bellman_mse_grad(&inputs, &q1_out).unwrap();
        let q2_out = critic.q2.forward(&inputs).column(0).to_owned();
        let expect: f64 = q1_out
            .iter()
            .zip(&q2_out)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / 4.0;
        assert!((loss - expect).abs() < 1e-12);
    }

    #[test]
    fn q_min_input_gradient_matches_finite_differences() {
        let mut rng = fixtures::rng(46);
        let critic = TwinCritic::init(2, 2, &[8, 8], &mut rng);
        use rand::Rng;
        let mut inputs = Array2::from_shape_fn((3, 4), |_| rng.random_range(-1.0..1.0));
        let (_, grad) = critic.q_min_with_input_grad(&inputs);
        let h = 1e-6;
        for i in 0..3 {
            for j in 0..4 {
                let x0 = inputs[[i, j]];
                inputs[[i, j]] = x0 + h;
                let up = critic.q_min(&inputs)[i];
                inputs[[i, j]] = x0 - h;
                let down = critic.q_min(&inputs)[i];
                inputs[[i, j]] = x0;
                let fd = (up - down) / (2.0 * h);
                let denom = fd.abs().max(grad[[i, j]].abs()).max(1e-8);
                assert!(
                    ((fd - grad[[i, j]]).abs() / denom) < 1e-4,
                    "({i},{j}): analytic {} vs fd {fd}",
                    grad[[i, j]]
                );
            }
        }
    }
}
