//! A density model of the data-collection policy: a diagonal Gaussian
//! over actions conditioned on state, fitted by maximum likelihood.
//!
//! Deliberately unimodal. When the data mixes distinct behavior modes
//! (a dataset policy plus a drifting fine-tuned policy), a single
//! Gaussian cannot track both, and its held-out likelihood on the recent
//! data degrades; the tracker below records exactly that series. The
//! same model serves as the density term for the density-penalized
//! actor baseline.
//!
//! Unlike the control policy, the head is not squashed to the action
//! box: the model only scores and is never sampled for control, and an
//! unsquashed Gaussian keeps every in-support log-density finite.

use ndarray::{s, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::harness::BufferObserver;
use crate::nn::{
    gaussian_log_pdf, AdamW, AdamWConfig, DenseNet, Gradients, NnError, LOG_STD_MAX, LOG_STD_MIN,
};
use crate::replay::Transition;

pub struct BehaviorDensityModel {
    pub net: DenseNet,
    action_dim: usize,
}

impl BehaviorDensityModel {
    pub fn new(net: DenseNet, action_dim: usize) -> Result<Self, NnError> {
        if net.output_width() != 2 * action_dim {
            return Err(NnError::ShapeMismatch {
                what: "density head width",
                expected: 2 * action_dim,
                got: net.output_width(),
            });
        }
        Ok(BehaviorDensityModel { net, action_dim })
    }

    pub fn init(
        obs_width: usize,
        action_dim: usize,
        hidden: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut sizes = vec![obs_width];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * action_dim);
        let net = DenseNet::init(&sizes, rng);
        BehaviorDensityModel { net, action_dim }
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn clamp_log_std(v: f64) -> f64 {
        v.clamp(LOG_STD_MIN, LOG_STD_MAX)
    }

    /// Log-densities for a batch of (state, action) rows.
    pub fn log_prob_batch(&self, states: &Array2<f64>, actions: &Array2<f64>) -> Vec<f64> {
        let out = self.net.forward(states);
        let a = self.action_dim;
        (0..states.nrows())
            .map(|i| {
                (0..a)
                    .map(|d| {
                        let mean = out[[i, d]];
                        let log_std = Self::clamp_log_std(out[[i, a + d]]);
                        gaussian_log_pdf(actions[[i, d]], mean, log_std)
                    })
                    .sum()
            })
            .collect()
    }

    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> f64 {
        let states = Array2::from_shape_vec((1, state.len()), state.to_vec()).unwrap();
        let actions = Array2::from_shape_vec((1, action.len()), action.to_vec()).unwrap();
        self.log_prob_batch(&states, &actions)[0]
    }

    /// Mean negative log-likelihood over the batch and its parameter
    /// gradients.
    pub fn nll_grad(
        &self,
        states: &Array2<f64>,
        actions: &Array2<f64>,
    ) -> Result<(f64, Gradients), NnError> {
        let n = states.nrows();
        if actions.nrows() != n || actions.ncols() != self.action_dim {
            return Err(NnError::ShapeMismatch {
                what: "density fit batch",
                expected: n * self.action_dim,
                got: actions.len(),
            });
        }
        let (out, cache) = self.net.forward_cached(states);
        let a = self.action_dim;
        let mut loss = 0.0;
        let mut g_out = Array2::zeros((n, 2 * a));
        let inv_n = 1.0 / n as f64;
        for i in 0..n {
            for d in 0..a {
                let mean = out[[i, d]];
                let raw = out[[i, a + d]];
                let log_std = Self::clamp_log_std(raw);
                let sigma = log_std.exp();
                let t = (actions[[i, d]] - mean) / sigma;
                loss -= inv_n * gaussian_log_pdf(actions[[i, d]], mean, log_std);
                g_out[[i, d]] = -inv_n * t / sigma;
                if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                    g_out[[i, a + d]] = inv_n * (1.0 - t * t);
                }
            }
        }
        let (grads, _) = self.net.backward(&cache, &g_out);
        Ok((loss, grads))
    }

    /// The head mean at one state, which for a diagonal Gaussian is also
    /// its mode.
    pub fn mean(&self, state: &[f64]) -> Vec<f64> {
        let states = Array2::from_shape_vec((1, state.len()), state.to_vec()).unwrap();
        let out = self.net.forward(&states);
        (0..self.action_dim).map(|d| out[[0, d]]).collect()
    }

    /// Log-density and its gradient with respect to the action, for
    /// density-penalized actor updates.
    pub fn log_prob_grad_action(&self, state: &[f64], action: &[f64]) -> (f64, Vec<f64>) {
        let states = Array2::from_shape_vec((1, state.len()), state.to_vec()).unwrap();
        let out = self.net.forward(&states);
        let a = self.action_dim;
        let mut logp = 0.0;
        let mut grad = vec![0.0; a];
        for d in 0..a {
            let mean = out[[0, d]];
            let log_std = Self::clamp_log_std(out[[0, a + d]]);
            let sigma = log_std.exp();
            logp += gaussian_log_pdf(action[d], mean, log_std);
            grad[d] = -(action[d] - mean) / (sigma * sigma);
        }
        (logp, grad)
    }

    /// Head means and action-gradient rows for a whole batch at once.
    pub fn log_prob_grad_action_batch(
        &self,
        states: &Array2<f64>,
        actions: &Array2<f64>,
    ) -> (Vec<f64>, Array2<f64>) {
        let out = self.net.forward(states);
        let a = self.action_dim;
        let n = states.nrows();
        let mut logp = vec![0.0; n];
        let mut grad = Array2::zeros((n, a));
        for i in 0..n {
            for d in 0..a {
                let mean = out[[i, d]];
                let log_std = Self::clamp_log_std(out[[i, a + d]]);
                let sigma = log_std.exp();
                logp[i] += gaussian_log_pdf(actions[[i, d]], mean, log_std);
                grad[[i, d]] = -(actions[[i, d]] - mean) / (sigma * sigma);
            }
        }
        (logp, grad)
    }

    /// Mean log-likelihood over a transition slice, subsampled to at most
    /// `cap` rows for cost control.
    pub fn mean_loglik(
        &self,
        transitions: &[Transition],
        cap: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<f64> {
        if transitions.is_empty() {
            return None;
        }
        let indices: Vec<usize> = if transitions.len() <= cap {
            (0..transitions.len()).collect()
        } else {
            (0..cap).map(|_| rng.random_range(0..transitions.len())).collect()
        };
        let obs_w = transitions[0].state.len();
        let act_w = transitions[0].action.len();
        let mut states = Array2::zeros((indices.len(), obs_w));
        let mut actions = Array2::zeros((indices.len(), act_w));
        for (row, &i) in indices.iter().enumerate() {
            states.slice_mut(s![row, ..]).assign(&ndarray::ArrayView1::from(&transitions[i].state));
            actions
                .slice_mut(s![row, ..])
                .assign(&ndarray::ArrayView1::from(&transitions[i].action));
        }
        let lp = self.log_prob_batch(&states, &actions);
        Some(lp.iter().sum::<f64>() / lp.len() as f64)
    }
}

/// Refit-and-score schedule run alongside a training loop: at every
/// cadence point it takes `refit_steps` maximum-likelihood steps on the
/// full data seen so far, then records the mean log-likelihood of (a)
/// all data and (b) the most recent online window.
pub struct BehaviorTracker {
    pub model: BehaviorDensityModel,
    opt: AdamW,
    refit_steps: usize,
    batch_size: usize,
    eval_cap: usize,
    rng: ChaCha8Rng,
}

impl BehaviorTracker {
    pub fn new(
        obs_width: usize,
        action_dim: usize,
        hidden: &[usize],
        refit_steps: usize,
        batch_size: usize,
        lr: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = BehaviorDensityModel::init(obs_width, action_dim, hidden, &mut rng);
        let opt = AdamW::new(AdamWConfig::new(lr, 0.0), &model.net);
        BehaviorTracker {
            model,
            opt,
            refit_steps,
            batch_size,
            eval_cap: 4096,
            rng,
        }
    }

    /// Small-scale tracker matching the bundled experiment scale.
    pub fn desk_scale(obs_width: usize, action_dim: usize, seed: u64) -> Self {
        BehaviorTracker::new(obs_width, action_dim, &[64, 64], 50, 128, 3e-3, seed)
    }

    fn refit(&mut self, all: &[Transition]) {
        let obs_w = all[0].state.len();
        let act_w = all[0].action.len();
        for _ in 0..self.refit_steps {
            let n = self.batch_size.min(all.len());
            let mut states = Array2::zeros((n, obs_w));
            let mut actions = Array2::zeros((n, act_w));
            for row in 0..n {
                let i = self.rng.random_range(0..all.len());
                states.slice_mut(s![row, ..]).assign(&ndarray::ArrayView1::from(&all[i].state));
                actions.slice_mut(s![row, ..]).assign(&ndarray::ArrayView1::from(&all[i].action));
            }
            let (_, grads) = self.model.nll_grad(&states, &actions).expect("fit batch shapes");
            self.opt.step(&mut self.model.net, &grads).expect("finite density gradients");
        }
    }
}

impl BufferObserver for BehaviorTracker {
    fn at_cadence(
        &mut self,
        all: &[Transition],
        recent_online: &[Transition],
    ) -> (Option<f64>, Option<f64>) {
        if all.is_empty() {
            return (None, None);
        }
        self.refit(all);
        let full = self.model.mean_loglik(all, self.eval_cap, &mut self.rng);
        let recent = self.model.mean_loglik(recent_online, self.eval_cap, &mut self.rng);
        (full, recent)
    }
}
