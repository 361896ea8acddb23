//! Tanh-squashed diagonal-Gaussian policy over a bounded action box.
//!
//! A single trunk network maps an observation to `2 * action_dim` outputs:
//! per-dimension means and raw log standard deviations. The raw log-stds
//! are clamped to `[LOG_STD_MIN, LOG_STD_MAX]`; sampling draws a Gaussian
//! in the unsquashed space, squashes through tanh, and maps affinely onto
//! the box. Log-densities include the change-of-variables correction, so
//! they are proper densities over the action box.

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{s, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dense::{DenseNet, ForwardCache, Gradients};
use super::NnError;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Squashed coordinates are clamped to this magnitude so sampled actions
/// stay strictly inside the box even when tanh saturates in f64.
const SQUASH_LIMIT: f64 = 1.0 - 1e-12;

const HALF_LN_2PI: f64 = 0.9189385332046727;

/// Diagonal-Gaussian log-density at `u` for one dimension.
pub fn gaussian_log_pdf(u: f64, mean: f64, log_std: f64) -> f64 {
    let std = log_std.exp();
    let t = (u - mean) / std;
    -0.5 * t * t - log_std - HALF_LN_2PI
}

/// The squashed-Gaussian policy. See the module docs for the
/// parameterization.
#[derive(Debug)]
pub struct GaussianPolicy {
    pub net: DenseNet,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    /// Counts every call that draws from the policy distribution, so tests
    /// can verify that updates promising to use only buffer actions never
    /// sample.
    samples_drawn: AtomicU64,
}

impl Clone for GaussianPolicy {
    fn clone(&self) -> Self {
        GaussianPolicy {
            net: self.net.clone(),
            action_low: self.action_low.clone(),
            action_high: self.action_high.clone(),
            samples_drawn: AtomicU64::new(self.samples_drawn.load(Ordering::Relaxed)),
        }
    }
}

impl GaussianPolicy {
    pub fn new(net: DenseNet, action_low: Vec<f64>, action_high: Vec<f64>) -> Result<Self, NnError> {
        if action_low.len() != action_high.len() {
            return Err(NnError::ShapeMismatch {
                what: "action box bounds",
                expected: action_low.len(),
                got: action_high.len(),
            });
        }
        if net.output_width() != 2 * action_low.len() {
            return Err(NnError::ShapeMismatch {
                what: "policy net output width (needs mean and log-std per dimension)",
                expected: 2 * action_low.len(),
                got: net.output_width(),
            });
        }
        for (d, (lo, hi)) in action_low.iter().zip(&action_high).enumerate() {
            if !(lo < hi) {
                return Err(NnError::ActionOutsideBox { dim: d, value: *lo });
            }
        }
        Ok(GaussianPolicy { net, action_low, action_high, samples_drawn: AtomicU64::new(0) })
    }

    /// Fresh policy with the given hidden widths.
    pub fn init(
        obs_width: usize,
        hidden: &[usize],
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut sizes = vec![obs_width];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * action_low.len());
        let net = DenseNet::init(&sizes, rng);
        GaussianPolicy::new(net, action_low, action_high).expect("sizes are consistent by construction")
    }

    pub fn action_dim(&self) -> usize {
        self.action_low.len()
    }

    pub fn obs_width(&self) -> usize {
        self.net.input_width()
    }

    /// Number of distribution draws made so far (via [`Self::sample`] or
    /// [`Self::sample_batch`]).
    pub fn samples_drawn(&self) -> u64 {
        self.samples_drawn.load(Ordering::Relaxed)
    }

    /// Forward pass returning the mean head, the raw (unclamped) log-std
    /// head, and the trunk cache for [`Self::backward_heads`].
    pub fn heads(&self, obs: &Array2<f64>) -> (Array2<f64>, Array2<f64>, ForwardCache) {
        let (out, cache) = self.net.forward_cached(obs);
        let a = self.action_dim();
        let mean = out.slice(s![.., ..a]).to_owned();
        let raw_log_std = out.slice(s![.., a..]).to_owned();
        (mean, raw_log_std, cache)
    }

    /// Maps head gradients back to trunk parameter gradients. `g_log_std`
    /// is the gradient with respect to the clamped log-std; it is masked to
    /// zero wherever the raw head value sits outside the clamp range.
    pub fn backward_heads(
        &self,
        cache: &ForwardCache,
        g_mean: &Array2<f64>,
        g_log_std: &Array2<f64>,
        raw_log_std: &Array2<f64>,
    ) -> Gradients {
        let a = self.action_dim();
        let batch = g_mean.nrows();
        let mut g_out = Array2::zeros((batch, 2 * a));
        g_out.slice_mut(s![.., ..a]).assign(g_mean);
        let masked = g_log_std
            * &raw_log_std.mapv(|v| if (LOG_STD_MIN..=LOG_STD_MAX).contains(&v) { 1.0 } else { 0.0 });
        g_out.slice_mut(s![.., a..]).assign(&masked);
        self.net.backward(cache, &g_out).0
    }

    fn affine_from_squashed(&self, d: usize, z: f64) -> f64 {
        self.action_low[d] + (z + 1.0) * 0.5 * (self.action_high[d] - self.action_low[d])
    }

    fn squashed_from_action(&self, d: usize, a: f64) -> f64 {
        2.0 * (a - self.action_low[d]) / (self.action_high[d] - self.action_low[d]) - 1.0
    }

    /// Log-density of `action` given per-dimension mean and clamped log-std
    /// rows. The single source of truth for densities: sampling reports its
    /// log-prob through this same path, so the two are exactly consistent.
    fn log_prob_from_params(
        &self,
        mean: &[f64],
        log_std: &[f64],
        action: &[f64],
    ) -> Result<f64, NnError> {
        let mut logp = 0.0;
        for d in 0..self.action_dim() {
            let z = self.squashed_from_action(d, action[d]);
            if z <= -1.0 || z >= 1.0 {
                return Err(NnError::ActionOutsideBox { dim: d, value: action[d] });
            }
            let u = z.atanh();
            // ln(1 - z^2) computed as ln(1-z) + ln(1+z) to keep precision
            // near the box boundary.
            let ln_one_minus_z2 = (-z).ln_1p() + z.ln_1p();
            let half_width = 0.5 * (self.action_high[d] - self.action_low[d]);
            logp += gaussian_log_pdf(u, mean[d], log_std[d]) - ln_one_minus_z2 - half_width.ln();
        }
        Ok(logp)
    }

    /// Log-density of `action` at `obs`. Errors if any coordinate is on or
    /// outside the box boundary.
    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64, NnError> {
        let obs_arr = Array2::from_shape_vec((1, obs.len()), obs.to_vec()).unwrap();
        let (mean, raw, _) = self.heads(&obs_arr);
        let log_std: Vec<f64> = raw.row(0).iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
        self.log_prob_from_params(mean.row(0).as_slice().unwrap(), &log_std, action)
    }

    /// Reparameterized draw: `squash(mean + std * xi)` with `xi` standard
    /// normal per dimension. Returns the action and its log-density.
    pub fn sample(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        let obs_arr = Array2::from_shape_vec((1, obs.len()), obs.to_vec()).unwrap();
        let (actions, logps) = self.sample_batch(&obs_arr, rng);
        (actions.row(0).to_vec(), logps[0])
    }

    /// Batched reparameterized draws, one per observation row.
    pub fn sample_batch(&self, obs: &Array2<f64>, rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<f64>) {
        let (mean, raw, _) = self.heads(obs);
        let a = self.action_dim();
        let batch = obs.nrows();
        self.samples_drawn.fetch_add(batch as u64, Ordering::Relaxed);
        let mut actions = Array2::zeros((batch, a));
        let mut logps = Vec::with_capacity(batch);
        for i in 0..batch {
            let mut mean_row = Vec::with_capacity(a);
            let mut log_std_row = Vec::with_capacity(a);
            let mut action_row = Vec::with_capacity(a);
            for d in 0..a {
                let mu = mean[[i, d]];
                let log_std = raw[[i, d]].clamp(LOG_STD_MIN, LOG_STD_MAX);
                let xi: f64 = rng.sample(StandardNormal);
                let u = mu + log_std.exp() * xi;
                let z = u.tanh().clamp(-SQUASH_LIMIT, SQUASH_LIMIT);
                mean_row.push(mu);
                log_std_row.push(log_std);
                action_row.push(self.affine_from_squashed(d, z));
            }
            let logp = self
                .log_prob_from_params(&mean_row, &log_std_row, &action_row)
                .expect("sampled actions are strictly inside the box");
            for d in 0..a {
                actions[[i, d]] = action_row[d];
            }
            logps.push(logp);
        }
        (actions, logps)
    }

    /// Deterministic action: the squashed mean. Used for evaluation.
    pub fn mean_action(&self, obs: &[f64]) -> Vec<f64> {
        let obs_arr = Array2::from_shape_vec((1, obs.len()), obs.to_vec()).unwrap();
        let (mean, _, _) = self.heads(&obs_arr);
        (0..self.action_dim())
            .map(|d| {
                let z = mean[[0, d]].tanh().clamp(-SQUASH_LIMIT, SQUASH_LIMIT);
                self.affine_from_squashed(d, z)
            })
            .collect()
    }

    /// Weighted negative log-likelihood of buffer actions with exact trunk
    /// gradients: `loss = mean_i weights[i] * (-log pi(action_i | obs_i))`.
    /// The weights are treated as constants. This is the actor objective
    /// shared by behavior cloning (unit weights) and the exponentially
    /// weighted updates.
    pub fn weighted_nll_grad(
        &self,
        obs: &Array2<f64>,
        actions: &Array2<f64>,
        weights: &[f64],
    ) -> Result<(f64, Gradients), NnError> {
        let batch = obs.nrows();
        assert_eq!(actions.nrows(), batch, "action batch size mismatch");
        assert_eq!(weights.len(), batch, "weight batch size mismatch");
        let a = self.action_dim();
        let (mean, raw, cache) = self.heads(obs);
        let mut loss = 0.0;
        let mut g_mean = Array2::zeros((batch, a));
        let mut g_log_std = Array2::zeros((batch, a));
        let inv_b = 1.0 / batch as f64;
        for i in 0..batch {
            let w = weights[i];
            for d in 0..a {
                let z = self.squashed_from_action(d, actions[[i, d]]);
                if z <= -1.0 || z >= 1.0 {
                    return Err(NnError::ActionOutsideBox { dim: d, value: actions[[i, d]] });
                }
                let u = z.atanh();
                let log_std = raw[[i, d]].clamp(LOG_STD_MIN, LOG_STD_MAX);
                let std = log_std.exp();
                let t = (u - mean[[i, d]]) / std;
                let ln_one_minus_z2 = (-z).ln_1p() + z.ln_1p();
                let half_width = 0.5 * (self.action_high[d] - self.action_low[d]);
                let logp = gaussian_log_pdf(u, mean[[i, d]], log_std) - ln_one_minus_z2 - half_width.ln();
                loss -= w * inv_b * logp;
                // d(-logp)/dmean = -(u - mean)/std^2; d(-logp)/dlogstd = 1 - t^2.
                g_mean[[i, d]] = -w * inv_b * t / std;
                g_log_std[[i, d]] = w * inv_b * (1.0 - t * t);
            }
        }
        let grads = self.backward_heads(&cache, &g_mean, &g_log_std, &raw);
        Ok((loss, grads))
    }

    /// Log-density and its gradient with respect to the action coordinates,
    /// used by penalty terms that differentiate a density model at sampled
    /// actions.
    pub fn log_prob_grad_action(&self, obs: &[f64], action: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
        let obs_arr = Array2::from_shape_vec((1, obs.len()), obs.to_vec()).unwrap();
        let (mean, raw, _) = self.heads(&obs_arr);
        let mut logp = 0.0;
        let mut grad = Vec::with_capacity(self.action_dim());
        for d in 0..self.action_dim() {
            let z = self.squashed_from_action(d, action[d]);
            if z <= -1.0 || z >= 1.0 {
                return Err(NnError::ActionOutsideBox { dim: d, value: action[d] });
            }
            let u = z.atanh();
            let log_std = raw[[0, d]].clamp(LOG_STD_MIN, LOG_STD_MAX);
            let std = log_std.exp();
            let ln_one_minus_z2 = (-z).ln_1p() + z.ln_1p();
            let width = self.action_high[d] - self.action_low[d];
            logp += gaussian_log_pdf(u, mean[[0, d]], log_std) - ln_one_minus_z2 - (0.5 * width).ln();
            let one_minus_z2 = (-z).ln_1p().exp() * z.ln_1p().exp();
            grad.push(
                (2.0 / (width * one_minus_z2)) * (2.0 * z - (u - mean[[0, d]]) / (std * std)),
            );
        }
        Ok((logp, grad))
    }
}
