//! Soft actor-critic and its demonstration-seeded variants.
//!
//! The core is standard twin-critic SAC: critic targets are entropy
//! augmented, `y = r + gamma * (min Qbar(s', a') - alpha * log pi(a'|s'))`
//! with `a'` freshly sampled, and the actor maximizes
//! `E[min Q(s, a~) - alpha * log pi(a~|s)]` through reparameterized
//! samples `a~ = squash(mu + sigma * xi)`. The entropy weight `alpha` is
//! auto-tuned so measured policy entropy tracks a target of `-action_dim`.
//!
//! Variants differ only in initialization and extra actor terms:
//!
//! * scratch: empty buffer, no demonstrations;
//! * prior: demonstrations preloaded into the replay buffer;
//! * pretrain: prior plus a behavior-cloning initialization of the actor;
//! * cloning-regularized: adds `bc_weight * NLL(demo actions)` to the
//!   actor loss;
//! * density-penalized: subtracts `brac_weight * log density(a~|s)` under
//!   a behavior model fitted on the buffer, pushing sampled actions
//!   toward high-density regions.
//!
//! None of these run an offline gradient phase: pretraining, where it
//! exists, happens inside dataset loading, and fine-tuning starts at
//! environment step zero.

use ndarray::{Array1, Array2};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::bc;
use super::behavior::BehaviorDensityModel;
use crate::harness::{derive_seed, Agent, AgentLosses, HarnessError};
use crate::nn::{
    concat_columns, gaussian_log_pdf, AdamW, AdamWConfig, GaussianPolicy, Gradients, TwinCritic,
};
use crate::replay::{Batch, Dataset, ReplayBuffer, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SacMode {
    Scratch,
    Prior,
    Pretrain,
}

#[derive(Debug, Clone)]
pub struct SacConfig {
    pub gamma: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub alpha_lr: f64,
    pub tau: f64,
    pub buffer_capacity: usize,
    pub mode: SacMode,
    /// Weight on the demonstration-cloning actor term; 0 disables it.
    pub bc_weight: f64,
    /// Weight on the behavior-density actor penalty; 0 disables it.
    pub brac_weight: f64,
    /// Cloning steps run inside dataset loading in pretrain mode.
    pub bc_pretrain_steps: usize,
    /// Density-model fit steps run inside dataset loading when the
    /// density penalty is active.
    pub behavior_fit_steps: usize,
    pub auto_alpha: bool,
    pub init_alpha: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig {
            gamma: 0.99,
            batch_size: 1024,
            hidden: vec![256, 256, 256, 256],
            lr: 3e-4,
            alpha_lr: 3e-4,
            tau: 5e-3,
            buffer_capacity: 1_000_000,
            mode: SacMode::Scratch,
            bc_weight: 0.0,
            brac_weight: 0.0,
            bc_pretrain_steps: 25_000,
            behavior_fit_steps: 2000,
            auto_alpha: true,
            init_alpha: 0.2,
        }
    }
}

impl SacConfig {
    /// Small-scale settings for the bundled experiments and tests.
    pub fn desk_scale() -> Self {
        SacConfig {
            batch_size: 128,
            hidden: vec![64, 64],
            buffer_capacity: 100_000,
            bc_pretrain_steps: 1000,
            behavior_fit_steps: 500,
            ..SacConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.into()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.lr <= 0.0 || self.alpha_lr <= 0.0 {
            return bad("learning rates must be positive");
        }
        if !(0.0 < self.tau && self.tau <= 1.0) {
            return bad("tau must be in (0, 1]");
        }
        if self.bc_weight < 0.0 || self.brac_weight < 0.0 {
            return bad("regularizer weights must be nonnegative");
        }
        if self.init_alpha < 0.0 {
            return bad("init_alpha must be nonnegative");
        }
        Ok(())
    }

    fn label(&self) -> &'static str {
        if self.brac_weight > 0.0 {
            "brac"
        } else if self.bc_weight > 0.0 {
            "sac-bc"
        } else {
            match self.mode {
                SacMode::Scratch => "sac",
                SacMode::Prior => "sacfd-prior",
                SacMode::Pretrain => "sacfd-pretrain",
            }
        }
    }
}

/// Everything the actor update produces before the optimizer step, kept
/// separate so gradients can be checked against finite differences and
/// compared across variant settings on fixed batches and noise.
pub struct ActorTerms {
    pub loss: f64,
    pub grads: Gradients,
    pub mean_logp: f64,
}

pub struct SacAgent {
    pub cfg: SacConfig,
    pub policy: GaussianPolicy,
    pub critic: TwinCritic,
    pub buffer: ReplayBuffer,
    /// Demonstration transitions, kept separately for the cloning term.
    pub demos: ReplayBuffer,
    pub behavior: Option<BehaviorDensityModel>,
    behavior_opt: Option<AdamW>,
    policy_opt: AdamW,
    critic_opt1: AdamW,
    critic_opt2: AdamW,
    log_alpha: f64,
    alpha_m: f64,
    alpha_v: f64,
    alpha_t: u64,
    grad_steps: u64,
    seed: u64,
    name: &'static str,
    rng: ChaCha8Rng,
}

impl SacAgent {
    pub fn new(
        obs_width: usize,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        cfg: SacConfig,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let action_dim = action_low.len();
        let policy = GaussianPolicy::init(obs_width, &cfg.hidden, action_low, action_high, &mut rng);
        let critic = TwinCritic::init(obs_width, action_dim, &cfg.hidden, &mut rng);
        let (behavior, behavior_opt) = if cfg.brac_weight > 0.0 {
            let model = BehaviorDensityModel::init(obs_width, action_dim, &cfg.hidden, &mut rng);
            let opt = AdamW::new(AdamWConfig::new(cfg.lr, 0.0), &model.net);
            (Some(model), Some(opt))
        } else {
            (None, None)
        };
        let policy_opt = AdamW::new(AdamWConfig::new(cfg.lr, 0.0), &policy.net);
        let critic_opt1 = AdamW::new(AdamWConfig::new(cfg.lr, 0.0), &critic.q1);
        let critic_opt2 = AdamW::new(AdamWConfig::new(cfg.lr, 0.0), &critic.q2);
        let buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
        let demos = ReplayBuffer::new(cfg.buffer_capacity)?;
        let log_alpha = if cfg.init_alpha > 0.0 { cfg.init_alpha.ln() } else { f64::NEG_INFINITY };
        let name = cfg.label();
        Ok(SacAgent {
            cfg,
            policy,
            critic,
            buffer,
            demos,
            behavior,
            behavior_opt,
            policy_opt,
            critic_opt1,
            critic_opt2,
            log_alpha,
            alpha_m: 0.0,
            alpha_v: 0.0,
            alpha_t: 0,
            grad_steps: 0,
            seed,
            name,
            rng,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn target_entropy(&self) -> f64 {
        -(self.policy.action_dim() as f64)
    }

    /// Entropy-augmented TD update for both twins plus a Polyak step.
    pub fn critic_update(&mut self, batch: &Batch) -> Result<f64, HarnessError> {
        let alpha = self.alpha();
        let (next_actions, next_logp) = self.policy.sample_batch(&batch.next_states, &mut self.rng);
        let next_inputs = concat_columns(&batch.next_states, &next_actions);
        let q_next = self.critic.q_min_target(&next_inputs);
        let n = batch.rewards.len();
        let y = Array1::from_iter((0..n).map(|i| {
            if batch.terminals[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + self.cfg.gamma * (q_next[i] - alpha * next_logp[i])
            }
        }));
        let inputs = concat_columns(&batch.states, &batch.actions);
        let (loss, g1, g2) = self.critic.bellman_mse_grad(&inputs, &y)?;
        if !loss.is_finite() {
            return Err(HarnessError::Run(format!(
                "non-finite critic loss at gradient step {}",
                self.grad_steps
            )));
        }
        self.critic_opt1.step(&mut self.critic.q1, &g1)?;
        self.critic_opt2.step(&mut self.critic.q2, &g2)?;
        self.critic.polyak_update(self.cfg.tau);
        Ok(loss)
    }

    /// Actor loss and policy-parameter gradients at frozen noise `xi`:
    ///
    /// `L = mean_i [alpha * log pi(a~_i|s_i) - Qmin(s_i, a~_i)
    ///              - brac_weight * log density(a~_i|s_i)]
    ///      + bc_weight * NLL(demo batch)`
    ///
    /// with `a~ = squash(mu + sigma * xi)`. Critic, density model, and
    /// noise are constants here; only policy parameters receive gradient.
    pub fn actor_terms(
        &self,
        batch: &Batch,
        xi: &Array2<f64>,
        demo: Option<&Batch>,
    ) -> Result<ActorTerms, HarnessError> {
        let n = batch.states.nrows();
        let a_dim = self.policy.action_dim();
        let alpha = self.alpha();
        let inv_n = 1.0 / n as f64;
        let limit = 1.0 - 1e-12;

        let (mean, raw, cache) = self.policy.heads(&batch.states);
        let mut actions = Array2::zeros((n, a_dim));
        let mut z_arr = Array2::zeros((n, a_dim));
        let mut saturated = vec![false; n * a_dim];
        let mut logp = vec![0.0; n];
        for i in 0..n {
            for d in 0..a_dim {
                let log_std = raw[[i, d]].clamp(crate::nn::LOG_STD_MIN, crate::nn::LOG_STD_MAX);
                let sigma = log_std.exp();
                let u = mean[[i, d]] + sigma * xi[[i, d]];
                let z_free = u.tanh();
                let z = z_free.clamp(-limit, limit);
                saturated[i * a_dim + d] = z_free != z;
                let lo = self.policy.action_low[d];
                let hi = self.policy.action_high[d];
                let half_width = 0.5 * (hi - lo);
                actions[[i, d]] = lo + (z + 1.0) * half_width;
                z_arr[[i, d]] = z;
                logp[i] += gaussian_log_pdf(u, mean[[i, d]], log_std)
                    - ((-z).ln_1p() + z.ln_1p())
                    - half_width.ln();
            }
        }

        let inputs = concat_columns(&batch.states, &actions);
        let (q_vals, q_input_grad) = self.critic.q_min_with_input_grad(&inputs);
        let obs_width = batch.states.ncols();

        let (beta_logp, beta_grad) = match &self.behavior {
            Some(model) if self.cfg.brac_weight > 0.0 => {
                let (lp, g) = model.log_prob_grad_action_batch(&batch.states, &actions);
                (Some(lp), Some(g))
            }
            _ => (None, None),
        };

        let mut loss = 0.0;
        let mut g_mean = Array2::zeros((n, a_dim));
        let mut g_log_std = Array2::zeros((n, a_dim));
        for i in 0..n {
            loss += inv_n * (alpha * logp[i] - q_vals[i]);
            if let Some(lp) = &beta_logp {
                loss -= inv_n * self.cfg.brac_weight * lp[i];
            }
            for d in 0..a_dim {
                let z = z_arr[[i, d]];
                let log_std = raw[[i, d]].clamp(crate::nn::LOG_STD_MIN, crate::nn::LOG_STD_MAX);
                let sigma = log_std.exp();
                let half_width = 0.5 * (self.policy.action_high[d] - self.policy.action_low[d]);
                let mut c = q_input_grad[[i, obs_width + d]];
                if let Some(g) = &beta_grad {
                    c += self.cfg.brac_weight * g[[i, d]];
                }
                // Core term: d/du of (alpha * logpi - Q - w * log density),
                // zero where the squash clamp saturates.
                let core = if saturated[i * a_dim + d] {
                    0.0
                } else {
                    2.0 * alpha * z - c * half_width * (1.0 - z * z)
                };
                g_mean[[i, d]] = inv_n * core;
                g_log_std[[i, d]] = inv_n * (-alpha + core * sigma * xi[[i, d]]);
            }
        }
        let mut grads = self.policy.backward_heads(&cache, &g_mean, &g_log_std, &raw);

        if self.cfg.bc_weight > 0.0 {
            if let Some(demo) = demo {
                let ones = vec![1.0; demo.rewards.len()];
                let (bc_loss, mut bc_grads) =
                    self.policy.weighted_nll_grad(&demo.states, &demo.actions, &ones)?;
                loss += self.cfg.bc_weight * bc_loss;
                bc_grads.scale(self.cfg.bc_weight);
                grads.add(&bc_grads);
            }
        }

        if !loss.is_finite() {
            return Err(HarnessError::Run(format!(
                "non-finite actor loss at gradient step {}",
                self.grad_steps
            )));
        }
        let mean_logp = logp.iter().sum::<f64>() * inv_n;
        Ok(ActorTerms { loss, grads, mean_logp })
    }

    /// Adam step on `log alpha` minimizing `-alpha * (E[log pi] + target)`,
    /// which raises the entropy weight while entropy is below target and
    /// lowers it above.
    fn alpha_update(&mut self, mean_logp: f64) {
        if !self.cfg.auto_alpha {
            return;
        }
        let g = -self.alpha() * (mean_logp + self.target_entropy());
        self.alpha_t += 1;
        self.alpha_m = 0.9 * self.alpha_m + 0.1 * g;
        self.alpha_v = 0.999 * self.alpha_v + 0.001 * g * g;
        let m_hat = self.alpha_m / (1.0 - 0.9f64.powi(self.alpha_t as i32));
        let v_hat = self.alpha_v / (1.0 - 0.999f64.powi(self.alpha_t as i32));
        self.log_alpha -= self.cfg.alpha_lr * m_hat / (v_hat.sqrt() + 1e-8);
    }

    fn behavior_refit_step(&mut self, batch: &Batch) -> Result<(), HarnessError> {
        if let (Some(model), Some(opt)) = (&mut self.behavior, &mut self.behavior_opt) {
            let (_, grads) = model.nll_grad(&batch.states, &batch.actions)?;
            opt.step(&mut model.net, &grads)?;
        }
        Ok(())
    }

    pub fn train_step_inner(&mut self) -> Result<(f64, f64), HarnessError> {
        let batch = self.buffer.sample_arrays(self.cfg.batch_size, &mut self.rng)?;
        let critic_loss = self.critic_update(&batch)?;
        if self.cfg.brac_weight > 0.0 {
            self.behavior_refit_step(&batch)?;
        }
        let n = batch.states.nrows();
        let a_dim = self.policy.action_dim();
        let xi: Array2<f64> =
            Array2::from_shape_fn((n, a_dim), |_| StandardNormal.sample(&mut self.rng));
        let demo = if self.cfg.bc_weight > 0.0 && !self.demos.is_empty() {
            Some(self.demos.sample_arrays(self.cfg.batch_size, &mut self.rng)?)
        } else {
            None
        };
        let terms = self.actor_terms(&batch, &xi, demo.as_ref())?;
        self.policy_opt.step(&mut self.policy.net, &terms.grads)?;
        self.alpha_update(terms.mean_logp);
        self.grad_steps += 1;
        Ok((critic_loss, terms.loss))
    }
}

impl Agent for SacAgent {
    fn algo_name(&self) -> &'static str {
        self.name
    }

    fn load_dataset(&mut self, dataset: &Dataset) -> Result<(), HarnessError> {
        self.demos.push_dataset(dataset)?;
        if matches!(self.cfg.mode, SacMode::Prior | SacMode::Pretrain) {
            self.buffer.push_dataset(dataset)?;
        }
        if self.cfg.mode == SacMode::Pretrain && !self.demos.is_empty() {
            let mut bc_rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 0xBC));
            let mut opt = AdamW::new(AdamWConfig::new(self.cfg.lr, 0.0), &self.policy.net);
            bc::bc_train(
                &mut self.policy,
                &mut opt,
                &self.demos,
                self.cfg.bc_pretrain_steps,
                self.cfg.batch_size,
                &mut bc_rng,
            )?;
        }
        if self.cfg.brac_weight > 0.0 && !self.demos.is_empty() {
            let mut fit_rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 0xBEA));
            for _ in 0..self.cfg.behavior_fit_steps {
                let batch = self.demos.sample_arrays(self.cfg.batch_size, &mut fit_rng)?;
                self.behavior_refit_step(&batch)?;
            }
        }
        Ok(())
    }

    fn can_train(&self) -> bool {
        !self.buffer.is_empty()
    }

    fn train_step(&mut self) -> Result<AgentLosses, HarnessError> {
        let (critic, actor) = self.train_step_inner()?;
        Ok(AgentLosses { critic: Some(critic), actor: Some(actor) })
    }

    fn act(&mut self, obs: &[f64]) -> Vec<f64> {
        let (a, _) = self.policy.sample(obs, &mut self.rng);
        a
    }

    fn act_eval(&self, obs: &[f64]) -> Vec<f64> {
        self.policy.mean_action(obs)
    }

    fn observe(&mut self, t: &Transition) -> Result<(), HarnessError> {
        self.buffer.push(t.clone())?;
        Ok(())
    }

    fn episode_ended(&mut self) {}

    fn grad_steps(&self) -> u64 {
        self.grad_steps
    }

    fn policy(&self) -> &GaussianPolicy {
        &self.policy
    }

    fn offline_steps_override(&self) -> Option<usize> {
        Some(0)
    }
}
