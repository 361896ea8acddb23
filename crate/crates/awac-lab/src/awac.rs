//! The advantage-weighted actor critic that this crate exists to study.
//!
//! Training interleaves two updates on batches drawn from the replay
//! buffer:
//!
//! * critic: temporal-difference policy evaluation. Targets are
//!   `y = r + gamma * (1 - terminal) * min(Q1bar, Q2bar)(s', a')` with `a'`
//!   sampled once from the current policy and the bar denoting Polyak
//!   target copies. Both twins regress on the shared `y`.
//! * actor: weighted maximum likelihood over the buffer's own actions,
//!   each action weighted by `exp(clip(advantage / lambda))`. Advantages
//!   come from the critic and are constants to the actor update; no
//!   gradient flows through them, and the policy sampler is never invoked
//!   while the actor loss is formed.
//!
//! The weighting is the closed-form solution of policy improvement under
//! a KL trust region around the buffer's implied behavior policy (see the
//! `constrained` module for the exact tabular treatment), with the
//! per-state normalizer dropped by default. No density model of the
//! behavior policy is ever fit; the buffer's actions themselves carry it.
//!
//! The same agent trains offline (buffer = dataset, no environment) and
//! online (buffer grows per step), which is the regime the experiments
//! probe.

use ndarray::Array1;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::nn::{concat_columns, AdamW, AdamWConfig, GaussianPolicy, NnError, TwinCritic};
use crate::replay::{Batch, Dataset, ReplayBuffer, ReplayError, Transition};

#[derive(Debug, Error)]
pub enum AwacError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("non-finite {what} at gradient step {step}")]
    NonFinite { what: &'static str, step: u64 },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Hyperparameters. Defaults are the full-scale benchmark settings; use
/// [`AwacConfig::desk_scale`] for the small nets and batches the bundled
/// experiments run with.
#[derive(Debug, Clone)]
pub struct AwacConfig {
    /// Trust-region temperature: smaller keeps the actor closer to the
    /// buffer's behavior. 1.0 suits benchmark-style tasks; 0.3 suits
    /// sparse manipulation-style tasks.
    pub lambda: f64,
    pub gamma: f64,
    /// Gradient steps on the static dataset before any environment
    /// interaction.
    pub num_offline_steps: usize,
    pub batch_size: usize,
    pub trains_per_env_step: usize,
    /// K: policy samples per state for the Monte-Carlo advantage baseline.
    pub advantage_samples: usize,
    /// Upper clamp applied to bootstrapped target Q-values. Use
    /// `Some(0.0)` on tasks whose rewards are never positive, where true
    /// Q-values cannot exceed zero.
    pub clamp_q_max: Option<f64>,
    /// Symmetric clamp on the weight exponent `advantage / lambda`.
    pub weight_exponent_clip: f64,
    /// Divide each weight by a sampled estimate of the per-state
    /// normalizer (off by default; kept for the ablation).
    pub use_z_estimate: bool,
    pub z_samples: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub policy_weight_decay: f64,
    /// Polyak coefficient for target tracking.
    pub tau: f64,
    pub buffer_capacity: usize,
}

impl Default for AwacConfig {
    fn default() -> Self {
        AwacConfig {
            lambda: 1.0,
            gamma: 0.99,
            num_offline_steps: 25_000,
            batch_size: 1024,
            trains_per_env_step: 1,
            advantage_samples: 4,
            clamp_q_max: None,
            weight_exponent_clip: 20.0,
            use_z_estimate: false,
            z_samples: 10,
            hidden: vec![256, 256, 256, 256],
            lr: 3e-4,
            policy_weight_decay: 1e-4,
            tau: 0.005,
            buffer_capacity: 1_000_000,
        }
    }
}

impl AwacConfig {
    /// Small-network settings for the bundled desk-scale experiments.
    pub fn desk_scale() -> Self {
        AwacConfig {
            hidden: vec![64, 64],
            batch_size: 128,
            num_offline_steps: 1000,
            buffer_capacity: 100_000,
            ..AwacConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), AwacError> {
        if !(self.lambda > 0.0) {
            return Err(AwacError::BadConfig(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(AwacError::BadConfig(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if self.batch_size == 0 {
            return Err(AwacError::BadConfig("batch_size must be at least 1".into()));
        }
        if self.advantage_samples == 0 {
            return Err(AwacError::BadConfig("advantage_samples must be at least 1".into()));
        }
        if self.use_z_estimate && self.z_samples == 0 {
            return Err(AwacError::BadConfig("z_samples must be at least 1 when enabled".into()));
        }
        if !(self.weight_exponent_clip > 0.0) {
            return Err(AwacError::BadConfig("weight_exponent_clip must be positive".into()));
        }
        if self.trains_per_env_step == 0 {
            return Err(AwacError::BadConfig("trains_per_env_step must be at least 1".into()));
        }
        Ok(())
    }
}

/// Losses and diagnostics from one gradient step.
#[derive(Debug, Clone, Copy)]
pub struct TrainLosses {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub mean_advantage: f64,
    pub mean_weight: f64,
}

/// `exp(clip(advantage / lambda))` for every advantage. The single place
/// the exponential weighting is computed, shared by the update and its
/// tests. Clipping makes the weights finite by construction.
pub fn weights_from_advantages(advantages: &[f64], lambda: f64, exponent_clip: f64) -> Vec<f64> {
    advantages
        .iter()
        .map(|a| (a / lambda).clamp(-exponent_clip, exponent_clip).exp())
        .collect()
}

/// Exact-expectation advantage over a finite action set:
/// `Q(s, a) - sum_i pi(a_i | s) Q(s, a_i)`. This is the quantity the
/// Monte-Carlo estimator approximates; on tabular problems it must equal
/// the dynamic-programming advantage exactly.
pub fn enumerated_advantage(q_values: &[f64], policy_probs: &[f64], action: usize) -> f64 {
    assert_eq!(q_values.len(), policy_probs.len(), "action-set width mismatch");
    assert!(action < q_values.len(), "action index out of range");
    let baseline: f64 = q_values.iter().zip(policy_probs).map(|(q, p)| q * p).sum();
    q_values[action] - baseline
}

/// Per-batch output of the advantage/weight stage.
#[derive(Debug, Clone)]
pub struct ActorWeights {
    pub weights: Vec<f64>,
    pub mean_advantage: f64,
}

pub struct AwacAgent {
    pub cfg: AwacConfig,
    pub policy: GaussianPolicy,
    pub critic: TwinCritic,
    pub buffer: ReplayBuffer,
    policy_opt: AdamW,
    critic_opt1: AdamW,
    critic_opt2: AdamW,
    grad_steps: u64,
    env_steps: u64,
    rng: ChaCha8Rng,
}

impl AwacAgent {
    pub fn new(
        obs_width: usize,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        cfg: AwacConfig,
        seed: u64,
    ) -> Result<Self, AwacError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let action_dim = action_low.len();
        let policy = GaussianPolicy::init(obs_width, &cfg.hidden, action_low, action_high, &mut rng);
        let critic = TwinCritic::init(obs_width, action_dim, &cfg.hidden, &mut rng);
        let policy_opt = AdamW::new(AdamWConfig::new(cfg.lr, cfg.policy_weight_decay), &policy.net);
        let critic_opt1 = AdamW::new(AdamWConfig::new(cfg.lr, 0.0), &critic.q1);
        let critic_opt2 = AdamW::new(AdamWConfig::new(cfg.lr, 0.0), &critic.q2);
        let buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
        Ok(AwacAgent {
            cfg,
            policy,
            critic,
            buffer,
            policy_opt,
            critic_opt1,
            critic_opt2,
            grad_steps: 0,
            env_steps: 0,
            rng,
        })
    }

    pub fn grad_steps(&self) -> u64 {
        self.grad_steps
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn note_env_step(&mut self) {
        self.env_steps += 1;
    }

    /// Seeds the buffer with an offline dataset.
    pub fn load_dataset(&mut self, dataset: &Dataset) -> Result<(), AwacError> {
        self.buffer.push_dataset(dataset)?;
        Ok(())
    }

    /// The masked-bootstrap target formula, isolated so exact values can
    /// be injected in place of network outputs:
    /// `y = r + gamma * (1 - terminal) * clamp(q_next)`.
    pub fn target_from_bootstrap(&self, batch: &Batch, q_next: &Array1<f64>) -> Array1<f64> {
        let n = batch.rewards.len();
        assert_eq!(q_next.len(), n, "bootstrap width mismatch");
        Array1::from_iter((0..n).map(|i| {
            if batch.terminals[i] {
                batch.rewards[i]
            } else {
                let q = match self.cfg.clamp_q_max {
                    Some(qmax) => q_next[i].min(qmax),
                    None => q_next[i],
                };
                batch.rewards[i] + self.cfg.gamma * q
            }
        }))
    }

    /// TD targets: one policy sample per next state, evaluated through the
    /// target twins' minimum.
    pub fn critic_target(&mut self, batch: &Batch) -> Array1<f64> {
        let (next_actions, _) = self.policy.sample_batch(&batch.next_states, &mut self.rng);
        let q_next = self.critic.q_min_target(&concat_columns(&batch.next_states, &next_actions));
        self.target_from_bootstrap(batch, &q_next)
    }

    /// One TD step on both twins against shared frozen targets, then a
    /// Polyak move of the target copies.
    pub fn critic_update(&mut self, batch: &Batch) -> Result<f64, AwacError> {
        let y = self.critic_target(batch);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(AwacError::NonFinite { what: "critic target", step: self.grad_steps });
        }
        let inputs = concat_columns(&batch.states, &batch.actions);
        let (loss, g1, g2) = self.critic.bellman_mse_grad(&inputs, &y)?;
        if !loss.is_finite() {
            return Err(AwacError::NonFinite { what: "critic loss", step: self.grad_steps });
        }
        self.critic_opt1.step(&mut self.critic.q1, &g1)?;
        self.critic_opt2.step(&mut self.critic.q2, &g2)?;
        self.critic.polyak_update(self.cfg.tau);
        Ok(loss)
    }

    /// Monte-Carlo advantages: `Qmin(s, a) - (1/K) sum_i Qmin(s, a_i)`
    /// with `a_i` drawn from the current policy. Uses the online twins.
    pub fn estimate_advantages(&mut self, batch: &Batch) -> Array1<f64> {
        let q_sa = self.critic.q_min(&concat_columns(&batch.states, &batch.actions));
        let baseline = self.baseline_values(batch);
        &q_sa - &baseline
    }

    fn baseline_values(&mut self, batch: &Batch) -> Array1<f64> {
        let k = self.cfg.advantage_samples;
        let mut baseline = Array1::zeros(batch.states.nrows());
        for _ in 0..k {
            let (actions, _) = self.policy.sample_batch(&batch.states, &mut self.rng);
            baseline += &self.critic.q_min(&concat_columns(&batch.states, &actions));
        }
        baseline / k as f64
    }

    /// Advantage estimation plus exponential weighting. All policy
    /// sampling the actor stage needs happens here, before the update
    /// itself ever sees the batch.
    pub fn actor_weights(&mut self, batch: &Batch) -> ActorWeights {
        let q_sa = self.critic.q_min(&concat_columns(&batch.states, &batch.actions));
        let baseline = self.baseline_values(batch);
        let advantages = &q_sa - &baseline;
        let adv_slice: Vec<f64> = advantages.to_vec();
        let mut weights =
            weights_from_advantages(&adv_slice, self.cfg.lambda, self.cfg.weight_exponent_clip);
        if self.cfg.use_z_estimate {
            let m = self.cfg.z_samples;
            let mut z = vec![0.0; weights.len()];
            for _ in 0..m {
                let (actions, _) = self.policy.sample_batch(&batch.states, &mut self.rng);
                let q_j = self.critic.q_min(&concat_columns(&batch.states, &actions));
                let adv_j: Vec<f64> = (&q_j - &baseline).to_vec();
                for (zi, wj) in z.iter_mut().zip(weights_from_advantages(
                    &adv_j,
                    self.cfg.lambda,
                    self.cfg.weight_exponent_clip,
                )) {
                    *zi += wj;
                }
            }
            for (w, zi) in weights.iter_mut().zip(&z) {
                *w /= (zi / m as f64).max(1e-8);
            }
        }
        let mean_advantage = adv_slice.iter().sum::<f64>() / adv_slice.len().max(1) as f64;
        ActorWeights { weights, mean_advantage }
    }

    /// Weighted maximum likelihood on the buffer's own actions. The
    /// weights arrive precomputed and constant; this method never draws
    /// from the policy (the sample counter proves it in tests).
    pub fn actor_update(&mut self, batch: &Batch, weights: &[f64]) -> Result<f64, AwacError> {
        let (loss, grads) = self.policy.weighted_nll_grad(&batch.states, &batch.actions, weights)?;
        if !loss.is_finite() {
            return Err(AwacError::NonFinite { what: "actor loss", step: self.grad_steps });
        }
        self.policy_opt.step(&mut self.policy.net, &grads)?;
        Ok(loss)
    }

    /// One full gradient step (critic then actor) on a provided batch.
    pub fn train_step_on(&mut self, batch: &Batch) -> Result<TrainLosses, AwacError> {
        let critic_loss = self.critic_update(batch)?;
        let aw = self.actor_weights(batch);
        let actor_loss = self.actor_update(batch, &aw.weights)?;
        self.grad_steps += 1;
        let mean_weight = aw.weights.iter().sum::<f64>() / aw.weights.len().max(1) as f64;
        Ok(TrainLosses {
            critic_loss,
            actor_loss,
            mean_advantage: aw.mean_advantage,
            mean_weight,
        })
    }

    /// One full gradient step on a batch sampled from the buffer.
    pub fn train_step(&mut self) -> Result<TrainLosses, AwacError> {
        let batch = self.buffer.sample_arrays(self.cfg.batch_size, &mut self.rng)?;
        self.train_step_on(&batch)
    }

    /// Stochastic action for collection.
    pub fn act(&mut self, obs: &[f64]) -> Vec<f64> {
        let (a, _) = self.policy.sample(obs, &mut self.rng);
        a
    }

    /// Deterministic action for evaluation.
    pub fn act_eval(&self, obs: &[f64]) -> Vec<f64> {
        self.policy.mean_action(obs)
    }
}

impl crate::harness::Agent for AwacAgent {
    fn algo_name(&self) -> &'static str {
        "awac"
    }

    fn load_dataset(&mut self, dataset: &Dataset) -> Result<(), crate::harness::HarnessError> {
        AwacAgent::load_dataset(self, dataset)?;
        Ok(())
    }

    fn can_train(&self) -> bool {
        !self.buffer.is_empty()
    }

    fn train_step(&mut self) -> Result<crate::harness::AgentLosses, crate::harness::HarnessError> {
        let losses = AwacAgent::train_step(self)?;
        Ok(crate::harness::AgentLosses {
            critic: Some(losses.critic_loss),
            actor: Some(losses.actor_loss),
        })
    }

    fn act(&mut self, obs: &[f64]) -> Vec<f64> {
        AwacAgent::act(self, obs)
    }

    fn act_eval(&self, obs: &[f64]) -> Vec<f64> {
        AwacAgent::act_eval(self, obs)
    }

    fn observe(&mut self, t: &Transition) -> Result<(), crate::harness::HarnessError> {
        self.buffer.push(t.clone())?;
        self.note_env_step();
        Ok(())
    }

    fn episode_ended(&mut self) {}

    fn grad_steps(&self) -> u64 {
        self.grad_steps
    }

    fn policy(&self) -> &GaussianPolicy {
        &self.policy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mdp::{bellman_backup, exact_policy_evaluation};
    use crate::nn::DenseNet;
    use crate::replay::Transition;
    use ndarray::Array2;
    use rand::Rng;

    fn desk_cfg() -> AwacConfig {
        AwacConfig {
            hidden: vec![16, 16],
            batch_size: 8,
            buffer_capacity: 1000,
            ..AwacConfig::desk_scale()
        }
    }

    fn agent(seed: u64) -> AwacAgent {
        AwacAgent::new(3, vec![-1.0, -1.0], vec![1.0, 1.0], desk_cfg(), seed).unwrap()
    }

    fn random_batch(n: usize, agent: &AwacAgent, rng: &mut ChaCha8Rng, terminal: bool) -> Batch {
        let ow = agent.policy.obs_width();
        let aw = agent.policy.action_dim();
        Batch {
            states: Array2::from_shape_fn((n, ow), |_| rng.random_range(-1.0..1.0)),
            actions: Array2::from_shape_fn((n, aw), |_| rng.random_range(-0.9..0.9)),
            rewards: Array1::from_iter((0..n).map(|_| rng.random_range(-1.0..0.0))),
            next_states: Array2::from_shape_fn((n, ow), |_| rng.random_range(-1.0..1.0)),
            terminals: vec![terminal; n],
        }
    }

    fn zero_net(net: &mut DenseNet) {
        for i in 0..net.param_count() {
            net.set_param(i, 0.0);
        }
    }

    #[test]
    fn terminal_transitions_use_raw_reward_as_target() {
        let mut a = agent(1);
        let mut rng = fixtures::rng(100);
        let batch = random_batch(6, &a, &mut rng, true);
        let y = a.critic_target(&batch);
        for i in 0..6 {
            assert_eq!(y[i], batch.rewards[i]);
        }
    }

    #[test]
    fn zero_critics_bootstrap_to_reward_only() {
        let mut a = agent(2);
        zero_net(&mut a.critic.target1);
        zero_net(&mut a.critic.target2);
        let mut rng = fixtures::rng(101);
        let mut batch = random_batch(5, &a, &mut rng, false);
        batch.rewards.fill(-1.0);
        let y = a.critic_target(&batch);
        for i in 0..5 {
            assert!((y[i] - (-1.0)).abs() < 1e-15, "y = {}", y[i]);
        }
    }

    #[test]
    fn clamped_targets_stay_nonpositive_under_nonpositive_rewards() {
        let mut cfg = desk_cfg();
        cfg.clamp_q_max = Some(0.0);
        let mut a = AwacAgent::new(3, vec![-1.0, -1.0], vec![1.0, 1.0], cfg, 3).unwrap();
        // Force optimistic targets: large positive bias on both target nets.
        let last = a.critic.target1.param_count() - 1;
        a.critic.target1.set_param(last, 50.0);
        a.critic.target2.set_param(last, 50.0);
        let mut rng = fixtures::rng(102);
        let batch = random_batch(8, &a, &mut rng, false);
        let y = a.critic_target(&batch);
        assert!(y.iter().all(|v| *v <= 0.0), "targets must be clamped nonpositive: {y:?}");
    }

    #[test]
    fn enumerated_target_matches_dynamic_programming_backup() {
        // Inject exact tabular Q-values as the bootstrap: the resulting
        // targets must equal the exact Bellman backup of the MDP layer.
        let mut rng = fixtures::rng(103);
        for _ in 0..20 {
            let mdp = fixtures::random_mdp(&mut rng, 5, 3);
            let policy = fixtures::random_tabular_policy(&mut rng, mdp.n_states, mdp.n_actions);
            let tables = exact_policy_evaluation(&mdp, &policy, 1e-12).unwrap();
            let backed = bellman_backup(&mdp, &policy, &tables.q).unwrap();

            // One batch row per (s, a): next-state bootstrap enumerated
            // exactly as sum_a' pi(a'|s') q(s', a') for every s'.
            let v_next: Vec<f64> = (0..mdp.n_states)
                .map(|s2| (0..mdp.n_actions).map(|a2| policy.probs[[s2, a2]] * tables.q[[s2, a2]]).sum())
                .collect();
            let cfg = AwacConfig { gamma: mdp.gamma, ..desk_cfg() };
            let agent = AwacAgent::new(2, vec![-1.0], vec![1.0], cfg, 9).unwrap();
            for s in 0..mdp.n_states {
                for a in 0..mdp.n_actions {
                    // Expected bootstrap under the true transition row.
                    let eq: f64 = (0..mdp.n_states)
                        .map(|s2| mdp.transition[[s, a, s2]] * v_next[s2])
                        .sum();
                    let batch = Batch {
                        states: Array2::zeros((1, 2)),
                        actions: Array2::zeros((1, 1)),
                        rewards: Array1::from_vec(vec![mdp.reward[[s, a]]]),
                        next_states: Array2::zeros((1, 2)),
                        terminals: vec![false],
                    };
                    let y = agent.target_from_bootstrap(&batch, &Array1::from_vec(vec![eq]));
                    assert!(
                        (y[0] - backed[[s, a]]).abs() < 1e-12,
                        "target {} vs backup {}",
                        y[0],
                        backed[[s, a]]
                    );
                }
            }
        }
    }

    #[test]
    fn repeated_updates_drive_prediction_to_target() {
        let mut a = agent(4);
        let mut rng = fixtures::rng(104);
        // Terminal one-transition batch: y = r = -0.5 forever.
        let mut batch = random_batch(1, &a, &mut rng, true);
        batch.rewards[0] = -0.5;
        for _ in 0..4000 {
            a.critic_update(&batch).unwrap();
        }
        let q = a.critic.q_min(&concat_columns(&batch.states, &batch.actions));
        assert!((q[0] - (-0.5)).abs() < 1e-3, "prediction {} should reach -0.5", q[0]);
    }

    #[test]
    fn zero_advantages_reduce_to_unit_weight_cloning() {
        let mut a = agent(5);
        zero_net(&mut a.critic.q1);
        zero_net(&mut a.critic.q2);
        let mut rng = fixtures::rng(105);
        let batch = random_batch(6, &a, &mut rng, false);
        let aw = a.actor_weights(&batch);
        assert!(aw.weights.iter().all(|w| *w == 1.0), "weights must be exactly 1: {:?}", aw.weights);
        assert_eq!(aw.mean_advantage, 0.0);
    }

    #[test]
    fn huge_lambda_recovers_the_cloning_gradient_direction() {
        let mut a = agent(6);
        let mut rng = fixtures::rng(106);
        let batch = random_batch(12, &a, &mut rng, false);
        let mut cfg_inf = a.cfg.clone();
        cfg_inf.lambda = 1e9;
        a.cfg = cfg_inf;
        let aw = a.actor_weights(&batch);
        let (_, g_weighted) = a.policy.weighted_nll_grad(&batch.states, &batch.actions, &aw.weights).unwrap();
        let ones = vec![1.0; 12];
        let (_, g_bc) = a.policy.weighted_nll_grad(&batch.states, &batch.actions, &ones).unwrap();
        let (wv, bv) = (g_weighted.flat(), g_bc.flat());
        let dot: f64 = wv.iter().zip(&bv).map(|(x, y)| x * y).sum();
        let nw = wv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = bv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cosine = dot / (nw * nb);
        assert!(cosine > 0.9999, "cosine similarity {cosine} should approach 1");
    }

    #[test]
    fn log_two_advantage_gap_doubles_the_weight() {
        let lambda = 0.7;
        let adv = [lambda * 2.0f64.ln(), 0.0];
        let w = weights_from_advantages(&adv, lambda, 20.0);
        assert!((w[0] - 2.0).abs() < 1e-14);
        assert!((w[1] - 1.0).abs() < 1e-14);

        // And the weighted objective is linear in the weights: the batch
        // gradient equals the same weighted combination of per-sample
        // cloning gradients.
        let a = agent(7);
        let mut rng = fixtures::rng(107);
        let batch = random_batch(2, &a, &mut rng, false);
        let (_, g) = a.policy.weighted_nll_grad(&batch.states, &batch.actions, &w).unwrap();
        let row = |i: usize| Batch {
            states: batch.states.row(i).insert_axis(ndarray::Axis(0)).to_owned(),
            actions: batch.actions.row(i).insert_axis(ndarray::Axis(0)).to_owned(),
            rewards: Array1::from_vec(vec![0.0]),
            next_states: batch.next_states.row(i).insert_axis(ndarray::Axis(0)).to_owned(),
            terminals: vec![false],
        };
        let (_, g0) = a.policy.weighted_nll_grad(&row(0).states, &row(0).actions, &[1.0]).unwrap();
        let (_, g1) = a.policy.weighted_nll_grad(&row(1).states, &row(1).actions, &[1.0]).unwrap();
        let combo: Vec<f64> = g0
            .flat()
            .iter()
            .zip(g1.flat())
            .map(|(x, y)| (2.0 * x + 1.0 * y) / 2.0)
            .collect();
        for (got, want) in g.flat().iter().zip(&combo) {
            assert!((got - want).abs() < 1e-12, "batch gradient must be the weighted mean");
        }
    }

    #[test]
    fn advantage_shift_rescales_weights_but_not_direction() {
        let a = agent(8);
        let mut rng = fixtures::rng(108);
        let batch = random_batch(10, &a, &mut rng, false);
        let adv: Vec<f64> = (0..10).map(|_| rng.random_range(-0.5..0.5)).collect();
        let shifted: Vec<f64> = adv.iter().map(|x| x + 0.37).collect();
        let w0 = weights_from_advantages(&adv, 1.0, 20.0);
        let w1 = weights_from_advantages(&shifted, 1.0, 20.0);
        let factor = 0.37f64.exp();
        for (a0, a1) in w0.iter().zip(&w1) {
            assert!((a1 / a0 - factor).abs() < 1e-12, "shift must rescale uniformly");
        }
        let (_, g0) = a.policy.weighted_nll_grad(&batch.states, &batch.actions, &w0).unwrap();
        let (_, g1) = a.policy.weighted_nll_grad(&batch.states, &batch.actions, &w1).unwrap();
        let (v0, v1) = (g0.flat(), g1.flat());
        let dot: f64 = v0.iter().zip(&v1).map(|(x, y)| x * y).sum();
        let n0 = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n1 = v1.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(
            (dot / (n0 * n1) - 1.0).abs() < 1e-6,
            "gradient direction must be invariant to advantage shifts"
        );
    }

    #[test]
    fn exponent_clipping_bounds_the_weights() {
        let w = weights_from_advantages(&[1e6, -1e6], 1.0, 20.0);
        assert_eq!(w[0], 20.0f64.exp());
        assert_eq!(w[1], (-20.0f64).exp());
        assert!(w.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn actor_update_never_samples_the_policy() {
        let mut a = agent(9);
        let mut rng = fixtures::rng(109);
        let batch = random_batch(8, &a, &mut rng, false);
        let aw = a.actor_weights(&batch);
        let drawn_before = a.policy.samples_drawn();
        a.actor_update(&batch, &aw.weights).unwrap();
        assert_eq!(
            a.policy.samples_drawn(),
            drawn_before,
            "the actor update must only use buffer actions"
        );
    }

    #[test]
    fn full_step_samples_exactly_target_plus_baseline_draws() {
        let mut a = agent(10);
        let mut rng = fixtures::rng(110);
        for _ in 0..20 {
            let mut t = Transition {
                state: vec![0.0; 3],
                action: vec![0.1, -0.2],
                reward: -1.0,
                next_state: vec![0.1; 3],
                terminal: false,
            };
            t.state.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            a.buffer.push(t).unwrap();
        }
        let b = a.cfg.batch_size as u64;
        let k = a.cfg.advantage_samples as u64;
        let before = a.policy.samples_drawn();
        a.train_step().unwrap();
        // One draw per next state (target) + K per state (baseline).
        assert_eq!(a.policy.samples_drawn() - before, b * (1 + k));
    }

    #[test]
    fn enumerated_advantage_matches_dynamic_programming_exactly() {
        let mut rng = fixtures::rng(111);
        for _ in 0..50 {
            let mdp = fixtures::random_mdp(&mut rng, 6, 4);
            let policy = fixtures::random_tabular_policy(&mut rng, mdp.n_states, mdp.n_actions);
            let tables = exact_policy_evaluation(&mdp, &policy, 1e-12).unwrap();
            for s in 0..mdp.n_states {
                let q_row: Vec<f64> = tables.q.row(s).to_vec();
                let p_row: Vec<f64> = policy.probs.row(s).to_vec();
                for a in 0..mdp.n_actions {
                    let adv = enumerated_advantage(&q_row, &p_row, a);
                    let exact = tables.q[[s, a]] - tables.v[s];
                    assert!(
                        (adv - exact).abs() < 1e-10,
                        "advantage {adv} vs exact {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn monte_carlo_advantage_converges_to_enumeration_rate() {
        // Fix one (s, a). As K grows the MC advantage approaches the
        // reference; the error should shrink roughly like 1/sqrt(K).
        let base = agent(12);
        let mut rng = fixtures::rng(112);
        let state: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let action = vec![0.3, -0.4];
        let one_row = |_a: &AwacAgent| Batch {
            states: Array2::from_shape_vec((1, 3), state.clone()).unwrap(),
            actions: Array2::from_shape_vec((1, 2), action.clone()).unwrap(),
            rewards: Array1::zeros(1),
            next_states: Array2::zeros((1, 3)),
            terminals: vec![false],
        };
        let reference = {
            let mut a = AwacAgent::new(3, vec![-1.0, -1.0], vec![1.0, 1.0], desk_cfg(), 12).unwrap();
            a.cfg.advantage_samples = 200_000;
            let b = one_row(&a);
            a.estimate_advantages(&b)[0]
        };
        let mean_abs_err = |k: usize| -> f64 {
            let mut total = 0.0;
            let reps = 24;
            for rep in 0..reps {
                let mut a =
                    AwacAgent::new(3, vec![-1.0, -1.0], vec![1.0, 1.0], desk_cfg(), 12).unwrap();
                a.cfg.advantage_samples = k;
                // Decorrelate the MC draws across repeats.
                a.rng = fixtures::rng(500 + rep);
                let b = one_row(&a);
                total += (a.estimate_advantages(&b)[0] - reference).abs();
            }
            total / reps as f64
        };
        let e4 = mean_abs_err(4);
        let e64 = mean_abs_err(64);
        let e1024 = mean_abs_err(1024);
        assert!(e64 < e4, "error must shrink with K: {e4} -> {e64}");
        assert!(e1024 < e64, "error must keep shrinking: {e64} -> {e1024}");
        assert!(
            e1024 < e4 / 4.0,
            "256x more samples should cut error well past 4x (got {e4} -> {e1024})"
        );
        let _ = base;
    }

    #[test]
    fn constant_critic_gives_zero_advantage_everywhere() {
        let mut a = agent(13);
        zero_net(&mut a.critic.q1);
        zero_net(&mut a.critic.q2);
        // A bias-only critic is constant in its inputs.
        let last = a.critic.q1.param_count() - 1;
        a.critic.q1.set_param(last, -3.0);
        let last2 = a.critic.q2.param_count() - 1;
        a.critic.q2.set_param(last2, -2.5);
        let mut rng = fixtures::rng(113);
        let batch = random_batch(7, &a, &mut rng, false);
        let adv = a.estimate_advantages(&batch);
        assert!(adv.iter().all(|x| x.abs() < 1e-12), "advantages must vanish: {adv:?}");
    }

    #[test]
    fn identical_seeds_train_identically() {
        let run = |seed: u64| -> (Vec<f64>, f64) {
            let mut a = agent(seed);
            let mut rng = fixtures::rng(114);
            for _ in 0..30 {
                let mut t = Transition {
                    state: vec![0.0; 3],
                    action: vec![0.0, 0.0],
                    reward: rng.random_range(-1.0..0.0),
                    next_state: vec![0.0; 3],
                    terminal: rng.random_range(0.0..1.0) < 0.2,
                };
                t.state.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
                t.action.iter_mut().for_each(|v| *v = rng.random_range(-0.9..0.9));
                t.next_state.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
                a.buffer.push(t).unwrap();
            }
            let mut losses = Vec::new();
            for _ in 0..15 {
                let l = a.train_step().unwrap();
                losses.push(l.critic_loss);
                losses.push(l.actor_loss);
            }
            (losses, a.policy.net.get_param(3))
        };
        let (l1, p1) = run(77);
        let (l2, p2) = run(77);
        assert_eq!(l1, l2, "loss series must be bitwise identical");
        assert_eq!(p1, p2);
        let (l3, _) = run(78);
        assert_ne!(l1, l3, "different seeds should differ");
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let mut cfg = desk_cfg();
        cfg.lambda = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = desk_cfg();
        cfg.gamma = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = desk_cfg();
        cfg.advantage_samples = 0;
        assert!(cfg.validate().is_err());
        assert!(desk_cfg().validate().is_ok());
    }

    #[test]
    fn grad_step_counter_is_monotone() {
        let mut a = agent(14);
        a.buffer
            .push(Transition {
                state: vec![0.0; 3],
                action: vec![0.0, 0.0],
                reward: -1.0,
                next_state: vec![0.0; 3],
                terminal: true,
            })
            .unwrap();
        assert_eq!(a.grad_steps(), 0);
        for i in 1..=5 {
            a.train_step().unwrap();
            assert_eq!(a.grad_steps(), i);
        }
    }
}
