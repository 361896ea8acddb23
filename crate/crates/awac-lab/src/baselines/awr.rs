//! Exponentially weighted regression baselines built on trajectory
//! returns rather than bootstrapped critics.
//!
//! A value net regresses lambda-mixed multi-step returns computed over
//! whole stored trajectories:
//!
//! `G_t = r_t + gamma * ((1 - lambda) * V(s_{t+1}) + lambda * G_{t+1})`
//!
//! with `G` at a terminal step equal to its reward and a truncated tail
//! bootstrapped through `V`. The actor then does weighted maximum
//! likelihood with weights `exp(clip((G - V(s)) / temperature))`. The
//! single-path variant pins `lambda = 1`, making the target the plain
//! discounted return of the trajectory that was actually observed; both
//! estimators need path structure, so this agent stores trajectories,
//! not flat transitions.

use ndarray::{s, Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::awac::weights_from_advantages;
use crate::harness::{Agent, AgentLosses, HarnessError};
use crate::nn::{mse_loss_grad, AdamW, AdamWConfig, DenseNet, GaussianPolicy};
use crate::replay::{Dataset, Provenance, Trajectory, Transition, TrajectoryStore};

#[derive(Debug, Clone)]
pub struct AwrConfig {
    pub gamma: f64,
    /// Trace-mixing parameter for the value targets; ignored (treated as
    /// 1) when `single_path` is set.
    pub lambda: f64,
    /// Advantage temperature in the exponential weights.
    pub temperature: f64,
    pub exponent_clip: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub store_capacity: usize,
    /// Gradient steps between recomputations of the stored targets.
    pub target_refresh_every: usize,
    /// Use the observed single-path discounted return as the target
    /// (equivalent to lambda = 1).
    pub single_path: bool,
}

impl Default for AwrConfig {
    fn default() -> Self {
        AwrConfig {
            gamma: 0.99,
            lambda: 0.95,
            temperature: 1.0,
            exponent_clip: 20.0,
            batch_size: 1024,
            hidden: vec![256, 256, 256, 256],
            lr: 3e-4,
            store_capacity: 1_000_000,
            target_refresh_every: 100,
            single_path: false,
        }
    }
}

impl AwrConfig {
    /// Small-scale settings for the bundled experiments and tests.
    pub fn desk_scale() -> Self {
        AwrConfig {
            batch_size: 128,
            hidden: vec![64, 64],
            store_capacity: 100_000,
            ..AwrConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.into()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must be in [0, 1]");
        }
        if self.temperature <= 0.0 {
            return bad("temperature must be positive");
        }
        if self.exponent_clip <= 0.0 {
            return bad("exponent_clip must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.lr <= 0.0 {
            return bad("lr must be positive");
        }
        Ok(())
    }

    fn effective_lambda(&self) -> f64 {
        if self.single_path {
            1.0
        } else {
            self.lambda
        }
    }
}

/// Lambda-mixed multi-step return targets for one trajectory, evaluated
/// under the given value net. A terminal step contributes exactly its
/// reward; a truncated tail bootstraps through `V(next_state)`.
pub fn td_lambda_targets(
    transitions: &[Transition],
    value: &DenseNet,
    gamma: f64,
    lambda: f64,
) -> Result<Vec<f64>, HarnessError> {
    if transitions.is_empty() {
        return Err(HarnessError::Run(
            "a trajectory with no transitions has no return to estimate".into(),
        ));
    }
    let n = transitions.len();
    let obs_width = transitions[0].state.len();
    let mut next_states = Array2::zeros((n, obs_width));
    for (i, t) in transitions.iter().enumerate() {
        next_states.slice_mut(s![i, ..]).assign(&ndarray::ArrayView1::from(&t.next_state));
    }
    let v_next = value.forward(&next_states);

    let mut targets = vec![0.0; n];
    for i in (0..n).rev() {
        let t = &transitions[i];
        targets[i] = if t.terminal {
            t.reward
        } else if i + 1 == n {
            t.reward + gamma * v_next[[i, 0]]
        } else {
            t.reward + gamma * ((1.0 - lambda) * v_next[[i, 0]] + lambda * targets[i + 1])
        };
    }
    Ok(targets)
}

pub struct AwrAgent {
    pub cfg: AwrConfig,
    pub policy: GaussianPolicy,
    pub value: DenseNet,
    pub store: TrajectoryStore,
    policy_opt: AdamW,
    value_opt: AdamW,
    flat_states: Array2<f64>,
    flat_actions: Array2<f64>,
    flat_targets: Vec<f64>,
    pending: Vec<Transition>,
    dirty: bool,
    steps_since_refresh: usize,
    grad_steps: u64,
    rng: ChaCha8Rng,
}

impl AwrAgent {
    pub fn new(
        obs_width: usize,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        cfg: AwrConfig,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let action_dim = action_low.len();
        let policy = GaussianPolicy::init(obs_width, &cfg.hidden, action_low, action_high, &mut rng);
        let mut value_sizes = vec![obs_width];
        value_sizes.extend_from_slice(&cfg.hidden);
        value_sizes.push(1);
        let value = DenseNet::init(&value_sizes, &mut rng);
        let policy_opt = AdamW::new(AdamWConfig::new(cfg.lr, 0.0), &policy.net);
        let value_opt = AdamW::new(AdamWConfig::new(cfg.lr, 0.0), &value);
        let store = TrajectoryStore::new(cfg.store_capacity)?;
        Ok(AwrAgent {
            cfg,
            policy,
            value,
            store,
            policy_opt,
            value_opt,
            flat_states: Array2::zeros((0, obs_width)),
            flat_actions: Array2::zeros((0, action_dim)),
            flat_targets: Vec::new(),
            pending: Vec::new(),
            dirty: true,
            steps_since_refresh: 0,
            grad_steps: 0,
            rng,
        })
    }

    /// Recomputes every stored target under the current value net and
    /// reflattens the store for sampling.
    pub fn refresh_targets(&mut self) -> Result<(), HarnessError> {
        let total = self.store.total_transitions();
        if total == 0 {
            return Ok(());
        }
        let first = &self.store.trajectories()[0].transitions[0];
        let obs_width = first.state.len();
        let action_width = first.action.len();
        let mut states = Array2::zeros((total, obs_width));
        let mut actions = Array2::zeros((total, action_width));
        let mut targets = Vec::with_capacity(total);
        let lambda = self.cfg.effective_lambda();
        let mut row = 0;
        for traj in self.store.trajectories() {
            let g = td_lambda_targets(&traj.transitions, &self.value, self.cfg.gamma, lambda)?;
            for (t, gt) in traj.transitions.iter().zip(g) {
                states.slice_mut(s![row, ..]).assign(&ndarray::ArrayView1::from(&t.state));
                actions.slice_mut(s![row, ..]).assign(&ndarray::ArrayView1::from(&t.action));
                targets.push(gt);
                row += 1;
            }
        }
        self.flat_states = states;
        self.flat_actions = actions;
        self.flat_targets = targets;
        self.dirty = false;
        self.steps_since_refresh = 0;
        Ok(())
    }

    fn maybe_refresh(&mut self) -> Result<(), HarnessError> {
        if self.dirty || self.steps_since_refresh >= self.cfg.target_refresh_every {
            self.refresh_targets()?;
        }
        Ok(())
    }

    pub fn train_step_inner(&mut self) -> Result<(f64, f64), HarnessError> {
        self.maybe_refresh()?;
        let n = self.flat_targets.len();
        if n == 0 {
            return Err(HarnessError::Run("no stored trajectories to train on".into()));
        }
        let b = self.cfg.batch_size;
        let mut states = Array2::zeros((b, self.flat_states.ncols()));
        let mut actions = Array2::zeros((b, self.flat_actions.ncols()));
        let mut targets = Array1::zeros(b);
        for row in 0..b {
            let i = self.rng.random_range(0..n);
            states.row_mut(row).assign(&self.flat_states.row(i));
            actions.row_mut(row).assign(&self.flat_actions.row(i));
            targets[row] = self.flat_targets[i];
        }

        let (value_loss, v_grads) = mse_loss_grad(&self.value, &states, &targets);
        self.value_opt.step(&mut self.value, &v_grads)?;

        // Advantages under the just-updated value net; constants to the
        // actor, which only reweights a maximum-likelihood fit.
        let v = self.value.forward(&states);
        let advantages: Vec<f64> = (0..b).map(|i| targets[i] - v[[i, 0]]).collect();
        let weights =
            weights_from_advantages(&advantages, self.cfg.temperature, self.cfg.exponent_clip);
        let (actor_loss, p_grads) = self.policy.weighted_nll_grad(&states, &actions, &weights)?;
        self.policy_opt.step(&mut self.policy.net, &p_grads)?;

        self.grad_steps += 1;
        self.steps_since_refresh += 1;
        Ok((value_loss, actor_loss))
    }
}

impl Agent for AwrAgent {
    fn algo_name(&self) -> &'static str {
        if self.cfg.single_path {
            "marwil"
        } else {
            "awr"
        }
    }

    fn load_dataset(&mut self, dataset: &Dataset) -> Result<(), HarnessError> {
        self.store.push_dataset(dataset);
        self.dirty = true;
        Ok(())
    }

    fn can_train(&self) -> bool {
        !self.store.is_empty()
    }

    fn train_step(&mut self) -> Result<AgentLosses, HarnessError> {
        let (value, actor) = self.train_step_inner()?;
        Ok(AgentLosses { critic: Some(value), actor: Some(actor) })
    }

    fn act(&mut self, obs: &[f64]) -> Vec<f64> {
        let (a, _) = self.policy.sample(obs, &mut self.rng);
        a
    }

    fn act_eval(&self, obs: &[f64]) -> Vec<f64> {
        self.policy.mean_action(obs)
    }

    fn observe(&mut self, t: &Transition) -> Result<(), HarnessError> {
        self.pending.push(t.clone());
        Ok(())
    }

    fn episode_ended(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let transitions = std::mem::take(&mut self.pending);
        self.store.push_trajectory(Trajectory { provenance: Provenance::Online, transitions });
        self.dirty = true;
    }

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
    use crate::envs::{chain_mdp, ChainEnv, Environment};
    use crate::fixtures;
    use crate::mdp::{exact_policy_evaluation, TabularPolicy};

    fn toy_trajectory(terminal_end: bool) -> Vec<Transition> {
        let mk = |st: f64, a: f64, r: f64, nx: f64, term: bool| Transition {
            state: vec![st, 1.0 - st],
            action: vec![a],
            reward: r,
            next_state: vec![nx, 1.0 - nx],
            terminal: term,
        };
        vec![
            mk(0.1, 0.2, -1.0, 0.4, false),
            mk(0.4, -0.3, -0.5, 0.7, false),
            mk(0.7, 0.5, 2.0, 1.0, terminal_end),
        ]
    }

    fn tiny_value(seed: u64) -> DenseNet {
        let mut rng = fixtures::rng(seed);
        DenseNet::init(&[2, 8, 1], &mut rng)
    }

    /// At lambda = 1 the target is exactly the observed discounted
    /// return, independent of the value net.
    #[test]
    fn lambda_one_is_the_monte_carlo_return() {
        let value = tiny_value(80);
        let traj = toy_trajectory(true);
        let g = 0.9;
        let got = td_lambda_targets(&traj, &value, g, 1.0).unwrap();
        let want2 = 2.0;
        let want1 = -0.5 + g * want2;
        let want0 = -1.0 + g * want1;
        assert!((got[2] - want2).abs() < 1e-12);
        assert!((got[1] - want1).abs() < 1e-12);
        assert!((got[0] - want0).abs() < 1e-12);
    }

    /// At lambda = 0 every target is the one-step bootstrapped estimate.
    #[test]
    fn lambda_zero_is_the_one_step_target() {
        let value = tiny_value(81);
        let traj = toy_trajectory(true);
        let g = 0.9;
        let got = td_lambda_targets(&traj, &value, g, 0.0).unwrap();
        for (i, t) in traj.iter().enumerate() {
            let want = if t.terminal {
                t.reward
            } else {
                let ns = Array2::from_shape_vec((1, 2), t.next_state.clone()).unwrap();
                t.reward + g * value.forward(&ns)[[0, 0]]
            };
            assert!((got[i] - want).abs() < 1e-12, "step {i}: got {}, want {want}", got[i]);
        }
    }

    /// A truncated tail bootstraps through the value net at every lambda.
    #[test]
    fn truncated_tail_bootstraps_through_value() {
        let value = tiny_value(82);
        let traj = toy_trajectory(false);
        let g = 0.9;
        let got = td_lambda_targets(&traj, &value, g, 0.7).unwrap();
        let ns = Array2::from_shape_vec((1, 2), traj[2].next_state.clone()).unwrap();
        let want_last = traj[2].reward + g * value.forward(&ns)[[0, 0]];
        assert!((got[2] - want_last).abs() < 1e-12);
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        let value = tiny_value(83);
        assert!(td_lambda_targets(&[], &value, 0.99, 0.5).is_err());
    }

    /// The single-path variant and the lambda = 1 trace produce identical
    /// targets on the same data and nets.
    #[test]
    fn single_path_coincides_with_lambda_one_targets() {
        let mut ds = Dataset::new("toy", 2, 1);
        ds.trajectories.push(Trajectory {
            provenance: Provenance::Expert,
            transitions: toy_trajectory(true),
        });
        ds.trajectories.push(Trajectory {
            provenance: Provenance::Expert,
            transitions: toy_trajectory(false),
        });

        let mut awr_cfg = AwrConfig::desk_scale();
        awr_cfg.lambda = 1.0;
        let mut marwil_cfg = AwrConfig::desk_scale();
        marwil_cfg.single_path = true;
        marwil_cfg.lambda = 0.3; // must be ignored

        let mut a = AwrAgent::new(2, vec![-1.0], vec![1.0], awr_cfg, 99).unwrap();
        let mut m = AwrAgent::new(2, vec![-1.0], vec![1.0], marwil_cfg, 99).unwrap();
        a.load_dataset(&ds).unwrap();
        m.load_dataset(&ds).unwrap();
        a.refresh_targets().unwrap();
        m.refresh_targets().unwrap();
        assert_eq!(a.flat_targets.len(), m.flat_targets.len());
        for i in 0..a.flat_targets.len() {
            assert_eq!(
                a.flat_targets[i].to_bits(),
                m.flat_targets[i].to_bits(),
                "target {i} diverged"
            );
        }
    }

    /// On the two-state chain with a known stochastic behavior policy the
    /// value net converges to the exact dynamic-programming evaluation.
    #[test]
    fn chain_value_matches_exact_policy_evaluation() {
        let mdp = chain_mdp(2, 0.1).unwrap();
        let behavior = TabularPolicy::new(ndarray::arr2(&[[0.3, 0.7], [0.5, 0.5]])).unwrap();
        let exact = exact_policy_evaluation(&mdp, &behavior, 1e-12).unwrap();

        // Roll episodes under the same behavior through the env wrapper.
        let mut env = ChainEnv::new(2, 0.1, 901).unwrap();
        let mut rng = fixtures::rng(902);
        let mut cfg = AwrConfig::desk_scale();
        cfg.hidden = vec![16];
        cfg.lambda = 0.5;
        cfg.batch_size = 256;
        cfg.lr = 3e-3;
        cfg.store_capacity = 200_000;
        let mut agent = AwrAgent::new(2, vec![-1.0], vec![1.0], cfg, 903).unwrap();
        for _ in 0..20_000 {
            let mut obs = env.reset();
            loop {
                let dir = if rng.random::<f64>() < 0.7 { 0.6 } else { -0.6 };
                let out = env.step(&[dir]).unwrap();
                agent
                    .observe(&Transition {
                        state: obs,
                        action: vec![dir],
                        reward: out.reward,
                        next_state: out.obs.clone(),
                        terminal: out.terminated,
                    })
                    .unwrap();
                obs = out.obs;
                if out.terminated || out.truncated {
                    agent.episode_ended();
                    break;
                }
            }
        }
        for _ in 0..2500 {
            agent.train_step_inner().unwrap();
        }
        let v0 = agent.value.forward(&ndarray::arr2(&[[1.0, 0.0]]))[[0, 0]];
        assert!(
            (v0 - exact.v[0]).abs() <= 1e-2,
            "value {v0} should match the exact evaluation {}",
            exact.v[0]
        );
    }
}
