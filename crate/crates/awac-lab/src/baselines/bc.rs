//! Behavior cloning: maximum-likelihood regression of the Gaussian
//! policy onto buffer actions. This is exactly the main agent's actor
//! update with every weight equal to one, which a test below pins down
//! as a literal identity.

use rand_chacha::ChaCha8Rng;

use crate::harness::{Agent, AgentLosses, HarnessError};
use crate::nn::{AdamW, AdamWConfig, GaussianPolicy};
use crate::replay::{Dataset, ReplayBuffer, Transition};

#[derive(Debug, Clone)]
pub struct BcConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig {
            batch_size: 1024,
            lr: 3e-4,
            weight_decay: 1e-4,
            hidden: vec![256, 256, 256, 256],
            buffer_capacity: 1_000_000,
        }
    }
}

impl BcConfig {
    /// Small-scale settings for the bundled experiments and tests.
    pub fn desk_scale() -> Self {
        BcConfig {
            batch_size: 128,
            hidden: vec![64, 64],
            buffer_capacity: 100_000,
            ..BcConfig::default()
        }
    }
}

/// One cloning step: sample a batch, minimize mean negative
/// log-likelihood of its actions, step the optimizer. Returns the loss.
pub fn bc_step(
    policy: &mut GaussianPolicy,
    opt: &mut AdamW,
    buffer: &ReplayBuffer,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64, HarnessError> {
    let batch = buffer.sample_arrays(batch_size, rng)?;
    let ones = vec![1.0; batch.rewards.len()];
    let (loss, grads) = policy.weighted_nll_grad(&batch.states, &batch.actions, &ones)?;
    opt.step(&mut policy.net, &grads)?;
    Ok(loss)
}

/// Fits the policy to the buffer by `steps` cloning steps and returns
/// the final-step loss.
pub fn bc_train(
    policy: &mut GaussianPolicy,
    opt: &mut AdamW,
    buffer: &ReplayBuffer,
    steps: usize,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64, HarnessError> {
    let mut last = f64::NAN;
    for _ in 0..steps {
        last = bc_step(policy, opt, buffer, batch_size, rng)?;
    }
    Ok(last)
}

/// Behavior cloning as a driver-compatible agent. It keeps cloning
/// whatever is in its buffer, so during fine-tuning it imitates its own
/// collected experience on top of the dataset.
pub struct BcAgent {
    pub policy: GaussianPolicy,
    pub buffer: ReplayBuffer,
    cfg: BcConfig,
    opt: AdamW,
    grad_steps: u64,
    rng: ChaCha8Rng,
}

impl BcAgent {
    pub fn new(
        obs_width: usize,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        cfg: BcConfig,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = GaussianPolicy::init(obs_width, &cfg.hidden, action_low, action_high, &mut rng);
        let opt = AdamW::new(AdamWConfig::new(cfg.lr, cfg.weight_decay), &policy.net);
        let buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
        Ok(BcAgent { policy, buffer, cfg, opt, grad_steps: 0, rng })
    }
}

impl Agent for BcAgent {
    fn algo_name(&self) -> &'static str {
        "bc"
    }

    fn load_dataset(&mut self, dataset: &Dataset) -> Result<(), HarnessError> {
        self.buffer.push_dataset(dataset)?;
        Ok(())
    }

    fn can_train(&self) -> bool {
        !self.buffer.is_empty()
    }

    fn train_step(&mut self) -> Result<AgentLosses, HarnessError> {
        let loss = bc_step(
            &mut self.policy,
            &mut self.opt,
            &self.buffer,
            self.cfg.batch_size,
            &mut self.rng,
        )?;
        self.grad_steps += 1;
        Ok(AgentLosses { critic: None, actor: Some(loss) })
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn buffer_from(transitions: Vec<Transition>) -> ReplayBuffer {
        let mut buf = ReplayBuffer::new(100_000).unwrap();
        for t in transitions {
            buf.push(t).unwrap();
        }
        buf
    }

    /// Data from a deterministic mapping with a squashed-linear shape is
    /// recovered to 1e-2 on held-out states.
    #[test]
    fn recovers_deterministic_mapping_on_held_out_states() {
        let mut rng = fixtures::rng(41);
        let target = |s: &[f64]| {
            let u = 0.8 * s[0] - 0.3 * s[1] + 0.1;
            vec![u.tanh()]
        };
        let mut transitions = Vec::new();
        for _ in 0..512 {
            let s = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            // Tiny pre-squash label noise keeps the fitted variance away
            // from the log-std clamp so the MLE stays well conditioned.
            let eps: f64 = StandardNormal.sample(&mut rng);
            let u = 0.8 * s[0] - 0.3 * s[1] + 0.1 + 1e-3 * eps;
            transitions.push(Transition {
                state: s.clone(),
                action: vec![u.tanh()],
                reward: 0.0,
                next_state: s,
                terminal: true,
            });
        }
        let buf = buffer_from(transitions);
        let mut policy = GaussianPolicy::init(2, &[32, 32], vec![-1.0], vec![1.0], &mut rng);
        let mut opt = AdamW::new(AdamWConfig::new(3e-3, 0.0), &policy.net);
        bc_train(&mut policy, &mut opt, &buf, 3000, 128, &mut rng).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let s = vec![rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9)];
            let got = policy.mean_action(&s);
            let want = target(&s);
            worst = worst.max((got[0] - want[0]).abs());
        }
        assert!(worst <= 1e-2, "held-out action error {worst}");
    }

    /// A single repeated pair pins the mean at that action.
    #[test]
    fn single_pair_is_memorized() {
        let mut rng = fixtures::rng(42);
        let t = Transition {
            state: vec![0.3, -0.7],
            action: vec![0.25],
            reward: 0.0,
            next_state: vec![0.3, -0.7],
            terminal: true,
        };
        let buf = buffer_from(vec![t.clone()]);
        let mut policy = GaussianPolicy::init(2, &[16], vec![-1.0], vec![1.0], &mut rng);
        let mut opt = AdamW::new(AdamWConfig::new(3e-3, 0.0), &policy.net);
        bc_train(&mut policy, &mut opt, &buf, 1500, 8, &mut rng).unwrap();
        let got = policy.mean_action(&t.state);
        assert!((got[0] - 0.25).abs() < 1e-2, "memorized mean {got:?}");
    }

    /// The cloning loss and update are bit-identical to the main agent's
    /// actor update when every weight is one.
    #[test]
    fn loss_identical_to_unit_weight_actor_update() {
        use crate::awac::{AwacAgent, AwacConfig};
        let mut rng = fixtures::rng(43);
        let mut transitions = Vec::new();
        for _ in 0..64 {
            let s = vec![rng.random_range(-1.0..1.0)];
            transitions.push(Transition {
                state: s.clone(),
                action: vec![rng.random_range(-0.9..0.9)],
                reward: -1.0,
                next_state: s,
                terminal: false,
            });
        }
        let buf = buffer_from(transitions);

        let mut cfg = AwacConfig::desk_scale();
        cfg.batch_size = 32;
        let mut awac = AwacAgent::new(1, vec![-1.0], vec![1.0], cfg.clone(), 7).unwrap();
        let mut policy = awac.policy.clone();
        let mut opt = AdamW::new(AdamWConfig::new(cfg.lr, cfg.policy_weight_decay), &policy.net);

        let mut sample_rng = fixtures::rng(9);
        let batch = buf.sample_arrays(32, &mut sample_rng).unwrap();
        let ones = vec![1.0; 32];
        let awac_loss = awac.actor_update(&batch, &ones).unwrap();
        let (bc_loss, grads) = policy
            .weighted_nll_grad(&batch.states, &batch.actions, &ones)
            .unwrap();
        opt.step(&mut policy.net, &grads).unwrap();

        assert_eq!(awac_loss.to_bits(), bc_loss.to_bits(), "losses must be identical");
        for i in 0..policy.net.param_count() {
            assert_eq!(
                policy.net.get_param(i).to_bits(),
                awac.policy.net.get_param(i).to_bits(),
                "parameter {i} diverged"
            );
        }
    }
}
