//! The offline-then-online training driver shared by every algorithm.
//!
//! One loop hosts them all: seed the agent with the dataset, run the
//! offline gradient phase (no environment contact), evaluate for the
//! step-0 record, then alternate single-step collection with gradient
//! steps, evaluating at a fixed env-step cadence. Agents differ only
//! behind the [`Agent`] trait, so no algorithm gets a privileged data
//! path, and a (config, seed) pair fully determines every byte of output.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::MetricsRecord;
use super::HarnessError;
use crate::envs::Environment;
use crate::nn::GaussianPolicy;
use crate::replay::{Dataset, Transition};

/// Most recent online transitions handed to a [`BufferObserver`] as the
/// "recent data" window.
pub const RECENT_WINDOW: usize = 1000;

/// Losses from one gradient step. Algorithms without one of the heads
/// (pure cloning has no critic) report `None` there.
#[derive(Debug, Clone, Copy)]
pub struct AgentLosses {
    pub critic: Option<f64>,
    pub actor: Option<f64>,
}

/// The uniform algorithm interface the driver trains through.
pub trait Agent {
    fn algo_name(&self) -> &'static str;
    /// Absorb the offline dataset into the algorithm's training store.
    fn load_dataset(&mut self, dataset: &Dataset) -> Result<(), HarnessError>;
    /// Whether a gradient step is currently possible (a from-scratch
    /// learner has nothing to train on until it collects data).
    fn can_train(&self) -> bool;
    fn train_step(&mut self) -> Result<AgentLosses, HarnessError>;
    /// Stochastic action for collection.
    fn act(&mut self, obs: &[f64]) -> Vec<f64>;
    /// Deterministic action for evaluation.
    fn act_eval(&self, obs: &[f64]) -> Vec<f64>;
    /// One collected transition.
    fn observe(&mut self, t: &Transition) -> Result<(), HarnessError>;
    /// A collection episode just finished (terminal or truncation).
    fn episode_ended(&mut self);
    fn grad_steps(&self) -> u64;
    /// The policy, for entropy diagnostics.
    fn policy(&self) -> &GaussianPolicy;
    /// SAC-family agents never run a separate offline phase; they return
    /// `Some(0)` here and the config's offline budget is ignored.
    fn offline_steps_override(&self) -> Option<usize> {
        None
    }
}

/// Hook called at every evaluation cadence point with the transitions
/// seen so far; used to track a behavior density model alongside a run.
/// Returns (full-data, recent-online) mean log-likelihoods when defined.
pub trait BufferObserver {
    fn at_cadence(
        &mut self,
        all: &[Transition],
        recent_online: &[Transition],
    ) -> (Option<f64>, Option<f64>);
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub offline_steps: usize,
    /// Online environment-step budget; 0 means purely offline.
    pub online_steps: usize,
    /// Environment steps between evaluations.
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub trains_per_env_step: usize,
    pub seed: u64,
}

impl RunOptions {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.eval_every == 0 {
            return Err(HarnessError::Config("eval_every must be at least 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(HarnessError::Config("eval_episodes must be at least 1".into()));
        }
        if self.trains_per_env_step == 0 {
            return Err(HarnessError::Config("trains_per_env_step must be at least 1".into()));
        }
        Ok(())
    }
}

/// Deterministic substream derivation (splitmix-style mixing), so every
/// consumer of randomness in a run gets an independent stream from the
/// single run seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Default)]
struct LossWindow {
    critic_sum: f64,
    critic_n: u64,
    actor_sum: f64,
    actor_n: u64,
}

impl LossWindow {
    fn add(&mut self, l: AgentLosses) {
        if let Some(c) = l.critic {
            self.critic_sum += c;
            self.critic_n += 1;
        }
        if let Some(a) = l.actor {
            self.actor_sum += a;
            self.actor_n += 1;
        }
    }

    fn drain(&mut self) -> (Option<f64>, Option<f64>) {
        let critic = (self.critic_n > 0).then(|| self.critic_sum / self.critic_n as f64);
        let actor = (self.actor_n > 0).then(|| self.actor_sum / self.actor_n as f64);
        *self = LossWindow::default();
        (critic, actor)
    }
}

struct EvalStats {
    mean: f64,
    min: f64,
    max: f64,
    success_rate: f64,
    entropy: f64,
}

/// Deterministic-policy evaluation: `episodes` rollouts of the mean
/// action on a reseeded environment, plus a policy-entropy estimate from
/// single samples at the episodes' start states.
fn evaluate(
    agent: &dyn Agent,
    eval_env: &mut dyn Environment,
    episodes: usize,
    seed: u64,
) -> Result<EvalStats, HarnessError> {
    eval_env.reseed(seed);
    let mut entropy_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5EED));
    let mut returns = Vec::with_capacity(episodes);
    let mut successes = 0usize;
    let mut logp_sum = 0.0;
    let mut logp_n = 0usize;
    for _ in 0..episodes {
        let mut obs = eval_env.reset();
        let (_, logp) = agent.policy().sample(&obs, &mut entropy_rng);
        logp_sum += logp;
        logp_n += 1;
        let mut ep_return = 0.0;
        let mut success = false;
        for _ in 0..eval_env.max_episode_len() {
            let out = eval_env.step(&agent.act_eval(&obs))?;
            ep_return += out.reward;
            obs = out.obs;
            if out.terminated {
                success = true;
            }
            if out.terminated || out.truncated {
                break;
            }
        }
        returns.push(ep_return);
        successes += usize::from(success);
    }
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let min = returns.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = returns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(EvalStats {
        mean,
        min,
        max,
        success_rate: successes as f64 / episodes as f64,
        entropy: -(logp_sum / logp_n as f64),
    })
}

/// Rolls `episodes` deterministic (mean-action) episodes of a standalone
/// policy on a freshly reseeded environment. Returns the per-episode
/// returns and the success rate. This is the evaluation primitive behind
/// the CLI's evaluate command.
pub fn rollout_mean_policy(
    policy: &GaussianPolicy,
    env: &mut dyn Environment,
    episodes: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64), HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::Config("episodes must be at least 1".into()));
    }
    env.reseed(seed);
    let mut returns = Vec::with_capacity(episodes);
    let mut successes = 0usize;
    for _ in 0..episodes {
        let mut obs = env.reset();
        let mut ep_return = 0.0;
        for _ in 0..env.max_episode_len() {
            let out = env.step(&policy.mean_action(&obs))?;
            ep_return += out.reward;
            obs = out.obs;
            if out.terminated {
                successes += 1;
            }
            if out.terminated || out.truncated {
                break;
            }
        }
        returns.push(ep_return);
    }
    let success_rate = successes as f64 / episodes as f64;
    Ok((returns, success_rate))
}

/// Runs one full experiment for one agent and streams each metrics
/// record through `on_record` as soon as it exists, so a mid-run fault
/// preserves everything recorded so far.
pub fn run_loop(
    agent: &mut dyn Agent,
    env: &mut dyn Environment,
    eval_env: &mut dyn Environment,
    dataset: &Dataset,
    opts: &RunOptions,
    mut observer: Option<&mut dyn BufferObserver>,
    mut on_record: impl FnMut(&MetricsRecord) -> Result<(), HarnessError>,
) -> Result<Vec<MetricsRecord>, HarnessError> {
    opts.validate()?;
    agent.load_dataset(dataset)?;

    let mut all: Vec<Transition> = dataset
        .trajectories
        .iter()
        .flat_map(|t| t.transitions.iter().cloned())
        .collect();
    let mut online: Vec<Transition> = Vec::new();
    let mut window = LossWindow::default();
    let mut records: Vec<MetricsRecord> = Vec::new();
    let mut epoch = 0u64;

    let record_point = |agent: &dyn Agent,
                            eval_env: &mut dyn Environment,
                            epoch: u64,
                            env_steps: u64,
                            window: &mut LossWindow,
                            all: &[Transition],
                            online: &[Transition],
                            observer: &mut Option<&mut dyn BufferObserver>,
                            records: &mut Vec<MetricsRecord>,
                            on_record: &mut dyn FnMut(&MetricsRecord) -> Result<(), HarnessError>|
     -> Result<(), HarnessError> {
        let stats = evaluate(
            agent,
            eval_env,
            opts.eval_episodes,
            derive_seed(opts.seed, 1000 + epoch),
        )?;
        let (critic_loss, actor_loss) = window.drain();
        let (full, recent) = match observer {
            Some(obs) => {
                let start = online.len().saturating_sub(RECENT_WINDOW);
                obs.at_cadence(all, &online[start..])
            }
            None => (None, None),
        };
        let rec = MetricsRecord {
            epoch,
            env_steps,
            grad_steps: agent.grad_steps(),
            eval_return_mean: stats.mean,
            eval_return_min: stats.min,
            eval_return_max: stats.max,
            success_rate: stats.success_rate,
            critic_loss,
            actor_loss,
            policy_entropy: stats.entropy,
            behavior_loglik_full: full,
            behavior_loglik_recent: recent,
        };
        on_record(&rec)?;
        records.push(rec);
        Ok(())
    };

    // Offline phase: gradient steps only, zero environment contact.
    let offline = agent.offline_steps_override().unwrap_or(opts.offline_steps);
    for _ in 0..offline {
        if agent.can_train() {
            window.add(agent.train_step()?);
        }
    }

    // The step-0 point: what pretraining alone buys.
    record_point(
        agent, eval_env, epoch, 0, &mut window, &all, &online, &mut observer, &mut records,
        &mut on_record,
    )?;

    if opts.online_steps == 0 {
        return Ok(records);
    }

    // Online fine-tuning: collect one step, train, evaluate on cadence.
    let mut env_steps = 0u64;
    let mut obs = env.reset();
    while env_steps < opts.online_steps as u64 {
        let action = agent.act(&obs);
        let out = env.step(&action)?;
        let transition = Transition {
            state: obs.clone(),
            action,
            reward: out.reward,
            next_state: out.obs.clone(),
            terminal: out.terminated,
        };
        agent.observe(&transition)?;
        all.push(transition.clone());
        online.push(transition);
        env_steps += 1;
        if out.terminated || out.truncated {
            agent.episode_ended();
            obs = env.reset();
        } else {
            obs = out.obs;
        }
        for _ in 0..opts.trains_per_env_step {
            if agent.can_train() {
                window.add(agent.train_step()?);
            }
        }
        if env_steps % opts.eval_every as u64 == 0 || env_steps == opts.online_steps as u64 {
            epoch += 1;
            record_point(
                agent, eval_env, epoch, env_steps, &mut window, &all, &online, &mut observer,
                &mut records, &mut on_record,
            )?;
        }
    }
    Ok(records)
}
