//! Dataset manufacturing.
//!
//! Two protocols cover the data regimes the experiments need: a small set
//! of scripted-expert demonstrations padded with rollouts from a behavior
//! clone fitted to them (good but narrow data), and episodes driven by an
//! Ornstein-Uhlenbeck process (broad but aimless data). Both are fully
//! seeded, so a (environment, protocol, seed) triple always reproduces
//! the same trajectories and saved files are byte-identical across reruns.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::driver::derive_seed;
use super::HarnessError;
use crate::baselines::{bc_train, BcConfig};
use crate::envs::{EnvConfig, Environment, OuNoise};
use crate::nn::{AdamW, AdamWConfig, GaussianPolicy};
use crate::replay::{Dataset, Provenance, ReplayBuffer, Trajectory, Transition};

/// Cloning budget for the expert imitator. Enough to track the expert's
/// mean behavior at desk scale; the clone stays deliberately imperfect,
/// which is what makes its rollouts widen state coverage.
const CLONE_FIT_STEPS: usize = 1500;
const CLONE_FIT_LR: f64 = 3e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum DataProtocol {
    /// Roll `demos` scripted-expert episodes, fit a behavior clone on
    /// them, then roll `clones` episodes by sampling the clone's policy.
    ExpertBc { demos: usize, clones: usize },
    /// Roll `trajectories` episodes whose actions follow an OU process,
    /// clipped to the unit box and mapped affinely into the action box.
    RandomOu { trajectories: usize, sigma: f64 },
}

impl DataProtocol {
    pub fn label(&self) -> &'static str {
        match self {
            DataProtocol::ExpertBc { .. } => "expert-bc",
            DataProtocol::RandomOu { .. } => "random-ou",
        }
    }
}

/// Pulls every coordinate strictly inside the action box. Squashed
/// densities are undefined exactly on the box edge, so recorded actions
/// must sit in the open interior or likelihood fits on the dataset would
/// reject them. Scripted controllers and the clipped OU map can both emit
/// edge-exact actions; interior points pass through unchanged.
fn into_box_interior(action: &mut [f64], low: &[f64], high: &[f64]) {
    for (a, (&lo, &hi)) in action.iter_mut().zip(low.iter().zip(high)) {
        let margin = 0.5 * (hi - lo) * 1e-9;
        *a = a.clamp(lo + margin, hi - margin);
    }
}

/// Plays one episode to termination or truncation, recording every
/// transition. Returns the trajectory and whether the task was solved.
fn roll_episode(
    env: &mut dyn Environment,
    provenance: Provenance,
    mut act: impl FnMut(&[f64]) -> Vec<f64>,
) -> Result<(Trajectory, bool), HarnessError> {
    let (low, high) = (env.action_low(), env.action_high());
    let mut obs = env.reset();
    let mut transitions = Vec::new();
    let mut solved = false;
    for _ in 0..env.max_episode_len() {
        let mut action = act(&obs);
        into_box_interior(&mut action, &low, &high);
        let out = env.step(&action)?;
        transitions.push(Transition {
            state: obs,
            action,
            reward: out.reward,
            next_state: out.obs.clone(),
            terminal: out.terminated,
        });
        solved |= out.terminated;
        obs = out.obs;
        if out.terminated || out.truncated {
            break;
        }
    }
    Ok((Trajectory { provenance, transitions }, solved))
}

/// Builds a dataset for `env_cfg` under the chosen protocol. Aborts with
/// a `DataGen` error if the scripted expert solves at most half of its
/// attempts, since a dataset built on a failing expert would poison every
/// downstream comparison.
pub fn generate_dataset(
    env_cfg: &EnvConfig,
    protocol: &DataProtocol,
    seed: u64,
) -> Result<Dataset, HarnessError> {
    let mut env = env_cfg.build(derive_seed(seed, 1))?;
    let mut dataset = Dataset::new(env_cfg.name(), env.obs_width(), env.action_width());
    match *protocol {
        DataProtocol::ExpertBc { demos, clones } => {
            let expert = env_cfg.scripted_expert();
            let mut successes = 0usize;
            for _ in 0..demos {
                let (traj, solved) = roll_episode(env.as_mut(), Provenance::Expert, |obs| expert(obs))?;
                successes += usize::from(solved);
                dataset.trajectories.push(traj);
            }
            if demos > 0 && successes * 2 < demos {
                return Err(HarnessError::DataGen(format!(
                    "scripted expert solved only {successes}/{demos} attempts; \
                     refusing to build a dataset around a failing expert"
                )));
            }
            if clones > 0 {
                if demos == 0 {
                    return Err(HarnessError::DataGen(
                        "clone rollouts need at least one demonstration to imitate".into(),
                    ));
                }
                let mut buffer = ReplayBuffer::new(dataset.total_transitions().max(1))?;
                for traj in &dataset.trajectories {
                    for t in &traj.transitions {
                        buffer.push(t.clone())?;
                    }
                }
                let cfg = BcConfig { lr: CLONE_FIT_LR, ..BcConfig::desk_scale() };
                let mut fit_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
                let mut policy = GaussianPolicy::init(
                    dataset.obs_width,
                    &cfg.hidden,
                    env.action_low(),
                    env.action_high(),
                    &mut fit_rng,
                );
                let mut opt = AdamW::new(AdamWConfig::new(cfg.lr, cfg.weight_decay), &policy.net);
                bc_train(&mut policy, &mut opt, &buffer, CLONE_FIT_STEPS, cfg.batch_size, &mut fit_rng)?;
                let mut clone_env = env_cfg.build(derive_seed(seed, 3))?;
                let mut act_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4));
                for _ in 0..clones {
                    let (traj, _) = roll_episode(clone_env.as_mut(), Provenance::Cloned, |obs| {
                        policy.sample(obs, &mut act_rng).0
                    })?;
                    dataset.trajectories.push(traj);
                }
            }
        }
        DataProtocol::RandomOu { trajectories, sigma } => {
            let mut noise = OuNoise::with_params(env.action_width(), 0.15, sigma, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
            let low = env.action_low();
            let high = env.action_high();
            for _ in 0..trajectories {
                noise.reset();
                let (traj, _) = roll_episode(env.as_mut(), Provenance::Random, |_| {
                    noise
                        .sample(&mut rng)
                        .into_iter()
                        .zip(low.iter().zip(&high))
                        .map(|(x, (lo, hi))| lo + (x.clamp(-1.0, 1.0) + 1.0) * 0.5 * (hi - lo))
                        .collect()
                })?;
                dataset.trajectories.push(traj);
            }
        }
    }
    Ok(dataset)
}
