//! Native desk-scale environments.
//!
//! Two tasks cover the discrete and continuous regimes: a sparse-reward
//! chain MDP whose exact values are available through the dynamic
//! programming layer, and a 2-D point-mass pusher where a hand must shove
//! a puck to a goal. Both use the {-1, 0} sparse reward convention, so
//! optimal Q-values are nonpositive and the Q-clamp option is meaningful.
//! An Ornstein-Uhlenbeck process supplies temporally correlated random
//! actions for low-quality dataset generation.

mod chain;
mod ou;
mod pointmass;

pub use chain::{chain_expert_action, chain_mdp, ChainEnv};
pub use ou::OuNoise;
pub use pointmass::{PointMassConfig, PointMassPush};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode is over (terminated or truncated); call reset before stepping")]
    NeedsReset,
    #[error("action width mismatch: environment takes {expected}, got {got}")]
    ActionWidth { expected: usize, got: usize },
    #[error("unknown environment name {0:?}")]
    UnknownEnv(String),
    #[error("bad environment parameter: {0}")]
    BadParam(String),
}

/// What one environment step returns. `terminated` marks true task
/// termination (success/absorbing state); `truncated` marks the time
/// limit. Value bootstrapping must cut only on `terminated`.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Uniform host interface for tasks: fixed-width observations, a box
/// action space, bounded episodes, and owned seeding so identical seeds
/// reproduce identical episodes.
pub trait Environment {
    fn name(&self) -> &'static str;
    fn obs_width(&self) -> usize;
    fn action_width(&self) -> usize;
    fn action_low(&self) -> Vec<f64>;
    fn action_high(&self) -> Vec<f64>;
    fn max_episode_len(&self) -> usize;
    /// Starts a new episode and returns its first observation.
    fn reset(&mut self) -> Vec<f64>;
    /// Advances one step. Errors if the episode already ended.
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError>;
    /// Reseeds the environment's own randomness (resets and dynamics).
    fn reseed(&mut self, seed: u64);
    /// Whether an observation satisfies the task's success predicate.
    fn is_success(&self, obs: &[f64]) -> bool;
}

/// Buildable description of an environment, selected by name from the
/// experiment config.
#[derive(Debug, Clone)]
pub enum EnvConfig {
    Chain { length: usize, slip: f64 },
    PointMass(PointMassConfig),
}

impl EnvConfig {
    /// Named presets: `chain`, `pointmass` (sparse), `pointmass-dense`.
    pub fn from_name(name: &str) -> Result<EnvConfig, EnvError> {
        match name {
            "chain" => Ok(EnvConfig::Chain { length: 8, slip: 0.1 }),
            "pointmass" => Ok(EnvConfig::PointMass(PointMassConfig::default())),
            "pointmass-dense" => {
                Ok(EnvConfig::PointMass(PointMassConfig { sparse: false, ..PointMassConfig::default() }))
            }
            other => Err(EnvError::UnknownEnv(other.to_string())),
        }
    }

    pub fn build(&self, seed: u64) -> Result<Box<dyn Environment>, EnvError> {
        match self {
            EnvConfig::Chain { length, slip } => Ok(Box::new(ChainEnv::new(*length, *slip, seed)?)),
            EnvConfig::PointMass(cfg) => Ok(Box::new(PointMassPush::new(cfg.clone(), seed))),
        }
    }

    /// Hand-written controller that solves the task from any reset; used
    /// to manufacture expert demonstrations.
    pub fn scripted_expert(&self) -> Box<dyn Fn(&[f64]) -> Vec<f64> + Send> {
        match self {
            EnvConfig::Chain { .. } => Box::new(chain_expert_action),
            EnvConfig::PointMass(cfg) => {
                let cfg = cfg.clone();
                Box::new(move |obs| cfg.scripted_action(obs))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::Chain { .. } => "chain",
            EnvConfig::PointMass(cfg) => {
                if cfg.sparse {
                    "pointmass"
                } else {
                    "pointmass-dense"
                }
            }
        }
    }
}
