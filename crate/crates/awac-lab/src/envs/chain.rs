//! Sparse-reward chain MDP and its continuous-action wrapper.
//!
//! States 0..length-1 form a line; the agent starts at 0 and must walk to
//! the absorbing goal at the far end. Every step costs -1 until the goal
//! is reached, so returns directly encode (negated, discounted) time to
//! goal. A slip probability flips the chosen direction, making the exact
//! values nontrivial while keeping them solvable by dynamic programming.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EnvError, Environment, StepOutcome};
use crate::mdp::FiniteMdp;

pub const CHAIN_MAX_STEPS: usize = 50;

/// Builds the chain as an explicit finite MDP: actions {0: left, 1:
/// right}, step reward -1, absorbing zero-reward goal at `length - 1`,
/// chosen direction flipped with probability `slip_prob`.
pub fn chain_mdp(length: usize, slip_prob: f64) -> Result<FiniteMdp, EnvError> {
    if length < 2 {
        return Err(EnvError::BadParam(format!("chain length must be at least 2, got {length}")));
    }
    if !(0.0..0.5).contains(&slip_prob) {
        return Err(EnvError::BadParam(format!(
            "slip probability must lie in [0, 0.5), got {slip_prob}"
        )));
    }
    let goal = length - 1;
    let mut transition = Array3::zeros((length, 2, length));
    let mut reward = Array2::zeros((length, 2));
    for s in 0..length {
        if s == goal {
            for a in 0..2 {
                transition[[s, a, s]] = 1.0;
            }
            continue;
        }
        for a in 0..2 {
            reward[[s, a]] = -1.0;
            // Intended move for action a, and the slip (flipped) move.
            let dest = |dir: usize| if dir == 1 { s + 1 } else { s.saturating_sub(1) };
            transition[[s, a, dest(a)]] += 1.0 - slip_prob;
            transition[[s, a, dest(1 - a)]] += slip_prob;
        }
    }
    let mut initial = Array1::zeros(length);
    initial[0] = 1.0;
    let mut terminal = vec![false; length];
    terminal[goal] = true;
    FiniteMdp::new(transition, reward, 0.99, initial, terminal)
        .map_err(|e| EnvError::BadParam(format!("chain construction produced an invalid MDP: {e}")))
}

/// Expert controller for the chain: always head right, comfortably inside
/// the action box so likelihood-based cloning can fit it.
pub fn chain_expert_action(_obs: &[f64]) -> Vec<f64> {
    vec![0.6]
}

/// Continuous-action wrapper around [`chain_mdp`]: observations are
/// one-hot state encodings and the single action coordinate selects right
/// (>= 0) or left (< 0). Transitions sample the MDP's own rows, so the
/// wrapper is exactly the MDP the dynamic-programming oracle solves.
pub struct ChainEnv {
    mdp: FiniteMdp,
    state: usize,
    steps: usize,
    done: bool,
    rng: ChaCha8Rng,
}

impl ChainEnv {
    pub fn new(length: usize, slip_prob: f64, seed: u64) -> Result<Self, EnvError> {
        let mdp = chain_mdp(length, slip_prob)?;
        Ok(ChainEnv { mdp, state: 0, steps: 0, done: true, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }

    pub fn state_index(&self) -> usize {
        self.state
    }

    fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.mdp.n_states];
        v[s] = 1.0;
        v
    }

    /// Maps a continuous action to the discrete direction it selects.
    pub fn discretize(action: f64) -> usize {
        usize::from(action >= 0.0)
    }
}

impl Environment for ChainEnv {
    fn name(&self) -> &'static str {
        "chain"
    }

    fn obs_width(&self) -> usize {
        self.mdp.n_states
    }

    fn action_width(&self) -> usize {
        1
    }

    fn action_low(&self) -> Vec<f64> {
        vec![-1.0]
    }

    fn action_high(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn max_episode_len(&self) -> usize {
        CHAIN_MAX_STEPS
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = 0;
        self.steps = 0;
        self.done = false;
        self.one_hot(self.state)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::NeedsReset);
        }
        if action.len() != 1 {
            return Err(EnvError::ActionWidth { expected: 1, got: action.len() });
        }
        let a = Self::discretize(action[0]);
        let reward = self.mdp.reward[[self.state, a]];
        // Sample the successor from the MDP's own transition row.
        let mut u: f64 = self.rng.random();
        let mut next = self.mdp.n_states - 1;
        for s2 in 0..self.mdp.n_states {
            let p = self.mdp.transition[[self.state, a, s2]];
            if u < p {
                next = s2;
                break;
            }
            u -= p;
        }
        self.state = next;
        self.steps += 1;
        let terminated = self.mdp.terminal[next];
        let truncated = !terminated && self.steps >= CHAIN_MAX_STEPS;
        self.done = terminated || truncated;
        Ok(StepOutcome { obs: self.one_hot(next), reward, terminated, truncated })
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn is_success(&self, obs: &[f64]) -> bool {
        obs.last().copied().unwrap_or(0.0) > 0.5
    }
}
