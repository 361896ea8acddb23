//! Seeded fixture generators shared by the verification suites and the
//! examples: random distributions, advantages, MDPs, and tabular policies.
//! Everything draws from a caller-supplied ChaCha stream so the same seed
//! reproduces the same fixture everywhere.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::mdp::{FiniteMdp, TabularPolicy};

/// A ChaCha stream seeded from a single integer.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniform draw from the probability simplex, floored so every entry is
/// at least `min_prob` (pass 0 to allow entries arbitrarily close to zero).
/// Requires `n * min_prob < 1`.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, min_prob: f64) -> Vec<f64> {
    assert!(n >= 1);
    assert!(min_prob >= 0.0 && (n as f64) * min_prob < 1.0, "floor leaves no mass to distribute");
    // Exponential draws normalized to the simplex are uniform on it.
    let mut p: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = p.iter().sum();
    let scale = 1.0 - (n as f64) * min_prob;
    for v in &mut p {
        *v = min_prob + scale * (*v / sum);
    }
    p
}

/// A vector of advantages drawn uniformly from `[-scale, scale]`.
pub fn random_advantage(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// A random finite MDP with `2..=max_states` states, `1..=max_actions`
/// actions, rewards in [-1, 1], a random initial distribution, and a
/// discount in [0.5, 0.99]. With probability ~0.3 one state is made
/// terminal (absorbing, zero reward).
pub fn random_mdp(rng: &mut ChaCha8Rng, max_states: usize, max_actions: usize) -> FiniteMdp {
    let n_states = rng.random_range(2..=max_states.max(2));
    let n_actions = rng.random_range(1..=max_actions.max(1));
    let gamma = rng.random_range(0.5..0.99);
    let mut transition = Array3::zeros((n_states, n_actions, n_states));
    let mut reward = Array2::zeros((n_states, n_actions));
    for s in 0..n_states {
        for a in 0..n_actions {
            let row = random_simplex(rng, n_states, 0.0);
            for (s2, &p) in row.iter().enumerate() {
                transition[[s, a, s2]] = p;
            }
            reward[[s, a]] = rng.random_range(-1.0..1.0);
        }
    }
    let mut terminal = vec![false; n_states];
    if rng.random::<f64>() < 0.3 {
        let t = rng.random_range(0..n_states);
        terminal[t] = true;
        for a in 0..n_actions {
            for s2 in 0..n_states {
                transition[[t, a, s2]] = if s2 == t { 1.0 } else { 0.0 };
            }
            reward[[t, a]] = 0.0;
        }
    }
    let initial = Array1::from(random_simplex(rng, n_states, 0.0));
    FiniteMdp::new(transition, reward, gamma, initial, terminal)
        .expect("generated MDP is valid by construction")
}

/// A random stochastic tabular policy with strictly positive rows.
pub fn random_tabular_policy(rng: &mut ChaCha8Rng, n_states: usize, n_actions: usize) -> TabularPolicy {
    let mut probs = Array2::zeros((n_states, n_actions));
    for s in 0..n_states {
        let row = random_simplex(rng, n_actions, 1e-3 / n_actions as f64);
        for (a, &p) in row.iter().enumerate() {
            probs[[s, a]] = p;
        }
    }
    TabularPolicy::new(probs).expect("rows are valid distributions")
}
