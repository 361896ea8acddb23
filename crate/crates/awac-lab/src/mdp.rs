//! Exact dynamic programming on finite MDPs.
//!
//! This module is the ground-truth layer: everything here is computed to a
//! numerical fixed point rather than estimated, so the rest of the crate can
//! be tested against it. Terminal states are represented structurally as
//! absorbing states with zero reward, which makes the Bellman operator a
//! plain gamma-contraction with no special cases.

use ndarray::{Array1, Array2, Array3};
use thiserror::Error;

/// Default fixed-point tolerance for the exact solvers.
pub const EXACT_TOL: f64 = 1e-10;

/// Hard cap on fixed-point iterations. For any valid discount this is far
/// beyond what a gamma-contraction needs; hitting it indicates a bug.
const MAX_SWEEPS: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("transition tensor has shape {got:?}, expected ({n_states}, {n_actions}, {n_states})")]
    TransitionShape {
        got: Vec<usize>,
        n_states: usize,
        n_actions: usize,
    },
    #[error("reward table has shape {got:?}, expected ({n_states}, {n_actions})")]
    RewardShape {
        got: Vec<usize>,
        n_states: usize,
        n_actions: usize,
    },
    #[error("transition row for state {state}, action {action} sums to {sum}, not 1")]
    TransitionRowNotNormalized { state: usize, action: usize, sum: f64 },
    #[error("transition probability for state {state}, action {action} is negative")]
    NegativeProbability { state: usize, action: usize },
    #[error("initial distribution sums to {sum}, not 1")]
    InitialDistNotNormalized { sum: f64 },
    #[error("initial distribution has a negative entry at state {state}")]
    NegativeInitialProbability { state: usize },
    #[error("discount factor {gamma} is outside [0, 1)")]
    BadDiscount { gamma: f64 },
    #[error("terminal state {state} must be absorbing with zero reward under every action")]
    TerminalNotAbsorbing { state: usize },
    #[error("policy row for state {state} sums to {sum}, not 1")]
    PolicyRowNotNormalized { state: usize, sum: f64 },
    #[error("policy row for state {state} has a negative entry")]
    NegativePolicyProbability { state: usize },
    #[error("policy has shape {got:?}, expected ({n_states}, {n_actions})")]
    PolicyShape {
        got: Vec<usize>,
        n_states: usize,
        n_actions: usize,
    },
    #[error("tolerance must be positive, got {tol}")]
    BadTolerance { tol: f64 },
    #[error("fixed-point iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("MDP must have at least one state and one action")]
    Empty,
    #[error("text format error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A finite MDP with dense transition and reward tables.
///
/// `transition[[s, a, s2]]` is the probability of landing in `s2` after
/// taking action `a` in state `s`; `reward[[s, a]]` is the immediate reward
/// for that choice. States flagged in `terminal` are absorbing with zero
/// reward, enforced at construction.
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub transition: Array3<f64>,
    pub reward: Array2<f64>,
    pub gamma: f64,
    pub initial_dist: Array1<f64>,
    pub terminal: Vec<bool>,
}

const ROW_SUM_TOL: f64 = 1e-9;

impl FiniteMdp {
    pub fn new(
        transition: Array3<f64>,
        reward: Array2<f64>,
        gamma: f64,
        initial_dist: Array1<f64>,
        terminal: Vec<bool>,
    ) -> Result<Self, MdpError> {
        let n_states = transition.shape()[0];
        let n_actions = transition.shape()[1];
        if n_states == 0 || n_actions == 0 {
            return Err(MdpError::Empty);
        }
        if transition.shape() != [n_states, n_actions, n_states] {
            return Err(MdpError::TransitionShape {
                got: transition.shape().to_vec(),
                n_states,
                n_actions,
            });
        }
        if reward.shape() != [n_states, n_actions] {
            return Err(MdpError::RewardShape {
                got: reward.shape().to_vec(),
                n_states,
                n_actions,
            });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(MdpError::BadDiscount { gamma });
        }
        if initial_dist.len() != n_states || terminal.len() != n_states {
            return Err(MdpError::TransitionShape {
                got: vec![initial_dist.len(), terminal.len()],
                n_states,
                n_actions,
            });
        }
        for s in 0..n_states {
            for a in 0..n_actions {
                let row = transition.slice(ndarray::s![s, a, ..]);
                if row.iter().any(|&p| p < 0.0) {
                    return Err(MdpError::NegativeProbability { state: s, action: a });
                }
                let sum: f64 = row.sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(MdpError::TransitionRowNotNormalized { state: s, action: a, sum });
                }
            }
        }
        if initial_dist.iter().any(|&p| p < 0.0) {
            let state = initial_dist.iter().position(|&p| p < 0.0).unwrap();
            return Err(MdpError::NegativeInitialProbability { state });
        }
        let init_sum: f64 = initial_dist.sum();
        if (init_sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(MdpError::InitialDistNotNormalized { sum: init_sum });
        }
        for s in 0..n_states {
            if !terminal[s] {
                continue;
            }
            for a in 0..n_actions {
                let self_loop = transition[[s, a, s]];
                if (self_loop - 1.0).abs() > ROW_SUM_TOL || reward[[s, a]].abs() > 0.0 {
                    return Err(MdpError::TerminalNotAbsorbing { state: s });
                }
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            gamma,
            initial_dist,
            terminal,
        })
    }

    /// Serializes to a line-oriented text form that round-trips exactly
    /// (floats are printed with shortest-exact formatting).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("finite-mdp v1\n");
        out.push_str(&format!("n_states {}\n", self.n_states));
        out.push_str(&format!("n_actions {}\n", self.n_actions));
        out.push_str(&format!("gamma {}\n", self.gamma));
        out.push_str("initial_dist");
        for p in self.initial_dist.iter() {
            out.push_str(&format!(" {p}"));
        }
        out.push('\n');
        out.push_str("terminal");
        for &t in &self.terminal {
            out.push_str(if t { " 1" } else { " 0" });
        }
        out.push('\n');
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                out.push_str(&format!("{}", self.reward[[s, a]]));
                for s2 in 0..self.n_states {
                    out.push_str(&format!(" {}", self.transition[[s, a, s2]]));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MdpError> {
        let mut lines = text.lines().enumerate();
        let mut next_line = |expect: &str| -> Result<(usize, String), MdpError> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l.to_string()))
                .ok_or_else(|| MdpError::Parse {
                    line: 0,
                    msg: format!("unexpected end of input, expected {expect}"),
                })
        };
        let (line_no, header) = next_line("header")?;
        if header.trim() != "finite-mdp v1" {
            return Err(MdpError::Parse {
                line: line_no,
                msg: format!("bad header {header:?}"),
            });
        }
        let parse_kv = |line_no: usize, line: &str, key: &str| -> Result<String, MdpError> {
            let mut parts = line.split_whitespace();
            let k = parts.next().unwrap_or("");
            if k != key {
                return Err(MdpError::Parse {
                    line: line_no,
                    msg: format!("expected key {key:?}, found {k:?}"),
                });
            }
            Ok(parts.collect::<Vec<_>>().join(" "))
        };
        let parse_f64 = |line_no: usize, tok: &str| -> Result<f64, MdpError> {
            tok.parse::<f64>().map_err(|e| MdpError::Parse {
                line: line_no,
                msg: format!("bad float {tok:?}: {e}"),
            })
        };

        let (ln, line) = next_line("n_states")?;
        let n_states: usize = parse_kv(ln, &line, "n_states")?
            .parse()
            .map_err(|e| MdpError::Parse { line: ln, msg: format!("bad n_states: {e}") })?;
        let (ln, line) = next_line("n_actions")?;
        let n_actions: usize = parse_kv(ln, &line, "n_actions")?
            .parse()
            .map_err(|e| MdpError::Parse { line: ln, msg: format!("bad n_actions: {e}") })?;
        let (ln, line) = next_line("gamma")?;
        let gamma = parse_f64(ln, &parse_kv(ln, &line, "gamma")?)?;

        let (ln, line) = next_line("initial_dist")?;
        let init_toks = parse_kv(ln, &line, "initial_dist")?;
        let initial: Vec<f64> = init_toks
            .split_whitespace()
            .map(|t| parse_f64(ln, t))
            .collect::<Result<_, _>>()?;
        if initial.len() != n_states {
            return Err(MdpError::Parse {
                line: ln,
                msg: format!("initial_dist has {} entries, expected {n_states}", initial.len()),
            });
        }

        let (ln, line) = next_line("terminal")?;
        let term_toks = parse_kv(ln, &line, "terminal")?;
        let terminal: Vec<bool> = term_toks
            .split_whitespace()
            .map(|t| match t {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(MdpError::Parse {
                    line: ln,
                    msg: format!("terminal flag must be 0 or 1, found {other:?}"),
                }),
            })
            .collect::<Result<_, _>>()?;
        if terminal.len() != n_states {
            return Err(MdpError::Parse {
                line: ln,
                msg: format!("terminal has {} entries, expected {n_states}", terminal.len()),
            });
        }

        let mut reward = Array2::zeros((n_states, n_actions));
        let mut transition = Array3::zeros((n_states, n_actions, n_states));
        for s in 0..n_states {
            for a in 0..n_actions {
                let (ln, line) = next_line("state-action row")?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 1 + n_states {
                    return Err(MdpError::Parse {
                        line: ln,
                        msg: format!(
                            "row for state {s}, action {a} has {} fields, expected {}",
                            toks.len(),
                            1 + n_states
                        ),
                    });
                }
                reward[[s, a]] = parse_f64(ln, toks[0])?;
                for s2 in 0..n_states {
                    transition[[s, a, s2]] = parse_f64(ln, toks[1 + s2])?;
                }
            }
        }
        Self::new(transition, reward, gamma, Array1::from(initial), terminal)
    }
}

/// A stochastic tabular policy: `probs[[s, a]]` is the probability of action
/// `a` in state `s`. Rows are validated to be distributions.
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    pub probs: Array2<f64>,
}

impl TabularPolicy {
    pub fn new(probs: Array2<f64>) -> Result<Self, MdpError> {
        let n_states = probs.shape()[0];
        for s in 0..n_states {
            let row = probs.row(s);
            if row.iter().any(|&p| p < 0.0) {
                return Err(MdpError::NegativePolicyProbability { state: s });
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MdpError::PolicyRowNotNormalized { state: s, sum });
            }
        }
        Ok(Self { probs })
    }

    /// Uniform policy over all actions in every state.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self { probs: Array2::from_elem((n_states, n_actions), p) }
    }

    /// Deterministic policy given one action index per state.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let mut probs = Array2::zeros((actions.len(), n_actions));
        for (s, &a) in actions.iter().enumerate() {
            probs[[s, a]] = 1.0;
        }
        Self { probs }
    }

    fn check_shape(&self, mdp: &FiniteMdp) -> Result<(), MdpError> {
        if self.probs.shape() != [mdp.n_states, mdp.n_actions] {
            return Err(MdpError::PolicyShape {
                got: self.probs.shape().to_vec(),
                n_states: mdp.n_states,
                n_actions: mdp.n_actions,
            });
        }
        Ok(())
    }
}

/// State values and action values of a policy, as produced by the exact
/// solvers. `v` has one entry per state, `q` one per state-action pair.
#[derive(Debug, Clone)]
pub struct ValueTables {
    pub v: Array1<f64>,
    pub q: Array2<f64>,
}

/// Discounted return of a reward sequence: `sum_i gamma^i * rewards[i]`.
/// An empty sequence has return 0.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, &r| r + gamma * acc)
}

/// One application of the Bellman operator for `policy`:
/// `out[s, a] = r(s, a) + gamma * E_{s'}[ E_{a' ~ pi(s')}[ q(s', a') ] ]`.
pub fn bellman_backup(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    q: &Array2<f64>,
) -> Result<Array2<f64>, MdpError> {
    policy.check_shape(mdp)?;
    if q.shape() != [mdp.n_states, mdp.n_actions] {
        return Err(MdpError::PolicyShape {
            got: q.shape().to_vec(),
            n_states: mdp.n_states,
            n_actions: mdp.n_actions,
        });
    }
    // v_next[s'] = sum_a' pi(a'|s') q(s', a')
    let v_next: Array1<f64> = (&policy.probs * q).sum_axis(ndarray::Axis(1));
    let mut out = mdp.reward.clone();
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let row = mdp.transition.slice(ndarray::s![s, a, ..]);
            out[[s, a]] += mdp.gamma * row.dot(&v_next);
        }
    }
    Ok(out)
}

/// Exact policy evaluation: iterates the Bellman operator from zero until
/// the sup-norm change drops below `tol`, returning both V and Q tables.
pub fn exact_policy_evaluation(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    tol: f64,
) -> Result<ValueTables, MdpError> {
    if !(tol > 0.0) {
        return Err(MdpError::BadTolerance { tol });
    }
    policy.check_shape(mdp)?;
    let mut q = Array2::zeros((mdp.n_states, mdp.n_actions));
    for sweep in 0..MAX_SWEEPS {
        let next = bellman_backup(mdp, policy, &q)?;
        let delta = (&next - &q).iter().fold(0.0f64, |m, d| m.max(d.abs()));
        q = next;
        if delta < tol {
            let v = (&policy.probs * &q).sum_axis(ndarray::Axis(1));
            return Ok(ValueTables { v, q });
        }
        let _ = sweep;
    }
    Err(MdpError::NoConvergence(MAX_SWEEPS))
}

/// Value iteration to the optimal value function, with a greedy policy that
/// breaks ties toward the lowest action index.
pub fn value_iteration(
    mdp: &FiniteMdp,
    tol: f64,
) -> Result<(ValueTables, TabularPolicy), MdpError> {
    if !(tol > 0.0) {
        return Err(MdpError::BadTolerance { tol });
    }
    let mut q: Array2<f64> = Array2::zeros((mdp.n_states, mdp.n_actions));
    for _ in 0..MAX_SWEEPS {
        // v[s'] = max_a' q(s', a')
        let v: Array1<f64> = q.map_axis(ndarray::Axis(1), |row| {
            row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        });
        let mut next = mdp.reward.clone();
        for s in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let row = mdp.transition.slice(ndarray::s![s, a, ..]);
                next[[s, a]] += mdp.gamma * row.dot(&v);
            }
        }
        let delta = (&next - &q).iter().fold(0.0f64, |m, d| m.max(d.abs()));
        q = next;
        if delta < tol {
            break;
        }
    }
    let greedy: Vec<usize> = (0..mdp.n_states)
        .map(|s| {
            let row = q.row(s);
            let mut best = 0;
            for a in 1..mdp.n_actions {
                if row[a] > row[best] {
                    best = a;
                }
            }
            best
        })
        .collect();
    let v = q.map_axis(ndarray::Axis(1), |row| {
        row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    });
    Ok((ValueTables { v, q }, TabularPolicy::deterministic(&greedy, mdp.n_actions)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2, Array3};

    /// Deterministic two-state chain: s0 steps to s1 with reward 1, s1 is
    /// terminal. Both actions behave identically.
    fn two_state_chain(gamma: f64) -> FiniteMdp {
        let mut transition = Array3::zeros((2, 2, 2));
        for a in 0..2 {
            transition[[0, a, 1]] = 1.0;
            transition[[1, a, 1]] = 1.0;
        }
        let reward = arr2(&[[1.0, 1.0], [0.0, 0.0]]);
        FiniteMdp::new(
            transition,
            reward,
            gamma,
            arr1(&[1.0, 0.0]),
            vec![false, true],
        )
        .unwrap()
    }

    #[test]
    fn discounted_return_matches_hand_computation() {
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5), 1.75);
        assert_eq!(discounted_return(&[3.5], 0.9), 3.5);
        assert_eq!(discounted_return(&[], 0.9), 0.0);
    }

    #[test]
    fn discounted_return_approaches_geometric_limit() {
        let rewards = vec![1.0; 1000];
        let got = discounted_return(&rewards, 0.9);
        assert!(
            (got - 10.0).abs() < 1e-8,
            "1000 unit rewards at gamma 0.9 should be within 1e-8 of 10, got {got}"
        );
    }

    #[test]
    fn constructor_rejects_bad_inputs() {
        let ok = two_state_chain(0.9);
        // Discount at or above 1 is rejected.
        assert!(matches!(
            FiniteMdp::new(
                ok.transition.clone(),
                ok.reward.clone(),
                1.0,
                ok.initial_dist.clone(),
                ok.terminal.clone()
            ),
            Err(MdpError::BadDiscount { .. })
        ));
        // Unnormalized transition row is rejected.
        let mut bad_t = ok.transition.clone();
        bad_t[[0, 0, 1]] = 0.5;
        assert!(matches!(
            FiniteMdp::new(
                bad_t,
                ok.reward.clone(),
                0.9,
                ok.initial_dist.clone(),
                ok.terminal.clone()
            ),
            Err(MdpError::TransitionRowNotNormalized { state: 0, action: 0, .. })
        ));
        // A terminal state that is not absorbing with zero reward is rejected.
        let mut bad_r = ok.reward.clone();
        bad_r[[1, 0]] = 0.5;
        assert!(matches!(
            FiniteMdp::new(
                ok.transition.clone(),
                bad_r,
                0.9,
                ok.initial_dist.clone(),
                ok.terminal.clone()
            ),
            Err(MdpError::TerminalNotAbsorbing { state: 1 })
        ));
    }

    #[test]
    fn backup_with_zero_q_returns_reward_table() {
        let mdp = two_state_chain(0.9);
        let policy = TabularPolicy::uniform(2, 2);
        let q = Array2::zeros((2, 2));
        let out = bellman_backup(&mdp, &policy, &q).unwrap();
        assert_eq!(out, mdp.reward);
    }

    #[test]
    fn backup_with_zero_discount_returns_reward_table() {
        let mut mdp = two_state_chain(0.0);
        mdp.gamma = 0.0;
        let policy = TabularPolicy::uniform(2, 2);
        let q = arr2(&[[5.0, -3.0], [2.0, 7.0]]);
        // Terminal q entries are irrelevant at gamma 0.
        let out = bellman_backup(&mdp, &policy, &q).unwrap();
        assert_eq!(out, mdp.reward);
    }

    #[test]
    fn evaluation_solves_two_state_chain_exactly() {
        let mdp = two_state_chain(0.9);
        let policy = TabularPolicy::uniform(2, 2);
        let vt = exact_policy_evaluation(&mdp, &policy, EXACT_TOL).unwrap();
        // q(s0, a) = 1 + 0.9 * q(s1) = 1; the terminal state has value 0.
        for a in 0..2 {
            assert!((vt.q[[0, a]] - 1.0).abs() < 1e-9, "q(s0,{a}) = {}", vt.q[[0, a]]);
            assert!(vt.q[[1, a]].abs() < 1e-9, "q(s1,{a}) = {}", vt.q[[1, a]]);
        }
        assert!((vt.v[0] - 1.0).abs() < 1e-9);
        assert!(vt.v[1].abs() < 1e-9);
    }

    #[test]
    fn evaluation_of_fixed_point_is_stationary() {
        let mdp = two_state_chain(0.9);
        let policy = TabularPolicy::uniform(2, 2);
        let vt = exact_policy_evaluation(&mdp, &policy, EXACT_TOL).unwrap();
        let again = bellman_backup(&mdp, &policy, &vt.q).unwrap();
        let delta = (&again - &vt.q).iter().fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(delta < 1e-9, "Bellman backup moved the fixed point by {delta}");
    }

    #[test]
    fn zero_rewards_give_zero_values() {
        let mut mdp = two_state_chain(0.9);
        mdp.reward.fill(0.0);
        let policy = TabularPolicy::uniform(2, 2);
        let vt = exact_policy_evaluation(&mdp, &policy, EXACT_TOL).unwrap();
        assert!(vt.q.iter().all(|&q| q.abs() < 1e-12));
    }

    #[test]
    fn uniform_unit_reward_gives_geometric_sum() {
        // Two non-terminal states that shuttle into each other with reward 1
        // everywhere: every q entry is 1/(1-gamma) = 10.
        let mut transition = Array3::zeros((2, 2, 2));
        for a in 0..2 {
            transition[[0, a, 1]] = 1.0;
            transition[[1, a, 0]] = 1.0;
        }
        let mdp = FiniteMdp::new(
            transition,
            arr2(&[[1.0, 1.0], [1.0, 1.0]]),
            0.9,
            arr1(&[1.0, 0.0]),
            vec![false, false],
        )
        .unwrap();
        let policy = TabularPolicy::uniform(2, 2);
        let vt = exact_policy_evaluation(&mdp, &policy, EXACT_TOL).unwrap();
        for q in vt.q.iter() {
            assert!((q - 10.0).abs() < 1e-8, "expected 10, got {q}");
        }
    }

    #[test]
    fn value_iteration_single_state_prefers_rewarding_action() {
        // One self-looping state, action 1 pays 1 per step, action 0 pays 0.
        let mut transition = Array3::zeros((1, 2, 1));
        transition[[0, 0, 0]] = 1.0;
        transition[[0, 1, 0]] = 1.0;
        let mdp = FiniteMdp::new(
            transition,
            arr2(&[[0.0, 1.0]]),
            0.5,
            arr1(&[1.0]),
            vec![false],
        )
        .unwrap();
        let (vt, greedy) = value_iteration(&mdp, EXACT_TOL).unwrap();
        assert!((vt.v[0] - 2.0).abs() < 1e-8, "v* should be 1/(1-0.5) = 2, got {}", vt.v[0]);
        assert_eq!(greedy.probs[[0, 1]], 1.0);
    }

    #[test]
    fn value_iteration_at_zero_discount_is_greedy_on_reward() {
        let mut transition = Array3::zeros((2, 2, 2));
        for s in 0..2 {
            for a in 0..2 {
                transition[[s, a, s]] = 1.0;
            }
        }
        let mdp = FiniteMdp::new(
            transition,
            arr2(&[[0.3, -0.2], [-0.5, 0.4]]),
            0.0,
            arr1(&[0.5, 0.5]),
            vec![false, false],
        )
        .unwrap();
        let (vt, greedy) = value_iteration(&mdp, EXACT_TOL).unwrap();
        assert_eq!(vt.q, mdp.reward);
        assert_eq!(greedy.probs[[0, 0]], 1.0);
        assert_eq!(greedy.probs[[1, 1]], 1.0);
    }

    #[test]
    fn value_iteration_ties_break_to_lowest_index() {
        let mdp = two_state_chain(0.9);
        let (_, greedy) = value_iteration(&mdp, EXACT_TOL).unwrap();
        // Both actions are identical, so the greedy choice must be action 0.
        assert_eq!(greedy.probs[[0, 0]], 1.0);
        assert_eq!(greedy.probs[[1, 0]], 1.0);
    }

    #[test]
    fn text_format_round_trips_exactly() {
        let mdp = two_state_chain(0.9);
        let text = mdp.to_text();
        let back = FiniteMdp::from_text(&text).unwrap();
        assert_eq!(back.transition, mdp.transition);
        assert_eq!(back.reward, mdp.reward);
        assert_eq!(back.gamma, mdp.gamma);
        assert_eq!(back.initial_dist, mdp.initial_dist);
        assert_eq!(back.terminal, mdp.terminal);
    }

    #[test]
    fn text_parser_reports_offending_line() {
        let mdp = two_state_chain(0.9);
        let mut text = mdp.to_text();
        text = text.replace("terminal 0 1", "terminal 0 2");
        let err = FiniteMdp::from_text(&text).unwrap_err();
        match err {
            MdpError::Parse { line, msg } => {
                assert_eq!(line, 6);
                assert!(msg.contains('2'), "message should name the bad token: {msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
