//! A desk-scale laboratory for studying offline pretraining followed by online
//! fine-tuning in reinforcement learning.
//!
//! The centerpiece is an advantage-weighted actor critic: TD policy evaluation
//! of the current policy paired with an actor update that performs weighted
//! maximum likelihood on buffer actions, where the weights are exponentiated
//! advantages. The actor update solves a KL-constrained policy improvement
//! problem implicitly, without ever fitting a model of the behavior policy.
//! Everything that can be checked exactly is checked exactly: the constrained
//! update has a closed form on finite action sets ([`constrained`]), values of
//! finite MDPs are computed to fixed point ([`mdp`]), and every gradient used
//! in training has a finite-difference twin in the test suite.
//!
//! The crate is organized so that each layer is usable on its own:
//!
//! - [`mdp`]: exact dynamic programming on finite MDPs (Bellman backups,
//!   policy evaluation, value iteration) used as ground truth.
//! - [`constrained`]: closed-form solution of the KL-constrained policy
//!   improvement problem on finite action sets, brute-force verification,
//!   projection onto parametric families, and the supporting inequalities.
//! - [`nn`]: small dense networks in f64 with hand-written, exactly-checked
//!   reverse-mode gradients, a tanh-squashed Gaussian policy head, twin
//!   critics with Polyak-averaged targets, and AdamW.
//! - [`replay`]: transitions, ring-buffer replay, trajectory-structured
//!   datasets with a binary on-disk format.
//! - [`envs`]: native toy environments (a sparse chain, a 2-D point-mass
//!   pusher) plus scripted experts and an Ornstein-Uhlenbeck action noise
//!   source for dataset generation.
//! - [`awac`]: the advantage-weighted actor critic itself.
//! - [`baselines`]: behavior cloning, soft actor critic variants (from
//!   scratch, with demonstrations in the buffer, with behavior-cloning
//!   initialization, with an auxiliary cloning loss, with a learned-behavior
//!   penalty), advantage-weighted regression, its single-path variant, and a
//!   unimodal behavior density model with a goodness-of-fit tracker.
//! - [`harness`]: dataset generation, a shared training driver that feeds
//!   every algorithm through the same loop, metrics CSV emission, and
//!   multi-run comparison.
//!
//! The `examples/` directory is the front door: each example is a runnable
//! demonstration of one capability, from exact dynamic programming through a
//! full offline-to-online training comparison. A thin `awac-lab` binary
//! wraps dataset generation, training, evaluation, and comparison for use
//! from the shell.

pub mod awac;
pub mod baselines;
pub mod constrained;
pub mod envs;
pub mod fixtures;
pub mod harness;
pub mod mdp;
pub mod nn;
pub mod replay;
