//! The experiment pipeline: run configs, the offline-then-online training
//! driver shared by every algorithm, metrics export, dataset generation,
//! and multi-run comparison reports.
//!
//! Everything here is deterministic by construction: a (config, seed)
//! pair maps to byte-identical dataset files and metrics CSVs, which the
//! reproducibility tests assert literally.

mod compare;
mod config;
mod datagen;
mod driver;
mod experiment;
mod metrics;
mod policy_io;

pub use compare::{compare, parse_run_filename, AlgoSummary, ComparisonReport, CurvePoint, RunSeries};
pub use config::RawConfig;
pub use datagen::{generate_dataset, DataProtocol};
pub use driver::{
    derive_seed, rollout_mean_policy, run_loop, Agent, AgentLosses, BufferObserver, RunOptions,
};
pub use experiment::{
    build_agent, run_experiment, AlgoConfig, ExperimentConfig, SeedOutcome, ALGO_NAMES,
};
pub use metrics::{MetricsRecord, MetricsSeries};
pub use policy_io::{load_policy, policy_from_checkpoint, policy_to_checkpoint, save_policy};

use thiserror::Error;

use crate::awac::AwacError;
use crate::envs::EnvError;
use crate::nn::NnError;
use crate::replay::ReplayError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("metrics parse error at line {line}: {msg}")]
    MetricsParse { line: usize, msg: String },
    #[error("comparison error: {0}")]
    Compare(String),
    #[error("dataset generation error: {0}")]
    DataGen(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Awac(#[from] AwacError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
