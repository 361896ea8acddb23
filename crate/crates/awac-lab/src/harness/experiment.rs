//! End-to-end experiment execution: a parsed config fans out into
//! per-seed runs, each writing its own metrics CSV incrementally so a
//! mid-run fault preserves everything recorded up to that point.
//!
//! Every algorithm goes through the same entry point with the same
//! dataset and the same driver loop; nothing gets a privileged data path.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use super::config::RawConfig;
use super::driver::{derive_seed, run_loop, Agent, BufferObserver, RunOptions};
use super::metrics::{MetricsSeries, CSV_HEADER};
use super::policy_io::save_policy;
use super::HarnessError;
use crate::awac::{AwacAgent, AwacConfig};
use crate::baselines::{
    AwrAgent, AwrConfig, BcAgent, BcConfig, BehaviorTracker, SacAgent, SacConfig, SacMode,
};
use crate::envs::{EnvConfig, Environment};
use crate::replay::Dataset;

/// Every algorithm name the factory accepts, longest first so filename
/// parsing can match greedily.
pub const ALGO_NAMES: &[&str] = &[
    "sacfd-pretrain",
    "sacfd-prior",
    "sac-bc",
    "marwil",
    "brac",
    "awac",
    "awr",
    "bc",
    "sac",
];

/// Algorithm selection plus its hyperparameters.
#[derive(Debug, Clone)]
pub enum AlgoConfig {
    Awac(AwacConfig),
    Bc(BcConfig),
    Sac(SacConfig),
    Awr(AwrConfig),
}

impl AlgoConfig {
    /// Desk-scale defaults for a named algorithm. Both bundled tasks use
    /// the {-1, 0} sparse reward, so the main agent's target clamp at
    /// zero is on by default.
    pub fn from_name(name: &str) -> Result<AlgoConfig, HarnessError> {
        let sac = SacConfig::desk_scale;
        Ok(match name {
            "awac" => {
                AlgoConfig::Awac(AwacConfig { clamp_q_max: Some(0.0), ..AwacConfig::desk_scale() })
            }
            "bc" => AlgoConfig::Bc(BcConfig::desk_scale()),
            "sac" => AlgoConfig::Sac(sac()),
            "sacfd-prior" => AlgoConfig::Sac(SacConfig { mode: SacMode::Prior, ..sac() }),
            "sacfd-pretrain" => AlgoConfig::Sac(SacConfig { mode: SacMode::Pretrain, ..sac() }),
            "sac-bc" => {
                AlgoConfig::Sac(SacConfig { mode: SacMode::Prior, bc_weight: 0.5, ..sac() })
            }
            "brac" => {
                AlgoConfig::Sac(SacConfig { mode: SacMode::Prior, brac_weight: 1.0, ..sac() })
            }
            "awr" => AlgoConfig::Awr(AwrConfig::desk_scale()),
            "marwil" => AlgoConfig::Awr(AwrConfig { single_path: true, ..AwrConfig::desk_scale() }),
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown algorithm {other:?}; expected one of {}",
                    ALGO_NAMES.join(", ")
                )))
            }
        })
    }

    /// Applies `algo.*` config keys on top of the named defaults. Each
    /// algorithm consumes only the keys it understands; anything left is
    /// caught by the caller's leftover check.
    fn apply_overrides(&mut self, raw: &mut RawConfig) -> Result<(), HarnessError> {
        match self {
            AlgoConfig::Awac(c) => {
                c.lambda = raw.take_f64("algo.lambda", c.lambda)?;
                c.lr = raw.take_f64("algo.lr", c.lr)?;
                c.batch_size = raw.take_usize("algo.batch_size", c.batch_size)?;
                c.advantage_samples = raw.take_usize("algo.advantage_samples", c.advantage_samples)?;
                c.use_z_estimate = raw.take_bool("algo.use_z_estimate", c.use_z_estimate)?;
                c.z_samples = raw.take_usize("algo.z_samples", c.z_samples)?;
                if let Some(v) = raw.take("algo.clamp_q_max") {
                    c.clamp_q_max = if v == "none" {
                        None
                    } else {
                        Some(v.parse().map_err(|_| {
                            HarnessError::Config(format!(
                                "algo.clamp_q_max: {v:?} is not a number or `none`"
                            ))
                        })?)
                    };
                }
            }
            AlgoConfig::Bc(c) => {
                c.lr = raw.take_f64("algo.lr", c.lr)?;
                c.batch_size = raw.take_usize("algo.batch_size", c.batch_size)?;
            }
            AlgoConfig::Sac(c) => {
                c.lr = raw.take_f64("algo.lr", c.lr)?;
                c.batch_size = raw.take_usize("algo.batch_size", c.batch_size)?;
                c.bc_weight = raw.take_f64("algo.bc_weight", c.bc_weight)?;
                c.brac_weight = raw.take_f64("algo.brac_weight", c.brac_weight)?;
                c.init_alpha = raw.take_f64("algo.init_alpha", c.init_alpha)?;
                c.auto_alpha = raw.take_bool("algo.auto_alpha", c.auto_alpha)?;
                c.bc_pretrain_steps = raw.take_usize("algo.bc_pretrain_steps", c.bc_pretrain_steps)?;
                c.behavior_fit_steps =
                    raw.take_usize("algo.behavior_fit_steps", c.behavior_fit_steps)?;
            }
            AlgoConfig::Awr(c) => {
                c.lr = raw.take_f64("algo.lr", c.lr)?;
                c.batch_size = raw.take_usize("algo.batch_size", c.batch_size)?;
                c.lambda = raw.take_f64("algo.lambda", c.lambda)?;
                c.temperature = raw.take_f64("algo.temperature", c.temperature)?;
            }
        }
        Ok(())
    }
}

/// Instantiates the selected algorithm against an environment's shapes.
pub fn build_agent(
    algo: &AlgoConfig,
    env: &dyn Environment,
    seed: u64,
) -> Result<Box<dyn Agent>, HarnessError> {
    let (ow, lo, hi) = (env.obs_width(), env.action_low(), env.action_high());
    Ok(match algo {
        AlgoConfig::Awac(cfg) => Box::new(AwacAgent::new(ow, lo, hi, cfg.clone(), seed)?),
        AlgoConfig::Bc(cfg) => Box::new(BcAgent::new(ow, lo, hi, cfg.clone(), seed)?),
        AlgoConfig::Sac(cfg) => Box::new(SacAgent::new(ow, lo, hi, cfg.clone(), seed)?),
        AlgoConfig::Awr(cfg) => Box::new(AwrAgent::new(ow, lo, hi, cfg.clone(), seed)?),
    })
}

/// A fully resolved experiment: environment, algorithm, dataset, budgets,
/// and the seed list to fan out over.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub algo_name: String,
    pub algo: AlgoConfig,
    pub dataset_path: PathBuf,
    pub seeds: Vec<u64>,
    pub offline_steps: usize,
    pub online_steps: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub trains_per_env_step: usize,
    pub out_dir: PathBuf,
    /// Fit-and-score a behavior density model at every cadence point.
    pub track_behavior: bool,
}

impl ExperimentConfig {
    /// Consumes a raw key-value config. Budgets default per environment
    /// (the chain needs less than the pusher); unknown keys are an error.
    pub fn from_raw(mut raw: RawConfig) -> Result<Self, HarnessError> {
        let env_name = raw
            .take("env.name")
            .ok_or_else(|| HarnessError::Config("env.name is required".into()))?;
        let mut env = EnvConfig::from_name(&env_name)?;
        if let EnvConfig::Chain { length, slip } = &mut env {
            *length = raw.take_usize("env.length", *length)?;
            *slip = raw.take_f64("env.slip", *slip)?;
        }
        let algo_name = raw
            .take("algo.name")
            .ok_or_else(|| HarnessError::Config("algo.name is required".into()))?;
        let mut algo = AlgoConfig::from_name(&algo_name)?;
        algo.apply_overrides(&mut raw)?;
        let dataset_path = PathBuf::from(
            raw.take("data.path")
                .ok_or_else(|| HarnessError::Config("data.path is required".into()))?,
        );
        let seeds = raw.take_seeds("run.seeds", &[0, 1, 2, 3, 4])?;
        let (default_offline, default_online) = match &env {
            EnvConfig::Chain { .. } => (5_000, 20_000),
            EnvConfig::PointMass(_) => (10_000, 50_000),
        };
        let offline_steps = raw.take_usize("run.offline_steps", default_offline)?;
        let online_steps = raw.take_usize("run.online_steps", default_online)?;
        let eval_every = raw.take_usize("run.eval_every", (online_steps / 20).max(1))?;
        let eval_episodes = raw.take_usize("run.eval_episodes", 10)?;
        let trains_per_env_step = raw.take_usize("run.trains_per_env_step", 1)?;
        let out_dir = PathBuf::from(raw.take_string("run.out", "runs"));
        let track_behavior = raw.take_bool("run.track_behavior", false)?;
        raw.reject_leftovers()?;
        let cfg = ExperimentConfig {
            env,
            algo_name,
            algo,
            dataset_path,
            seeds,
            offline_steps,
            online_steps,
            eval_every,
            eval_episodes,
            trains_per_env_step,
            out_dir,
            track_behavior,
        };
        cfg.run_options(0).validate()?;
        Ok(cfg)
    }

    fn run_options(&self, seed: u64) -> RunOptions {
        RunOptions {
            offline_steps: self.offline_steps,
            online_steps: self.online_steps,
            eval_every: self.eval_every,
            eval_episodes: self.eval_episodes,
            trains_per_env_step: self.trains_per_env_step,
            seed,
        }
    }

    /// The metrics file one seed writes.
    pub fn csv_path(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!("{}-{}-s{}.csv", self.algo_name, self.env.name(), seed))
    }

    /// The policy checkpoint one seed writes on success.
    pub fn checkpoint_path(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!("{}-{}-s{}.ck", self.algo_name, self.env.name(), seed))
    }
}

/// What one seed produced: its metrics file, parsed back from disk so the
/// caller sees exactly what a later consumer would, plus the final policy
/// checkpoint when the run completed.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub csv_path: PathBuf,
    pub checkpoint_path: Option<PathBuf>,
    pub series: MetricsSeries,
}

fn run_one_seed(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    seed: u64,
) -> Result<SeedOutcome, HarnessError> {
    let mut env = cfg.env.build(derive_seed(seed, 1))?;
    let mut eval_env = cfg.env.build(derive_seed(seed, 2))?;
    let mut agent = build_agent(&cfg.algo, env.as_ref(), seed)?;
    let mut tracker = cfg.track_behavior.then(|| {
        BehaviorTracker::desk_scale(env.obs_width(), env.action_width(), derive_seed(seed, 3))
    });
    let observer = tracker.as_mut().map(|t| t as &mut dyn BufferObserver);

    let csv_path = cfg.csv_path(seed);
    let mut file = fs::File::create(&csv_path)?;
    writeln!(file, "{CSV_HEADER}")?;
    file.flush()?;
    let result = run_loop(
        agent.as_mut(),
        env.as_mut(),
        eval_env.as_mut(),
        dataset,
        &cfg.run_options(seed),
        observer,
        |rec| {
            writeln!(file, "{}", rec.to_csv_line())?;
            file.flush()?;
            Ok(())
        },
    );
    let checkpoint_path = match result {
        Ok(_) => {
            let path = cfg.checkpoint_path(seed);
            save_policy(agent.policy(), &path)?;
            Some(path)
        }
        Err(e) => {
            writeln!(file, "# failed: {e}")?;
            file.flush()?;
            None
        }
    };
    drop(file);
    let series = MetricsSeries::load(&csv_path)?;
    Ok(SeedOutcome { seed, csv_path, checkpoint_path, series })
}

/// Runs every seed of the experiment, one worker thread per seed, and
/// returns their outcomes in the config's seed order. A seed that faults
/// mid-run is not a hard error: its file keeps the records up to the
/// fault plus a failure marker, and the outcome carries that marker.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SeedOutcome>, HarnessError> {
    if !cfg.dataset_path.exists() {
        return Err(HarnessError::Config(format!(
            "dataset file {} does not exist",
            cfg.dataset_path.display()
        )));
    }
    let dataset = Dataset::load(&cfg.dataset_path)?;
    if dataset.env_name != cfg.env.name() {
        return Err(HarnessError::Config(format!(
            "dataset was generated on {:?} but the experiment runs {:?}",
            dataset.env_name,
            cfg.env.name()
        )));
    }
    fs::create_dir_all(&cfg.out_dir)?;
    let dataset = &dataset;
    let results: Vec<Result<SeedOutcome, HarnessError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| scope.spawn(move || run_one_seed(cfg, dataset, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| Err(HarnessError::Run("seed worker panicked".into())))
            })
            .collect()
    });
    results.into_iter().collect()
}
