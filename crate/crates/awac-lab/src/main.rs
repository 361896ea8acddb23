//! Shell front end over the library: dataset generation, training runs,
//! checkpoint evaluation, and comparison reports. All heavy lifting lives
//! in the library; this binary only parses flags, resolves output paths,
//! and prints summaries. Wall-clock timing is printed here and never
//! written into metrics files, which stay byte-reproducible.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use awac_lab::envs::EnvConfig;
use awac_lab::harness::{
    compare, generate_dataset, load_policy, parse_run_filename, rollout_mean_policy,
    run_experiment, DataProtocol, ExperimentConfig, HarnessError, MetricsSeries, RawConfig,
    RunSeries,
};

#[derive(Parser)]
#[command(
    name = "awac-lab",
    version,
    about = "Offline-pretraining + online fine-tuning RL laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file for an environment.
    GenerateData {
        /// Environment name: chain, pointmass, or pointmass-dense.
        #[arg(long)]
        env: String,
        /// Generation protocol: expert-bc or random-ou.
        #[arg(long, default_value = "expert-bc")]
        protocol: String,
        /// Expert demonstration episodes (expert-bc).
        #[arg(long, default_value_t = 15)]
        demos: usize,
        /// Behavior-clone rollout episodes (expert-bc).
        #[arg(long, default_value_t = 100)]
        clones: usize,
        /// Episode count (random-ou).
        #[arg(long, default_value_t = 500)]
        trajectories: usize,
        /// OU diffusion scale (random-ou).
        #[arg(long, default_value_t = 0.3)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; defaults to datasets/{env}-{protocol}.ds under
        /// the output root.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an algorithm over its seeds and write per-seed metrics CSVs
    /// plus final policy checkpoints.
    Train {
        /// Key-value config file; the flags below override its entries.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Algorithm name (overrides algo.name).
        #[arg(long)]
        algo: Option<String>,
        /// Environment name (overrides env.name).
        #[arg(long)]
        env: Option<String>,
        /// Dataset file (overrides data.path).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Run a single seed (overrides run.seeds).
        #[arg(long)]
        seed: Option<u64>,
        /// Online env-step budget (overrides run.online_steps).
        #[arg(long)]
        budget: Option<usize>,
        /// Output directory (overrides run.out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roll deterministic episodes of a saved policy checkpoint.
    Evaluate {
        /// Policy checkpoint written by train.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Environment to roll in.
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Aggregate metrics CSVs into a comparison report.
    Compare {
        /// Metrics files named {algo}-{env}-s{seed}.csv, all from one
        /// environment.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Success-rate threshold for the steps-to-threshold column.
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
        /// Directory for report.txt and curves.csv; omit to only print.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Relative output paths land under `AWAC_LAB_OUT` when it is set.
fn resolve_out(path: PathBuf) -> PathBuf {
    if path.is_absolute() {
        return path;
    }
    match std::env::var_os("AWAC_LAB_OUT") {
        Some(root) => PathBuf::from(root).join(path),
        None => path,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::GenerateData { env, protocol, demos, clones, trajectories, sigma, seed, out } => {
            let env_cfg = EnvConfig::from_name(&env)?;
            let protocol = match protocol.as_str() {
                "expert-bc" => DataProtocol::ExpertBc { demos, clones },
                "random-ou" => DataProtocol::RandomOu { trajectories, sigma },
                other => {
                    return Err(HarnessError::Config(format!(
                        "unknown protocol {other:?}; expected expert-bc or random-ou"
                    )))
                }
            };
            let started = Instant::now();
            let dataset = generate_dataset(&env_cfg, &protocol, seed)?;
            let out = resolve_out(out.unwrap_or_else(|| {
                PathBuf::from(format!("datasets/{env}-{}.ds", protocol.label()))
            }));
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)?;
            }
            dataset.save(&out)?;
            println!(
                "wrote {} trajectories ({} transitions) to {} in {:.1}s",
                dataset.trajectories.len(),
                dataset.total_transitions(),
                out.display(),
                started.elapsed().as_secs_f64(),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { config, algo, env, dataset, seed, budget, out } => {
            let mut raw = match config {
                Some(path) => RawConfig::load(&path)?,
                None => RawConfig::default(),
            };
            if let Some(v) = algo {
                raw.set("algo.name", v);
            }
            if let Some(v) = env {
                raw.set("env.name", v);
            }
            if let Some(v) = dataset {
                raw.set("data.path", v.display().to_string());
            }
            if let Some(v) = seed {
                raw.set("run.seeds", v.to_string());
            }
            if let Some(v) = budget {
                raw.set("run.online_steps", v.to_string());
            }
            if let Some(v) = out {
                raw.set("run.out", v.display().to_string());
            }
            let mut cfg = ExperimentConfig::from_raw(raw)?;
            cfg.out_dir = resolve_out(cfg.out_dir);
            let started = Instant::now();
            let outcomes = run_experiment(&cfg)?;
            let mut failures = 0usize;
            for o in &outcomes {
                match &o.series.failure {
                    Some(msg) => {
                        failures += 1;
                        println!(
                            "seed {}: FAILED after {} records ({msg}); partial metrics at {}",
                            o.seed,
                            o.series.records.len(),
                            o.csv_path.display(),
                        );
                    }
                    None => {
                        let last = o.series.records.last().expect("a completed run has records");
                        println!(
                            "seed {}: {} records, final return {:.3}, success rate {:.2}; {}",
                            o.seed,
                            o.series.records.len(),
                            last.eval_return_mean,
                            last.success_rate,
                            o.csv_path.display(),
                        );
                    }
                }
            }
            println!(
                "{} of {} seeds completed in {:.1}s (wall clock)",
                outcomes.len() - failures,
                outcomes.len(),
                started.elapsed().as_secs_f64(),
            );
            Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Evaluate { checkpoint, env, episodes, seed } => {
            let policy = load_policy(&checkpoint)?;
            let mut env_box = EnvConfig::from_name(&env)?.build(seed)?;
            let (returns, success) = rollout_mean_policy(&policy, env_box.as_mut(), episodes, seed)?;
            let mean = returns.iter().sum::<f64>() / returns.len() as f64;
            let min = returns.iter().copied().fold(f64::INFINITY, f64::min);
            let max = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            println!(
                "{episodes} deterministic episodes on {env}: mean return {mean:.3} \
                 (min {min:.3}, max {max:.3}), success rate {success:.2}"
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { files, threshold, out } => {
            let mut runs = Vec::with_capacity(files.len());
            for f in &files {
                let name = f.file_name().and_then(|n| n.to_str()).ok_or_else(|| {
                    HarnessError::Compare(format!("bad file name: {}", f.display()))
                })?;
                let Some((algo, env, _)) = parse_run_filename(name) else {
                    return Err(HarnessError::Compare(format!(
                        "{name:?} does not look like {{algo}}-{{env}}-s{{seed}}.csv"
                    )));
                };
                runs.push(RunSeries { algo, env, series: MetricsSeries::load(f)? });
            }
            let report = compare(&runs, threshold)?;
            print!("{}", report.to_table());
            if let Some(dir) = out {
                let dir = resolve_out(dir);
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("report.txt"), report.to_table())?;
                std::fs::write(dir.join("curves.csv"), report.curves_csv())?;
                println!(
                    "wrote {} and {}",
                    dir.join("report.txt").display(),
                    dir.join("curves.csv").display(),
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
