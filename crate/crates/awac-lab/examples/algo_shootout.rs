//! Several algorithms through one pipeline on one corpus, aggregated into
//! the comparison report: median curves with interquartile ranges,
//! steps-to-threshold, and the early-fine-tuning dip statistic.
//!
//! Run with `cargo run --example algo_shootout`.

use awac_lab::envs::EnvConfig;
use awac_lab::harness::{
    compare, generate_dataset, run_experiment, DataProtocol, ExperimentConfig, MetricsSeries,
    RawConfig, RunSeries,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("awac-lab-examples/shootout");
    std::fs::create_dir_all(&out)?;

    let env_cfg = EnvConfig::from_name("chain")?;
    let data_path = out.join("chain.ds");
    generate_dataset(&env_cfg, &DataProtocol::ExpertBc { demos: 15, clones: 40 }, 0)?
        .save(&data_path)?;

    // Identical budgets, seeds, and dataset for every algorithm; only the
    // algo name changes. Each run writes {algo}-chain-s{seed}.csv.
    let runs_dir = out.join("runs");
    let mut runs = Vec::new();
    for algo in ["bc", "awac", "sacfd-prior"] {
        let raw = RawConfig::from_pairs(&[
            ("algo.name", algo),
            ("env.name", "chain"),
            ("data.path", data_path.to_str().expect("temp path is valid UTF-8")),
            ("run.seeds", "0, 1, 2"),
            ("run.offline_steps", "1200"),
            ("run.online_steps", "1500"),
            ("run.eval_every", "300"),
            ("run.out", runs_dir.to_str().expect("temp path is valid UTF-8")),
        ]);
        let outcomes = run_experiment(&ExperimentConfig::from_raw(raw)?)?;
        println!("{algo}: {} seeds finished", outcomes.len());
        for o in outcomes {
            runs.push(RunSeries {
                algo: algo.to_string(),
                env: "chain".to_string(),
                series: MetricsSeries::load(&o.csv_path)?,
            });
        }
    }

    let report = compare(&runs, 0.9)?;
    println!("\n{}", report.to_table());
    std::fs::write(out.join("curves.csv"), report.curves_csv())?;
    println!("aggregate curves written to {}", out.join("curves.csv").display());
    Ok(())
}
