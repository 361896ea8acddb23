//! The full offline-to-online handoff through the experiment pipeline:
//! pretrain on a corpus, switch to live environment steps without
//! resetting anything, and watch the evaluation curve across the boundary.
//!
//! Run with `cargo run --example fine_tune_handoff`.

use awac_lab::envs::EnvConfig;
use awac_lab::harness::{generate_dataset, run_experiment, DataProtocol, ExperimentConfig, RawConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("awac-lab-examples/handoff");
    std::fs::create_dir_all(&out)?;

    let env_cfg = EnvConfig::from_name("chain")?;
    let data_path = out.join("chain.ds");
    generate_dataset(&env_cfg, &DataProtocol::ExpertBc { demos: 15, clones: 40 }, 0)?
        .save(&data_path)?;

    let raw = RawConfig::from_pairs(&[
        ("algo.name", "awac"),
        ("env.name", "chain"),
        ("data.path", data_path.to_str().expect("temp path is valid UTF-8")),
        ("run.seeds", "0, 1"),
        ("run.offline_steps", "1500"),
        ("run.online_steps", "2000"),
        ("run.eval_every", "250"),
        ("run.out", out.join("runs").to_str().expect("temp path is valid UTF-8")),
    ]);
    let cfg = ExperimentConfig::from_raw(raw)?;
    let outcomes = run_experiment(&cfg)?;

    // Record 0 is the purely offline policy; everything after it is online
    // fine-tuning. A well-behaved handoff starts strong and never dips.
    for outcome in &outcomes {
        println!("seed {} ({}):", outcome.seed, outcome.csv_path.display());
        println!("  {:>9}  {:>8}  {:>7}", "env_steps", "return", "success");
        for r in &outcome.series.records {
            println!(
                "  {:>9}  {:>8.2}  {:>7.2}",
                r.env_steps, r.eval_return_mean, r.success_rate
            );
        }
        let first = &outcome.series.records[0];
        assert!(first.success_rate >= 0.8, "the offline policy should already work");
        println!();
    }
    println!("per-seed metrics and final policy checkpoints are under {}", out.join("runs").display());
    Ok(())
}
