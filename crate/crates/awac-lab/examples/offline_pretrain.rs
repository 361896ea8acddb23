//! Offline pretraining in isolation: the advantage-weighted agent learns
//! the chain task from a fixed corpus, never touching the environment
//! until evaluation.
//!
//! Run with `cargo run --example offline_pretrain`.

use awac_lab::awac::{AwacAgent, AwacConfig};
use awac_lab::envs::EnvConfig;
use awac_lab::harness::{generate_dataset, rollout_mean_policy, DataProtocol};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env_cfg = EnvConfig::from_name("chain")?;
    let dataset = generate_dataset(&env_cfg, &DataProtocol::ExpertBc { demos: 15, clones: 40 }, 0)?;
    println!(
        "corpus: {} trajectories, {} transitions",
        dataset.trajectories.len(),
        dataset.total_transitions()
    );

    // Sparse {-1, 0} rewards make every true Q-value nonpositive, so the
    // bootstrap target can be clamped at zero from above.
    let mut cfg = AwacConfig::desk_scale();
    cfg.clamp_q_max = Some(0.0);
    let probe = env_cfg.build(0)?;
    let mut agent = AwacAgent::new(
        probe.obs_width(),
        probe.action_low(),
        probe.action_high(),
        cfg,
        42,
    )?;
    agent.load_dataset(&dataset)?;

    let mut eval_env = env_cfg.build(0)?;
    let (_, success) = rollout_mean_policy(&agent.policy, eval_env.as_mut(), 10, 100)?;
    println!("\nbefore training: success rate {success:.2}");

    for step in 1..=1500 {
        let losses = agent.train_step()?;
        if step % 300 == 0 {
            println!(
                "  step {step:>5}: critic loss {:.4}, actor loss {:.4}, mean weight {:.3}",
                losses.critic_loss, losses.actor_loss, losses.mean_weight
            );
        }
    }

    let (returns, success) = rollout_mean_policy(&agent.policy, eval_env.as_mut(), 10, 100)?;
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    println!("\nafter 1500 offline steps: mean return {mean:.2}, success rate {success:.2}");
    assert!(success >= 0.8, "offline pretraining should already solve the chain");
    Ok(())
}
