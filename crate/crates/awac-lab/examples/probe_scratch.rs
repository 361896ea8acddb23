//! Scratch diagnostic, not part of the example set.
//!
//! Question under investigation: why does the advantage-weighted agent's
//! pointmass success rate oscillate around its offline plateau instead of
//! climbing during online fine-tuning?

use awac_lab::awac::{AwacAgent, AwacConfig};
use awac_lab::envs::EnvConfig;
use awac_lab::harness::{generate_dataset, rollout_mean_policy, DataProtocol};
use awac_lab::nn::{LOG_STD_MAX, LOG_STD_MIN};
use awac_lab::replay::Transition;
use ndarray::Array2;

fn mean_log_std(agent: &AwacAgent, states: &Array2<f64>) -> f64 {
    let (_, raw, _) = agent.policy.heads(states);
    let clamped = raw.mapv(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
    clamped.sum() / clamped.len() as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env_cfg = EnvConfig::from_name("pointmass")?;
    let dataset = generate_dataset(&env_cfg, &DataProtocol::ExpertBc { demos: 15, clones: 100 }, 0)?;
    println!(
        "corpus: {} trajectories, {} transitions",
        dataset.trajectories.len(),
        dataset.total_transitions()
    );

    let mut cfg = AwacConfig::desk_scale();
    cfg.clamp_q_max = Some(0.0);
    cfg.lambda = 1.0;
    let probe = env_cfg.build(0)?;
    let mut agent = AwacAgent::new(
        probe.obs_width(),
        probe.action_low(),
        probe.action_high(),
        cfg,
        42,
    )?;
    agent.load_dataset(&dataset)?;

    // States for std probes: first 256 dataset states.
    let mut rows: Vec<f64> = Vec::new();
    let mut n_rows = 0;
    'outer: for t in &dataset.trajectories {
        for tr in &t.transitions {
            rows.extend_from_slice(&tr.state);
            n_rows += 1;
            if n_rows == 256 {
                break 'outer;
            }
        }
    }
    let probe_states = Array2::from_shape_vec((n_rows, probe.obs_width()), rows)?;

    for step in 1..=6000 {
        let losses = agent.train_step()?;
        if step % 1500 == 0 {
            println!(
                "  offline {step:>5}: critic {:.4} actor {:.4} adv {:+.3} w {:.3}",
                losses.critic_loss, losses.actor_loss, losses.mean_advantage, losses.mean_weight
            );
        }
    }

    let mut eval_env = env_cfg.build(0)?;
    let (_, succ_mean) = rollout_mean_policy(&agent.policy, eval_env.as_mut(), 30, 500)?;
    println!("\nafter offline: mean-policy success {succ_mean:.2}");
    println!("mean log_std over dataset states: {:.3}", mean_log_std(&agent, &probe_states));

    // Stochastic rollouts (what online collection actually sees).
    let mut env = env_cfg.build(7)?;
    let mut stoch_succ = 0;
    for _ in 0..30 {
        let mut obs = env.reset();
        for _ in 0..env.max_episode_len() {
            let a = agent.act(&obs);
            let out = env.step(&a)?;
            if out.terminated {
                stoch_succ += 1;
                break;
            }
            if out.truncated {
                break;
            }
            obs = out.obs;
        }
    }
    println!("stochastic success: {stoch_succ}/30");

    // Hand-rolled online loop with instrumentation.
    let trains_per_step: usize = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(1);
    println!("\ntrains per env step: {trains_per_step}");
    let mut spread_rng = awac_lab::fixtures::rng(555);
    let mut env = env_cfg.build(100)?;
    let mut obs = env.reset();
    let mut window_eps = 0usize;
    let mut window_succ = 0usize;
    let mut adv_sum = 0.0;
    let mut w_sum = 0.0;
    let mut n_tr = 0u64;
    println!(" steps | eval | stoch-window | adv | w | log_std | adv-std");
    for step in 1..=10_000u64 {
        let action = agent.act(&obs);
        let out = env.step(&action)?;
        let tr = Transition {
            state: obs.clone(),
            action,
            reward: out.reward,
            next_state: out.obs.clone(),
            terminal: out.terminated,
        };
        agent.buffer.push(tr)?;
        agent.note_env_step();
        if out.terminated || out.truncated {
            window_eps += 1;
            if out.terminated {
                window_succ += 1;
            }
            obs = env.reset();
        } else {
            obs = out.obs;
        }
        for _ in 0..trains_per_step {
            let losses = agent.train_step()?;
            adv_sum += losses.mean_advantage;
            w_sum += losses.mean_weight;
            n_tr += 1;
        }
        if step % 1000 == 0 {
            let (_, succ) = rollout_mean_policy(&agent.policy, eval_env.as_mut(), 20, step)?;
            let probe_batch = agent.buffer.sample_arrays(512, &mut spread_rng)?;
            let adv = agent.estimate_advantages(&probe_batch);
            let m = adv.sum() / adv.len() as f64;
            let var = adv.mapv(|a| (a - m) * (a - m)).sum() / adv.len() as f64;
            println!(
                "{step:>6} | {succ:.2} | {window_succ}/{window_eps} | {:+.3} | {:.3} | {:.3} | {:.3}",
                adv_sum / n_tr as f64,
                w_sum / n_tr as f64,
                mean_log_std(&agent, &probe_states),
                var.sqrt()
            );
            window_eps = 0;
            window_succ = 0;
            adv_sum = 0.0;
            w_sum = 0.0;
            n_tr = 0;
        }
    }
    Ok(())
}
