//! Central finite differences against the hand-written gradients: the
//! policy's weighted negative log-likelihood and a plain regression loss,
//! probed at randomly chosen parameter coordinates.
//!
//! Run with `cargo run --example gradient_probe`.

use awac_lab::fixtures;
use awac_lab::nn::{mse_loss_grad, DenseNet, GaussianPolicy};
use ndarray::{Array1, Array2};
use rand::Rng;

/// Relative agreement between an analytic derivative and its central
/// difference, probed at `count` random coordinates of `net`.
fn probe<F>(net: &mut DenseNet, analytic: &[f64], count: usize, seed: u64, mut loss: F) -> f64
where
    F: FnMut(&DenseNet) -> f64,
{
    let mut rng = fixtures::rng(seed);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..count {
        let idx = rng.random_range(0..net.param_count());
        let original = net.get_param(idx);
        net.set_param(idx, original + h);
        let up = loss(net);
        net.set_param(idx, original - h);
        let down = loss(net);
        net.set_param(idx, original);
        let numeric = (up - down) / (2.0 * h);
        let rel = (analytic[idx] - numeric).abs() / analytic[idx].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = fixtures::rng(9);
    let (obs_width, action_dim, batch) = (4, 2, 16);

    let obs = Array2::from_shape_fn((batch, obs_width), |_| rng.random_range(-1.0..1.0));
    let actions = Array2::from_shape_fn((batch, action_dim), |_| rng.random_range(-0.9..0.9));
    let weights: Vec<f64> = (0..batch).map(|_| rng.random_range(0.1..3.0)).collect();

    // Policy actor loss: weighted NLL of a tanh-squashed Gaussian.
    let mut policy = GaussianPolicy::init(obs_width, &[8, 8], vec![-1.0; action_dim], vec![1.0; action_dim], &mut rng);
    let (loss, grads) = policy.weighted_nll_grad(&obs, &actions, &weights)?;
    let flat = grads.flat();
    let worst = {
        let actions = actions.clone();
        let weights = weights.clone();
        let low = policy.action_low.clone();
        let high = policy.action_high.clone();
        probe(&mut policy.net, &flat, 60, 17, |net| {
            let p = GaussianPolicy::new(net.clone(), low.clone(), high.clone()).unwrap();
            p.weighted_nll_grad(&obs, &actions, &weights).unwrap().0
        })
    };
    println!("weighted NLL: loss {loss:.6}, worst relative gradient error {worst:.2e}");
    assert!(worst < 1e-3);

    // Plain squared-error regression on a fresh net.
    let targets = Array1::from_shape_fn(batch, |_| rng.random_range(-2.0..2.0));
    let mut net = DenseNet::init(&[obs_width, 8, 1], &mut rng);
    let (loss, grads) = mse_loss_grad(&net, &obs, &targets);
    let flat = grads.flat();
    let worst = probe(&mut net, &flat, 60, 23, |n| mse_loss_grad(n, &obs, &targets).0);
    println!("squared error: loss {loss:.6}, worst relative gradient error {worst:.2e}");
    assert!(worst < 1e-3);

    println!("\nanalytic gradients agree with central differences");
    Ok(())
}
