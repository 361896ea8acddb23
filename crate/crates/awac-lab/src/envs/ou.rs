//! Ornstein-Uhlenbeck noise process for temporally correlated random
//! actions. Used to generate the low-quality "random" datasets: unlike
//! white noise, OU actions persist in a direction long enough to move an
//! agent somewhere before wandering off.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct OuNoise {
    pub theta: f64,
    pub sigma: f64,
    pub dt: f64,
    state: Vec<f64>,
}

impl OuNoise {
    /// The standard parameters: theta 0.15, sigma 0.3, unit time step.
    pub fn new(dim: usize) -> Self {
        OuNoise::with_params(dim, 0.15, 0.3, 1.0)
    }

    pub fn with_params(dim: usize, theta: f64, sigma: f64, dt: f64) -> Self {
        assert!(dim > 0, "noise dimension must be positive");
        assert!(theta > 0.0 && theta < 1.0, "theta must lie in (0, 1)");
        assert!(sigma >= 0.0, "sigma must be nonnegative");
        assert!(dt > 0.0, "dt must be positive");
        OuNoise { theta, sigma, dt, state: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Zeroes the state (episode boundary).
    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Starts the process from an explicit state.
    pub fn reset_to(&mut self, state: Vec<f64>) {
        assert_eq!(state.len(), self.state.len(), "state width mismatch");
        self.state = state;
    }

    /// One Euler step of mean reversion plus diffusion:
    /// `x += theta * (0 - x) * dt + sigma * sqrt(dt) * xi`.
    pub fn sample(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let scale = self.sigma * self.dt.sqrt();
        for x in &mut self.state {
            let xi: f64 = rng.sample(StandardNormal);
            *x += self.theta * (0.0 - *x) * self.dt + scale * xi;
        }
        self.state.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn zero_sigma_decays_geometrically() {
        let mut noise = OuNoise::with_params(1, 0.15, 0.0, 1.0);
        noise.reset_to(vec![1.0]);
        let mut rng = fixtures::rng(70);
        for n in 1..=20 {
            let x = noise.sample(&mut rng)[0];
            let expect = 0.85f64.powi(n);
            assert!((x - expect).abs() < 1e-12, "step {n}: {x} vs {expect}");
        }
    }

    #[test]
    fn stationary_variance_matches_discrete_ou_moment() {
        // x' = (1 - theta) x + sigma xi has stationary variance
        // sigma^2 / (1 - (1 - theta)^2) = sigma^2 / (2 theta - theta^2).
        let mut noise = OuNoise::new(1);
        let mut rng = fixtures::rng(71);
        // Burn in past the transient.
        for _ in 0..1000 {
            noise.sample(&mut rng);
        }
        let n = 1_000_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = noise.sample(&mut rng)[0];
            sum_sq += x * x;
        }
        let var = sum_sq / n as f64;
        let expect = 0.3f64.powi(2) / (2.0 * 0.15 - 0.15f64.powi(2));
        assert!(
            (var - expect).abs() / expect < 0.05,
            "simulated variance {var} vs theoretical {expect}"
        );
    }

    #[test]
    fn fixed_seed_gives_identical_sequences() {
        let run = |seed: u64| -> Vec<f64> {
            let mut noise = OuNoise::new(3);
            let mut rng = fixtures::rng(seed);
            (0..50).flat_map(|_| noise.sample(&mut rng)).collect()
        };
        assert_eq!(run(72), run(72));
        assert_ne!(run(72), run(73));
    }

    #[test]
    fn reset_zeroes_the_state() {
        let mut noise = OuNoise::new(2);
        let mut rng = fixtures::rng(74);
        noise.sample(&mut rng);
        noise.reset();
        assert_eq!(noise.state(), &[0.0, 0.0]);
    }
}
