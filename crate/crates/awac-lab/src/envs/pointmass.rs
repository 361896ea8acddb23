//! 2-D point-mass pusher: a hand must shove a puck to a goal.
//!
//! Observations are (hand, puck, goal) positions in a unit arena; actions
//! are hand velocities in a small box. The puck moves only while the hand
//! is in contact, where it is displaced radially to the contact circle's
//! edge, so progress requires approaching from behind and pushing toward
//! the goal. This is the exploration-hostile continuous task: random
//! actions almost never complete it, and value bootstrapping from a
//! pretrained critic matters.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EnvError, Environment, StepOutcome};

#[derive(Debug, Clone)]
pub struct PointMassConfig {
    /// Sparse: reward 0 inside the goal radius, -1 elsewhere. Dense:
    /// negative puck-goal distance. Both terminate on entering the goal
    /// radius, so the success sets coincide.
    pub sparse: bool,
    /// Randomize hand/puck/goal at reset (dataset diversity) or use the
    /// fixed canonical start.
    pub randomize_start: bool,
    pub contact_radius: f64,
    pub goal_radius: f64,
    pub max_steps: usize,
    pub max_speed: f64,
}

impl Default for PointMassConfig {
    fn default() -> Self {
        PointMassConfig {
            sparse: true,
            randomize_start: true,
            contact_radius: 0.075,
            goal_radius: 0.1,
            max_steps: 100,
            max_speed: 0.05,
        }
    }
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn norm(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

impl PointMassConfig {
    /// Two-phase controller: walk to a staging point behind the puck
    /// (opposite side from the goal), then drive straight through it
    /// toward the goal. Solves the task from any reachable reset.
    pub fn scripted_action(&self, obs: &[f64]) -> Vec<f64> {
        let hand = [obs[0], obs[1]];
        let puck = [obs[2], obs[3]];
        let goal = [obs[4], obs[5]];
        let to_goal = sub(goal, puck);
        let dist_goal = norm(to_goal);
        if dist_goal <= self.goal_radius * 0.8 {
            return vec![0.0, 0.0];
        }
        let dir = [to_goal[0] / dist_goal, to_goal[1] / dist_goal];
        let offset = self.contact_radius + 0.005;
        let staging = [
            clip01(puck[0] - dir[0] * offset),
            clip01(puck[1] - dir[1] * offset),
        ];
        let to_staging = sub(staging, hand);
        let clamp = |v: [f64; 2]| {
            vec![
                v[0].clamp(-self.max_speed, self.max_speed),
                v[1].clamp(-self.max_speed, self.max_speed),
            ]
        };
        if norm(to_staging) > 0.015 {
            let step = clamp(to_staging);
            let cand = [hand[0] + step[0], hand[1] + step[1]];
            let gap = sub(cand, puck);
            if norm(gap) < self.contact_radius {
                // The direct move would bump the puck sideways; slide
                // along the contact circle instead.
                let d = norm(gap).max(1e-9);
                let safe = [
                    puck[0] + gap[0] / d * (self.contact_radius + 1e-3),
                    puck[1] + gap[1] / d * (self.contact_radius + 1e-3),
                ];
                return clamp(sub(safe, hand));
            }
            return step;
        }
        clamp([dir[0] * self.max_speed, dir[1] * self.max_speed])
    }
}

pub struct PointMassPush {
    cfg: PointMassConfig,
    hand: [f64; 2],
    puck: [f64; 2],
    goal: [f64; 2],
    steps: usize,
    done: bool,
    rng: ChaCha8Rng,
}

impl PointMassPush {
    pub fn new(cfg: PointMassConfig, seed: u64) -> Self {
        PointMassPush {
            cfg,
            hand: [0.0; 2],
            puck: [0.0; 2],
            goal: [0.0; 2],
            steps: 0,
            done: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn config(&self) -> &PointMassConfig {
        &self.cfg
    }

    /// Places the bodies explicitly and starts a fresh episode from that
    /// layout. Used by targeted tests and distribution-shift fixtures.
    pub fn place(&mut self, hand: [f64; 2], puck: [f64; 2], goal: [f64; 2]) -> Vec<f64> {
        self.hand = hand.map(clip01);
        self.puck = puck.map(clip01);
        self.goal = goal.map(clip01);
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.hand[0], self.hand[1], self.puck[0], self.puck[1], self.goal[0], self.goal[1]]
    }

    fn puck_goal_distance(&self) -> f64 {
        norm(sub(self.puck, self.goal))
    }
}

impl Environment for PointMassPush {
    fn name(&self) -> &'static str {
        "pointmass"
    }

    fn obs_width(&self) -> usize {
        6
    }

    fn action_width(&self) -> usize {
        2
    }

    fn action_low(&self) -> Vec<f64> {
        vec![-self.cfg.max_speed; 2]
    }

    fn action_high(&self) -> Vec<f64> {
        vec![self.cfg.max_speed; 2]
    }

    fn max_episode_len(&self) -> usize {
        self.cfg.max_steps
    }

    fn reset(&mut self) -> Vec<f64> {
        let (hand, puck, goal) = if self.cfg.randomize_start {
            (
                [
                    0.1 + self.rng.random_range(-0.05..0.05),
                    0.5 + self.rng.random_range(-0.2..0.2),
                ],
                [
                    0.35 + self.rng.random_range(-0.1..0.1),
                    0.5 + self.rng.random_range(-0.15..0.15),
                ],
                [0.8, 0.5 + self.rng.random_range(-0.15..0.15)],
            )
        } else {
            ([0.1, 0.5], [0.35, 0.5], [0.8, 0.5])
        };
        self.place(hand, puck, goal)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::NeedsReset);
        }
        if action.len() != 2 {
            return Err(EnvError::ActionWidth { expected: 2, got: action.len() });
        }
        let v = [
            action[0].clamp(-self.cfg.max_speed, self.cfg.max_speed),
            action[1].clamp(-self.cfg.max_speed, self.cfg.max_speed),
        ];
        self.hand = [clip01(self.hand[0] + v[0]), clip01(self.hand[1] + v[1])];
        let gap = sub(self.puck, self.hand);
        let d = norm(gap);
        if d < self.cfg.contact_radius {
            // In contact: rigid displacement along the hand's motion. The
            // puck translates in the push direction by the smallest amount
            // that re-opens the contact circle, so off-center pushes still
            // move it forward instead of squirting it out sideways.
            let vn = norm(v);
            let dir = if vn > 1e-9 {
                [v[0] / vn, v[1] / vn]
            } else if d > 1e-9 {
                [gap[0] / d, gap[1] / d]
            } else {
                [1.0, 0.0]
            };
            let r = self.cfg.contact_radius;
            let b = gap[0] * dir[0] + gap[1] * dir[1];
            // Positive root of |gap + t*dir| = r; d < r keeps it real.
            let t = -b + (b * b + r * r - d * d).sqrt();
            self.puck = [clip01(self.puck[0] + t * dir[0]), clip01(self.puck[1] + t * dir[1])];
        }
        let dist = self.puck_goal_distance();
        let success = dist <= self.cfg.goal_radius;
        let reward = if self.cfg.sparse {
            if success {
                0.0
            } else {
                -1.0
            }
        } else {
            -dist
        };
        self.steps += 1;
        let terminated = success;
        let truncated = !terminated && self.steps >= self.cfg.max_steps;
        self.done = terminated || truncated;
        Ok(StepOutcome { obs: self.observe(), reward, terminated, truncated })
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn is_success(&self, obs: &[f64]) -> bool {
        let dist = norm([obs[2] - obs[4], obs[3] - obs[5]]);
        dist <= self.cfg.goal_radius
    }
}
