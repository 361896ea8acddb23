//! Baseline algorithms the main agent is benchmarked against: behavior
//! cloning, soft actor-critic in from-scratch and demonstration-seeded
//! variants (with optional cloning or density-penalty regularizers), and
//! exponentially weighted regression on full-trajectory returns. A
//! behavior density model for likelihood tracking lives here too.

mod awr;
mod bc;
mod behavior;
mod sac;

pub use awr::{td_lambda_targets, AwrAgent, AwrConfig};
pub use bc::{bc_step, bc_train, BcAgent, BcConfig};
pub use behavior::{BehaviorDensityModel, BehaviorTracker};
pub use sac::{ActorTerms, SacAgent, SacConfig, SacMode};
