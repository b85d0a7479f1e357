//! Deterministic 2D flocking-navigation simulator with a genetic optimizer
//! for the flocking rule weights.

pub mod error;
pub mod experiment;
pub mod export;
pub mod ga;
pub mod geometry;
pub mod metrics;
pub mod obstacle;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod swarm;

pub use error::{Error, Result};
pub use geometry::Vec2;
pub use scenario::Scenario;
pub use sim::{run_episode, EpisodeLog};
pub use swarm::{RuleSet, RuleWeights};
