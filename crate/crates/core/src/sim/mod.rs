//! Deterministic synthetic worlds: heightfield terrain with placed features,
//! a raycast range sensor, unicycle dynamics on the true terrain and a
//! localization drift model with scripted faults.

mod drift;
mod dynamics;
mod sensor;
mod terrain;

pub use drift::{perturb_pose, DriftModel, DriftState, FaultKind, ScriptedFault};
pub use dynamics::{settle_on_terrain, step_dynamics, CollisionEvent, Contact, RobotState, StepOutcome};
pub use sensor::{raycast, render_scan, SensorSpec};
pub use terrain::{generate_terrain, Aabb, BaseSurface, Feature, TerrainField, TerrainSpec};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("time step {0} outside (0, 0.1]")]
    InvalidStep(f64),
}

/// Sub-stream identifiers; each consumer of randomness owns one.
pub const STREAM_TERRAIN: u64 = 1;
pub const STREAM_SENSOR: u64 = 2;
pub const STREAM_DRIFT: u64 = 3;

/// Generator for one consumer of a run seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
