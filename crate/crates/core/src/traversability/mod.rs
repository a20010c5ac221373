//! Per-pose traversability: tip-over, positive and negative obstacle checks
//! evaluated on a settled pose, and their combination into costmaps.

mod assess;
mod costmap;
mod coverage;
mod model;
mod pgm;

pub use assess::{
    assess_cell, check_negative_obstacle, check_positive_obstacle, check_tipover, CellAssessment,
    CellCost, HazardFlags,
};
pub use costmap::{build_costmap, build_costmap_with, inflate_flagged, soften_near_lethal, CostmapOptions};
pub use coverage::CoverageModel;
pub use model::{FidelityLevel, RobotModel, Tier};
pub use pgm::{read_pgm, write_costmap, write_pgm, CostmapMeta, PGM_LETHAL, PGM_UNKNOWN};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraversabilityError {
    #[error("pose is not settled")]
    NotSettled,
    #[error("invalid robot model: {0}")]
    InvalidModel(&'static str),
    #[error("malformed costmap file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
