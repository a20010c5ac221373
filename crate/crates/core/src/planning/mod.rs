//! Mid-range grid search and short-range motion-primitive selection.

mod astar;
mod dump;
mod primitives;

pub use astar::{
    plan_geometric, plan_geometric_with, quantize, reachable_subgoal, step_cost, GridPlannerConfig,
    PathSE2,
};
pub use dump::{read_path, write_path};
pub use primitives::{
    generate_primitives, score_primitive, select_primitive, select_primitive_with, MotionPrimitive,
    SelectionWeights,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanningError {
    #[error("no path to goal")]
    NoPath,
    #[error("every motion primitive is blocked")]
    AllBlocked,
    #[error("start cell is not traversable")]
    StartBlocked,
    #[error("{0} lies outside the costmap")]
    OutOfGrid(&'static str),
    #[error("malformed path file: {0}")]
    Format(String),
}
