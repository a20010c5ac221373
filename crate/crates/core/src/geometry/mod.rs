//! Frames, poses, point clouds, grids and the least-squares plane fit shared
//! by every downstream stage.
//!
//! All frames are right-handed with z up; gravity is `(0, 0, -1)`.

mod cloud;
mod grid;
mod index;
mod plane;
mod pose;

pub use cloud::{crop_footprint, transform_cloud, voxel_downsample, FootprintRect, PointCloud};
pub use grid::{Grid2D, GridIndex, GridShape};
pub use index::SpatialIndex;
pub use plane::{fit_plane, PlaneFit, DEGENERATE_EIGEN_GAP};
pub use pose::{normalize_angle, Point3, PoseSE2, PoseSE3};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("plane fit is degenerate ({count} points)")]
    DegenerateFit { count: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("frame id must not be empty")]
    EmptyFrame,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
