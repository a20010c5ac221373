//! Multi-fidelity traversability analysis and local navigation for ground
//! robots on rough terrain.
//!
//! Point clouds are segmented into ground and obstacle points, a robot
//! footprint is settled on the ground to recover its 6-DoF pose, and hazard
//! checks on the settled pose feed three costmap tiers of decreasing
//! resolution. A grid planner and a motion-primitive selector drive the robot,
//! and a health monitor escalates through recovery behaviours on failure.
//! A deterministic heightfield simulator and scenario runner close the loop.

pub mod geometry;
pub mod pipeline;
pub mod planning;
pub mod recovery;
pub mod scenario;
pub mod segmentation;
pub mod settling;
pub mod sim;
pub mod traversability;

pub use geometry::{Grid2D, GridIndex, GridShape, Point3, PointCloud, PoseSE2, PoseSE3};
pub use segmentation::{segment, SegmentationParams, SegmentedCloud};
pub use settling::{settle, SettleStatus, SettledPose};
pub use traversability::{CellAssessment, CellCost, FidelityLevel, HazardFlags, RobotModel, Tier};
