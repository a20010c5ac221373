//! The three costmap tiers: an instantaneous ego-frame high-resolution map,
//! a mid-resolution map rebuilt from a window of registered scans, and a
//! long-range occupancy belief.

mod occupancy;

pub use occupancy::{
    belief_to_costmap, occupancy_update, probability, ray_cells, BeliefParams, OccupancyBelief,
};

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    transform_cloud, voxel_downsample, Grid2D, GridIndex, GridShape, Point3, PointCloud, PoseSE2,
    PoseSE3,
};
use crate::segmentation::{segment, SegmentationError, SegmentationParams, SegmentedCloud};
use crate::traversability::{
    build_costmap_with, CellAssessment, CellCost, CostmapOptions, CoverageModel, FidelityLevel,
    RobotModel, Tier,
};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("scan stamp {got} precedes previous stamp {previous}")]
    StaleScan { previous: f64, got: f64 },
    #[error("scan contains no points")]
    EmptyScan,
    #[error("point ({x}, {y}) is beyond every tier")]
    OutOfAllRanges { x: f64, y: f64 },
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierConfig {
    pub fidelity: FidelityLevel,
    /// Half-extent of the square tier grid.
    pub range: f64,
    pub resolution: f64,
    pub yaw_samples: usize,
}

impl TierConfig {
    pub fn high() -> Self {
        Self { fidelity: FidelityLevel::high(), range: 10.0, resolution: 0.10, yaw_samples: 4 }
    }

    pub fn mid() -> Self {
        Self { fidelity: FidelityLevel::mid(), range: 50.0, resolution: 0.25, yaw_samples: 2 }
    }

    pub fn low() -> Self {
        Self { fidelity: FidelityLevel::low(), range: 100.0, resolution: 0.50, yaw_samples: 1 }
    }
}

/// Sensor parameters needed to predict ground-return density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorCoverage {
    pub azimuth_step: f64,
    pub elevation_step: f64,
    pub min_elevation: f64,
    pub max_range: f64,
    pub keep_fraction: f64,
    pub nominal_height: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    2.0
}

impl SensorCoverage {
    fn model(&self, origins: Vec<Point3>, voxel: f64) -> CoverageModel {
        CoverageModel {
            origins,
            azimuth_step: self.azimuth_step,
            elevation_step: self.elevation_step,
            min_elevation: self.min_elevation,
            max_range: self.max_range,
            keep_fraction: self.keep_fraction,
            density_cap: (voxel > 0.0).then(|| 1.0 / (voxel * voxel)),
            nominal_height: self.nominal_height,
            margin: self.margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub high: TierConfig,
    pub mid: TierConfig,
    pub low: TierConfig,
    pub window_capacity: usize,
    pub segmentation: SegmentationParams,
    pub belief: BeliefParams,
    /// Voxel size applied to each scan before the high tier; 0 disables.
    pub high_voxel: f64,
    /// Voxel size applied to the merged window before the mid tier; 0 disables.
    pub mid_voxel: f64,
    /// When set, sparse ground that the sensor could not have resolved is
    /// UNKNOWN instead of a negative obstacle.
    pub coverage: Option<SensorCoverage>,
}

impl PipelineConfig {
    pub fn for_model(model: &RobotModel) -> Self {
        Self {
            high: TierConfig::high(),
            mid: TierConfig::mid(),
            low: TierConfig::low(),
            window_capacity: 10,
            segmentation: SegmentationParams::for_max_slope(model.max_slope),
            belief: BeliefParams::default(),
            high_voxel: 0.05,
            mid_voxel: 0.10,
            coverage: None,
        }
    }
}

/// One depth scan in the gravity-levelled ego frame (origin at the robot base,
/// x along the heading) together with the sensor origin in that frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub cloud: PointCloud,
    pub sensor_origin: Point3,
}

#[derive(Debug, Clone)]
pub struct WindowEntry {
    pub stamp: f64,
    pub estimate: PoseSE3,
    pub sensor_origin: Point3,
    pub segmented: SegmentedCloud,
}

/// The last N scans with the pose estimates they were taken at.
#[derive(Debug, Clone)]
pub struct ScanWindow {
    capacity: usize,
    entries: VecDeque<WindowEntry>,
}

impl ScanWindow {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), entries: VecDeque::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, entry: WindowEntry) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn entries(&self) -> impl Iterator<Item = &WindowEntry> {
        self.entries.iter()
    }

    pub fn stamps(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.stamp).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// Immutable view of all three tiers after one scan.
#[derive(Debug, Clone)]
pub struct TierSnapshots {
    pub stamp: f64,
    /// Pose estimate the high tier is anchored to.
    pub ego_pose: PoseSE3,
    /// Ego-frame grid centred on the robot.
    pub high: Arc<Grid2D<CellAssessment>>,
    /// World-frame grids.
    pub mid: Arc<Grid2D<CellAssessment>>,
    pub low: Arc<Grid2D<CellAssessment>>,
    pub ranges: [f64; 3],
}

impl TierSnapshots {
    pub fn grid(&self, tier: Tier) -> &Grid2D<CellAssessment> {
        match tier {
            Tier::High => &self.high,
            Tier::Mid => &self.mid,
            Tier::Low => &self.low,
        }
    }

    /// World coordinates of a high-tier cell centre.
    pub fn high_cell_world(&self, index: GridIndex) -> (f64, f64) {
        let (ex, ey) = self.high.shape().grid_to_world(index);
        self.ego_pose.to_se2().transform_point(ex, ey)
    }

    /// High tier with UNKNOWN cells taken from the mid tier where it knows
    /// them. Stays in the ego frame.
    pub fn high_backfilled(&self) -> Grid2D<CellAssessment> {
        let mut out = (*self.high).clone();
        let shape = *out.shape();
        for (k, cell) in out.cells_mut().iter_mut().enumerate() {
            if !cell.cost.is_unknown() {
                continue;
            }
            let (ex, ey) = shape.grid_to_world(shape.unlinear(k));
            let (wx, wy) = self.ego_pose.to_se2().transform_point(ex, ey);
            if let Some(m) = self.mid.at_world(wx, wy).filter(|m| !m.cost.is_unknown()) {
                *cell = *m;
            }
        }
        out
    }

    /// Mid-tier grid with cells inside high-tier coverage replaced by the
    /// cheapest known high-tier cost falling in them.
    pub fn planning_grid(&self) -> Grid2D<CellAssessment> {
        let mut fused = (*self.mid).clone();
        let mut best: Vec<Option<CellAssessment>> = vec![None; fused.shape().len()];
        let mid_shape = *fused.shape();
        for (idx, cell) in self.high.indexed() {
            if cell.cost.is_unknown() {
                continue;
            }
            let (wx, wy) = self.high_cell_world(idx);
            let Some(m) = mid_shape.world_to_grid(wx, wy) else { continue };
            let slot = &mut best[mid_shape.linear(m)];
            let better = match slot {
                None => true,
                Some(prev) => cost_rank(&cell.cost) < cost_rank(&prev.cost),
            };
            if better {
                *slot = Some(*cell);
            }
        }
        for (cell, high) in fused.cells_mut().iter_mut().zip(best) {
            if let Some(h) = high {
                *cell = h;
            }
        }
        fused
    }
}

fn cost_rank(cost: &CellCost) -> f64 {
    match cost {
        CellCost::Cost(c) => *c,
        CellCost::Lethal => 2.0,
        CellCost::Unknown => 3.0,
    }
}

/// Finest tier whose range covers `(x, y)`; UNKNOWN defers to coarser tiers.
pub fn query_cost(
    snapshots: &TierSnapshots,
    x: f64,
    y: f64,
    robot_pose: &PoseSE3,
) -> Result<(CellCost, Tier), PipelineError> {
    let d = (x - robot_pose.x).hypot(y - robot_pose.y);
    let mut answer = None;
    for (k, tier) in [Tier::High, Tier::Mid, Tier::Low].into_iter().enumerate() {
        if d > snapshots.ranges[k] {
            continue;
        }
        let cell = if tier == Tier::High {
            let (ex, ey) = snapshots.ego_pose.to_se2().inverse_transform_point(x, y);
            snapshots.high.at_world(ex, ey)
        } else {
            snapshots.grid(tier).at_world(x, y)
        };
        let Some(cell) = cell else { continue };
        if !cell.cost.is_unknown() {
            return Ok((cell.cost, tier));
        }
        answer = Some((CellCost::Unknown, tier));
    }
    answer.ok_or(PipelineError::OutOfAllRanges { x, y })
}

/// Single-writer owner of the tier state.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    model: RobotModel,
    window: ScanWindow,
    belief: OccupancyBelief,
    last_stamp: Option<f64>,
    snapshots: Option<TierSnapshots>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, model: RobotModel) -> Self {
        let low = config.low;
        let belief = OccupancyBelief::new(GridShape::snapped(0.0, 0.0, low.range, low.resolution), config.belief);
        Self {
            window: ScanWindow::new(config.window_capacity),
            config,
            model,
            belief,
            last_stamp: None,
            snapshots: None,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn window(&self) -> &ScanWindow {
        &self.window
    }

    pub fn belief(&self) -> &OccupancyBelief {
        &self.belief
    }

    pub fn snapshots(&self) -> Option<&TierSnapshots> {
        self.snapshots.as_ref()
    }

    fn coverage(&self, origins: Vec<Point3>, voxel: f64) -> Option<CoverageModel> {
        self.config.coverage.map(|c| c.model(origins, voxel))
    }

    /// Builds the high tier from a single ego-frame scan.
    pub fn high_tier(&self, segmented: &SegmentedCloud, sensor_origin: &Point3) -> Grid2D<CellAssessment> {
        let tier = self.config.high;
        // A cell centre on the robot, so its own cell is assessed at its pose.
        let shape = GridShape::cell_centered(0.0, 0.0, tier.range, tier.resolution);
        let coverage = self.coverage(vec![*sensor_origin], self.config.high_voxel);
        let options = CostmapOptions { coverage: coverage.as_ref(), skip_outside_data: true };
        build_costmap_with(
            segmented,
            &PoseSE2::default(),
            &shape,
            tier.yaw_samples,
            &self.model,
            &tier.fidelity,
            &options,
        )
    }

    /// Rebuilds the mid tier from the registered window around `center`.
    fn mid_tier(&self, center: &PoseSE3) -> Grid2D<CellAssessment> {
        let tier = self.config.mid;
        let shape = GridShape::snapped(center.x, center.y, tier.range, tier.resolution);
        if self.window.is_empty() {
            return Grid2D::filled(shape, CellAssessment::UNKNOWN);
        }
        let mut ground = Vec::new();
        let mut obstacle = Vec::new();
        let mut origins = Vec::new();
        for e in self.window.entries() {
            let reg = register(&e.estimate);
            ground.extend(transform_cloud(&e.segmented.ground, &reg, "map").into_points());
            obstacle.extend(transform_cloud(&e.segmented.obstacle, &reg, "map").into_points());
            origins.push(reg.transform_point(&e.sensor_origin));
        }
        let voxel = self.config.mid_voxel;
        let merge = |pts: Vec<Point3>| {
            let cloud = PointCloud::from_trusted(pts, "map", 0.0);
            if voxel > 0.0 {
                voxel_downsample(&cloud, voxel)
            } else {
                cloud
            }
        };
        let merged = SegmentedCloud {
            ground: merge(ground),
            obstacle: merge(obstacle),
            unassigned: PointCloud::empty("map", 0.0),
        };
        let coverage = self.coverage(origins, voxel);
        let options = CostmapOptions { coverage: coverage.as_ref(), skip_outside_data: true };
        build_costmap_with(
            &merged,
            &PoseSE2::default(),
            &shape,
            tier.yaw_samples,
            &self.model,
            &tier.fidelity,
            &options,
        )
    }

    /// Integrates one scan into all three tiers and returns their snapshots.
    pub fn ingest_scan(&mut self, scan: &Scan, pose_estimate: &PoseSE3) -> Result<TierSnapshots, PipelineError> {
        let stamp = scan.cloud.stamp();
        if let Some(previous) = self.last_stamp {
            if stamp < previous {
                return Err(PipelineError::StaleScan { previous, got: stamp });
            }
        }
        if scan.cloud.is_empty() {
            return Err(PipelineError::EmptyScan);
        }
        let cloud = if self.config.high_voxel > 0.0 {
            voxel_downsample(&scan.cloud, self.config.high_voxel)
        } else {
            scan.cloud.clone()
        };
        let segmented = segment(&cloud, &self.config.segmentation, &scan.sensor_origin)?;
        self.last_stamp = Some(stamp);

        let high = self.high_tier(&segmented, &scan.sensor_origin);

        let reg = register(pose_estimate);
        let low_cfg = self.config.low;
        let shape = *self.belief.shape();
        let (cx, cy) = (shape.origin_x + 0.5 * shape.width as f64 * shape.resolution, shape.origin_y + 0.5 * shape.height as f64 * shape.resolution);
        if (reg.x - cx).abs() > 0.25 * low_cfg.range || (reg.y - cy).abs() > 0.25 * low_cfg.range {
            self.belief.recenter(GridShape::snapped(reg.x, reg.y, low_cfg.range, low_cfg.resolution));
        }
        occupancy::integrate(&mut self.belief, &segmented.obstacle, &reg);

        self.window.push(WindowEntry {
            stamp,
            estimate: *pose_estimate,
            sensor_origin: scan.sensor_origin,
            segmented,
        });
        let mid = self.mid_tier(&reg);

        let snapshots = TierSnapshots {
            stamp,
            ego_pose: reg,
            high: Arc::new(high),
            mid: Arc::new(mid),
            low: Arc::new(belief_to_costmap(&self.belief)),
            ranges: [self.config.high.range, self.config.mid.range, self.config.low.range],
        };
        self.snapshots = Some(snapshots.clone());
        Ok(snapshots)
    }

    /// Drops the scan window and resets the belief to its prior. The current
    /// high tier is kept; mid and low snapshots become all UNKNOWN.
    pub fn clear(&mut self) {
        self.window.clear();
        self.belief.clear();
        if let Some(s) = self.snapshots.as_mut() {
            let mid_shape = *s.mid.shape();
            s.mid = Arc::new(Grid2D::filled(mid_shape, CellAssessment::UNKNOWN));
            s.low = Arc::new(belief_to_costmap(&self.belief));
        }
    }
}

/// Ego-to-world transform of a levelled ego frame: translation and heading
/// only, since the ego frame is already gravity-aligned.
pub fn register(estimate: &PoseSE3) -> PoseSE3 {
    PoseSE3::new(estimate.x, estimate.y, estimate.z, 0.0, 0.0, estimate.yaw)
}
