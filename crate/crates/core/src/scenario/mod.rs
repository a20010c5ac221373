//! Declarative scenarios: a JSON file describing a world, a robot and a goal,
//! a closed-loop runner that writes an artifact directory, and a replay that
//! re-derives the metrics from the logs.

mod metrics;
mod run;

pub use metrics::{read_events, read_trajectory, replay, MetricsReport, TrajectorySample, FIELD_STAT_ROWS};
pub use run::{run_scenario, RunResult, Termination};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PoseSE2;
use crate::pipeline::{PipelineConfig, TierConfig};
use crate::planning::{GridPlannerConfig, SelectionWeights};
use crate::recovery::{MonitorConfig, RecoveryConfig};
use crate::sim::{DriftModel, SensorSpec, SimError, TerrainSpec};
use crate::traversability::{FidelityLevel, RobotModel, Tier};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    fn config(path: &str, message: impl Into<String>) -> Self {
        Self::Config { path: path.to_owned(), message: message.into() }
    }
}

/// A preset name or a full inline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RobotRef {
    Preset(String),
    Inline(RobotModel),
}

/// Extent of one tier; its fidelity follows from the tier and resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierSize {
    pub range: f64,
    pub resolution: f64,
    pub yaw_samples: usize,
}

impl TierSize {
    pub fn to_config(self, tier: Tier) -> TierConfig {
        let mut fidelity = FidelityLevel::for_tier(tier);
        fidelity.density_scale = (0.1 / self.resolution).powi(2);
        TierConfig { fidelity, range: self.range, resolution: self.resolution, yaw_samples: self.yaw_samples }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierConfigs {
    pub high: TierSize,
    pub mid: TierSize,
    pub low: TierSize,
    #[serde(default = "default_window")]
    pub window_capacity: usize,
}

fn default_window() -> usize {
    10
}

/// Control-loop and local-planner constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConstants {
    pub dt: f64,
    pub scan_period: f64,
    pub goal_tolerance: f64,
    /// Length of the global path handed to primitive selection.
    pub lookahead: f64,
    pub primitive_count: usize,
    pub primitive_horizon: f64,
    pub primitive_spacing: f64,
    pub weights: SelectionWeights,
    pub grid: GridPlannerConfig,
    /// Clearance kept between the robot centre and negative-obstacle cells.
    pub negative_standoff: f64,
    /// Free cells closer than this to a lethal cell cost extra.
    pub proximity_radius: f64,
    /// Cost right next to a lethal cell, decaying linearly to the radius.
    pub proximity_cost: f64,
    /// Leading stretch of the global path replanned on the high tier.
    pub refine_distance: f64,
}

impl Default for PlannerConstants {
    fn default() -> Self {
        Self {
            dt: 0.1,
            scan_period: 1.0,
            goal_tolerance: 1.0,
            lookahead: 2.0,
            primitive_count: 9,
            primitive_horizon: 1.5,
            primitive_spacing: 0.1,
            weights: SelectionWeights::default(),
            grid: GridPlannerConfig { allow_blocked_start: true, ..GridPlannerConfig::optimistic() },
            negative_standoff: 0.35,
            proximity_radius: 0.5,
            proximity_cost: 0.5,
            refine_distance: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    /// Required: every random stream of a run derives from it.
    pub seed: u64,
    pub max_duration: f64,
    pub robot: RobotRef,
    pub terrain: TerrainSpec,
    pub sensor: SensorSpec,
    #[serde(default)]
    pub drift: DriftModel,
    pub start: PoseSE2,
    pub goal: PoseSE2,
    #[serde(default)]
    pub tiers: Option<TierConfigs>,
    #[serde(default)]
    pub planner: PlannerConstants,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
    /// Dump every tier every this many ticks; 0 disables.
    #[serde(default)]
    pub dump_costmaps: u32,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::Config { path, message: e.into_inner().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::config(".", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn robot_model(&self) -> Result<RobotModel, ScenarioError> {
        let model = match &self.robot {
            RobotRef::Preset(name) => RobotModel::preset(name)
                .ok_or_else(|| ScenarioError::config("robot", format!("unknown preset `{name}`")))?,
            RobotRef::Inline(m) => m.clone(),
        };
        model.validate().map_err(|e| ScenarioError::config("robot", e.to_string()))?;
        Ok(model)
    }

    pub fn pipeline_config(&self, model: &RobotModel) -> PipelineConfig {
        let mut config = PipelineConfig::for_model(model);
        if let Some(t) = self.tiers {
            config.high = t.high.to_config(Tier::High);
            config.mid = t.mid.to_config(Tier::Mid);
            config.low = t.low.to_config(Tier::Low);
            config.window_capacity = t.window_capacity;
        }
        config.segmentation.max_range = config.segmentation.max_range.max(self.sensor.max_range);
        config.coverage = Some(self.sensor.coverage());
        config
    }

    // Negated comparisons so that NaN fails validation too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.robot_model()?;
        if !(self.max_duration > 0.0) {
            return Err(ScenarioError::config("max_duration", "must be positive"));
        }
        self.sensor.validate().map_err(|e| ScenarioError::config("sensor", e.to_string()))?;
        let t = &self.terrain;
        if !(t.size_x > 0.0 && t.size_y > 0.0 && t.resolution > 0.0) {
            return Err(ScenarioError::config("terrain", "dimensions must be positive"));
        }
        let inside = |p: &PoseSE2| {
            p.x >= t.origin_x && p.x < t.origin_x + t.size_x && p.y >= t.origin_y && p.y < t.origin_y + t.size_y
        };
        if !inside(&self.start) {
            return Err(ScenarioError::config("start", "outside the terrain"));
        }
        if !inside(&self.goal) {
            return Err(ScenarioError::config("goal", "outside the terrain"));
        }
        let p = &self.planner;
        if !(p.dt > 0.0 && p.dt <= 0.1) {
            return Err(ScenarioError::config("planner.dt", "must lie in (0, 0.1]"));
        }
        if !(p.scan_period >= p.dt) {
            return Err(ScenarioError::config("planner.scan_period", "must be at least one tick"));
        }
        if !(p.goal_tolerance > 0.0 && p.primitive_horizon > 0.0 && p.primitive_spacing > 0.0) {
            return Err(ScenarioError::config("planner", "tolerance, horizon and spacing must be positive"));
        }
        if let Some(tiers) = &self.tiers {
            for (name, tier) in [("tiers.high", tiers.high), ("tiers.mid", tiers.mid), ("tiers.low", tiers.low)] {
                if !(tier.range > 0.0 && tier.resolution > 0.0 && tier.yaw_samples > 0) {
                    return Err(ScenarioError::config(name, "range, resolution and yaw samples must be positive"));
                }
            }
        }
        Ok(())
    }
}
