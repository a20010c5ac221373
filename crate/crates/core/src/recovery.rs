//! Health monitoring and the ordered recovery behaviours: clear the map,
//! backtrack, escape towards open space, follow a wall.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, PointCloud, PoseSE3};

#[derive(Debug, Error, PartialEq)]
pub enum RecoveryError {
    #[error("scan is empty")]
    EmptyScan,
    #[error("no wall within range on the {0} side")]
    NoWall(WallSide),
    #[error("malformed event line: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HealthEventKind {
    PlannerAllBlocked,
    NoPath,
    OdometryConfidenceLoss,
    StuckDetected,
    SensorDropout,
}

impl HealthEventKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::PlannerAllBlocked => "PlannerAllBlocked",
            Self::NoPath => "NoPath",
            Self::OdometryConfidenceLoss => "OdometryConfidenceLoss",
            Self::StuckDetected => "StuckDetected",
            Self::SensorDropout => "SensorDropout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthEvent {
    pub kind: HealthEventKind,
    pub stamp: f64,
    pub details: String,
}

/// Outcome of the planning layer in one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PlannerStatus {
    #[default]
    Ok,
    NoPath,
    AllBlocked,
}

/// Everything the monitor observes in one control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickInputs {
    pub stamp: f64,
    /// Result of a planning cycle that finished this tick, if any.
    pub planner: Option<PlannerStatus>,
    /// Commanded linear speed, m/s.
    pub commanded_speed: f64,
    /// Pose estimate after the tick.
    pub pose: PoseSE3,
    pub odometry_fault: bool,
    /// `Some(n)` when a scan with `n` points arrived this tick.
    pub scan_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub stuck_min_command: f64,
    pub stuck_max_displacement: f64,
    pub stuck_window: f64,
    pub debounce: u32,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self { stuck_min_command: 0.1, stuck_max_displacement: 0.05, stuck_window: 3.0, debounce: 3 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MonitorState {
    motion: VecDeque<(f64, f64, f64, f64)>,
    no_path: u32,
    all_blocked: u32,
}

impl MonitorState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets the motion window, e.g. after a recovery moved the robot.
    pub fn reset_motion(&mut self) {
        self.motion.clear();
    }
}

fn debounce(counter: &mut u32, hit: bool, limit: u32) -> bool {
    if !hit {
        *counter = 0;
        return false;
    }
    *counter += 1;
    if *counter >= limit {
        *counter = 0;
        true
    } else {
        false
    }
}

/// Turns one tick of observations into health events.
pub fn monitor_tick(inputs: &TickInputs, state: &mut MonitorState, config: &MonitorConfig) -> Vec<HealthEvent> {
    let mut events = Vec::new();
    let mut emit = |kind: HealthEventKind, details: String| {
        events.push(HealthEvent { kind, stamp: inputs.stamp, details });
    };

    if let Some(status) = inputs.planner {
        if debounce(&mut state.no_path, status == PlannerStatus::NoPath, config.debounce) {
            emit(HealthEventKind::NoPath, format!("{} consecutive", config.debounce));
        }
        if debounce(&mut state.all_blocked, status == PlannerStatus::AllBlocked, config.debounce) {
            emit(HealthEventKind::PlannerAllBlocked, format!("{} consecutive", config.debounce));
        }
    }
    if inputs.odometry_fault {
        emit(HealthEventKind::OdometryConfidenceLoss, "estimator fault".into());
    }
    if inputs.scan_points == Some(0) {
        emit(HealthEventKind::SensorDropout, "empty scan".into());
    }

    if inputs.commanded_speed.abs() > config.stuck_min_command {
        state.motion.push_back((inputs.stamp, inputs.pose.x, inputs.pose.y, inputs.commanded_speed));
    } else {
        state.motion.clear();
    }
    while state.motion.len() > 1 && inputs.stamp - state.motion[1].0 >= config.stuck_window {
        state.motion.pop_front();
    }
    if let (Some(first), Some(last)) = (state.motion.front(), state.motion.back()) {
        let span = last.0 - first.0;
        let moved = (last.1 - first.1).hypot(last.2 - first.2);
        if span >= config.stuck_window - 1e-9 && moved < config.stuck_max_displacement {
            emit(HealthEventKind::StuckDetected, format!("moved {moved:.3} m in {span:.1} s"));
            state.motion.clear();
        }
    }
    events
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WallSide {
    Left,
    Right,
}

impl WallSide {
    pub fn other(self) -> Self {
        match self {
            WallSide::Left => WallSide::Right,
            WallSide::Right => WallSide::Left,
        }
    }
}

impl fmt::Display for WallSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WallSide::Left => "left",
            WallSide::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RecoveryAction {
    ClearMap,
    Backtrack { distance: f64 },
    OpenLoopEscape { duration: f64 },
    WallFollow { side: WallSide },
}

impl RecoveryAction {
    pub fn rank(&self) -> usize {
        match self {
            RecoveryAction::ClearMap => 0,
            RecoveryAction::Backtrack { .. } => 1,
            RecoveryAction::OpenLoopEscape { .. } => 2,
            RecoveryAction::WallFollow { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RecoveryAction::ClearMap => "ClearMap",
            RecoveryAction::Backtrack { .. } => "Backtrack",
            RecoveryAction::OpenLoopEscape { .. } => "OpenLoopEscape",
            RecoveryAction::WallFollow { .. } => "WallFollow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRecord {
    pub event: HealthEvent,
    pub action: RecoveryAction,
    pub outcome: Outcome,
    /// Time the action finished executing.
    pub finished: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RecoveryDecision {
    Act(RecoveryAction),
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    /// Nominal operation this long closes a failure episode.
    pub episode_reset: f64,
    pub backtrack_distance: f64,
    pub escape_duration: f64,
    pub wall_side: WallSide,
    pub wall_standoff: f64,
    pub wall_speed: f64,
    pub wall_gain: f64,
    pub wall_max_turn: f64,
    pub wall_max_range: f64,
    pub wall_duration: f64,
    pub escape_sectors: usize,
    pub obstruction_height: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            episode_reset: 30.0,
            backtrack_distance: 2.0,
            escape_duration: 3.0,
            wall_side: WallSide::Left,
            wall_standoff: 1.0,
            wall_speed: 0.3,
            wall_gain: 1.0,
            wall_max_turn: 1.0,
            wall_max_range: 3.0,
            wall_duration: 10.0,
            escape_sectors: 36,
            obstruction_height: 0.15,
        }
    }
}

/// Records belonging to the failure episode that `event` continues.
fn current_episode<'a>(history: &'a [RecoveryRecord], event: &HealthEvent, reset: f64) -> &'a [RecoveryRecord] {
    let mut start = history.len();
    let mut next_stamp = event.stamp;
    while start > 0 {
        let prev = &history[start - 1];
        if next_stamp - prev.finished >= reset {
            break;
        }
        next_stamp = prev.event.stamp;
        start -= 1;
    }
    &history[start..]
}

/// First behaviour of the escalation order not yet tried in this episode.
pub fn next_recovery(history: &[RecoveryRecord], event: &HealthEvent, config: &RecoveryConfig) -> RecoveryDecision {
    let episode = current_episode(history, event, config.episode_reset);
    let order = [
        RecoveryAction::ClearMap,
        RecoveryAction::Backtrack { distance: config.backtrack_distance },
        RecoveryAction::OpenLoopEscape { duration: config.escape_duration },
        RecoveryAction::WallFollow { side: config.wall_side },
    ];
    order
        .into_iter()
        .find(|a| episode.iter().all(|r| r.action.rank() != a.rank()))
        .map_or(RecoveryDecision::Exhausted, RecoveryDecision::Act)
}

/// Obstructing returns of an ego-frame scan: points well above or below the
/// robot base plane.
fn obstructions(scan: &PointCloud, height: f64) -> impl Iterator<Item = &crate::geometry::Point3> {
    scan.points().iter().filter(move |p| p.z.abs() > height)
}

/// Heading of the sector whose nearest obstruction is farthest away.
///
/// `scan` is a gravity-levelled cloud with z measured from the robot base;
/// sectors are centred on multiples of `2π / sectors` around the sensor.
/// Ties go to the sector closest to the current heading.
pub fn escape_direction(scan: &PointCloud, sensor_pose: &PoseSE3) -> Result<f64, RecoveryError> {
    escape_direction_with(scan, sensor_pose, &RecoveryConfig::default())
}

pub fn escape_direction_with(
    scan: &PointCloud,
    sensor_pose: &PoseSE3,
    config: &RecoveryConfig,
) -> Result<f64, RecoveryError> {
    if scan.is_empty() {
        return Err(RecoveryError::EmptyScan);
    }
    let n = config.escape_sectors.max(1);
    let width = 2.0 * PI / n as f64;
    let mut nearest = vec![f64::INFINITY; n];
    for p in obstructions(scan, config.obstruction_height) {
        let (dx, dy) = (p.x - sensor_pose.x, p.y - sensor_pose.y);
        let k = ((dy.atan2(dx) / width).round() as i64).rem_euclid(n as i64) as usize;
        nearest[k] = nearest[k].min(dx.hypot(dy));
    }
    let heading_gap = |k: usize| normalize_angle(k as f64 * width - sensor_pose.yaw).abs();
    let best = (0..n)
        .max_by(|&a, &b| {
            nearest[a]
                .total_cmp(&nearest[b])
                .then(heading_gap(b).total_cmp(&heading_gap(a)))
                .then(b.cmp(&a))
        })
        .expect("at least one sector");
    Ok(normalize_angle(best as f64 * width))
}

/// One proportional wall-following command `(v, ω)` from the instantaneous
/// ego-frame scan alone.
pub fn wall_follow_step(scan: &PointCloud, side: WallSide, standoff: f64) -> Result<(f64, f64), RecoveryError> {
    wall_follow_step_with(scan, side, standoff, &RecoveryConfig::default())
}

pub fn wall_follow_step_with(
    scan: &PointCloud,
    side: WallSide,
    standoff: f64,
    config: &RecoveryConfig,
) -> Result<(f64, f64), RecoveryError> {
    if scan.is_empty() {
        return Err(RecoveryError::EmptyScan);
    }
    let sign = match side {
        WallSide::Left => 1.0,
        WallSide::Right => -1.0,
    };
    let range = obstructions(scan, config.obstruction_height)
        .filter(|p| {
            let bearing = (sign * p.y).atan2(p.x);
            (PI / 4.0..=3.0 * PI / 4.0).contains(&bearing)
        })
        .map(|p| p.x.hypot(p.y))
        .filter(|r| *r <= config.wall_max_range)
        .fold(f64::INFINITY, f64::min);
    if !range.is_finite() {
        return Err(RecoveryError::NoWall(side));
    }
    let turn = (sign * config.wall_gain * (range - standoff)).clamp(-config.wall_max_turn, config.wall_max_turn);
    Ok((config.wall_speed, turn))
}

/// One line of the run event log: `stamp kind action outcome`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub stamp: f64,
    pub kind: String,
    pub action: String,
    pub outcome: String,
}

impl EventRecord {
    pub fn new(stamp: f64, kind: &str, action: &str, outcome: &str) -> Self {
        Self { stamp, kind: kind.into(), action: action.into(), outcome: outcome.into() }
    }
}

impl fmt::Display for EventRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.stamp, self.kind, self.action, self.outcome)
    }
}

impl FromStr for EventRecord {
    type Err = RecoveryError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [stamp, kind, action, outcome] = fields[..] else {
            return Err(RecoveryError::Parse(line.to_owned()));
        };
        let stamp = stamp.parse().map_err(|_| RecoveryError::Parse(line.to_owned()))?;
        Ok(Self::new(stamp, kind, action, outcome))
    }
}
