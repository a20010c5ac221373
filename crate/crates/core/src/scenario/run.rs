use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;

use super::metrics::{derive_metrics, read_events, read_trajectory, TrajectorySample, TRAJECTORY_HEADER};
use super::{MetricsReport, PlannerConstants, ScenarioConfig, ScenarioError};
use crate::geometry::{normalize_angle, transform_cloud, Grid2D, Point3, PointCloud, PoseSE2, PoseSE3};
use crate::pipeline::{Pipeline, PipelineError, Scan, TierSnapshots};
use crate::planning::{
    generate_primitives, plan_geometric_with, reachable_subgoal, select_primitive_with, write_path, MotionPrimitive,
    PathSE2,
};
use crate::recovery::{
    escape_direction_with, monitor_tick, next_recovery, wall_follow_step_with, EventRecord, HealthEvent,
    MonitorState, Outcome, PlannerStatus, RecoveryAction, RecoveryConfig, RecoveryDecision, RecoveryError,
    RecoveryRecord, TickInputs, WallSide,
};
use crate::sim::{
    generate_terrain, perturb_pose, render_scan, rng_for, settle_on_terrain, step_dynamics, DriftState, FaultKind,
    RobotState, SensorSpec, TerrainField, STREAM_DRIFT, STREAM_SENSOR,
};
use crate::traversability::{inflate_flagged, soften_near_lethal, write_costmap, CellAssessment, CostmapMeta, HazardFlags, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Goal,
    Timeout,
    CriticalFailure,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Self::Goal => "goal",
            Self::Timeout => "timeout",
            Self::CriticalFailure => "critical_failure",
        }
    }

    /// Process exit status for the command-line runner.
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Goal => 0,
            Self::Timeout => 2,
            Self::CriticalFailure => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: MetricsReport,
    pub termination: Termination,
    pub artifact_dir: PathBuf,
}

struct Logs {
    events: BufWriter<File>,
    trajectory: BufWriter<File>,
}

impl Logs {
    fn create(dir: &Path) -> std::io::Result<Self> {
        let mut trajectory = BufWriter::new(File::create(dir.join("trajectory.log"))?);
        writeln!(trajectory, "{TRAJECTORY_HEADER}")?;
        Ok(Self { events: BufWriter::new(File::create(dir.join("events.log"))?), trajectory })
    }

    fn event(&mut self, stamp: f64, kind: &str, action: &str, outcome: &str) -> std::io::Result<()> {
        writeln!(self.events, "{}", EventRecord::new(stamp, kind, action, outcome))
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.events.flush()?;
        self.trajectory.flush()
    }
}

/// Runs `config` to the goal, a timeout or an exhausted recovery sequence,
/// writing `events.log`, `trajectory.log`, path and costmap dumps and
/// `metrics.json` under `out`. Logs are flushed even when the run errors.
pub fn run_scenario(config: &ScenarioConfig, out: &Path) -> Result<RunResult, ScenarioError> {
    config.validate()?;
    let clock = Instant::now();
    fs::create_dir_all(out)?;
    fs::write(out.join("scenario.json"), config.to_json())?;
    let mut logs = Logs::create(out)?;
    let outcome = Simulation::new(config, out)?.run(&mut logs);
    logs.flush()?;
    let termination = outcome?;
    let mut metrics = derive_metrics(&read_trajectory(out)?, &read_events(out)?)?;
    metrics.runtime = clock.elapsed().as_secs_f64();
    fs::write(out.join("metrics.json"), serde_json::to_string_pretty(&metrics).expect("metrics serialize"))?;
    Ok(RunResult { metrics, termination, artifact_dir: out.to_owned() })
}

/// Negative-obstacle standoff, then a soft cost ramp next to lethal cells.
fn prepare(grid: &Grid2D<CellAssessment>, pc: &PlannerConstants) -> Grid2D<CellAssessment> {
    let inflated = inflate_flagged(grid, HazardFlags::NEGATIVE_OBSTACLE, pc.negative_standoff);
    soften_near_lethal(&inflated, pc.proximity_radius, pc.proximity_cost)
}

/// Navigation state owned by the nominal planner.
#[derive(Default)]
struct Nav {
    snapshots: Option<TierSnapshots>,
    high: Option<Grid2D<CellAssessment>>,
    path: Option<PathSE2>,
}

impl Nav {
    fn update(&mut self, snapshots: TierSnapshots, pc: &PlannerConstants) {
        self.high = Some(prepare(&snapshots.high_backfilled(), pc));
        self.snapshots = Some(snapshots);
    }

    fn replan(&mut self, est: &PoseSE3, goal: &PoseSE2, pc: &PlannerConstants) -> PlannerStatus {
        let Some(snap) = &self.snapshots else { return PlannerStatus::NoPath };
        let grid = prepare(&snap.planning_grid(), pc);
        let start = est.to_se2();
        self.path = reachable_subgoal(&grid, &start, goal, &pc.grid)
            .and_then(|sub| plan_geometric_with(&grid, &start, &sub, &pc.grid).ok())
            .map(|coarse| self.refine(coarse, &start, pc));
        if self.path.is_some() {
            PlannerStatus::Ok
        } else {
            PlannerStatus::NoPath
        }
    }

    /// Replans the first `refine_distance` metres of a coarse path on the
    /// fine high tier, so the robot is not led along coarse cell centres
    /// through passages only a little wider than itself.
    fn refine(&self, coarse: PathSE2, start: &PoseSE2, pc: &PlannerConstants) -> PathSE2 {
        let (Some(snap), Some(high)) = (&self.snapshots, &self.high) else { return coarse };
        let wp = &coarse.waypoints;
        let Some(cut) = wp.iter().position(|w| w.distance(start) >= pc.refine_distance).or(wp.len().checked_sub(1))
        else {
            return coarse;
        };
        let ego = snap.ego_pose.to_se2();
        let local = |p: &PoseSE2| {
            let (x, y) = ego.inverse_transform_point(p.x, p.y);
            PoseSE2::new(x, y, 0.0)
        };
        let Ok(fine) = plan_geometric_with(high, &local(start), &local(&wp[cut]), &pc.grid) else { return coarse };
        let mut waypoints: Vec<PoseSE2> = fine
            .waypoints
            .iter()
            .map(|p| {
                let (x, y) = ego.transform_point(p.x, p.y);
                PoseSE2::new(x, y, 0.0)
            })
            .collect();
        waypoints.extend_from_slice(&wp[cut + 1..]);
        PathSE2 { waypoints, ..coarse }
    }

    /// World-frame reference: the next `lookahead` metres of the path, or a
    /// straight segment towards the goal without one.
    fn reference(&self, est: &PoseSE2, goal: &PoseSE2, lookahead: f64) -> Vec<(f64, f64)> {
        let Some(path) = self.path.as_ref().filter(|p| !p.waypoints.is_empty()) else {
            let d = est.distance(goal);
            let s = if d > lookahead { lookahead / d } else { 1.0 };
            return vec![(est.x, est.y), (est.x + s * (goal.x - est.x), est.y + s * (goal.y - est.y))];
        };
        let wp = &path.waypoints;
        let nearest = (0..wp.len())
            .min_by(|&a, &b| wp[a].distance(est).total_cmp(&wp[b].distance(est)))
            .expect("non-empty path");
        let mut out = vec![(wp[nearest].x, wp[nearest].y)];
        let mut length = 0.0;
        for pair in wp[nearest..].windows(2) {
            if length >= lookahead {
                break;
            }
            length += pair[0].distance(&pair[1]);
            out.push((pair[1].x, pair[1].y));
        }
        out
    }

    fn select(
        &self,
        est: &PoseSE3,
        goal: &PoseSE2,
        primitives: &[MotionPrimitive],
        pc: &PlannerConstants,
    ) -> Option<(f64, f64)> {
        let (snap, high) = (self.snapshots.as_ref()?, self.high.as_ref()?);
        let ego = snap.ego_pose.to_se2();
        let here = est.to_se2();
        let waypoints = self
            .reference(&here, goal, pc.lookahead)
            .into_iter()
            .map(|(x, y)| {
                let (lx, ly) = ego.inverse_transform_point(x, y);
                PoseSE2::new(lx, ly, 0.0)
            })
            .collect();
        let reference = PathSE2 { waypoints, total_cost: 0.0, cost_units: 0 };
        let robot = PoseSE3::from_se2(&ego.relative(&here));
        select_primitive_with(primitives, high, &reference, &robot, &pc.weights).ok().map(|p| p.command)
    }
}

enum Exec {
    Done(Outcome),
    Backtrack { targets: Vec<(f64, f64)>, next: usize, deadline: f64 },
    Escape { start: (f64, f64), turn_rate: f64, turn_until: f64, drive_until: f64 },
    WallFollow { start: (f64, f64), side: WallSide, switched: bool, until: f64, command: (f64, f64) },
}

struct ActiveRecovery {
    event: HealthEvent,
    action: RecoveryAction,
    exec: Exec,
}

enum Step {
    Command((f64, f64)),
    Finished(Outcome),
}

const BACKTRACK_SPEED: f64 = 0.5;
const ESCAPE_SPEED: f64 = 0.5;
const ESCAPE_TURN_RATE: f64 = 0.5;
const WAYPOINT_REACHED: f64 = 0.3;

fn displaced(start: (f64, f64), est: &PoseSE3) -> f64 {
    (est.x - start.0).hypot(est.y - start.1)
}

/// Points of the estimated history within `distance` behind the robot,
/// newest first, thinned to about 0.25 m spacing.
fn backtrack_targets(history: &[(f64, f64)], distance: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut travelled = 0.0;
    let mut last_kept = match history.last() {
        Some(&p) => p,
        None => return out,
    };
    for pair in history.windows(2).rev() {
        let (a, b) = (pair[1], pair[0]);
        travelled += (a.0 - b.0).hypot(a.1 - b.1);
        if (b.0 - last_kept.0).hypot(b.1 - last_kept.1) >= 0.25 || travelled >= distance {
            out.push(b);
            last_kept = b;
        }
        if travelled >= distance {
            break;
        }
    }
    out
}

impl ActiveRecovery {
    #[allow(clippy::too_many_arguments)]
    fn start(
        event: HealthEvent,
        action: RecoveryAction,
        t: f64,
        est: &PoseSE3,
        history: &[(f64, f64)],
        scan: &ScanView,
        config: &RecoveryConfig,
        max_yaw_rate: f64,
    ) -> Self {
        let here = (est.x, est.y);
        let exec = match action {
            RecoveryAction::ClearMap => Exec::Done(Outcome::Succeeded),
            RecoveryAction::Backtrack { distance } => {
                let targets = backtrack_targets(history, distance);
                if targets.is_empty() || displaced(*targets.last().expect("non-empty"), est) < WAYPOINT_REACHED {
                    Exec::Done(Outcome::Failed)
                } else {
                    Exec::Backtrack { targets, next: 0, deadline: t + 2.0 * distance / BACKTRACK_SPEED + 2.0 }
                }
            }
            RecoveryAction::OpenLoopEscape { duration } => {
                let sensor = PoseSE3::new(scan.origin.x, scan.origin.y, scan.origin.z, 0.0, 0.0, 0.0);
                match escape_direction_with(&scan.cloud, &sensor, config) {
                    Ok(heading) => {
                        let rate = ESCAPE_TURN_RATE.min(max_yaw_rate).copysign(heading);
                        let turn_until = t + heading.abs() / rate.abs();
                        Exec::Escape { start: here, turn_rate: rate, turn_until, drive_until: turn_until + duration }
                    }
                    Err(_) => Exec::Done(Outcome::Failed),
                }
            }
            RecoveryAction::WallFollow { side } => {
                let mut exec = Exec::WallFollow {
                    start: here,
                    side,
                    switched: false,
                    until: t + config.wall_duration,
                    command: (0.0, 0.0),
                };
                exec.follow(&scan.cloud, config);
                exec
            }
        };
        Self { event, action, exec }
    }
}

impl Exec {
    /// Refreshes the wall-following command from a new scan.
    fn follow(&mut self, scan: &PointCloud, config: &RecoveryConfig) {
        let Exec::WallFollow { side, switched, command, .. } = self else { return };
        loop {
            match wall_follow_step_with(scan, *side, config.wall_standoff, config) {
                Ok(c) => {
                    *command = c;
                    return;
                }
                Err(RecoveryError::NoWall(_)) if !*switched => {
                    *side = side.other();
                    *switched = true;
                }
                Err(_) => {
                    *self = Exec::Done(Outcome::Failed);
                    return;
                }
            }
        }
    }

    fn step(
        &mut self,
        t: f64,
        est: &PoseSE3,
        fresh_scan: Option<&PointCloud>,
        config: &RecoveryConfig,
        max_speed: f64,
        max_yaw_rate: f64,
    ) -> Step {
        match self {
            Exec::Done(outcome) => Step::Finished(*outcome),
            Exec::Backtrack { targets, next, deadline } => {
                while *next < targets.len() && displaced(targets[*next], est) < WAYPOINT_REACHED {
                    *next += 1;
                }
                if *next == targets.len() {
                    return Step::Finished(Outcome::Succeeded);
                }
                if t >= *deadline {
                    return Step::Finished(Outcome::Failed);
                }
                let (tx, ty) = targets[*next];
                let error = normalize_angle((ty - est.y).atan2(tx - est.x) - (est.yaw + std::f64::consts::PI));
                Step::Command((-BACKTRACK_SPEED.min(max_speed), (1.5 * error).clamp(-max_yaw_rate, max_yaw_rate)))
            }
            Exec::Escape { start, turn_rate, turn_until, drive_until } => {
                if t < *turn_until {
                    Step::Command((0.0, *turn_rate))
                } else if t < *drive_until {
                    Step::Command((ESCAPE_SPEED.min(max_speed), 0.0))
                } else if displaced(*start, est) >= 0.1 {
                    Step::Finished(Outcome::Succeeded)
                } else {
                    Step::Finished(Outcome::Failed)
                }
            }
            Exec::WallFollow { .. } => {
                if let Some(scan) = fresh_scan {
                    self.follow(scan, config);
                }
                match self {
                    Exec::Done(outcome) => Step::Finished(*outcome),
                    Exec::WallFollow { start, until, command, .. } => {
                        if t >= *until {
                            if displaced(*start, est) >= 0.5 {
                                Step::Finished(Outcome::Succeeded)
                            } else {
                                Step::Finished(Outcome::Failed)
                            }
                        } else {
                            Step::Command(*command)
                        }
                    }
                    _ => unreachable!("wall following only ends in Done"),
                }
            }
        }
    }
}

/// An ego-frame scan with its sensor origin.
struct ScanView {
    cloud: PointCloud,
    origin: Point3,
}

struct Simulation<'a> {
    config: &'a ScenarioConfig,
    out: &'a Path,
    model: crate::traversability::RobotModel,
    terrain: TerrainField,
    pipeline: Pipeline,
    primitives: Vec<MotionPrimitive>,
    sensor_rng: ChaCha8Rng,
    drift_rng: ChaCha8Rng,
}

/// Gravity-levelled scan in the ego frame of the true robot pose.
fn ego_scan(
    terrain: &TerrainField,
    pose: &PoseSE3,
    sensor: &SensorSpec,
    rng: &mut ChaCha8Rng,
    stamp: f64,
    blackout: bool,
) -> ScanView {
    let sensor_pose = pose.compose(&sensor.mount_pose);
    let to_ego = pose.leveled().inverse();
    let origin = to_ego.transform_point(&Point3::new(sensor_pose.x, sensor_pose.y, sensor_pose.z));
    let cloud = if blackout {
        PointCloud::empty("ego", stamp)
    } else {
        transform_cloud(&render_scan(terrain, &sensor_pose, sensor, rng, stamp), &to_ego, "ego")
    };
    ScanView { cloud, origin }
}

impl<'a> Simulation<'a> {
    fn new(config: &'a ScenarioConfig, out: &'a Path) -> Result<Self, ScenarioError> {
        let model = config.robot_model()?;
        let terrain = generate_terrain(&config.terrain, config.seed)?;
        let pc = &config.planner;
        Ok(Self {
            pipeline: Pipeline::new(config.pipeline_config(&model), model.clone()),
            primitives: generate_primitives(&model, pc.primitive_count, pc.primitive_horizon, pc.primitive_spacing),
            sensor_rng: rng_for(config.seed, STREAM_SENSOR),
            drift_rng: rng_for(config.seed, STREAM_DRIFT),
            config,
            out,
            model,
            terrain,
        })
    }

    fn dump(&self, tick: u64, snap: &TierSnapshots) -> Result<(), ScenarioError> {
        let dir = self.out.join("costmaps");
        for (tier, frame) in [(Tier::High, "ego"), (Tier::Mid, "map"), (Tier::Low, "map")] {
            let meta = CostmapMeta {
                tier: tier.label().to_owned(),
                frame: frame.to_owned(),
                stamp: snap.stamp,
                shape: *snap.grid(tier).shape(),
            };
            write_costmap(&dir, &format!("{tick:06}_{}", tier.label()), snap.grid(tier), &meta)
                .map_err(|e| ScenarioError::Io(std::io::Error::other(e.to_string())))?;
        }
        Ok(())
    }

    fn run(mut self, logs: &mut Logs) -> Result<Termination, ScenarioError> {
        let config = self.config;
        let pc = config.planner;
        let goal = config.goal;
        let start = config.start;
        let pose0 = match settle_on_terrain(&self.terrain, &start, &self.model) {
            Some(c) => PoseSE3::new(start.x, start.y, c.z, c.roll, c.pitch, start.yaw),
            None => PoseSE3::from_se2(&start),
        };
        let mut state = RobotState::at_rest(pose0);
        let scan_every = ((pc.scan_period / pc.dt).round() as u64).max(1);
        let max_ticks = (config.max_duration / pc.dt).ceil() as u64;
        let mut drift = DriftState::new();
        let mut monitor = MonitorState::new();
        let mut records: Vec<RecoveryRecord> = Vec::new();
        let mut est_history: Vec<(f64, f64)> = Vec::new();
        let mut nav = Nav::default();
        let mut active: Option<ActiveRecovery> = None;
        let mut immobile_until = f64::NEG_INFINITY;
        let mut blackout_until = f64::NEG_INFINITY;
        let mut in_hazard = self.terrain.is_hazard(start.x, start.y);
        let mut in_collision = false;
        std::fs::create_dir_all(self.out.join("paths"))?;

        for k in 0..=max_ticks {
            // Rounded to the nanosecond so logged stamps print short.
            let t = (k as f64 * pc.dt * 1e9).round() / 1e9;
            let mut odometry_fault = false;
            for fault in drift.due_faults(&config.drift, t) {
                match fault.kind {
                    FaultKind::OdometryConfidenceLoss | FaultKind::PoseJump { .. } => odometry_fault = true,
                    FaultKind::Immobilize { duration } => immobile_until = t + duration,
                    FaultKind::SensorBlackout { duration } => blackout_until = t + duration,
                }
            }
            let step = if k == 0 { 0.0 } else { pc.dt };
            let est = perturb_pose(&state.pose, &config.drift, &mut drift, step, &mut self.drift_rng);
            est_history.push((est.x, est.y));
            let mut sample = TrajectorySample {
                t,
                x: state.pose.x,
                y: state.pose.y,
                z: state.pose.z,
                yaw: state.pose.yaw,
                est_x: est.x,
                est_y: est.y,
                est_yaw: est.yaw,
                v: 0.0,
                w: 0.0,
            };
            let mode = active.as_ref().map_or("nominal", |a| a.action.name());

            if est.to_se2().distance(&goal) <= pc.goal_tolerance || k == max_ticks {
                let end = if k == max_ticks && est.to_se2().distance(&goal) > pc.goal_tolerance {
                    Termination::Timeout
                } else {
                    Termination::Goal
                };
                writeln!(logs.trajectory, "{}", sample.to_line(mode))?;
                logs.event(t, "RunEnd", end.label(), "-")?;
                return Ok(end);
            }

            // Sense.
            let scan_due = k % scan_every == 0;
            let mut scan_points = None;
            let mut fresh: Option<ScanView> = None;
            if scan_due {
                let view = ego_scan(
                    &self.terrain,
                    &state.pose,
                    &config.sensor,
                    &mut self.sensor_rng,
                    t,
                    t < blackout_until,
                );
                scan_points = Some(view.cloud.len());
                let scan = Scan { cloud: view.cloud.clone(), sensor_origin: view.origin };
                match self.pipeline.ingest_scan(&scan, &est) {
                    Ok(snap) => {
                        if config.dump_costmaps > 0 && k % config.dump_costmaps as u64 == 0 {
                            self.dump(k, &snap)?;
                        }
                        nav.update(snap, &pc);
                    }
                    Err(PipelineError::EmptyScan) => {}
                    Err(e) => log::warn!("t={t}: scan rejected: {e}"),
                }
                fresh = Some(view);
            }

            // Decide.
            let mut planner = None;
            let mut command = (0.0, 0.0);
            if let Some(rec) = active.as_mut() {
                match rec.exec.step(
                    t,
                    &est,
                    fresh.as_ref().map(|v| &v.cloud),
                    &config.recovery,
                    self.model.max_speed,
                    self.model.max_yaw_rate,
                ) {
                    Step::Command(c) => command = c,
                    Step::Finished(outcome) => {
                        let rec = active.take().expect("active recovery");
                        let label = match outcome {
                            Outcome::Succeeded => "succeeded",
                            Outcome::Failed => "failed",
                        };
                        logs.event(t, rec.event.kind.name(), rec.action.name(), label)?;
                        records.push(RecoveryRecord { event: rec.event, action: rec.action, outcome, finished: t });
                        monitor.reset_motion();
                        nav.path = None;
                    }
                }
            } else {
                let mut status = PlannerStatus::Ok;
                if scan_due && nav.snapshots.is_some() {
                    status = nav.replan(&est, &goal, &pc);
                    if let Some(path) = &nav.path {
                        let file = File::create(self.out.join("paths").join(format!("{k:06}.path")))?;
                        write_path(path, t, BufWriter::new(file))?;
                    }
                }
                match nav.select(&est, &goal, &self.primitives, &pc) {
                    Some(c) => command = c,
                    None if status == PlannerStatus::Ok => status = PlannerStatus::AllBlocked,
                    None => {}
                }
                if scan_due {
                    planner = Some(status);
                }
            }

            // Monitor and escalate.
            let events = monitor_tick(
                &TickInputs {
                    stamp: t,
                    planner,
                    commanded_speed: command.0,
                    pose: est,
                    odometry_fault,
                    scan_points,
                },
                &mut monitor,
                &config.monitor,
            );
            for e in &events {
                logs.event(t, e.kind.name(), "-", "detected")?;
            }
            if let (None, Some(event)) = (&active, events.into_iter().next()) {
                match next_recovery(&records, &event, &config.recovery) {
                    RecoveryDecision::Act(action) => {
                        logs.event(t, event.kind.name(), action.name(), "started")?;
                        if action == RecoveryAction::ClearMap {
                            self.pipeline.clear();
                            nav.snapshots = self.pipeline.snapshots().cloned();
                            nav.path = None;
                        }
                        let needs_scan = matches!(
                            action,
                            RecoveryAction::OpenLoopEscape { .. } | RecoveryAction::WallFollow { .. }
                        );
                        let view = match fresh.take() {
                            Some(v) if needs_scan => v,
                            _ if needs_scan => ego_scan(
                                &self.terrain,
                                &state.pose,
                                &config.sensor,
                                &mut self.sensor_rng,
                                t,
                                t < blackout_until,
                            ),
                            _ => ScanView { cloud: PointCloud::empty("ego", t), origin: Point3::new(0.0, 0.0, 0.0) },
                        };
                        active = Some(ActiveRecovery::start(
                            event,
                            action,
                            t,
                            &est,
                            &est_history,
                            &view,
                            &config.recovery,
                            self.model.max_yaw_rate,
                        ));
                        command = (0.0, 0.0);
                    }
                    RecoveryDecision::Exhausted => {
                        writeln!(logs.trajectory, "{}", sample.to_line(mode))?;
                        logs.event(t, event.kind.name(), "Exhausted", "critical")?;
                        logs.event(t, "RunEnd", Termination::CriticalFailure.label(), "-")?;
                        return Ok(Termination::CriticalFailure);
                    }
                }
            }

            // Act.
            sample.v = command.0;
            sample.w = command.1;
            writeln!(logs.trajectory, "{}", sample.to_line(mode))?;
            if t < immobile_until {
                state.v = 0.0;
                state.w = 0.0;
            } else {
                let outcome = step_dynamics(&state, command, pc.dt, &self.terrain, &self.model)?;
                match outcome.collision {
                    Some(c) => {
                        if !in_collision {
                            log::info!("t={t}: collision ({}) at {:.2}, {:.2}", c.reason, c.x, c.y);
                            logs.event(t, "Collision", "-", "frozen")?;
                        }
                        in_collision = true;
                    }
                    None => in_collision = false,
                }
                state = outcome.state;
            }
            let hazard = self.terrain.is_hazard(state.pose.x, state.pose.y);
            if hazard && !in_hazard {
                logs.event(t, "HazardEntry", "-", "-")?;
            }
            in_hazard = hazard;
        }
        unreachable!("the final tick always terminates the run")
    }
}
