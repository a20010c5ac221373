use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::recovery::EventRecord;

/// Field-statistics row labels and units, in the order the report lists them.
pub const FIELD_STAT_ROWS: [(&str, &str); 4] = [
    ("Distance traveled", "km"),
    ("Avg. speed during traverse", "m/s"),
    ("Autonomous recoveries / km", "1/km"),
    ("Critical failures / km", "1/km"),
];

/// Run summary. The four field-statistics rows serialize under their row
/// labels; per-km rates are `null` when the robot never moved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "Distance traveled")]
    pub distance_traveled: f64,
    #[serde(rename = "Avg. speed during traverse")]
    pub avg_speed: f64,
    #[serde(rename = "Autonomous recoveries / km")]
    pub autonomous_recoveries_per_km: Option<f64>,
    #[serde(rename = "Critical failures / km")]
    pub critical_failures_per_km: Option<f64>,
    pub goal_reached: bool,
    pub collisions: u64,
    pub hazard_entries: u64,
    pub recoveries: u64,
    pub critical_failures: u64,
    pub termination: String,
    /// Simulated seconds.
    pub duration: f64,
    /// Wall-clock seconds; the only field replay cannot reproduce.
    pub runtime: f64,
}

impl MetricsReport {
    /// The report with the wall-clock field zeroed, for bit-exact comparison.
    pub fn without_runtime(&self) -> Self {
        Self { runtime: 0.0, ..self.clone() }
    }

    pub fn field_stats(&self) -> Vec<(&'static str, String)> {
        let rate = |r: Option<f64>| r.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.3}"));
        vec![
            (FIELD_STAT_ROWS[0].0, format!("{:.4} km", self.distance_traveled)),
            (FIELD_STAT_ROWS[1].0, format!("{:.3} m/s", self.avg_speed)),
            (FIELD_STAT_ROWS[2].0, rate(self.autonomous_recoveries_per_km)),
            (FIELD_STAT_ROWS[3].0, rate(self.critical_failures_per_km)),
        ]
    }
}

/// One line of `trajectory.log`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_yaw: f64,
    pub v: f64,
    pub w: f64,
}

impl TrajectorySample {
    pub(crate) fn to_line(self, mode: &str) -> String {
        format!(
            "{} {} {} {} {} {} {} {} {} {} {}",
            self.t, self.x, self.y, self.z, self.yaw, self.est_x, self.est_y, self.est_yaw, self.v, self.w, mode
        )
    }
}

pub(crate) const TRAJECTORY_HEADER: &str = "# t x y z yaw est_x est_y est_yaw v w mode";

fn corrupt(what: impl Into<String>) -> ScenarioError {
    ScenarioError::CorruptArtifact(what.into())
}

/// Samples and control modes from a trajectory log.
pub fn read_trajectory(dir: &Path) -> Result<Vec<(TrajectorySample, String)>, ScenarioError> {
    let text = fs::read_to_string(dir.join("trajectory.log")).map_err(|e| corrupt(format!("trajectory.log: {e}")))?;
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 11 {
                return Err(corrupt(format!("trajectory line `{line}`")));
            }
            let n: Vec<f64> = f[..10]
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| corrupt(format!("trajectory line `{line}`")))?;
            let s = TrajectorySample {
                t: n[0],
                x: n[1],
                y: n[2],
                z: n[3],
                yaw: n[4],
                est_x: n[5],
                est_y: n[6],
                est_yaw: n[7],
                v: n[8],
                w: n[9],
            };
            Ok((s, f[10].to_owned()))
        })
        .collect()
}

/// Records of an event log that ends with its `RunEnd` line.
pub fn read_events(dir: &Path) -> Result<Vec<EventRecord>, ScenarioError> {
    let text = fs::read_to_string(dir.join("events.log")).map_err(|e| corrupt(format!("events.log: {e}")))?;
    if !text.ends_with('\n') {
        return Err(corrupt("events.log does not end with a complete line"));
    }
    let records: Vec<EventRecord> = text
        .lines()
        .map(|l| l.parse().map_err(|e| corrupt(format!("{e}"))))
        .collect::<Result<_, _>>()?;
    match records.last() {
        Some(r) if r.kind == "RunEnd" => Ok(records),
        _ => Err(corrupt("events.log has no RunEnd line")),
    }
}

/// Metrics from the two logs alone; `runtime` is left at zero.
pub(crate) fn derive_metrics(
    trajectory: &[(TrajectorySample, String)],
    events: &[EventRecord],
) -> Result<MetricsReport, ScenarioError> {
    let end = events.last().ok_or_else(|| corrupt("empty event log"))?;
    let last = trajectory.last().ok_or_else(|| corrupt("empty trajectory"))?;
    if last.0.t != end.stamp {
        return Err(corrupt(format!("trajectory ends at {} but the run ended at {}", last.0.t, end.stamp)));
    }
    let meters: f64 = trajectory.windows(2).map(|w| (w[1].0.x - w[0].0.x).hypot(w[1].0.y - w[0].0.y)).sum();
    let km = meters / 1000.0;
    let duration = last.0.t - trajectory[0].0.t;
    let count = |pred: &dyn Fn(&EventRecord) -> bool| events.iter().filter(|e| pred(e)).count() as u64;
    let recoveries = count(&|e| e.outcome == "succeeded" || e.outcome == "failed");
    let critical_failures = count(&|e| e.action == "Exhausted");
    let per_km = |n: u64| (km > 0.0).then(|| n as f64 / km);
    Ok(MetricsReport {
        distance_traveled: km,
        avg_speed: if duration > 0.0 { meters / duration } else { 0.0 },
        autonomous_recoveries_per_km: per_km(recoveries),
        critical_failures_per_km: per_km(critical_failures),
        goal_reached: end.action == "goal",
        collisions: count(&|e| e.kind == "Collision"),
        hazard_entries: count(&|e| e.kind == "HazardEntry"),
        recoveries,
        critical_failures,
        termination: end.action.clone(),
        duration,
        runtime: 0.0,
    })
}

/// Re-derives the metrics of a finished run from its logs.
pub fn replay(dir: &Path) -> Result<MetricsReport, ScenarioError> {
    let events = read_events(dir)?;
    let trajectory = read_trajectory(dir)?;
    derive_metrics(&trajectory, &events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, x: f64) -> (TrajectorySample, String) {
        let s = TrajectorySample { t, x, y: 0.0, z: 0.0, yaw: 0.0, est_x: x, est_y: 0.0, est_yaw: 0.0, v: 1.0, w: 0.0 };
        (s, "nominal".into())
    }

    #[test]
    fn rates_are_per_kilometre() {
        let traj: Vec<_> = (0..=100).map(|k| sample(k as f64, 5.0 * k as f64)).collect();
        let events = vec![
            EventRecord::new(10.0, "StuckDetected", "ClearMap", "succeeded"),
            EventRecord::new(20.0, "StuckDetected", "Backtrack", "failed"),
            EventRecord::new(30.0, "Collision", "-", "frozen"),
            EventRecord::new(100.0, "RunEnd", "goal", "-"),
        ];
        let m = derive_metrics(&traj, &events).unwrap();
        assert!((m.distance_traveled - 0.5).abs() < 1e-12);
        assert!((m.avg_speed - 5.0).abs() < 1e-12);
        assert_eq!(m.autonomous_recoveries_per_km, Some(4.0));
        assert_eq!(m.critical_failures_per_km, Some(0.0));
        assert_eq!(m.collisions, 1);
        assert!(m.goal_reached);
    }

    #[test]
    fn standing_still_has_no_rates() {
        let traj = vec![sample(0.0, 0.0), sample(1.0, 0.0)];
        let events = vec![EventRecord::new(1.0, "RunEnd", "timeout", "-")];
        let m = derive_metrics(&traj, &events).unwrap();
        assert_eq!(m.autonomous_recoveries_per_km, None);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"Critical failures / km\":null"));
    }

    #[test]
    fn mismatched_end_is_corrupt() {
        let traj = vec![sample(0.0, 0.0), sample(1.0, 0.0)];
        let events = vec![EventRecord::new(2.0, "RunEnd", "timeout", "-")];
        assert!(matches!(derive_metrics(&traj, &events), Err(ScenarioError::CorruptArtifact(_))));
    }
}
