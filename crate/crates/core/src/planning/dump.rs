use std::io::{BufRead, Write};

use super::{PathSE2, PlanningError};
use crate::geometry::PoseSE2;

/// Writes one `x y yaw` line per waypoint after a header naming the costmap stamp.
pub fn write_path<W: Write>(path: &PathSE2, costmap_stamp: f64, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# costmap_stamp {costmap_stamp}")?;
    writeln!(out, "# total_cost {}", path.total_cost)?;
    for w in &path.waypoints {
        writeln!(out, "{} {} {}", w.x, w.y, w.yaw)?;
    }
    Ok(())
}

/// Reads waypoints and the costmap stamp back.
pub fn read_path<R: BufRead>(input: R) -> Result<(Vec<PoseSE2>, f64), PlanningError> {
    let mut stamp = None;
    let mut waypoints = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| PlanningError::Format(e.to_string()))?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# costmap_stamp") {
            stamp = rest.trim().parse().ok();
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| PlanningError::Format(format!("line {}", n + 1)))?;
        match vals[..] {
            [x, y, yaw] => waypoints.push(PoseSE2::new(x, y, yaw)),
            _ => return Err(PlanningError::Format(format!("line {}: expected 3 fields", n + 1))),
        }
    }
    let stamp = stamp.ok_or_else(|| PlanningError::Format("missing costmap_stamp header".into()))?;
    Ok((waypoints, stamp))
}
