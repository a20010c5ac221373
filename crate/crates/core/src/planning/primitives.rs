use serde::{Deserialize, Serialize};

use super::{PathSE2, PlanningError};
use crate::geometry::{Grid2D, PoseSE2, PoseSE3};
use crate::traversability::{CellAssessment, CellCost, RobotModel};

/// A constant-curvature arc sampled from the origin pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub id: u32,
    /// `(linear m/s, angular rad/s)`.
    pub command: (f64, f64),
    pub duration: f64,
    pub samples: Vec<PoseSE2>,
}

impl MotionPrimitive {
    pub fn is_stop(&self) -> bool {
        self.command.0 == 0.0
    }

    pub fn endpoint(&self) -> PoseSE2 {
        *self.samples.last().expect("primitives have samples")
    }
}

/// Closed-form unicycle pose after `t` seconds at constant `(v, w)`.
pub(crate) fn unicycle(v: f64, w: f64, t: f64) -> PoseSE2 {
    if w.abs() < 1e-12 {
        PoseSE2::new(v * t, 0.0, 0.0)
    } else {
        let a = w * t;
        PoseSE2::new(v / w * a.sin(), v / w * (1.0 - a.cos()), a)
    }
}

/// `count` arcs at `model.max_speed` with turn rates evenly spanning
/// `±model.max_yaw_rate`, plus the straight arc when `count` is even and a
/// stop primitive last. Samples are at most `max_spacing` apart.
pub fn generate_primitives(
    model: &RobotModel,
    count: usize,
    horizon: f64,
    max_spacing: f64,
) -> Vec<MotionPrimitive> {
    let count = count.max(3);
    let v = model.max_speed;
    let wmax = model.max_yaw_rate;
    let mut rates: Vec<f64> = (0..count)
        .map(|k| -wmax + 2.0 * wmax * k as f64 / (count - 1) as f64)
        .collect();
    if count.is_multiple_of(2) {
        rates.push(0.0);
        rates.sort_by(f64::total_cmp);
    }
    if count % 2 == 1 {
        // Exact zero for the middle rate, free of rounding residue.
        rates[count / 2] = 0.0;
    }
    let steps = ((v * horizon / max_spacing).ceil() as usize).max(1);
    let mut out: Vec<MotionPrimitive> = rates
        .iter()
        .enumerate()
        .map(|(id, &w)| MotionPrimitive {
            id: id as u32,
            command: (v, w),
            duration: horizon,
            samples: (0..=steps).map(|k| unicycle(v, w, horizon * k as f64 / steps as f64)).collect(),
        })
        .collect();
    out.push(MotionPrimitive {
        id: out.len() as u32,
        command: (0.0, 0.0),
        duration: horizon,
        samples: vec![PoseSE2::default()],
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionWeights {
    /// Weight of accumulated cell cost.
    pub alpha: f64,
    /// Weight of endpoint distance to the reference path.
    pub beta: f64,
}

impl Default for SelectionWeights {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 2.0 }
    }
}

fn distance_to_polyline(x: f64, y: f64, path: &[PoseSE2]) -> f64 {
    match path {
        [] => 0.0,
        [only] => (x - only.x).hypot(y - only.y),
        _ => path
            .windows(2)
            .map(|s| {
                let (ax, ay, bx, by) = (s[0].x, s[0].y, s[1].x, s[1].y);
                let (dx, dy) = (bx - ax, by - ay);
                let len2 = dx * dx + dy * dy;
                let t = if len2 > 0.0 { (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
                (x - ax - t * dx).hypot(y - ay - t * dy)
            })
            .fold(f64::INFINITY, f64::min),
    }
}

/// Score of one primitive, or `None` when any sample lands on a LETHAL cell,
/// an UNKNOWN cell (other than the current one) or outside the grid.
///
/// Cell cost is accumulated along the arc: each sample's cost is weighted by
/// the distance travelled since the previous sample, so scores do not depend
/// on the sampling density.
pub fn score_primitive(
    primitive: &MotionPrimitive,
    high_tier: &Grid2D<CellAssessment>,
    reference_path: &PathSE2,
    robot_pose: &PoseSE3,
    weights: &SelectionWeights,
) -> Option<f64> {
    let base = robot_pose.to_se2();
    let mut accumulated = 0.0;
    let mut prev: Option<&PoseSE2> = None;
    for (k, s) in primitive.samples.iter().enumerate() {
        let (x, y) = base.transform_point(s.x, s.y);
        let step = prev.map_or(0.0, |p| p.distance(s));
        prev = Some(s);
        match high_tier.at_world(x, y)?.cost {
            CellCost::Cost(c) => accumulated += c * step,
            CellCost::Unknown if k == 0 => {}
            _ => return None,
        }
    }
    let end = primitive.endpoint();
    let (ex, ey) = base.transform_point(end.x, end.y);
    Some(weights.alpha * accumulated + weights.beta * distance_to_polyline(ex, ey, &reference_path.waypoints))
}

pub fn select_primitive<'a>(
    primitives: &'a [MotionPrimitive],
    high_tier: &Grid2D<CellAssessment>,
    reference_path: &PathSE2,
    robot_pose: &PoseSE3,
) -> Result<&'a MotionPrimitive, PlanningError> {
    select_primitive_with(primitives, high_tier, reference_path, robot_pose, &SelectionWeights::default())
}

/// Cheapest moving primitive; `high_tier`, `reference_path` and `robot_pose`
/// must share one frame. Ties go to the lower id.
pub fn select_primitive_with<'a>(
    primitives: &'a [MotionPrimitive],
    high_tier: &Grid2D<CellAssessment>,
    reference_path: &PathSE2,
    robot_pose: &PoseSE3,
    weights: &SelectionWeights,
) -> Result<&'a MotionPrimitive, PlanningError> {
    primitives
        .iter()
        .filter(|p| !p.is_stop())
        .filter_map(|p| score_primitive(p, high_tier, reference_path, robot_pose, weights).map(|s| (s, p)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)))
        .map(|(_, p)| p)
        .ok_or(PlanningError::AllBlocked)
}
