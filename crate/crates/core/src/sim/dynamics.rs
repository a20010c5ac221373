use serde::{Deserialize, Serialize};

use super::{SimError, TerrainField};
use crate::geometry::{FootprintRect, GridIndex, Point3, PoseSE2, PoseSE3};
use crate::settling::{settle_footprint, SettleMode};
use crate::traversability::RobotModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: PoseSE3,
    pub v: f64,
    pub w: f64,
}

impl RobotState {
    pub fn at_rest(pose: PoseSE3) -> Self {
        Self { pose, v: 0.0, w: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub x: f64,
    pub y: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: RobotState,
    pub collision: Option<CollisionEvent>,
}

/// Terrain contact of a footprint placed at `(x, y, yaw)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    /// Highest hazard-column top above the settled plane inside the
    /// footprint; `-inf` when the footprint holds no hazard column.
    pub max_protrusion: f64,
}

/// Heightfield cell centres under the footprint, skipping void cells.
fn footprint_columns(terrain: &TerrainField, rect: &FootprintRect) -> Vec<Point3> {
    let shape = terrain.shape();
    let (ax, ay, bx, by) = rect.aabb();
    let res = shape.resolution;
    let clamp_ix = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n.saturating_sub(1));
    let (i0, i1) = (clamp_ix((ax - shape.origin_x) / res, shape.width), clamp_ix((bx - shape.origin_x) / res, shape.width));
    let (j0, j1) = (clamp_ix((ay - shape.origin_y) / res, shape.height), clamp_ix((by - shape.origin_y) / res, shape.height));
    let mut out = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let idx = GridIndex::new(i, j);
            let (x, y) = shape.grid_to_world(idx);
            let z = terrain.height_of(idx);
            if z.is_finite() && rect.contains(x, y) {
                out.push(Point3::new(x, y, z));
            }
        }
    }
    out
}

/// Settles the footprint on the true heightfield. `None` when fewer than
/// three supporting columns exist.
///
/// The body rests on ordinary ground columns; ramps and roughness are taken
/// up by the suspension. Only hazard-feature columns (rocks, walls, drops)
/// count towards the protrusion, and drops sit below the plane by design.
pub fn settle_on_terrain(terrain: &TerrainField, pose: &PoseSE2, model: &RobotModel) -> Option<Contact> {
    let rect = FootprintRect::new(pose, model.footprint_length, model.footprint_width);
    let (hazard, ground): (Vec<_>, Vec<_>) =
        footprint_columns(terrain, &rect).into_iter().partition(|c| terrain.is_hazard(c.x, c.y));
    let support = if ground.len() >= 3 { &ground } else { &hazard };
    let settled = settle_footprint(pose, support, 3, SettleMode::PlaneFit);
    if !settled.is_settled() {
        return None;
    }
    let n = settled.normal;
    let (px, py, pz) = (settled.pose.x, settled.pose.y, settled.pose.z);
    let plane_z = |x: f64, y: f64| pz - (n.x * (x - px) + n.y * (y - py)) / n.z;
    let max_protrusion = hazard.iter().map(|c| c.z - plane_z(c.x, c.y)).fold(f64::NEG_INFINITY, f64::max);
    Some(Contact { z: pz, roll: settled.pose.roll, pitch: settled.pose.pitch, max_protrusion })
}

fn overhang_collides(terrain: &TerrainField, rect: &FootprintRect, z: f64, model: &RobotModel) -> bool {
    let (ax, ay, bx, by) = rect.aabb();
    terrain.overhangs.iter().any(|b| {
        b.min[0] < bx
            && b.max[0] > ax
            && b.min[1] < by
            && b.max[1] > ay
            && b.min[2] < z + model.body_height
            && b.max[2] > z + model.ground_clearance
    })
}

/// Advances the unicycle by `dt`, slaving z, roll and pitch to the terrain.
/// Moving into geometry that protrudes above the ground clearance freezes the
/// robot and reports a collision.
pub fn step_dynamics(
    state: &RobotState,
    command: (f64, f64),
    dt: f64,
    terrain: &TerrainField,
    model: &RobotModel,
) -> Result<StepOutcome, SimError> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(SimError::InvalidStep(dt));
    }
    let v = command.0.clamp(-model.max_speed, model.max_speed);
    let w = command.1.clamp(-model.max_yaw_rate, model.max_yaw_rate);
    let p = state.pose;
    let (x, y, yaw) = if w.abs() < 1e-12 {
        (p.x + v * dt * p.yaw.cos(), p.y + v * dt * p.yaw.sin(), p.yaw)
    } else {
        let yaw1 = p.yaw + w * dt;
        (p.x + v / w * (yaw1.sin() - p.yaw.sin()), p.y - v / w * (yaw1.cos() - p.yaw.cos()), yaw1)
    };
    let next = PoseSE2::new(x, y, yaw);
    let frozen = |reason: &str| StepOutcome {
        state: RobotState { pose: p, v: 0.0, w: 0.0 },
        collision: Some(CollisionEvent { x, y, reason: reason.to_owned() }),
    };
    let rect = FootprintRect::new(&next, model.footprint_length, model.footprint_width);
    let moved = v != 0.0 || w != 0.0;
    let pose = match settle_on_terrain(terrain, &next, model) {
        Some(c) => {
            if moved && c.max_protrusion > model.ground_clearance {
                return Ok(frozen("terrain above clearance"));
            }
            if moved && overhang_collides(terrain, &rect, c.z, model) {
                return Ok(frozen("overhang"));
            }
            PoseSE3::new(x, y, c.z, c.roll, c.pitch, next.yaw)
        }
        // No support: the robot has left the ground; keep the last attitude.
        None => PoseSE3::new(x, y, p.z, p.roll, p.pitch, next.yaw),
    };
    Ok(StepOutcome { state: RobotState { pose, v, w }, collision: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_terrain, Feature, TerrainSpec};
    use std::f64::consts::PI;

    fn model() -> RobotModel {
        RobotModel::husky()
    }

    fn flat() -> TerrainField {
        generate_terrain(&TerrainSpec::flat(-10.0, -10.0, 20.0, 20.0, 0.05), 1).unwrap()
    }

    #[test]
    fn straight_step_advances() {
        let out = step_dynamics(&RobotState::at_rest(PoseSE3::identity()), (1.0, 0.0), 0.1, &flat(), &model()).unwrap();
        assert!((out.state.pose.x - 0.1).abs() < 1e-12);
        assert!(out.collision.is_none());
        assert!(step_dynamics(&out.state, (1.0, 0.0), 0.2, &flat(), &model()).is_err());
    }

    #[test]
    fn half_circle_matches_closed_form() {
        let terrain = flat();
        let mut s = RobotState::at_rest(PoseSE3::identity());
        let steps = (PI / 0.05).round() as usize;
        let dt = PI / steps as f64;
        for _ in 0..steps {
            s = step_dynamics(&s, (1.0, 1.0), dt, &terrain, &model()).unwrap().state;
        }
        assert!(s.pose.x.abs() < 1e-6 && (s.pose.y - 2.0).abs() < 1e-6);
    }

    #[test]
    fn driving_into_wall_freezes() {
        let mut spec = TerrainSpec::flat(-10.0, -10.0, 20.0, 20.0, 0.05);
        spec.features.push(Feature::Wall { x0: 1.0, y0: -3.0, x1: 1.0, y1: 3.0, thickness: 0.2, height: 1.0 });
        let terrain = generate_terrain(&spec, 1).unwrap();
        let mut s = RobotState::at_rest(PoseSE3::identity());
        let mut hit = None;
        for _ in 0..20 {
            let out = step_dynamics(&s, (1.0, 0.0), 0.1, &terrain, &model()).unwrap();
            if out.collision.is_some() {
                hit = Some(out.state.pose.x);
                assert_eq!(out.state.pose, s.pose);
                break;
            }
            s = out.state;
        }
        let x = hit.expect("collision");
        assert!(x + 0.5 * model().footprint_length <= 0.9 + 1e-9);
    }

    #[test]
    fn ramp_sets_pitch() {
        let mut spec = TerrainSpec::flat(-10.0, -10.0, 20.0, 20.0, 0.05);
        spec.features.push(Feature::Ramp { x: -5.0, y_min: -5.0, y_max: 5.0, angle: 0.2, height: 3.0, plateau: 5.0 });
        let terrain = generate_terrain(&spec, 1).unwrap();
        let c = settle_on_terrain(&terrain, &PoseSE2::new(0.0, 0.0, 0.0), &model()).unwrap();
        assert!((c.pitch + 0.2).abs() < 0.01);
    }

    #[test]
    fn overhanging_a_drop_rests_on_the_upper_ground() {
        let mut spec = TerrainSpec::flat(-10.0, -10.0, 20.0, 20.0, 0.05);
        spec.features.push(Feature::Cliff { x_min: -5.0, x_max: 5.0, y_min: 0.5, y_max: 5.0, drop: 1.0 });
        let terrain = generate_terrain(&spec, 1).unwrap();
        let half = 0.5 * model().footprint_width;
        let c = settle_on_terrain(&terrain, &PoseSE2::new(0.0, 0.5 - half + 0.1, 0.0), &model()).unwrap();
        assert!(c.z.abs() < 1e-9 && c.roll.abs() < 1e-9, "{c:?}");
        assert!(c.max_protrusion < 1e-9);
    }
}
