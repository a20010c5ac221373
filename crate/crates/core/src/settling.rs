//! Resolves a planar query pose into a full 6-DoF pose resting on the ground
//! cloud: crop the footprint, fit a plane, derive attitude from its normal.

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{crop_footprint, fit_plane, PointCloud, Point3, PoseSE2, PoseSE3};
use crate::traversability::RobotModel;

#[derive(Debug, Error, PartialEq)]
pub enum SettlingError {
    #[error("normal must point upward (z = {0})")]
    InvalidNormal(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SettleStatus {
    Settled,
    InsufficientSupport,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SettleMode {
    /// Attitude from a single plane fitted to the whole footprint.
    #[default]
    PlaneFit,
    /// Experimental conservative variant: fits each footprint quadrant
    /// separately and reports the largest roll and pitch found.
    WorstCaseQuadrant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettledPose {
    pub pose: PoseSE3,
    pub normal: Vector3<f64>,
    pub support_count: usize,
    pub fit_rmse: f64,
    pub status: SettleStatus,
}

impl SettledPose {
    fn unsettled(query: &PoseSE2, support_count: usize, status: SettleStatus) -> Self {
        Self {
            pose: PoseSE3::new(query.x, query.y, 0.0, 0.0, 0.0, query.yaw),
            normal: Vector3::z(),
            support_count,
            fit_rmse: 0.0,
            status,
        }
    }

    pub fn is_settled(&self) -> bool {
        self.status == SettleStatus::Settled
    }
}

/// Roll and pitch such that `Rz(yaw)·Ry(pitch)·Rx(roll)` maps body +z onto `normal`.
///
/// Positive pitch is nose-down: facing up a slope gives negative pitch.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn attitude_from_normal(normal: &Vector3<f64>, yaw: f64) -> Result<(f64, f64), SettlingError> {
    if !(normal.z > 0.0) {
        return Err(SettlingError::InvalidNormal(normal.z));
    }
    let n = normal.normalize();
    let (s, c) = yaw.sin_cos();
    // Normal expressed in the yaw-aligned frame: (cos r sin p, -sin r, cos r cos p).
    let mx = c * n.x + s * n.y;
    let my = -s * n.x + c * n.y;
    let roll = (-my).clamp(-1.0, 1.0).asin();
    let pitch = mx.atan2(n.z);
    Ok((roll, pitch))
}

/// Body +z axis expressed in the parent frame for the given attitude.
pub fn normal_from_attitude(roll: f64, pitch: f64, yaw: f64) -> Vector3<f64> {
    Rotation3::from_euler_angles(roll, pitch, yaw) * Vector3::z()
}

/// Settles `query` on `ground` using the model's footprint and support threshold.
pub fn settle(query: &PoseSE2, ground: &PointCloud, model: &RobotModel) -> SettledPose {
    settle_with_mode(query, ground, model, SettleMode::PlaneFit)
}

pub fn settle_with_mode(
    query: &PoseSE2,
    ground: &PointCloud,
    model: &RobotModel,
    mode: SettleMode,
) -> SettledPose {
    let footprint = crop_footprint(ground, query, model.footprint_length, model.footprint_width);
    settle_footprint(query, &footprint, model.min_support_points, mode)
}

/// Settles on points already known to lie under the footprint.
pub fn settle_footprint(
    query: &PoseSE2,
    footprint: &[Point3],
    min_support_points: usize,
    mode: SettleMode,
) -> SettledPose {
    if footprint.len() < min_support_points.max(3) {
        return SettledPose::unsettled(query, footprint.len(), SettleStatus::InsufficientSupport);
    }
    let Ok(fit) = fit_plane(footprint) else {
        return SettledPose::unsettled(query, footprint.len(), SettleStatus::Degenerate);
    };
    let Ok((mut roll, mut pitch)) = attitude_from_normal(&fit.normal, query.yaw) else {
        return SettledPose::unsettled(query, footprint.len(), SettleStatus::Degenerate);
    };
    let mut normal = fit.normal;
    if mode == SettleMode::WorstCaseQuadrant {
        if let Some((r, p)) = worst_quadrant_attitude(query, footprint) {
            roll = r;
            pitch = p;
            normal = normal_from_attitude(roll, pitch, query.yaw);
        }
    }
    SettledPose {
        pose: PoseSE3 {
            x: query.x,
            y: query.y,
            z: fit.height_at(query.x, query.y),
            roll,
            pitch,
            yaw: query.yaw,
        },
        normal,
        support_count: fit.support_count,
        fit_rmse: fit.rmse,
        status: SettleStatus::Settled,
    }
}

fn worst_quadrant_attitude(query: &PoseSE2, footprint: &[Point3]) -> Option<(f64, f64)> {
    let mut quadrants: [Vec<Point3>; 4] = Default::default();
    for p in footprint {
        let (lx, ly) = query.inverse_transform_point(p.x, p.y);
        let q = usize::from(lx >= 0.0) + 2 * usize::from(ly >= 0.0);
        quadrants[q].push(*p);
    }
    let mut worst: Option<(f64, f64)> = None;
    for pts in &quadrants {
        let Ok(fit) = fit_plane(pts) else { continue };
        let Ok((r, p)) = attitude_from_normal(&fit.normal, query.yaw) else {
            continue;
        };
        worst = Some(match worst {
            None => (r, p),
            Some((wr, wp)) => (
                if r.abs() > wr.abs() { r } else { wr },
                if p.abs() > wp.abs() { p } else { wp },
            ),
        });
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_cloud(f: impl Fn(f64, f64) -> f64) -> PointCloud {
        let mut pts = Vec::new();
        for i in -30..=30 {
            for j in -30..=30 {
                let (x, y) = (i as f64 * 0.05, j as f64 * 0.05);
                pts.push(Point3::new(x, y, f(x, y)));
            }
        }
        PointCloud::new(pts, "map", 0.0).unwrap()
    }

    #[test]
    fn flat_floor_settles_level() {
        let s = settle(&PoseSE2::new(0.0, 0.0, 0.0), &plane_cloud(|_, _| 0.0), &RobotModel::husky());
        assert_eq!(s.status, SettleStatus::Settled);
        assert!(s.pose.z.abs() < 1e-12 && s.pose.roll.abs() < 1e-12 && s.pose.pitch.abs() < 1e-12);
        assert!((s.normal - Vector3::z()).norm() < 1e-12);
    }

    #[test]
    fn up_slope_gives_negative_pitch() {
        let t = 15f64.to_radians().tan();
        let s = settle(&PoseSE2::new(0.0, 0.0, 0.0), &plane_cloud(|x, _| x * t), &RobotModel::husky());
        assert!((s.pose.pitch + 15f64.to_radians()).abs() < 1e-6);
        assert!(s.pose.roll.abs() < 1e-9);
        assert!(s.pose.z.abs() < 1e-9);
        let rebuilt = normal_from_attitude(s.pose.roll, s.pose.pitch, s.pose.yaw);
        assert!((rebuilt - s.normal).norm() < 1e-9);
    }

    #[test]
    fn sparse_footprint_is_insufficient() {
        let ground = PointCloud::new(
            vec![Point3::new(0.1, 0.1, 0.0), Point3::new(-0.1, 0.0, 0.0)],
            "map",
            0.0,
        )
        .unwrap();
        let s = settle(&PoseSE2::default(), &ground, &RobotModel::husky());
        assert_eq!(s.status, SettleStatus::InsufficientSupport);
        assert_eq!(s.support_count, 2);
    }

    #[test]
    fn collinear_footprint_is_degenerate() {
        let pts: Vec<_> = (0..30).map(|i| Point3::new(-0.4 + i as f64 * 0.02, 0.0, 0.0)).collect();
        let ground = PointCloud::new(pts, "map", 0.0).unwrap();
        let s = settle(&PoseSE2::default(), &ground, &RobotModel::husky());
        assert_eq!(s.status, SettleStatus::Degenerate);
    }

    #[test]
    fn attitude_rejects_downward_normal() {
        assert_eq!(
            attitude_from_normal(&Vector3::new(0.0, 0.0, -1.0), 0.0),
            Err(SettlingError::InvalidNormal(-1.0))
        );
        assert_eq!(attitude_from_normal(&Vector3::z(), 1.3).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn thirty_degree_slope_facing_x() {
        let a = 30f64.to_radians();
        let (roll, pitch) = attitude_from_normal(&Vector3::new(-a.sin(), 0.0, a.cos()), 0.0).unwrap();
        assert!(roll.abs() < 1e-12);
        assert!((pitch + a).abs() < 1e-12);
    }

    #[test]
    fn worst_case_mode_reports_steeper_quadrant() {
        // Flat for x < 0, 20 degree rise for x >= 0.
        let t = 20f64.to_radians().tan();
        let cloud = plane_cloud(|x, _| if x > 0.0 { x * t } else { 0.0 });
        let model = RobotModel::husky();
        let q = PoseSE2::default();
        let avg = settle_with_mode(&q, &cloud, &model, SettleMode::PlaneFit);
        let worst = settle_with_mode(&q, &cloud, &model, SettleMode::WorstCaseQuadrant);
        assert!(worst.pose.pitch.abs() > avg.pose.pitch.abs());
        assert!((worst.pose.pitch.abs() - 20f64.to_radians()).abs() < 0.02);
    }
}
