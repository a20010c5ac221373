use std::f64::consts::PI;

use proptest::prelude::*;
use terranav::settling::normal_from_attitude;
use terranav::{settle, Point3, PointCloud, PoseSE2, RobotModel, SettleStatus};

/// Footprint-local offsets kept 5 cm clear of the Husky footprint edge, so
/// tiny rounding never moves a point across it.
fn inside() -> impl Strategy<Value = (f64, f64)> {
    (-0.45..0.45f64, -0.3..0.3f64)
}

fn outside() -> impl Strategy<Value = (f64, f64)> {
    (0.6..3.0f64, -3.0..3.0f64, any::<bool>()).prop_map(|(u, v, flip)| if flip { (-u, v) } else { (u, v) })
}

#[derive(Debug)]
struct Scene {
    query: PoseSE2,
    points: Vec<Point3>,
}

fn scene(min_inside: usize) -> impl Strategy<Value = Scene> {
    (
        -20.0..20.0f64,
        -20.0..20.0f64,
        -PI..PI,
        -0.5..0.5f64,
        -0.5..0.5f64,
        prop::collection::vec((inside(), -0.05..0.05f64), min_inside..80),
        prop::collection::vec((outside(), -0.3..0.3f64), 0..30),
    )
        .prop_map(|(x, y, yaw, gx, gy, ins, outs)| {
            let query = PoseSE2::new(x, y, yaw);
            let points = ins
                .into_iter()
                .chain(outs)
                .map(|((u, v), n)| {
                    let (px, py) = query.transform_point(u, v);
                    Point3::new(px, py, gx * px + gy * py + n)
                })
                .collect();
            Scene { query, points }
        })
}

fn cloud(points: Vec<Point3>) -> PointCloud {
    PointCloud::new(points, "map", 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn settled_pose_keeps_yaw_and_matches_its_normal(s in scene(0)) {
        let r = settle(&s.query, &cloud(s.points), &RobotModel::husky());
        prop_assert_eq!(r.pose.yaw.to_bits(), s.query.yaw.to_bits());
        if r.status == SettleStatus::Settled {
            prop_assert!((r.normal.norm() - 1.0).abs() < 1e-9);
            prop_assert!(r.normal.z > 0.0);
            prop_assert!(r.fit_rmse >= 0.0 && r.support_count >= 3);
            prop_assert!(r.pose.roll.abs() < PI / 2.0 && r.pose.pitch.abs() < PI / 2.0);
            prop_assert!((normal_from_attitude(r.pose.roll, r.pose.pitch, r.pose.yaw) - r.normal).norm() < 1e-9);
        }
    }

    #[test]
    fn translation_shifts_the_settled_pose(s in scene(20), dx in -30.0..30.0f64, dy in -30.0..30.0f64, dz in -5.0..5.0f64) {
        let model = RobotModel::husky();
        let a = settle(&s.query, &cloud(s.points.clone()), &model);
        let moved = s.points.iter().map(|p| Point3::new(p.x + dx, p.y + dy, p.z + dz)).collect();
        let query = PoseSE2 { x: s.query.x + dx, y: s.query.y + dy, yaw: s.query.yaw };
        let b = settle(&query, &cloud(moved), &model);
        prop_assert_eq!(a.status, SettleStatus::Settled);
        prop_assert_eq!(b.status, SettleStatus::Settled);
        prop_assert_eq!(b.pose.x, query.x);
        prop_assert_eq!(b.pose.y, query.y);
        prop_assert!((b.pose.z - (a.pose.z + dz)).abs() < 1e-9);
        prop_assert!((a.pose.roll - b.pose.roll).abs() < 1e-9);
        prop_assert!((a.pose.pitch - b.pose.pitch).abs() < 1e-9);
        prop_assert!((a.normal - b.normal).norm() < 1e-9);
    }

    #[test]
    fn removing_points_never_creates_support(s in scene(0), keep in prop::collection::vec(any::<bool>(), 110)) {
        let model = RobotModel::husky();
        let full = settle(&s.query, &cloud(s.points.clone()), &model);
        let fewer: Vec<Point3> = s.points.iter().zip(keep.iter().cycle()).filter(|(_, k)| **k).map(|(p, _)| *p).collect();
        if fewer.is_empty() {
            return Ok(());
        }
        let thinned = settle(&s.query, &cloud(fewer), &model);
        if full.status == SettleStatus::InsufficientSupport {
            prop_assert_ne!(thinned.status, SettleStatus::Settled);
        }
        prop_assert!(thinned.support_count <= full.support_count);
    }

    #[test]
    fn tilt_equals_the_true_dihedral_slope(
        gx in -1.5..1.5f64, gy in -1.5..1.5f64, c in -3.0..3.0f64,
        x in -5.0..5.0f64, y in -5.0..5.0f64, yaw in -PI..PI,
    ) {
        let mut pts = Vec::new();
        for i in -15..=15 {
            for j in -15..=15 {
                let (px, py) = (x + i as f64 * 0.05, y + j as f64 * 0.05);
                pts.push(Point3::new(px, py, gx * px + gy * py + c));
            }
        }
        let r = settle(&PoseSE2::new(x, y, yaw), &cloud(pts), &RobotModel::husky());
        prop_assert_eq!(r.status, SettleStatus::Settled);
        let tilt = r.normal.z.clamp(-1.0, 1.0).acos();
        prop_assert!((tilt - gx.hypot(gy).atan()).abs() < 1e-6);
        prop_assert!((r.pose.z - (gx * x + gy * y + c)).abs() < 1e-6);
    }
}
