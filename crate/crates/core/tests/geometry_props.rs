use std::f64::consts::PI;

use proptest::prelude::*;
use terranav::geometry::{crop_footprint, fit_plane, normalize_angle, transform_cloud};
use terranav::{GridIndex, GridShape, Point3, PointCloud, PoseSE2, PoseSE3};

fn point(extent: f64) -> impl Strategy<Value = Point3> {
    (-extent..extent, -extent..extent, -extent..extent).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn pose() -> impl Strategy<Value = PoseSE3> {
    (-50.0..50.0, -50.0..50.0, -50.0..50.0, -1.5..1.5, -1.5..1.5, -PI..PI)
        .prop_map(|(x, y, z, r, p, w)| PoseSE3::new(x, y, z, r, p, w))
}

/// Noisy samples of a tilted plane spread over a 10 m square.
fn planar_points() -> impl Strategy<Value = Vec<Point3>> {
    (-1.0..1.0f64, -1.0..1.0f64, -5.0..5.0f64).prop_flat_map(|(gx, gy, c)| {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -0.2..0.2f64), 10..80).prop_map(move |v| {
            v.into_iter().map(|(x, y, n)| Point3::new(x, y, gx * x + gy * y + c + n)).collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transform_then_inverse_is_identity(pts in prop::collection::vec(point(100.0), 1..50), pose in pose()) {
        let cloud = PointCloud::new(pts, "a", 0.0).unwrap();
        let back = transform_cloud(&transform_cloud(&cloud, &pose, "b"), &pose.inverse(), "a");
        for (p, q) in cloud.points().iter().zip(back.points()) {
            prop_assert!((p.x - q.x).abs() < 1e-9 && (p.y - q.y).abs() < 1e-9 && (p.z - q.z).abs() < 1e-9);
        }
    }

    #[test]
    fn plane_fit_is_translation_equivariant(pts in planar_points(), t in point(20.0)) {
        let a = fit_plane(&pts).unwrap();
        let moved: Vec<Point3> = pts.iter().map(|p| Point3::new(p.x + t.x, p.y + t.y, p.z + t.z)).collect();
        let b = fit_plane(&moved).unwrap();
        prop_assert!((a.normal - b.normal).norm() < 1e-9);
        prop_assert!((b.offset - (a.offset + a.normal.dot(&t.to_vector()))).abs() < 1e-9);
    }

    #[test]
    fn plane_rmse_is_rigid_invariant(pts in planar_points(), pose in pose()) {
        let a = fit_plane(&pts).unwrap();
        let moved: Vec<Point3> = pts.iter().map(|p| pose.transform_point(p)).collect();
        let b = fit_plane(&moved).unwrap();
        prop_assert!((a.rmse - b.rmse).abs() < 1e-9, "{} vs {}", a.rmse, b.rmse);
    }

    #[test]
    fn crop_is_a_subset_unmoved_by_far_points(
        pts in prop::collection::vec(point(3.0), 0..200),
        far in prop::collection::vec(point(3.0), 0..20),
        x in -1.0..1.0, y in -1.0..1.0, yaw in -PI..PI,
    ) {
        let query = PoseSE2::new(x, y, yaw);
        let cloud = PointCloud::new(pts.clone(), "map", 0.0).unwrap();
        let cropped = crop_footprint(&cloud, &query, 1.0, 0.7);
        prop_assert!(cropped.iter().all(|c| pts.contains(c)));

        let mut padded = pts;
        padded.extend(far.iter().map(|p| Point3::new(p.x + 1000.0, p.y - 1000.0, p.z)));
        let padded = PointCloud::new(padded, "map", 0.0).unwrap();
        prop_assert_eq!(crop_footprint(&padded, &query, 1.0, 0.7), cropped);
    }

    #[test]
    fn cell_centres_round_trip(
        ox in -100.0..100.0, oy in -100.0..100.0, res in 0.01..2.0,
        w in 1usize..300, h in 1usize..300, fx in 0.0..1.0, fy in 0.0..1.0,
    ) {
        let shape = GridShape::new(ox, oy, res, w, h);
        let index = GridIndex::new(((w as f64 * fx) as usize).min(w - 1), ((h as f64 * fy) as usize).min(h - 1));
        let (cx, cy) = shape.grid_to_world(index);
        prop_assert_eq!(shape.world_to_grid(cx, cy), Some(index));
        prop_assert_eq!(shape.len(), w * h);
    }

    #[test]
    fn normalized_angles_are_half_open(a in -1e3..1e3f64) {
        let n = normalize_angle(a);
        prop_assert!(n > -PI && n <= PI);
        prop_assert!(((a - n) / (2.0 * PI) - ((a - n) / (2.0 * PI)).round()).abs() < 1e-9);
    }
}
