use std::f64::consts::PI;

use proptest::prelude::*;
use terranav::sim::{
    generate_terrain, perturb_pose, render_scan, rng_for, step_dynamics, BaseSurface, DriftModel, DriftState,
    Feature, RobotState, SensorSpec, TerrainField, TerrainSpec, STREAM_DRIFT, STREAM_SENSOR,
};
use terranav::{PoseSE3, RobotModel};

fn sensor(noise: f64, dropout: f64) -> SensorSpec {
    SensorSpec {
        horizontal_fov: 2.0 * PI,
        vertical_fov: 50f64.to_radians(),
        angular_resolution: 3f64.to_radians(),
        min_elevation: -60f64.to_radians(),
        max_range: 12.0,
        range_noise_sigma: noise,
        dropout_probability: dropout,
        mount_pose: PoseSE3::new(0.0, 0.0, 0.8, 0.0, 0.0, 0.0),
    }
}

fn feature() -> impl Strategy<Value = Feature> {
    prop_oneof![
        (-6.0..6.0f64, -6.0..6.0f64, 0.2..1.0f64, 0.1..1.0f64)
            .prop_map(|(x, y, radius, height)| Feature::Rock { x, y, radius, height }),
        (-6.0..5.0f64, -6.0..5.0f64, 0.3..2.0f64)
            .prop_map(|(x, y, s)| Feature::Hole { x_min: x, x_max: x + s, y_min: y, y_max: y + s }),
        (-6.0..5.0f64, -6.0..5.0f64, 0.5..3.0f64, 0.2..1.5f64)
            .prop_map(|(x, y, s, drop)| Feature::Cliff { x_min: x, x_max: x + s, y_min: y, y_max: y + s, drop }),
    ]
}

fn terrain_spec() -> impl Strategy<Value = (TerrainSpec, u64)> {
    (
        prop_oneof![
            Just(BaseSurface::Flat),
            (-0.2..0.2f64, -0.2..0.2f64).prop_map(|(gx, gy)| BaseSurface::Slope { gx, gy }),
            (0.05..0.3f64, 1.0..4.0f64).prop_map(|(amplitude, wavelength)| BaseSurface::Rough { amplitude, wavelength }),
        ],
        prop::collection::vec(feature(), 0..5),
        any::<u64>(),
    )
        .prop_map(|(base, features, seed)| {
            (TerrainSpec { base, features, ..TerrainSpec::flat(-10.0, -10.0, 20.0, 20.0, 0.1) }, seed)
        })
        // Raised features over a hole are rejected as invalid specs.
        .prop_filter("raised feature over a hole", |(spec, seed)| generate_terrain(spec, *seed).is_ok())
}

fn terrain() -> impl Strategy<Value = TerrainField> {
    terrain_spec().prop_map(|(spec, seed)| generate_terrain(&spec, seed).unwrap())
}

/// Where the sensor sits: on the ground at a random spot, looking anywhere.
fn sensor_pose(t: &TerrainField, x: f64, y: f64, yaw: f64) -> Option<PoseSE3> {
    let h = t.height_at(x, y);
    h.is_finite().then(|| PoseSE3::new(x, y, h + 0.8, 0.0, 0.0, yaw))
}

/// Distance from `v` to the nearest cell edge of a lattice with spacing `res`
/// starting at `origin`.
fn edge_distance(v: f64, origin: f64, res: f64) -> f64 {
    let u = (v - origin) / res;
    (u - u.round()).abs() * res
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noiseless_returns_lie_on_the_surface(t in terrain(), x in -5.0..5.0f64, y in -5.0..5.0f64, yaw in -PI..PI, seed in any::<u64>()) {
        let Some(pose) = sensor_pose(&t, x, y, yaw) else { return Ok(()) };
        let scan = render_scan(&t, &pose, &sensor(0.0, 0.0), &mut rng_for(seed, STREAM_SENSOR), 0.0);
        let shape = *t.shape();
        for p in scan.points() {
            let h = t.height_at(p.x, p.y);
            let on_top = (p.z - h).abs() < 1e-6;
            // Hits on a column's side face sit on a cell edge below its top.
            let on_face = p.z < h + 1e-6
                && (edge_distance(p.x, shape.origin_x, shape.resolution) < 1e-6
                    || edge_distance(p.y, shape.origin_y, shape.resolution) < 1e-6);
            prop_assert!(on_top || on_face, "({}, {}, {}) vs column {}", p.x, p.y, p.z, h);
        }
    }

    #[test]
    fn no_return_lies_over_a_void(t in terrain(), x in -5.0..5.0f64, y in -5.0..5.0f64, yaw in -PI..PI, seed in any::<u64>()) {
        let Some(pose) = sensor_pose(&t, x, y, yaw) else { return Ok(()) };
        let scan = render_scan(&t, &pose, &sensor(0.05, 0.2), &mut rng_for(seed, STREAM_SENSOR), 0.0);
        prop_assert!(scan.points().iter().all(|p| t.height_at(p.x, p.y).is_finite()));
    }

    #[test]
    fn a_step_never_moves_further_than_the_speed_limit(
        t in terrain(), x in -5.0..5.0f64, y in -5.0..5.0f64, yaw in -PI..PI,
        v in -3.0..3.0f64, w in -3.0..3.0f64, dt in 0.01..0.1f64,
    ) {
        let model = RobotModel::husky();
        let state = RobotState::at_rest(PoseSE3::new(x, y, 0.0, 0.0, 0.0, yaw));
        if let Ok(out) = step_dynamics(&state, (v, w), dt, &t, &model) {
            let moved = (out.state.pose.x - x).hypot(out.state.pose.y - y);
            prop_assert!(moved <= model.max_speed * dt + 1e-12, "{} > {}", moved, model.max_speed * dt);
        }
    }

    #[test]
    fn terrain_regenerates_identically((spec, seed) in terrain_spec()) {
        let a = generate_terrain(&spec, seed).unwrap();
        let b = generate_terrain(&spec, seed).unwrap();
        let bits = |t: &TerrainField| t.heightfield.cells().iter().map(|h| h.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
        prop_assert_eq!(format!("{:?}", a.hazards), format!("{:?}", b.hazards));
    }
}

#[test]
fn random_walk_spread_matches_theory() {
    // sigma 0.1 m/sqrt(s) for 100 s gives a standard deviation of 1 m per axis.
    let drift = DriftModel { sigma: [0.1; 4], ..DriftModel::default() };
    let truth = PoseSE3::identity();
    let seeds = 1000;
    let mut sums = [0.0f64; 3];
    let mut squares = [0.0f64; 3];
    for seed in 0..seeds {
        let mut rng = rng_for(seed, STREAM_DRIFT);
        let mut state = DriftState::new();
        for _ in 0..1000 {
            perturb_pose(&truth, &drift, &mut state, 0.1, &mut rng);
        }
        let walk = state.walk();
        for (axis, e) in [walk[0], walk[1], walk[2]].into_iter().enumerate() {
            sums[axis] += e;
            squares[axis] += e * e;
        }
    }
    for axis in 0..3 {
        let n = seeds as f64;
        let mean = sums[axis] / n;
        let std = (squares[axis] / n - mean * mean).sqrt();
        assert!((std - 1.0).abs() < 0.15, "axis {axis}: std {std}");
    }
}
