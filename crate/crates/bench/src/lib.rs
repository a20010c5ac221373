//! Deterministic inputs shared by the kernel benchmarks.

use std::path::Path;

use terranav::geometry::transform_cloud;
use terranav::pipeline::Scan;
use terranav::scenario::ScenarioConfig;
use terranav::segmentation::SegmentedCloud;
use terranav::sim::{generate_terrain, render_scan, rng_for, settle_on_terrain, STREAM_SENSOR};
use terranav::{CellAssessment, CellCost, Grid2D, GridShape, HazardFlags, Point3, PointCloud, PoseSE2, PoseSE3};

/// `side × side` points filling a 1.0 × 0.7 m footprint on a plane tilted by
/// `slope` radians about the y axis.
pub fn plane_footprint(side: usize, slope: f64) -> PointCloud {
    let g = slope.tan();
    let pts = (0..side * side)
        .map(|k| {
            let x = -0.5 + ((k % side) as f64 + 0.5) / side as f64;
            let y = -0.35 + 0.7 * ((k / side) as f64 + 0.5) / side as f64;
            Point3::new(x, y, g * x)
        })
        .collect();
    PointCloud::new(pts, "map", 0.0).unwrap()
}

/// A square of flat ground sampled every `step` with a 0.3 m rock on a
/// regular 1 m lattice.
pub fn rocky_floor(extent: f64, step: f64) -> SegmentedCloud {
    let n = (extent / step).round() as i64;
    let rock = |x: f64, y: f64| {
        let (fx, fy) = (x - x.round(), y - y.round());
        fx.abs() < 0.1 && fy.abs() < 0.1
    };
    let mut ground = Vec::new();
    let mut obstacle = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let (x, y) = (i as f64 * step, j as f64 * step);
            if rock(x, y) {
                obstacle.extend((1..=6).map(|k| Point3::new(x, y, 0.05 * k as f64)));
            } else {
                ground.push(Point3::new(x, y, 0.0));
            }
        }
    }
    SegmentedCloud {
        ground: PointCloud::new(ground, "map", 0.0).unwrap(),
        obstacle: PointCloud::new(obstacle, "map", 0.0).unwrap(),
        unassigned: PointCloud::empty("map", 0.0),
    }
}

/// `n × n` grid of parallel walls, each with one gap, alternating ends, over
/// a smoothly varying soft cost.
pub fn maze(n: usize) -> Grid2D<CellAssessment> {
    let cells = (0..n * n)
        .map(|k| {
            let (ix, iy) = (k % n, k / n);
            let wall = ix % 10 == 5 && if (ix / 10) % 2 == 0 { iy + 3 < n } else { iy > 2 };
            if wall {
                CellAssessment::lethal(HazardFlags::POSITIVE_OBSTACLE)
            } else {
                let c = 0.5 + 0.5 * ((ix as f64 * 0.3).sin() * (iy as f64 * 0.2).cos());
                CellAssessment { cost: CellCost::Cost(c), ..CellAssessment::free() }
            }
        })
        .collect();
    Grid2D::from_cells(GridShape::new(0.0, 0.0, 0.1, n, n), cells)
}

/// The shipped rocky corridor scenario.
pub fn corridor_config() -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/resilient_corridor.json");
    ScenarioConfig::load(&path).unwrap()
}

/// One ego-frame scan of the corridor taken `x` metres along it.
pub fn corridor_scan(config: &ScenarioConfig, x: f64) -> (Scan, PoseSE3) {
    let model = config.robot_model().unwrap();
    let terrain = generate_terrain(&config.terrain, config.seed).unwrap();
    let at = PoseSE2::new(x, 0.0, 0.0);
    let c = settle_on_terrain(&terrain, &at, &model).unwrap();
    let pose = PoseSE3::new(x, 0.0, c.z, c.roll, c.pitch, 0.0);
    let sensor_pose = pose.compose(&config.sensor.mount_pose);
    let to_ego = pose.leveled().inverse();
    let sensor_origin = to_ego.transform_point(&Point3::new(sensor_pose.x, sensor_pose.y, sensor_pose.z));
    let mut rng = rng_for(config.seed, STREAM_SENSOR);
    let cloud = transform_cloud(&render_scan(&terrain, &sensor_pose, &config.sensor, &mut rng, 0.0), &to_ego, "ego");
    (Scan { cloud, sensor_origin }, pose)
}
