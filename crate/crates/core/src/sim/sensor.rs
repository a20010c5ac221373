use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Aabb, SimError, TerrainField};
use crate::geometry::{Point3, PointCloud, PoseSE3};
use crate::pipeline::SensorCoverage;

/// Scanning range sensor on a regular azimuth/elevation lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub angular_resolution: f64,
    /// Elevation of the lowest beam row (negative looks down).
    pub min_elevation: f64,
    pub max_range: f64,
    pub range_noise_sigma: f64,
    pub dropout_probability: f64,
    /// Sensor pose relative to the robot base.
    pub mount_pose: PoseSE3,
}

impl SensorSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.horizontal_fov > 0.0
            && self.vertical_fov > 0.0
            && self.angular_resolution > 0.0
            && self.max_range > 0.0
            && self.range_noise_sigma >= 0.0
            && (0.0..=1.0).contains(&self.dropout_probability);
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidSpec("sensor parameters out of range".into()))
        }
    }

    pub fn azimuths(&self) -> Vec<f64> {
        let res = self.angular_resolution;
        if self.horizontal_fov >= 2.0 * PI - 1e-12 {
            let n = (2.0 * PI / res).round() as usize;
            (0..n).map(|k| -PI + k as f64 * 2.0 * PI / n as f64).collect()
        } else {
            let n = (self.horizontal_fov / res + 1e-9).floor() as usize;
            (0..=n).map(|k| -0.5 * self.horizontal_fov + k as f64 * res).collect()
        }
    }

    pub fn elevations(&self) -> Vec<f64> {
        let n = (self.vertical_fov / self.angular_resolution + 1e-9).floor() as usize;
        (0..=n).map(|k| self.min_elevation + k as f64 * self.angular_resolution).collect()
    }

    /// Ground-density model matching this sensor on a level robot.
    pub fn coverage(&self) -> SensorCoverage {
        SensorCoverage {
            azimuth_step: if self.horizontal_fov >= 2.0 * PI - 1e-12 {
                2.0 * PI / (2.0 * PI / self.angular_resolution).round()
            } else {
                self.angular_resolution
            },
            elevation_step: self.angular_resolution,
            min_elevation: self.min_elevation,
            max_range: self.max_range,
            keep_fraction: 1.0 - self.dropout_probability,
            nominal_height: self.mount_pose.z,
            margin: 2.0,
        }
    }
}

fn slab(origin: f64, dir: f64, lo: f64, hi: f64) -> (f64, f64) {
    if dir == 0.0 {
        if origin >= lo && origin <= hi {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (f64::INFINITY, f64::NEG_INFINITY)
        }
    } else {
        let (a, b) = ((lo - origin) / dir, (hi - origin) / dir);
        (a.min(b), a.max(b))
    }
}

fn box_hit(b: &Aabb, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for axis in 0..3 {
        let (a, c) = slab(o[axis], d[axis], b.min[axis], b.max[axis]);
        t0 = t0.max(a);
        t1 = t1.min(c);
    }
    (t0 <= t1).then_some(t0)
}

/// First intersection of a unit-direction ray with the terrain columns or an
/// overhang box, as a distance along the ray. Void cells let rays through.
pub fn raycast(terrain: &TerrainField, origin: &Vector3<f64>, dir: &Vector3<f64>, max_range: f64) -> Option<f64> {
    let shape = *terrain.shape();
    let res = shape.resolution;
    let mut best = terrain
        .overhangs
        .iter()
        .filter_map(|b| box_hit(b, origin, dir))
        .filter(|t| *t <= max_range)
        .fold(f64::INFINITY, f64::min);

    // Grid coordinates in cell units.
    let gx = (origin.x - shape.origin_x) / res;
    let gy = (origin.y - shape.origin_y) / res;
    let (w, h) = (shape.width as f64, shape.height as f64);
    let (ex0, ex1) = slab(gx, dir.x, 0.0, w);
    let (ey0, ey1) = slab(gy, dir.y, 0.0, h);
    let t_enter = (ex0.max(ey0) * res).max(0.0);
    let t_leave = (ex1.min(ey1) * res).min(max_range).min(best);
    if t_enter > t_leave {
        return best.is_finite().then_some(best);
    }

    let at = |t: f64| (gx + dir.x * t / res, gy + dir.y * t / res);
    let (sx, sy) = at(t_enter);
    let mut ix = (sx.floor() as i64).clamp(0, shape.width as i64 - 1);
    let mut iy = (sy.floor() as i64).clamp(0, shape.height as i64 - 1);
    let step_x: i64 = if dir.x > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dir.y > 0.0 { 1 } else { -1 };
    let next_boundary = |i: i64, d: f64, g: f64| -> f64 {
        if d == 0.0 {
            f64::INFINITY
        } else {
            let edge = if d > 0.0 { (i + 1) as f64 } else { i as f64 };
            (edge - g) / d * res
        }
    };
    let mut t_next_x = next_boundary(ix, dir.x, gx);
    let mut t_next_y = next_boundary(iy, dir.y, gy);
    let dt_x = if dir.x == 0.0 { f64::INFINITY } else { res / dir.x.abs() };
    let dt_y = if dir.y == 0.0 { f64::INFINITY } else { res / dir.y.abs() };
    let horizontal = dir.x.hypot(dir.y);
    let top = terrain.max_height();

    let mut t_in = t_enter;
    let mut first = t_enter <= 0.0;
    loop {
        let t_out = t_next_x.min(t_next_y).min(t_leave);
        let hgt = terrain.height_of(crate::geometry::GridIndex::new(ix as usize, iy as usize));
        if hgt.is_finite() {
            let z_in = origin.z + dir.z * t_in;
            if z_in < hgt && !first {
                // Vertical face; nudge the hit into the cell it belongs to.
                let t = t_in + if horizontal > 0.0 { 1e-9 / horizontal } else { 0.0 };
                best = best.min(t);
                break;
            }
            let z_out = origin.z + dir.z * t_out;
            if z_out < hgt && dir.z < 0.0 {
                let t = ((hgt - origin.z) / dir.z).max(t_in);
                best = best.min(t);
                break;
            }
        }
        first = false;
        if t_out >= t_leave {
            break;
        }
        if dir.z >= 0.0 && origin.z + dir.z * t_out > top {
            break;
        }
        if t_next_x < t_next_y {
            ix += step_x;
            t_in = t_next_x;
            t_next_x += dt_x;
        } else {
            iy += step_y;
            t_in = t_next_y;
            t_next_y += dt_y;
        }
        if ix < 0 || iy < 0 || ix >= shape.width as i64 || iy >= shape.height as i64 {
            break;
        }
    }
    (best.is_finite() && best <= max_range).then_some(best)
}

/// Renders one scan in the world frame (`"map"`) from `sensor_pose`.
///
/// Every lattice ray consumes exactly one noise and one dropout draw, so the
/// random stream stays aligned whatever the geometry.
pub fn render_scan(
    terrain: &TerrainField,
    sensor_pose: &PoseSE3,
    spec: &SensorSpec,
    rng: &mut ChaCha8Rng,
    stamp: f64,
) -> PointCloud {
    let rot = sensor_pose.rotation();
    let origin = sensor_pose.translation();
    let elevations = spec.elevations();
    let mut points = Vec::new();
    for az in spec.azimuths() {
        let (sa, ca) = az.sin_cos();
        for &el in &elevations {
            let (se, ce) = el.sin_cos();
            let dir = rot * Vector3::new(ce * ca, ce * sa, se);
            let noise: f64 = rng.sample(StandardNormal);
            let keep = rng.random::<f64>() >= spec.dropout_probability;
            let Some(t) = raycast(terrain, &origin, &dir, spec.max_range) else { continue };
            if !keep {
                continue;
            }
            let r = t + spec.range_noise_sigma * noise;
            let p = origin + dir * r;
            if !terrain.height_at(p.x, p.y).is_finite() {
                continue;
            }
            points.push(Point3::new(p.x, p.y, p.z));
        }
    }
    PointCloud::new(points, "map", stamp).expect("rendered points are finite")
}
