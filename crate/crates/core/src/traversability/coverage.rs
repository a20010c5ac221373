use serde::{Deserialize, Serialize};

use crate::geometry::Point3;

/// Expected ground-return density of a scanning sensor, used to tell "no
/// ground because there is none" from "no ground because it was never seen".
///
/// A flat patch at horizontal distance `d` and depth `h` below a sensor with
/// angular steps `Δaz`, `Δel` receives `h / (d (d² + h²) Δaz Δel)` returns
/// per m². Contributions of all origins are summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageModel {
    pub origins: Vec<Point3>,
    pub azimuth_step: f64,
    pub elevation_step: f64,
    /// Lowest beam elevation (negative is downward).
    pub min_elevation: f64,
    pub max_range: f64,
    /// Fraction of returns surviving dropout.
    pub keep_fraction: f64,
    /// Upper bound applied after summation, e.g. from voxel downsampling.
    pub density_cap: Option<f64>,
    /// Sensor height used when no ground is visible near the query.
    pub nominal_height: f64,
    /// A cell counts as observed when the expected density is at least this
    /// multiple of the hazard threshold.
    pub margin: f64,
}

impl CoverageModel {
    pub fn expected_density(&self, x: f64, y: f64, ground_z: Option<f64>) -> f64 {
        let per_ray = self.keep_fraction / (self.azimuth_step * self.elevation_step);
        let mut total = 0.0;
        for o in &self.origins {
            let d = (x - o.x).hypot(y - o.y).max(1e-3);
            let h = ground_z.map_or(self.nominal_height, |gz| o.z - gz);
            if h <= 0.0 || d.hypot(h) > self.max_range || h.atan2(d) > -self.min_elevation {
                continue;
            }
            total += per_ray * h / (d * (d * d + h * h));
        }
        match self.density_cap {
            Some(cap) => total.min(cap),
            None => total,
        }
    }

    pub fn is_covered(&self, x: f64, y: f64, ground_z: Option<f64>, threshold: f64) -> bool {
        self.expected_density(x, y, ground_z) >= self.margin * threshold
    }
}
