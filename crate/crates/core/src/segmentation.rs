//! Ground / obstacle split of a single depth scan by per-sector piecewise
//! line fitting in the (range, height) plane.
//!
//! The scan is divided into azimuthal sectors around the sensor. Inside each
//! sector, points are bucketed by horizontal range; the lowest point of each
//! bucket is a candidate ground sample. The ground profile is grown outward
//! from the nearest bucket: a candidate extends it when the connecting segment
//! is no steeper than `max_ground_slope`, otherwise the profile keeps its last
//! height. Points are then labelled by their height above that profile.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point3, PointCloud};

#[derive(Debug, Error, PartialEq)]
pub enum SegmentationError {
    #[error("input cloud has no points")]
    EmptyCloud,
    #[error("invalid segmentation parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub sector_count: usize,
    pub bin_length: f64,
    pub max_ground_slope: f64,
    pub ground_distance_threshold: f64,
    pub max_range: f64,
}

impl SegmentationParams {
    /// Defaults keyed to a robot's tip-over limit, so "ground" means terrain
    /// the platform can mechanically drive on.
    pub fn for_max_slope(max_ground_slope: f64) -> Self {
        Self {
            sector_count: 180,
            bin_length: 0.5,
            max_ground_slope,
            ground_distance_threshold: 0.10,
            max_range: 60.0,
        }
    }

    pub fn validate(&self) -> Result<(), SegmentationError> {
        if self.sector_count < 4 {
            return Err(SegmentationError::InvalidParams("sector_count must be at least 4"));
        }
        let positive = [
            self.bin_length,
            self.max_ground_slope,
            self.ground_distance_threshold,
            self.max_range,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SegmentationError::InvalidParams(
                "distances and angles must be positive and finite",
            ));
        }
        Ok(())
    }
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self::for_max_slope(30f64.to_radians())
    }
}

/// Exact three-way partition of a scan. Each part keeps input order.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedCloud {
    pub ground: PointCloud,
    pub obstacle: PointCloud,
    pub unassigned: PointCloud,
}

impl SegmentedCloud {
    pub fn len(&self) -> usize {
        self.ground.len() + self.obstacle.len() + self.unassigned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Empty parts in `frame_id`, for callers that need a neutral value.
    pub fn empty(frame_id: &str, stamp: f64) -> Self {
        Self {
            ground: PointCloud::empty(frame_id, stamp),
            obstacle: PointCloud::empty(frame_id, stamp),
            unassigned: PointCloud::empty(frame_id, stamp),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Ground,
    Obstacle,
    Unassigned,
}

/// Sector of a horizontal offset. When the sector count is a multiple of four
/// the quadrant is resolved by sign tests, so quarter turns of the input map
/// sectors onto sectors exactly.
fn sector_of(dx: f64, dy: f64, sectors: usize) -> usize {
    if sectors.is_multiple_of(4) {
        let (quadrant, u, v) = if dx > 0.0 && dy >= 0.0 {
            (0, dx, dy)
        } else if dx <= 0.0 && dy > 0.0 {
            (1, dy, -dx)
        } else if dx < 0.0 && dy <= 0.0 {
            (2, -dx, -dy)
        } else if dx >= 0.0 && dy < 0.0 {
            (3, -dy, dx)
        } else {
            (0, 0.0, 0.0)
        };
        let per = sectors / 4;
        let angle = v.atan2(u);
        let k = ((angle / FRAC_PI_2) * per as f64).floor() as usize;
        quadrant * per + k.min(per - 1)
    } else {
        let angle = dy.atan2(dx).rem_euclid(2.0 * PI);
        (((angle / (2.0 * PI)) * sectors as f64).floor() as usize).min(sectors - 1)
    }
}

/// Piecewise-linear ground height as a function of range.
#[derive(Debug, Default)]
struct Profile {
    nodes: Vec<(f64, f64)>,
}

impl Profile {
    fn height_at(&self, r: f64) -> f64 {
        let nodes = &self.nodes;
        let first = nodes[0];
        let last = nodes[nodes.len() - 1];
        if r <= first.0 {
            return first.1;
        }
        if r >= last.0 {
            return last.1;
        }
        let i = nodes.partition_point(|n| n.0 <= r);
        let (a, b) = (nodes[i - 1], nodes[i]);
        a.1 + (b.1 - a.1) * (r - a.0) / (b.0 - a.0)
    }
}

/// Splits `cloud` into ground, obstacle and unassigned points.
///
/// `sensor_origin` must be expressed in the cloud's frame; sectors and ranges
/// are measured around it.
pub fn segment(
    cloud: &PointCloud,
    params: &SegmentationParams,
    sensor_origin: &Point3,
) -> Result<SegmentedCloud, SegmentationError> {
    params.validate()?;
    if cloud.is_empty() {
        return Err(SegmentationError::EmptyCloud);
    }
    let points = cloud.points();
    let sectors = params.sector_count;

    let mut ranges = vec![0.0; points.len()];
    let mut sector_of_point = vec![usize::MAX; points.len()];
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); sectors];
    for (i, p) in points.iter().enumerate() {
        let (dx, dy) = (p.x - sensor_origin.x, p.y - sensor_origin.y);
        let r = (dx * dx + dy * dy).sqrt();
        ranges[i] = r;
        if r > params.max_range {
            continue;
        }
        let s = sector_of(dx, dy, sectors);
        sector_of_point[i] = s;
        members[s].push(i as u32);
    }

    let mut labels = vec![Label::Unassigned; points.len()];
    let mut lowest: Vec<(usize, u32)> = Vec::new();
    for member in members.iter().filter(|m| !m.is_empty()) {
        // Lowest point per range bin; ties keep the earliest input point.
        lowest.clear();
        for &i in member {
            let bin = (ranges[i as usize] / params.bin_length).floor() as usize;
            lowest.push((bin, i));
        }
        lowest.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(points[a.1 as usize].z.total_cmp(&points[b.1 as usize].z))
                .then(a.1.cmp(&b.1))
        });
        lowest.dedup_by_key(|e| e.0);

        let mut profile = Profile::default();
        for &(_, i) in &lowest {
            let (r, z) = (ranges[i as usize], points[i as usize].z);
            match profile.nodes.last() {
                None => profile.nodes.push((r, z)),
                Some(&(r0, z0)) => {
                    let slope = (z - z0).atan2(r - r0);
                    if slope <= params.max_ground_slope {
                        profile.nodes.push((r, z));
                    } else {
                        profile.nodes.push((r, z0));
                    }
                }
            }
        }

        let t = params.ground_distance_threshold;
        for &i in member {
            let i = i as usize;
            let h = points[i].z - profile.height_at(ranges[i]);
            labels[i] = if h.abs() <= t {
                Label::Ground
            } else if h > t {
                Label::Obstacle
            } else {
                Label::Unassigned
            };
        }
    }

    let mut ground = Vec::new();
    let mut obstacle = Vec::new();
    let mut unassigned = Vec::new();
    for (p, label) in points.iter().zip(&labels) {
        match label {
            Label::Ground => ground.push(*p),
            Label::Obstacle => obstacle.push(*p),
            Label::Unassigned => unassigned.push(*p),
        }
    }
    Ok(SegmentedCloud {
        ground: cloud.with_points(ground),
        obstacle: cloud.with_points(obstacle),
        unassigned: cloud.with_points(unassigned),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_floor(extent: f64, step: f64, z: impl Fn(f64, f64) -> f64) -> Vec<Point3> {
        let n = (2.0 * extent / step) as i32;
        let mut pts = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                let x = -extent + i as f64 * step;
                let y = -extent + j as f64 * step;
                pts.push(Point3::new(x, y, z(x, y)));
            }
        }
        pts
    }

    #[test]
    fn flat_floor_is_all_ground() {
        let cloud = PointCloud::new(grid_floor(8.0, 0.1, |_, _| 0.0), "ego", 0.0).unwrap();
        let seg = segment(
            &cloud,
            &SegmentationParams::default(),
            &Point3::new(0.0, 0.0, 0.7),
        )
        .unwrap();
        assert_eq!(seg.ground.len(), cloud.len());
        assert!(seg.obstacle.is_empty());
    }

    #[test]
    fn empty_input_is_an_error() {
        let cloud = PointCloud::empty("ego", 0.0);
        assert_eq!(
            segment(&cloud, &SegmentationParams::default(), &Point3::default()),
            Err(SegmentationError::EmptyCloud)
        );
    }

    #[test]
    fn points_beyond_range_are_unassigned() {
        let params = SegmentationParams {
            max_range: 3.0,
            ..SegmentationParams::default()
        };
        let cloud = PointCloud::new(grid_floor(5.0, 0.25, |_, _| 0.0), "ego", 0.0).unwrap();
        let seg = segment(&cloud, &params, &Point3::default()).unwrap();
        assert!(seg.unassigned.points().iter().all(|p| p.x.hypot(p.y) > 3.0));
        assert!(seg.ground.points().iter().all(|p| p.x.hypot(p.y) <= 3.0));
        assert_eq!(seg.len(), cloud.len());
    }

    #[test]
    fn rejects_bad_params() {
        let bad = SegmentationParams {
            sector_count: 3,
            ..SegmentationParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = SegmentationParams {
            bin_length: 0.0,
            ..SegmentationParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sector_quadrant_rotation_is_exact() {
        for &(x, y) in &[(1.0, 0.0), (0.3, 2.0), (-1.0, 0.2), (1e-3, -4.0), (0.7, 0.7)] {
            let s = sector_of(x, y, 180);
            assert_eq!(sector_of(-y, x, 180), (s + 45) % 180);
        }
    }
}
