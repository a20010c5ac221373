use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{GeometryError, Point3, PoseSE2, PoseSE3};

/// An ordered set of finite points in a named frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<Point3>,
    frame_id: String,
    stamp: f64,
}

impl PointCloud {
    /// Validates the frame label and that every coordinate is finite.
    pub fn new(
        points: Vec<Point3>,
        frame_id: impl Into<String>,
        stamp: f64,
    ) -> Result<Self, GeometryError> {
        let frame_id = frame_id.into();
        if frame_id.is_empty() {
            return Err(GeometryError::EmptyFrame);
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite { index });
        }
        Ok(Self {
            points,
            frame_id,
            stamp,
        })
    }

    pub fn empty(frame_id: impl Into<String>, stamp: f64) -> Self {
        let frame_id = frame_id.into();
        assert!(!frame_id.is_empty(), "frame id must not be empty");
        Self {
            points: Vec::new(),
            frame_id,
            stamp,
        }
    }

    /// Same frame and stamp, different points. Caller guarantees finiteness.
    pub(crate) fn with_points(&self, points: Vec<Point3>) -> Self {
        debug_assert!(points.iter().all(Point3::is_finite));
        Self {
            points,
            frame_id: self.frame_id.clone(),
            stamp: self.stamp,
        }
    }

    pub(crate) fn from_trusted(points: Vec<Point3>, frame_id: &str, stamp: f64) -> Self {
        debug_assert!(points.iter().all(Point3::is_finite));
        Self {
            points,
            frame_id: frame_id.to_owned(),
            stamp,
        }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn stamp(&self) -> f64 {
        self.stamp
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Parses the ASCII cloud format: one `x y z` triple per line, `#` comments.
    pub fn read_ascii<R: BufRead>(
        reader: R,
        frame_id: &str,
        stamp: f64,
    ) -> Result<Self, GeometryError> {
        let mut points = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace().map(str::parse::<f64>);
            let mut next = || -> Result<f64, GeometryError> {
                match fields.next() {
                    Some(Ok(v)) if v.is_finite() => Ok(v),
                    Some(Ok(_)) => Err(GeometryError::Parse {
                        line: n + 1,
                        reason: "non-finite coordinate".into(),
                    }),
                    Some(Err(e)) => Err(GeometryError::Parse {
                        line: n + 1,
                        reason: e.to_string(),
                    }),
                    None => Err(GeometryError::Parse {
                        line: n + 1,
                        reason: "expected three coordinates".into(),
                    }),
                }
            };
            let p = Point3::new(next()?, next()?, next()?);
            if fields.next().is_some() {
                return Err(GeometryError::Parse {
                    line: n + 1,
                    reason: "trailing fields".into(),
                });
            }
            points.push(p);
        }
        PointCloud::new(points, frame_id, stamp)
    }

    pub fn write_ascii<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        let mut buf = String::with_capacity(self.points.len() * 24 + 64);
        let _ = writeln!(buf, "# frame {} stamp {}", self.frame_id, self.stamp);
        for p in &self.points {
            let _ = writeln!(buf, "{} {} {}", p.x, p.y, p.z);
        }
        writer.write_all(buf.as_bytes())
    }
}

/// Rotates then translates every point by `pose`; the result is labelled `target_frame`.
pub fn transform_cloud(cloud: &PointCloud, pose: &PoseSE3, target_frame: &str) -> PointCloud {
    let rotation = pose.rotation();
    let translation = pose.translation();
    let points = cloud
        .points
        .iter()
        .map(|p| Point3::from_vector(&(rotation * p.to_vector() + translation)))
        .collect();
    PointCloud::from_trusted(points, target_frame, cloud.stamp)
}

/// Footprint membership test for a yaw-oriented rectangle, boundary inclusive.
#[derive(Debug, Clone, Copy)]
pub struct FootprintRect {
    cx: f64,
    cy: f64,
    cos: f64,
    sin: f64,
    half_length: f64,
    half_width: f64,
}

impl FootprintRect {
    pub fn new(query: &PoseSE2, length: f64, width: f64) -> Self {
        let (sin, cos) = query.yaw.sin_cos();
        Self {
            cx: query.x,
            cy: query.y,
            cos,
            sin,
            half_length: 0.5 * length,
            half_width: 0.5 * width,
        }
    }

    /// Local body-frame coordinates of a world-frame xy.
    #[inline]
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.cx, y - self.cy);
        (self.cos * dx + self.sin * dy, -self.sin * dx + self.cos * dy)
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (lx, ly) = self.to_local(x, y);
        lx.abs() <= self.half_length && ly.abs() <= self.half_width
    }

    /// Axis-aligned bounding box `(min_x, min_y, max_x, max_y)`.
    pub fn aabb(&self) -> (f64, f64, f64, f64) {
        let ex = self.half_length * self.cos.abs() + self.half_width * self.sin.abs();
        let ey = self.half_length * self.sin.abs() + self.half_width * self.cos.abs();
        (self.cx - ex, self.cy - ey, self.cx + ex, self.cy + ey)
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_length * self.half_width
    }
}

/// Points whose xy lies in the `length × width` rectangle centred on `query`
/// and rotated by its yaw. z is unrestricted; input order is preserved.
pub fn crop_footprint(cloud: &PointCloud, query: &PoseSE2, length: f64, width: f64) -> Vec<Point3> {
    let rect = FootprintRect::new(query, length, width);
    cloud
        .points
        .iter()
        .filter(|p| rect.contains(p.x, p.y))
        .copied()
        .collect()
}

/// Keeps the first point falling in each cubic voxel of side `voxel`.
/// Output order follows input order, so the result is deterministic.
pub fn voxel_downsample(cloud: &PointCloud, voxel: f64) -> PointCloud {
    assert!(voxel > 0.0, "voxel size must be positive");
    let inv = 1.0 / voxel;
    let mut seen: HashSet<(i64, i64, i64)> = HashSet::with_capacity(cloud.len());
    let points = cloud
        .points
        .iter()
        .filter(|p| {
            let key = (
                (p.x * inv).floor() as i64,
                (p.y * inv).floor() as i64,
                (p.z * inv).floor() as i64,
            );
            seen.insert(key)
        })
        .copied()
        .collect();
    cloud.with_points(points)
}
