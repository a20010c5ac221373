use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid can land exactly on -π after the shift for inputs like 3π.
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// A point in meters, expressed in whatever frame its owning cloud declares.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.x, self.y, self.z)
    }
}

/// Planar pose: position in meters, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseSE2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl PoseSE2 {
    /// Builds a pose with the heading wrapped into `(-π, π]`.
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: normalize_angle(yaw),
        }
    }

    /// Expresses a point given in this pose's local frame in the parent frame.
    pub fn transform_point(&self, lx: f64, ly: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        (self.x + c * lx - s * ly, self.y + s * lx + c * ly)
    }

    /// Expresses a parent-frame point in this pose's local frame.
    pub fn inverse_transform_point(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (x - self.x, y - self.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// `self ∘ other`: `other` is expressed relative to `self`.
    pub fn compose(&self, other: &PoseSE2) -> PoseSE2 {
        let (x, y) = self.transform_point(other.x, other.y);
        PoseSE2::new(x, y, self.yaw + other.yaw)
    }

    pub fn inverse(&self) -> PoseSE2 {
        let (s, c) = self.yaw.sin_cos();
        PoseSE2::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.yaw)
    }

    /// Pose of `other` relative to `self`.
    pub fn relative(&self, other: &PoseSE2) -> PoseSE2 {
        self.inverse().compose(other)
    }

    pub fn distance(&self, other: &PoseSE2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Full rigid pose. Rotation is `Rz(yaw) · Ry(pitch) · Rx(roll)` (Z-Y-X intrinsic).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseSE3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl PoseSE3 {
    pub fn new(x: f64, y: f64, z: f64, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            z,
            roll,
            pitch,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    /// Lifts a planar pose to z = 0 with zero roll and pitch.
    pub fn from_se2(pose: &PoseSE2) -> Self {
        Self::new(pose.x, pose.y, 0.0, 0.0, 0.0, pose.yaw)
    }

    pub fn to_se2(&self) -> PoseSE2 {
        PoseSE2::new(self.x, self.y, self.yaw)
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.roll, self.pitch, self.yaw)
    }

    pub fn from_parts(translation: &Vector3<f64>, rotation: &Rotation3<f64>) -> Self {
        let (roll, pitch, yaw) = rotation.euler_angles();
        Self::new(translation.x, translation.y, translation.z, roll, pitch, yaw)
    }

    /// Maps a point from this pose's local frame into the parent frame.
    pub fn transform_point(&self, p: &Point3) -> Point3 {
        Point3::from_vector(&(self.rotation() * p.to_vector() + self.translation()))
    }

    pub fn inverse(&self) -> PoseSE3 {
        let r_inv = self.rotation().inverse();
        let t = -(r_inv * self.translation());
        Self::from_parts(&t, &r_inv)
    }

    pub fn compose(&self, other: &PoseSE3) -> PoseSE3 {
        let r = self.rotation() * other.rotation();
        let t = self.rotation() * other.translation() + self.translation();
        Self::from_parts(&t, &r)
    }

    /// Drops roll and pitch: the gravity-aligned frame sharing position and heading.
    pub fn leveled(&self) -> PoseSE3 {
        Self::new(self.x, self.y, self.z, 0.0, 0.0, self.yaw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_is_half_open() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!((normalize_angle(2.0 * PI + 0.25) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn se2_relative_round_trip() {
        let a = PoseSE2::new(1.0, -2.0, 0.7);
        let b = PoseSE2::new(-3.0, 0.5, -2.1);
        let rel = a.relative(&b);
        let back = a.compose(&rel);
        assert!((back.x - b.x).abs() < 1e-12);
        assert!((back.y - b.y).abs() < 1e-12);
        assert!((normalize_angle(back.yaw - b.yaw)).abs() < 1e-12);
    }

    #[test]
    fn se3_inverse_composes_to_identity() {
        let p = PoseSE3::new(1.0, 2.0, 3.0, 0.1, -0.2, 2.5);
        let id = p.compose(&p.inverse());
        for v in [id.x, id.y, id.z, id.roll, id.pitch, id.yaw] {
            assert!(v.abs() < 1e-12, "{v}");
        }
    }
}
