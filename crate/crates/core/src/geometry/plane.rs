use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Point3};

/// Minimum gap between the two smallest covariance eigenvalues for a plane
/// to be considered determined.
pub const DEGENERATE_EIGEN_GAP: f64 = 1e-12;

/// Plane `normal · p = offset` with `normal.z > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub normal: Vector3<f64>,
    pub offset: f64,
    pub rmse: f64,
    pub support_count: usize,
}

impl PlaneFit {
    /// Height of the plane above `(x, y)`.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        (self.offset - self.normal.x * x - self.normal.y * y) / self.normal.z
    }

    /// Signed orthogonal distance of `p` from the plane, positive on the normal side.
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.to_vector()) - self.offset
    }
}

/// Orthogonal least-squares plane through `points`.
///
/// Uses the eigen-decomposition of the centred scatter matrix; the eigenvector
/// of the smallest eigenvalue is the normal. Fails with `DegenerateFit` for
/// fewer than three points, or when the two smallest eigenvalues cannot be
/// separated (collinear or coincident input).
pub fn fit_plane(points: &[Point3]) -> Result<PlaneFit, GeometryError> {
    let n = points.len();
    if n < 3 {
        return Err(GeometryError::DegenerateFit { count: n });
    }
    let inv_n = 1.0 / n as f64;
    let (mut sx, mut sy, mut sz) = (0.0, 0.0, 0.0);
    for p in points {
        sx += p.x;
        sy += p.y;
        sz += p.z;
    }
    let (mx, my, mz) = (sx * inv_n, sy * inv_n, sz * inv_n);

    let (mut xx, mut xy, mut xz, mut yy, mut yz, mut zz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy, dz) = (p.x - mx, p.y - my, p.z - mz);
        xx += dx * dx;
        xy += dx * dy;
        xz += dx * dz;
        yy += dy * dy;
        yz += dy * dz;
        zz += dz * dz;
    }
    let cov = Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz) * inv_n;
    let eig = SymmetricEigen::new(cov);

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (smallest, middle) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    if middle - smallest < DEGENERATE_EIGEN_GAP {
        return Err(GeometryError::DegenerateFit { count: n });
    }

    let mut normal: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    normal.normalize_mut();
    if normal.z < 0.0 {
        normal = -normal;
    }
    if normal.z <= 0.0 {
        // Vertical plane: no support surface a ground robot can stand on.
        return Err(GeometryError::DegenerateFit { count: n });
    }
    let offset = normal.x * mx + normal.y * my + normal.z * mz;

    let mut sq = 0.0;
    for p in points {
        let r = normal.x * p.x + normal.y * p.y + normal.z * p.z - offset;
        sq += r * r;
    }
    Ok(PlaneFit {
        normal,
        offset,
        rmse: (sq * inv_n).sqrt(),
        support_count: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_triangle() {
        let fit = fit_plane(&[
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ])
        .unwrap();
        assert!((fit.normal - Vector3::z()).norm() < 1e-12);
        assert!(fit.offset.abs() < 1e-12);
        assert!(fit.rmse < 1e-12);
        assert_eq!(fit.support_count, 3);
    }

    #[test]
    fn collinear_and_short_inputs_are_degenerate() {
        let line: Vec<_> = (0..3).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(fit_plane(&line), Err(GeometryError::DegenerateFit { count: 3 })));
        assert!(matches!(
            fit_plane(&line[..2]),
            Err(GeometryError::DegenerateFit { count: 2 })
        ));
        let same = vec![Point3::new(1.0, 1.0, 1.0); 5];
        assert!(fit_plane(&same).is_err());
    }

    #[test]
    fn normal_points_up_even_for_downward_eigenvector() {
        let pts: Vec<_> = (0..25)
            .map(|i| {
                let (x, y) = ((i % 5) as f64, (i / 5) as f64);
                Point3::new(x, y, 0.3 * x - 0.2 * y + 1.0)
            })
            .collect();
        let fit = fit_plane(&pts).unwrap();
        assert!(fit.normal.z > 0.0);
        assert!((fit.normal.norm() - 1.0).abs() < 1e-12);
        assert!((fit.height_at(2.0, 3.0) - (0.6 - 0.6 + 1.0)).abs() < 1e-9);
    }
}
