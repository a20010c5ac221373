use super::cloud::FootprintRect;
use super::Point3;

/// Uniform xy bucket grid over a fixed point set, stored contiguously per
/// bucket for fast rectangle queries. Within a bucket, input order is kept.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    min_x: f64,
    min_y: f64,
    bucket: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    points: Vec<Point3>,
}

impl SpatialIndex {
    pub fn new(points: &[Point3], bucket: f64) -> Self {
        assert!(bucket > 0.0, "bucket size must be positive");
        if points.is_empty() {
            return Self {
                min_x: 0.0,
                min_y: 0.0,
                bucket,
                nx: 0,
                ny: 0,
                starts: vec![0],
                points: Vec::new(),
            };
        }
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let nx = ((max_x - min_x) / bucket).floor() as usize + 1;
        let ny = ((max_y - min_y) / bucket).floor() as usize + 1;
        let key = |p: &Point3| {
            let bx = (((p.x - min_x) / bucket).floor() as usize).min(nx - 1);
            let by = (((p.y - min_y) / bucket).floor() as usize).min(ny - 1);
            by * nx + bx
        };
        let mut counts = vec![0u32; nx * ny + 1];
        for p in points {
            counts[key(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut cursor = counts;
        let mut sorted = vec![Point3::default(); points.len()];
        for p in points {
            let k = key(p);
            sorted[cursor[k] as usize] = *p;
            cursor[k] += 1;
        }
        Self {
            min_x,
            min_y,
            bucket,
            nx,
            ny,
            starts,
            points: sorted,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn bucket_range(&self, lo: f64, hi: f64, min: f64, n: usize) -> Option<(usize, usize)> {
        if n == 0 {
            return None;
        }
        let a = ((lo - min) / self.bucket).floor();
        let b = ((hi - min) / self.bucket).floor();
        if b < 0.0 || a >= n as f64 {
            return None;
        }
        Some((a.max(0.0) as usize, (b as usize).min(n - 1)))
    }

    fn buckets_in(
        &self,
        min_x: f64,
        min_y: f64,
        max_x: f64,
        max_y: f64,
    ) -> Option<((usize, usize), (usize, usize))> {
        let xr = self.bucket_range(min_x, max_x, self.min_x, self.nx)?;
        let yr = self.bucket_range(min_y, max_y, self.min_y, self.ny)?;
        Some((xr, yr))
    }

    #[inline]
    fn slice(&self, bx: usize, by: usize) -> &[Point3] {
        let k = by * self.nx + bx;
        &self.points[self.starts[k] as usize..self.starts[k + 1] as usize]
    }

    /// Calls `f` for every point inside the footprint rectangle.
    pub fn for_each_in_rect(&self, rect: &FootprintRect, mut f: impl FnMut(&Point3)) {
        let (ax, ay, bx, by) = rect.aabb();
        let Some(((x0, x1), (y0, y1))) = self.buckets_in(ax, ay, bx, by) else {
            return;
        };
        for j in y0..=y1 {
            let cy0 = self.min_y + j as f64 * self.bucket;
            for i in x0..=x1 {
                let pts = self.slice(i, j);
                if pts.is_empty() {
                    continue;
                }
                let cx0 = self.min_x + i as f64 * self.bucket;
                let (cx1, cy1) = (cx0 + self.bucket, cy0 + self.bucket);
                let inside = rect.contains(cx0, cy0)
                    && rect.contains(cx1, cy0)
                    && rect.contains(cx0, cy1)
                    && rect.contains(cx1, cy1);
                if inside {
                    // The rectangle is convex, so the whole bucket is covered.
                    pts.iter().for_each(&mut f);
                } else {
                    pts.iter().filter(|p| rect.contains(p.x, p.y)).for_each(&mut f);
                }
            }
        }
    }

    pub fn collect_in_rect(&self, rect: &FootprintRect, out: &mut Vec<Point3>) {
        out.clear();
        self.for_each_in_rect(rect, |p| out.push(*p));
    }

    /// Calls `f` for every point within the closed axis-aligned box.
    pub fn for_each_in_box(
        &self,
        min_x: f64,
        min_y: f64,
        max_x: f64,
        max_y: f64,
        mut f: impl FnMut(&Point3),
    ) {
        let Some(((x0, x1), (y0, y1))) = self.buckets_in(min_x, min_y, max_x, max_y) else {
            return;
        };
        for j in y0..=y1 {
            for i in x0..=x1 {
                self.slice(i, j)
                    .iter()
                    .filter(|p| p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y)
                    .for_each(&mut f);
            }
        }
    }

    /// Whether any point satisfies `pred` within the closed axis-aligned box.
    pub fn any_in_box(
        &self,
        min_x: f64,
        min_y: f64,
        max_x: f64,
        max_y: f64,
        mut pred: impl FnMut(&Point3) -> bool,
    ) -> bool {
        let Some(((x0, x1), (y0, y1))) = self.buckets_in(min_x, min_y, max_x, max_y) else {
            return false;
        };
        for j in y0..=y1 {
            for i in x0..=x1 {
                if self.slice(i, j).iter().any(|p| {
                    p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y && pred(p)
                }) {
                    return true;
                }
            }
        }
        false
    }
}
