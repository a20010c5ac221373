use serde::{Deserialize, Serialize};

use crate::geometry::{Grid2D, GridIndex, GridShape, PointCloud, PoseSE3};
use crate::traversability::{CellAssessment, HazardFlags};

/// Log-odds increments and limits of the occupancy belief.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefParams {
    pub l_hit: f64,
    pub l_miss: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// Cells with probability strictly above this are occupied.
    pub occupied_threshold: f64,
}

impl Default for BeliefParams {
    fn default() -> Self {
        Self {
            l_hit: (0.7f64 / 0.3).ln(),
            l_miss: (0.4f64 / 0.6).ln(),
            l_min: -5.0,
            l_max: 5.0,
            occupied_threshold: 0.7,
        }
    }
}

pub fn probability(log_odds: f64) -> f64 {
    1.0 / (1.0 + (-log_odds).exp())
}

/// Planar occupancy grid in log-odds form.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyBelief {
    log_odds: Grid2D<f64>,
    observed: Vec<bool>,
    params: BeliefParams,
}

impl OccupancyBelief {
    pub fn new(shape: GridShape, params: BeliefParams) -> Self {
        Self {
            log_odds: Grid2D::filled(shape, 0.0),
            observed: vec![false; shape.len()],
            params,
        }
    }

    pub fn shape(&self) -> &GridShape {
        self.log_odds.shape()
    }

    pub fn params(&self) -> &BeliefParams {
        &self.params
    }

    pub fn log_odds(&self) -> &Grid2D<f64> {
        &self.log_odds
    }

    pub fn is_observed(&self, index: GridIndex) -> bool {
        self.observed[self.shape().linear(index)]
    }

    pub fn probability_at(&self, index: GridIndex) -> Option<f64> {
        self.log_odds.get(index).map(|l| probability(*l))
    }

    /// Resets every cell to the prior.
    pub fn clear(&mut self) {
        self.log_odds.cells_mut().fill(0.0);
        self.observed.fill(false);
    }

    fn add(&mut self, index: GridIndex, delta: f64) {
        let k = self.shape().linear(index);
        let cell = &mut self.log_odds.cells_mut()[k];
        *cell = (*cell + delta).clamp(self.params.l_min, self.params.l_max);
        self.observed[k] = true;
    }

    /// Moves the grid to `shape`, keeping the values of overlapping cells. Both
    /// shapes must share resolution and lattice.
    pub fn recenter(&mut self, shape: GridShape) {
        let old = self.clone();
        *self = Self::new(shape, self.params);
        let old_shape = *old.shape();
        for k in 0..shape.len() {
            let idx = shape.unlinear(k);
            let (x, y) = shape.grid_to_world(idx);
            if let Some(src) = old_shape.world_to_grid(x, y) {
                let j = old_shape.linear(src);
                self.log_odds.cells_mut()[k] = old.log_odds.cells()[j];
                self.observed[k] = old.observed[j];
            }
        }
    }
}

/// Cells crossed by the segment between two cell indices, in order, both ends
/// included (integer Bresenham, deterministic and symmetric in effort).
pub fn ray_cells(from: (i64, i64), to: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push((x, y));
        if (x, y) == to {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn cell_of(shape: &GridShape, x: f64, y: f64) -> (i64, i64) {
    (
        ((x - shape.origin_x) / shape.resolution).floor() as i64,
        ((y - shape.origin_y) / shape.resolution).floor() as i64,
    )
}

fn in_grid(shape: &GridShape, c: (i64, i64)) -> Option<GridIndex> {
    (c.0 >= 0 && c.1 >= 0 && (c.0 as usize) < shape.width && (c.1 as usize) < shape.height)
        .then(|| GridIndex::new(c.0 as usize, c.1 as usize))
}

/// Integrates one scan: every beam lowers the cells it crosses by `l_miss` and
/// raises its endpoint cell by `l_hit`. `scan` is expressed in the sensor frame
/// and `sensor_pose` places it in the belief frame.
pub fn occupancy_update(
    mut belief: OccupancyBelief,
    scan: &PointCloud,
    sensor_pose: &PoseSE3,
) -> OccupancyBelief {
    integrate(&mut belief, scan, sensor_pose);
    belief
}

pub(crate) fn integrate(belief: &mut OccupancyBelief, scan: &PointCloud, sensor_pose: &PoseSE3) {
    let shape = *belief.shape();
    let from = cell_of(&shape, sensor_pose.x, sensor_pose.y);
    let (l_hit, l_miss) = (belief.params.l_hit, belief.params.l_miss);
    for p in scan.points() {
        let w = sensor_pose.transform_point(p);
        let to = cell_of(&shape, w.x, w.y);
        let cells = ray_cells(from, to);
        let (end, pass) = cells.split_last().expect("ray has an endpoint");
        for &c in pass {
            if let Some(idx) = in_grid(&shape, c) {
                belief.add(idx, l_miss);
            }
        }
        if let Some(idx) = in_grid(&shape, *end) {
            belief.add(idx, l_hit);
        }
    }
}

/// Occupied cells are LETHAL, never observed cells UNKNOWN, the rest free.
pub fn belief_to_costmap(belief: &OccupancyBelief) -> Grid2D<CellAssessment> {
    let threshold = belief.params.occupied_threshold;
    let cells = belief
        .log_odds
        .cells()
        .iter()
        .zip(&belief.observed)
        .map(|(&l, &seen)| {
            if probability(l) > threshold {
                CellAssessment::lethal(HazardFlags::POSITIVE_OBSTACLE)
            } else if !seen {
                CellAssessment::UNKNOWN
            } else {
                CellAssessment::free()
            }
        })
        .collect();
    Grid2D::from_cells(*belief.shape(), cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::traversability::CellCost;

    fn belief() -> OccupancyBelief {
        OccupancyBelief::new(GridShape::new(0.0, 0.0, 1.0, 10, 10), BeliefParams::default())
    }

    #[test]
    fn single_hit_matches_bayes() {
        let scan = PointCloud::new(vec![Point3::new(5.0, 0.0, 0.0)], "s", 0.0).unwrap();
        let b = occupancy_update(belief(), &scan, &PoseSE3::new(0.5, 0.5, 0.0, 0.0, 0.0, 0.0));
        let end = *b.log_odds().get(GridIndex::new(5, 0)).unwrap();
        assert!((end - 0.847_297_860_387_203_8).abs() < 1e-9);
        let passed = *b.log_odds().get(GridIndex::new(2, 0)).unwrap();
        assert!((passed - (0.4f64 / 0.6).ln()).abs() < 1e-12);
        assert!(!b.is_observed(GridIndex::new(5, 5)));
        assert_eq!(*b.log_odds().get(GridIndex::new(5, 5)).unwrap(), 0.0);
    }

    #[test]
    fn fresh_belief_is_unknown_and_threshold_is_strict() {
        let b = belief();
        assert!(belief_to_costmap(&b).cells().iter().all(|c| c.cost == CellCost::Unknown));
        let l = (0.7f64 / 0.3).ln();
        let params = BeliefParams { occupied_threshold: probability(l), ..BeliefParams::default() };
        let mut b = OccupancyBelief::new(GridShape::new(0.0, 0.0, 1.0, 4, 4), params);
        b.add(GridIndex::new(1, 1), l);
        let c = belief_to_costmap(&b);
        assert_eq!(c.get(GridIndex::new(1, 1)).unwrap().cost, CellCost::FREE);
        b.add(GridIndex::new(1, 1), 1e-6);
        assert!(belief_to_costmap(&b).get(GridIndex::new(1, 1)).unwrap().cost.is_lethal());
    }

    #[test]
    fn clamp_bounds_log_odds() {
        let pts = vec![Point3::new(3.0, 3.0, 0.0); 40];
        let scan = PointCloud::new(pts, "s", 0.0).unwrap();
        let b = occupancy_update(belief(), &scan, &PoseSE3::new(0.5, 0.5, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(*b.log_odds().get(GridIndex::new(3, 3)).unwrap(), 5.0);
        assert_eq!(*b.log_odds().get(GridIndex::new(1, 1)).unwrap(), -5.0);
    }

    #[test]
    fn ray_cells_are_connected() {
        let cells = ray_cells((0, 0), (7, -3));
        assert_eq!(cells.first(), Some(&(0, 0)));
        assert_eq!(cells.last(), Some(&(7, -3)));
        for w in cells.windows(2) {
            assert!((w[1].0 - w[0].0).abs() <= 1 && (w[1].1 - w[0].1).abs() <= 1);
        }
    }

    #[test]
    fn recenter_keeps_overlap() {
        let mut b = belief();
        b.add(GridIndex::new(6, 6), 1.0);
        b.recenter(GridShape::new(5.0, 5.0, 1.0, 10, 10));
        assert_eq!(*b.log_odds().get(GridIndex::new(1, 1)).unwrap(), 1.0);
        assert!(b.is_observed(GridIndex::new(1, 1)));
        assert!(!b.is_observed(GridIndex::new(9, 9)));
    }
}
