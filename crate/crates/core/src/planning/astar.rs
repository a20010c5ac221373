use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::PlanningError;
use crate::geometry::{Grid2D, PoseSE2};
use crate::traversability::{CellAssessment, CellCost};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPlannerConfig {
    /// Weight `w` in `length · (1 + w · cost)`.
    pub cost_weight: f64,
    /// Cost assigned to UNKNOWN cells; `None` makes them impassable.
    pub unknown_cost: Option<f64>,
    /// Plan out of a start cell that is not traversable instead of failing.
    pub allow_blocked_start: bool,
}

impl Default for GridPlannerConfig {
    fn default() -> Self {
        Self { cost_weight: 10.0, unknown_cost: None, allow_blocked_start: false }
    }
}

impl GridPlannerConfig {
    /// UNKNOWN cells priced at 0.5 instead of impassable.
    pub fn optimistic() -> Self {
        Self { unknown_cost: Some(0.5), ..Self::default() }
    }

    fn cell_cost(&self, cell: &CellAssessment) -> Option<f64> {
        match cell.cost {
            CellCost::Cost(c) => Some(c),
            CellCost::Lethal => None,
            CellCost::Unknown => self.unknown_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSE2 {
    pub waypoints: Vec<PoseSE2>,
    pub total_cost: f64,
    /// `total_cost` in fixed-point units of 2⁻³², summed exactly.
    pub cost_units: u64,
}

const SCALE: f64 = 4_294_967_296.0;

/// Cost of stepping `length` metres into a cell of soft cost `cell_cost`.
pub fn step_cost(length: f64, cell_cost: f64, weight: f64) -> f64 {
    length * (1.0 + weight * cell_cost)
}

/// Fixed-point representation used by the search, so that path costs add
/// exactly and different search orders agree bit for bit.
pub fn quantize(cost: f64) -> u64 {
    (cost * SCALE).round() as u64
}

const NEIGHBOURS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

pub fn plan_geometric(
    costmap: &Grid2D<CellAssessment>,
    start: &PoseSE2,
    goal: &PoseSE2,
) -> Result<PathSE2, PlanningError> {
    plan_geometric_with(costmap, start, goal, &GridPlannerConfig::default())
}

/// 8-connected A* with a Euclidean heuristic. The step cost is charged on the
/// destination cell. Ties break on `(f, h, row-major index)`.
pub fn plan_geometric_with(
    costmap: &Grid2D<CellAssessment>,
    start: &PoseSE2,
    goal: &PoseSE2,
    config: &GridPlannerConfig,
) -> Result<PathSE2, PlanningError> {
    let shape = *costmap.shape();
    let s = shape.world_to_grid(start.x, start.y).ok_or(PlanningError::OutOfGrid("start"))?;
    let g = shape.world_to_grid(goal.x, goal.y).ok_or(PlanningError::OutOfGrid("goal"))?;
    let start_cell = costmap.get(s).expect("in grid");
    if start_cell.cost.is_lethal() && !config.allow_blocked_start {
        return Err(PlanningError::StartBlocked);
    }
    let cells = costmap.cells();
    if config.cell_cost(costmap.get(g).expect("in grid")).is_none() && s != g {
        return Err(PlanningError::NoPath);
    }

    let res = shape.resolution;
    let (gx, gy) = (g.ix as f64, g.iy as f64);
    let heuristic = |k: usize| -> u64 {
        let i = shape.unlinear(k);
        let d = (i.ix as f64 - gx).hypot(i.iy as f64 - gy) * res;
        (d * SCALE * (1.0 - 1e-6)).floor() as u64
    };
    let (w, h) = (shape.width as i64, shape.height as i64);
    let diag = res * std::f64::consts::SQRT_2;

    let n = shape.len();
    let mut best = vec![u64::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let (sk, gk) = (shape.linear(s), shape.linear(g));
    best[sk] = 0;
    heap.push(Reverse((heuristic(sk), heuristic(sk), sk)));

    while let Some(Reverse((f, hk, k))) = heap.pop() {
        let gk_cost = best[k];
        if f != gk_cost + hk {
            continue; // stale entry
        }
        if k == gk {
            break;
        }
        let i = shape.unlinear(k);
        for (dx, dy) in NEIGHBOURS {
            let (nx, ny) = (i.ix as i64 + dx, i.iy as i64 + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let nk = ny as usize * shape.width + nx as usize;
            let Some(c) = config.cell_cost(&cells[nk]) else { continue };
            let len = if dx != 0 && dy != 0 { diag } else { res };
            let cand = gk_cost + quantize(step_cost(len, c, config.cost_weight));
            if cand < best[nk] {
                best[nk] = cand;
                parent[nk] = k;
                let hn = heuristic(nk);
                heap.push(Reverse((cand + hn, hn, nk)));
            }
        }
    }
    if best[gk] == u64::MAX {
        return Err(PlanningError::NoPath);
    }

    let mut chain = vec![gk];
    while let Some(&k) = chain.last() {
        if k == sk {
            break;
        }
        chain.push(parent[k]);
    }
    chain.reverse();

    let mut total = 0.0;
    for pair in chain.windows(2) {
        let (a, b) = (shape.unlinear(pair[0]), shape.unlinear(pair[1]));
        let len = if a.ix != b.ix && a.iy != b.iy { diag } else { res };
        let c = config.cell_cost(&cells[pair[1]]).expect("path cells are passable");
        total += step_cost(len, c, config.cost_weight);
    }
    let centres: Vec<(f64, f64)> = chain.iter().map(|&k| shape.grid_to_world(shape.unlinear(k))).collect();
    let mut waypoints = Vec::with_capacity(centres.len());
    for (j, &(x, y)) in centres.iter().enumerate() {
        let yaw = match (centres.get(j + 1), j.checked_sub(1).map(|p| centres[p])) {
            (Some(&(nx, ny)), _) => (ny - y).atan2(nx - x),
            (None, Some((px, py))) => (y - py).atan2(x - px),
            (None, None) => goal.yaw,
        };
        waypoints.push(PoseSE2::new(x, y, yaw));
    }
    Ok(PathSE2 { waypoints, total_cost: total, cost_units: best[gk] })
}

/// Reachable cell closest to `goal`, for goals in unobserved or blocked space.
/// Returns the goal cell itself when it is reachable.
pub fn reachable_subgoal(
    costmap: &Grid2D<CellAssessment>,
    start: &PoseSE2,
    goal: &PoseSE2,
    config: &GridPlannerConfig,
) -> Option<PoseSE2> {
    let shape = *costmap.shape();
    let s = shape.world_to_grid(start.x, start.y)?;
    let cells = costmap.cells();
    let mut seen = vec![false; shape.len()];
    let mut queue = VecDeque::new();
    let sk = shape.linear(s);
    seen[sk] = true;
    queue.push_back(sk);
    let dist = |k: usize| {
        let (x, y) = shape.grid_to_world(shape.unlinear(k));
        (x - goal.x).hypot(y - goal.y)
    };
    let mut best = (dist(sk), sk);
    while let Some(k) = queue.pop_front() {
        let i = shape.unlinear(k);
        for (dx, dy) in NEIGHBOURS {
            let (nx, ny) = (i.ix as i64 + dx, i.iy as i64 + dy);
            if nx < 0 || ny < 0 || nx >= shape.width as i64 || ny >= shape.height as i64 {
                continue;
            }
            let nk = ny as usize * shape.width + nx as usize;
            if seen[nk] || config.cell_cost(&cells[nk]).is_none() {
                continue;
            }
            seen[nk] = true;
            queue.push_back(nk);
            let d = dist(nk);
            if d < best.0 || (d == best.0 && nk < best.1) {
                best = (d, nk);
            }
        }
    }
    let (x, y) = shape.grid_to_world(shape.unlinear(best.1));
    Some(PoseSE2::new(x, y, goal.yaw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GridIndex, GridShape};
    use crate::traversability::HazardFlags;

    fn grid(w: usize, h: usize) -> Grid2D<CellAssessment> {
        Grid2D::filled(GridShape::new(0.0, 0.0, 1.0, w, h), CellAssessment::free())
    }

    fn centre(ix: usize, iy: usize) -> PoseSE2 {
        PoseSE2::new(ix as f64 + 0.5, iy as f64 + 0.5, 0.0)
    }

    #[test]
    fn open_grid_diagonal() {
        let p = plan_geometric(&grid(5, 5), &centre(0, 0), &centre(4, 4)).unwrap();
        assert_eq!(p.waypoints.len(), 5);
        assert!((p.total_cost - 4.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn wall_with_gap() {
        let mut g = grid(7, 7);
        for iy in 0..7 {
            if iy != 5 {
                *g.get_mut(GridIndex::new(3, iy)).unwrap() = CellAssessment::lethal(HazardFlags::POSITIVE_OBSTACLE);
            }
        }
        let p = plan_geometric(&g, &centre(0, 0), &centre(6, 0)).unwrap();
        assert!(p.waypoints.iter().any(|w| (w.x - 3.5).abs() < 1e-12 && (w.y - 5.5).abs() < 1e-12));
    }

    #[test]
    fn enclosed_goal_has_no_path() {
        let mut g = grid(7, 7);
        for (ix, iy) in [(2, 2), (3, 2), (4, 2), (2, 3), (4, 3), (2, 4), (3, 4), (4, 4)] {
            *g.get_mut(GridIndex::new(ix, iy)).unwrap() = CellAssessment::lethal(HazardFlags::POSITIVE_OBSTACLE);
        }
        assert_eq!(plan_geometric(&g, &centre(0, 0), &centre(3, 3)), Err(PlanningError::NoPath));
        let sub = reachable_subgoal(&g, &centre(0, 0), &centre(3, 3), &GridPlannerConfig::default()).unwrap();
        assert!((sub.x - 3.5).hypot(sub.y - 3.5) <= 2.0 + 1e-9);
    }

    #[test]
    fn unknown_is_impassable_unless_optimistic() {
        let mut g = grid(3, 1);
        *g.get_mut(GridIndex::new(1, 0)).unwrap() = CellAssessment::UNKNOWN;
        assert_eq!(plan_geometric(&g, &centre(0, 0), &centre(2, 0)), Err(PlanningError::NoPath));
        let p = plan_geometric_with(&g, &centre(0, 0), &centre(2, 0), &GridPlannerConfig::optimistic()).unwrap();
        assert!((p.total_cost - (1.0 + 6.0)).abs() < 1e-9);
    }

    #[test]
    fn blocked_start_is_rejected_by_default() {
        let mut g = grid(3, 1);
        *g.get_mut(GridIndex::new(0, 0)).unwrap() = CellAssessment::lethal(HazardFlags::TIP_OVER);
        assert_eq!(plan_geometric(&g, &centre(0, 0), &centre(2, 0)), Err(PlanningError::StartBlocked));
        let cfg = GridPlannerConfig { allow_blocked_start: true, ..Default::default() };
        assert!(plan_geometric_with(&g, &centre(0, 0), &centre(2, 0), &cfg).is_ok());
    }
}
