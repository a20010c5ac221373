use std::f64::consts::PI;

use super::assess::Evaluator;
use super::{CellAssessment, CellCost, CoverageModel, FidelityLevel, HazardFlags, RobotModel};
use crate::geometry::{Grid2D, GridIndex, GridShape, PoseSE2};
use crate::segmentation::SegmentedCloud;

#[derive(Debug, Clone, Copy, Default)]
pub struct CostmapOptions<'a> {
    /// Sensor coverage used to separate unobserved ground from missing ground.
    /// Without it every cell counts as observed.
    pub coverage: Option<&'a CoverageModel>,
    /// Leave cells UNKNOWN when their footprint lies outside the bounding box
    /// of the data.
    pub skip_outside_data: bool,
}

/// Yaw samples evenly spaced over half a turn from `base`. The footprint is
/// symmetric under a 180° rotation, so this covers every heading.
pub(crate) fn sample_yaws(base: f64, count: usize) -> Vec<f64> {
    let n = count.max(1);
    (0..n).map(|k| base + k as f64 * PI / n as f64).collect()
}

/// Assesses every cell centre at `yaw_samples` headings and keeps the worst.
pub fn build_costmap(
    segmented: &SegmentedCloud,
    center: &PoseSE2,
    shape: &GridShape,
    yaw_samples: usize,
    model: &RobotModel,
    fidelity: &FidelityLevel,
) -> Grid2D<CellAssessment> {
    build_costmap_with(segmented, center, shape, yaw_samples, model, fidelity, &CostmapOptions::default())
}

pub fn build_costmap_with(
    segmented: &SegmentedCloud,
    center: &PoseSE2,
    shape: &GridShape,
    yaw_samples: usize,
    model: &RobotModel,
    fidelity: &FidelityLevel,
    options: &CostmapOptions<'_>,
) -> Grid2D<CellAssessment> {
    let mut eval = Evaluator::new(segmented, model, *fidelity, options.coverage);
    let yaws = sample_yaws(center.yaw, yaw_samples);
    let bounds = if options.skip_outside_data {
        data_bounds(segmented, 0.5 * model.footprint_length.hypot(model.footprint_width))
    } else {
        None
    };

    let mut cells = Vec::with_capacity(shape.len());
    for iy in 0..shape.height {
        for ix in 0..shape.width {
            let (x, y) = shape.grid_to_world(GridIndex::new(ix, iy));
            if options.skip_outside_data {
                let inside = bounds
                    .map(|(ax, ay, bx, by)| x >= ax && x <= bx && y >= ay && y <= by)
                    .unwrap_or(false);
                if !inside {
                    cells.push(CellAssessment::UNKNOWN);
                    continue;
                }
            }
            let cell = yaws
                .iter()
                .map(|&yaw| eval.assess(&PoseSE2::new(x, y, yaw)))
                .reduce(CellAssessment::worst)
                .expect("at least one yaw sample");
            cells.push(cell);
        }
    }
    Grid2D::from_cells(*shape, cells)
}

/// Marks every cell whose centre lies within `radius` of a cell carrying any
/// of `flags` as LETHAL with those flags.
///
/// The footprint density test only fires once most of the footprint hangs
/// over missing ground, so planners keep this standoff from negative
/// obstacles.
pub fn inflate_flagged(grid: &Grid2D<CellAssessment>, flags: HazardFlags, radius: f64) -> Grid2D<CellAssessment> {
    let shape = *grid.shape();
    let reach = (radius / shape.resolution).floor() as i64;
    let mut out = grid.clone();
    let r2 = (radius / shape.resolution).powi(2) + 1e-9;
    for (idx, cell) in grid.indexed() {
        let hit = cell.flags.intersection(flags);
        if hit.is_empty() {
            continue;
        }
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if (dx * dx + dy * dy) as f64 > r2 {
                    continue;
                }
                let (nx, ny) = (idx.ix as i64 + dx, idx.iy as i64 + dy);
                if nx < 0 || ny < 0 || nx >= shape.width as i64 || ny >= shape.height as i64 {
                    continue;
                }
                let target = out.get_mut(GridIndex::new(nx as usize, ny as usize)).expect("in bounds");
                let merged = target.flags.union(hit);
                *target = CellAssessment { flags: merged, ..CellAssessment::lethal(merged) };
            }
        }
    }
    out
}

/// Raises the cost of known free cells near lethal ones to
/// `peak · (1 − d / radius)`, `d` being the centre distance to the nearest
/// lethal cell. Lethal and unknown cells are left as they are.
pub fn soften_near_lethal(grid: &Grid2D<CellAssessment>, radius: f64, peak: f64) -> Grid2D<CellAssessment> {
    let shape = *grid.shape();
    let reach = (radius / shape.resolution).ceil() as i64;
    let mut out = grid.clone();
    for (idx, cell) in grid.indexed() {
        if cell.cost != CellCost::Lethal {
            continue;
        }
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d = (dx as f64).hypot(dy as f64) * shape.resolution;
                let (nx, ny) = (idx.ix as i64 + dx, idx.iy as i64 + dy);
                if d >= radius || nx < 0 || ny < 0 || nx >= shape.width as i64 || ny >= shape.height as i64 {
                    continue;
                }
                let target = out.get_mut(GridIndex::new(nx as usize, ny as usize)).expect("in bounds");
                if let CellCost::Cost(c) = target.cost {
                    target.cost = CellCost::Cost(c.max(peak * (1.0 - d / radius)));
                }
            }
        }
    }
    out
}

fn data_bounds(segmented: &SegmentedCloud, pad: f64) -> Option<(f64, f64, f64, f64)> {
    let mut it = segmented.ground.points().iter().chain(segmented.obstacle.points()).peekable();
    it.peek()?;
    let (mut ax, mut ay, mut bx, mut by) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in it {
        ax = ax.min(p.x);
        ay = ay.min(p.y);
        bx = bx.max(p.x);
        by = by.max(p.y);
    }
    Some((ax - pad, ay - pad, bx + pad, by + pad))
}
