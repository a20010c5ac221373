use std::f64::consts::PI;

use proptest::prelude::*;
use terranav::planning::{
    generate_primitives, plan_geometric, select_primitive, MotionPrimitive, PathSE2, PlanningError,
};
use terranav::{CellAssessment, CellCost, Grid2D, GridShape, HazardFlags, PoseSE2, PoseSE3, RobotModel};

#[derive(Debug, Clone, Copy)]
enum Cell {
    Free(f64),
    Lethal,
    Unknown,
}

fn cell() -> impl Strategy<Value = Cell> {
    prop_oneof![6 => (0.0..1.0f64).prop_map(Cell::Free), 2 => Just(Cell::Lethal), 1 => Just(Cell::Unknown)]
}

fn grid(shape: GridShape, cells: &[Cell]) -> Grid2D<CellAssessment> {
    let cells = cells
        .iter()
        .map(|c| match *c {
            Cell::Free(v) => CellAssessment { cost: CellCost::Cost(v), ..CellAssessment::free() },
            Cell::Lethal => CellAssessment::lethal(HazardFlags::POSITIVE_OBSTACLE),
            Cell::Unknown => CellAssessment::UNKNOWN,
        })
        .collect();
    Grid2D::from_cells(shape, cells)
}

fn block(g: &Grid2D<CellAssessment>, extra: &[usize]) -> Grid2D<CellAssessment> {
    let mut g = g.clone();
    let n = g.cells().len();
    for &k in extra {
        g.cells_mut()[k % n] = CellAssessment::lethal(HazardFlags::POSITIVE_OBSTACLE);
    }
    g
}

/// A small map, a start and a goal given as cell indices.
fn planning_case() -> impl Strategy<Value = (GridShape, Vec<Cell>, (usize, usize), (usize, usize))> {
    (2usize..=12, 2usize..=12).prop_flat_map(|(w, h)| {
        (
            Just(GridShape::new(0.0, 0.0, 0.5, w, h)),
            prop::collection::vec(cell(), w * h),
            (0..w, 0..h),
            (0..w, 0..h),
        )
    })
}

fn centre(shape: &GridShape, (ix, iy): (usize, usize)) -> PoseSE2 {
    let (x, y) = shape.grid_to_world(terranav::GridIndex::new(ix, iy));
    PoseSE2::new(x, y, 0.0)
}

fn primitives() -> Vec<MotionPrimitive> {
    generate_primitives(&RobotModel::husky(), 9, 2.0, 0.1)
}

fn reference(yaw: f64) -> PathSE2 {
    let waypoints = (0..=10).map(|k| PoseSE2::new(0.3 * k as f64 * yaw.cos(), 0.3 * k as f64 * yaw.sin(), yaw)).collect();
    PathSE2 { waypoints, total_cost: 0.0, cost_units: 0 }
}

/// Ego-frame high tier around the robot at the origin.
fn high_tier() -> impl Strategy<Value = Grid2D<CellAssessment>> {
    let shape = GridShape::cell_centered(0.0, 0.0, 3.0, 0.1);
    let n = shape.len();
    prop::collection::vec(prop_oneof![8 => (0.0..1.0f64).prop_map(Cell::Free), 1 => Just(Cell::Lethal)], n)
        .prop_map(move |cells| {
            let mut g = grid(shape, &cells);
            // Blobs make blocked arcs common, not just single pixels.
            let lethal: Vec<usize> = (0..n).filter(|&k| matches!(cells[k], Cell::Lethal)).collect();
            for k in lethal.into_iter().step_by(7) {
                let c = shape.unlinear(k);
                for dy in 0..4 {
                    for dx in 0..4 {
                        let i = terranav::GridIndex::new(c.ix + dx, c.iy + dy);
                        if let Some(cell) = g.get_mut(i) {
                            *cell = CellAssessment::lethal(HazardFlags::POSITIVE_OBSTACLE);
                        }
                    }
                }
            }
            g
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(192))]

    #[test]
    fn extra_lethal_cells_never_make_plans_cheaper(
        (shape, cells, s, g) in planning_case(),
        extra in prop::collection::vec(any::<usize>(), 1..10),
    ) {
        let base = grid(shape, &cells);
        let (start, goal) = (centre(&shape, s), centre(&shape, g));
        let before = plan_geometric(&base, &start, &goal);
        let after = plan_geometric(&block(&base, &extra), &start, &goal);
        match (&before, &after) {
            (Ok(a), Ok(b)) => prop_assert!(b.cost_units >= a.cost_units),
            (Err(_), Ok(_)) => prop_assert!(false, "blocking cells created a path: {:?}", before),
            _ => {}
        }
    }

    #[test]
    fn plans_are_reproducible((shape, cells, s, g) in planning_case()) {
        let map = grid(shape, &cells);
        let (start, goal) = (centre(&shape, s), centre(&shape, g));
        prop_assert_eq!(plan_geometric(&map, &start, &goal), plan_geometric(&map, &start, &goal));
        if let Ok(p) = plan_geometric(&map, &start, &goal) {
            for w in p.waypoints.windows(2) {
                let (a, b) = (shape.world_to_grid(w[0].x, w[0].y).unwrap(), shape.world_to_grid(w[1].x, w[1].y).unwrap());
                prop_assert!(a.ix.abs_diff(b.ix) <= 1 && a.iy.abs_diff(b.iy) <= 1 && a != b);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selected_arc_avoids_lethal_cells(map in high_tier(), yaw in -PI..PI, heading in -PI..PI) {
        let prims = primitives();
        let robot = PoseSE3::new(0.0, 0.0, 0.0, 0.0, 0.0, heading);
        let base = robot.to_se2();
        match select_primitive(&prims, &map, &reference(yaw), &robot) {
            Ok(p) => {
                prop_assert!(!p.is_stop());
                for s in &p.samples {
                    let (x, y) = base.transform_point(s.x, s.y);
                    let c = map.at_world(x, y).expect("sample inside the map");
                    prop_assert!(!c.cost.is_lethal());
                }
            }
            Err(e) => prop_assert_eq!(e, PlanningError::AllBlocked),
        }
    }

    #[test]
    fn blocking_never_turns_all_blocked_into_a_selection(
        map in high_tier(), extra in prop::collection::vec(any::<usize>(), 1..200), yaw in -PI..PI,
    ) {
        let prims = primitives();
        let robot = PoseSE3::identity();
        let path = reference(yaw);
        let before = select_primitive(&prims, &map, &path, &robot).map(|p| p.id);
        let blocked = block(&map, &extra);
        let after = select_primitive(&prims, &blocked, &path, &robot).map(|p| p.id);
        if before.is_err() {
            prop_assert!(after.is_err());
        }
        prop_assert_eq!(select_primitive(&prims, &blocked, &path, &robot).map(|p| p.id), after);
    }
}
