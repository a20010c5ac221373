use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{CoverageModel, FidelityLevel, RobotModel, TraversabilityError};
use crate::geometry::{FootprintRect, Point3, PointCloud, PoseSE2, SpatialIndex};
use crate::segmentation::SegmentedCloud;
use crate::settling::{settle_footprint, SettleMode, SettleStatus, SettledPose};

/// Traversal cost of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CellCost {
    /// Soft cost in `[0, 1]`.
    Cost(f64),
    Lethal,
    Unknown,
}

impl CellCost {
    pub const FREE: CellCost = CellCost::Cost(0.0);

    pub fn is_lethal(&self) -> bool {
        matches!(self, CellCost::Lethal)
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, CellCost::Unknown)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            CellCost::Cost(c) => Some(*c),
            _ => None,
        }
    }

    /// The more pessimistic of two costs: LETHAL over UNKNOWN over any soft cost.
    pub fn worst(self, other: CellCost) -> CellCost {
        match (self, other) {
            (CellCost::Lethal, _) | (_, CellCost::Lethal) => CellCost::Lethal,
            (CellCost::Unknown, _) | (_, CellCost::Unknown) => CellCost::Unknown,
            (CellCost::Cost(a), CellCost::Cost(b)) => CellCost::Cost(a.max(b)),
        }
    }
}

impl fmt::Display for CellCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellCost::Cost(c) => write!(f, "{c:.3}"),
            CellCost::Lethal => f.write_str("LETHAL"),
            CellCost::Unknown => f.write_str("UNKNOWN"),
        }
    }
}

/// Set of hazards detected at a cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HazardFlags(u8);

impl HazardFlags {
    pub const TIP_OVER: HazardFlags = HazardFlags(1);
    pub const POSITIVE_OBSTACLE: HazardFlags = HazardFlags(2);
    pub const NEGATIVE_OBSTACLE: HazardFlags = HazardFlags(4);
    pub const NO_SUPPORT: HazardFlags = HazardFlags(8);

    const NAMES: [(HazardFlags, &'static str); 4] = [
        (Self::TIP_OVER, "TipOver"),
        (Self::POSITIVE_OBSTACLE, "PositiveObstacle"),
        (Self::NEGATIVE_OBSTACLE, "NegativeObstacle"),
        (Self::NO_SUPPORT, "NoSupport"),
    ];

    pub const fn empty() -> Self {
        HazardFlags(0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, other: HazardFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: HazardFlags) {
        self.0 |= other.0;
    }

    pub fn union(self, other: HazardFlags) -> HazardFlags {
        HazardFlags(self.0 | other.0)
    }

    pub fn intersection(self, other: HazardFlags) -> HazardFlags {
        HazardFlags(self.0 & other.0)
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

impl std::ops::BitOr for HazardFlags {
    type Output = HazardFlags;
    fn bitor(self, rhs: HazardFlags) -> HazardFlags {
        self.union(rhs)
    }
}

impl fmt::Display for HazardFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let names: Vec<_> =
            Self::NAMES.iter().filter(|(flag, _)| self.contains(*flag)).map(|(_, n)| *n).collect();
        f.write_str(&names.join("|"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellAssessment {
    pub cost: CellCost,
    pub slope_angle: f64,
    pub colliding_points: usize,
    pub ground_density: f64,
    pub flags: HazardFlags,
}

impl CellAssessment {
    pub const UNKNOWN: CellAssessment = CellAssessment {
        cost: CellCost::Unknown,
        slope_angle: 0.0,
        colliding_points: 0,
        ground_density: 0.0,
        flags: HazardFlags::empty(),
    };

    pub fn free() -> Self {
        CellAssessment { cost: CellCost::FREE, ..Self::UNKNOWN }
    }

    pub fn lethal(flags: HazardFlags) -> Self {
        CellAssessment { cost: CellCost::Lethal, flags, ..Self::UNKNOWN }
    }

    /// Worst-case combination of two assessments of the same cell.
    pub fn worst(self, other: CellAssessment) -> CellAssessment {
        CellAssessment {
            cost: self.cost.worst(other.cost),
            slope_angle: self.slope_angle.max(other.slope_angle),
            colliding_points: self.colliding_points.max(other.colliding_points),
            ground_density: self.ground_density.min(other.ground_density),
            flags: self.flags | other.flags,
        }
    }
}

/// Slope angle of the surface and whether it is within `max_slope` (inclusive).
pub fn check_tipover(normal: &Vector3<f64>, max_slope: f64) -> (f64, bool) {
    let slope = normal.z.clamp(-1.0, 1.0).acos();
    (slope, slope <= max_slope)
}

/// Whether `p` lies inside the body collision box of the settled pose.
///
/// Lateral faces are inclusive; a point exactly on the bottom face is outside.
fn in_body_box(settled: &SettledPose, rot_t: &nalgebra::Matrix3<f64>, bottom: f64, model: &RobotModel, p: &Point3) -> bool {
    let d = Vector3::new(p.x - settled.pose.x, p.y - settled.pose.y, p.z - settled.pose.z);
    // Height first: most candidates are ground points below the box.
    let z = rot_t.row(2).transpose().dot(&d);
    if z <= bottom || z > model.body_height {
        return false;
    }
    rot_t.row(0).transpose().dot(&d).abs() <= 0.5 * model.footprint_length
        && rot_t.row(1).transpose().dot(&d).abs() <= 0.5 * model.footprint_width
}

/// Counts obstacle points inside the oriented body box above the settled plane.
pub fn check_positive_obstacle(
    settled: &SettledPose,
    obstacles: &PointCloud,
    model: &RobotModel,
    fidelity: &FidelityLevel,
) -> Result<(usize, bool), TraversabilityError> {
    if settled.status != SettleStatus::Settled {
        return Err(TraversabilityError::NotSettled);
    }
    let rot_t = settled.pose.rotation().matrix().transpose();
    let bottom = fidelity.box_bottom(model);
    let count = obstacles
        .points()
        .iter()
        .filter(|p| in_body_box(settled, &rot_t, bottom, model, p))
        .count();
    Ok((count, count > model.collision_point_threshold))
}

fn density_check(count: usize, footprint_area: f64, threshold: f64) -> (f64, bool) {
    let density = count as f64 / footprint_area;
    (density, density < threshold)
}

/// Ground-point density under the footprint; too sparse means a possible hole.
pub fn check_negative_obstacle(
    ground_in_footprint: &[Point3],
    footprint_area: f64,
    model: &RobotModel,
) -> (f64, bool) {
    density_check(ground_in_footprint.len(), footprint_area, model.min_ground_density)
}

/// Evaluates cells against a fixed segmented cloud, reusing spatial indices.
pub(crate) struct Evaluator<'a> {
    ground: SpatialIndex,
    obstacle: SpatialIndex,
    model: &'a RobotModel,
    fidelity: FidelityLevel,
    coverage: Option<&'a CoverageModel>,
    min_support: usize,
    min_density: f64,
    scratch: Vec<Point3>,
}

const INDEX_BUCKET: f64 = 0.25;

impl<'a> Evaluator<'a> {
    pub(crate) fn new(
        segmented: &SegmentedCloud,
        model: &'a RobotModel,
        fidelity: FidelityLevel,
        coverage: Option<&'a CoverageModel>,
    ) -> Self {
        Self {
            ground: SpatialIndex::new(segmented.ground.points(), INDEX_BUCKET),
            obstacle: SpatialIndex::new(segmented.obstacle.points(), INDEX_BUCKET),
            model,
            fidelity,
            coverage,
            min_support: fidelity.min_support_points(model),
            min_density: fidelity.min_ground_density(model),
            scratch: Vec::new(),
        }
    }

    fn count_colliding(&self, settled: &SettledPose, slope: f64) -> usize {
        let model = self.model;
        let rot_t = settled.pose.rotation().matrix().transpose();
        let bottom = self.fidelity.box_bottom(model);
        let rect = FootprintRect::new(
            &settled.pose.to_se2(),
            model.footprint_length,
            model.footprint_width,
        );
        // Tilting the box can push its top outward by at most body_height·sin(slope).
        let grow = model.body_height * slope.sin() + 1e-9;
        let (ax, ay, bx, by) = rect.aabb();
        // Ground points count too: a footprint straddling a drop settles on a
        // tilted plane that the upper ground pokes through.
        let mut count = 0;
        for index in [&self.obstacle, &self.ground] {
            index.for_each_in_box(ax - grow, ay - grow, bx + grow, by + grow, |p| {
                if in_body_box(settled, &rot_t, bottom, model, p) {
                    count += 1;
                }
            });
        }
        count
    }

    /// True when every sight line from the sensor to the ground at `(x, y)`
    /// passes under some return, so missing ground is a shadow, not a hole.
    fn occluded(&self, c: &CoverageModel, x: f64, y: f64, ground_z: Option<f64>) -> bool {
        const STEP: f64 = 0.1;
        const SKIP: f64 = 0.3;
        const SLACK: f64 = 0.05;
        c.origins.iter().all(|o| {
            let d = (x - o.x).hypot(y - o.y);
            if d <= 2.0 * SKIP {
                return false;
            }
            let gz = ground_z.unwrap_or(o.z - c.nominal_height);
            let (ux, uy) = ((x - o.x) / d, (y - o.y) / d);
            let blocks = |p: &Point3| {
                let s = (p.x - o.x) * ux + (p.y - o.y) * uy;
                s > 0.0 && s < d && p.z > o.z + (gz - o.z) * s / d + SLACK
            };
            let samples = ((d - 2.0 * SKIP) / STEP).ceil() as usize;
            (0..=samples).any(|k| {
                let s = SKIP + k as f64 * STEP;
                let (px, py) = (o.x + ux * s, o.y + uy * s);
                let h = 0.5 * STEP;
                self.obstacle.any_in_box(px - h, py - h, px + h, py + h, blocks)
                    || self.ground.any_in_box(px - h, py - h, px + h, py + h, blocks)
            })
        })
    }

    pub(crate) fn assess(&mut self, query: &PoseSE2) -> CellAssessment {
        let model = self.model;
        let rect = FootprintRect::new(query, model.footprint_length, model.footprint_width);
        self.ground.collect_in_rect(&rect, &mut self.scratch);
        let (density, sparse) = density_check(self.scratch.len(), rect.area(), self.min_density);
        let covered = match self.coverage {
            None => true,
            Some(c) => {
                let mean_z = if self.scratch.is_empty() {
                    None
                } else {
                    Some(self.scratch.iter().map(|p| p.z).sum::<f64>() / self.scratch.len() as f64)
                };
                c.is_covered(query.x, query.y, mean_z, self.min_density)
                    && !(sparse && self.occluded(c, query.x, query.y, mean_z))
            }
        };
        let settled = settle_footprint(query, &self.scratch, self.min_support, SettleMode::PlaneFit);

        let mut flags = HazardFlags::empty();
        if sparse && covered {
            flags.insert(HazardFlags::NEGATIVE_OBSTACLE);
        }
        let mut slope = 0.0;
        let mut colliding = 0;
        match settled.status {
            SettleStatus::Settled => {
                let (angle, stable) = check_tipover(&settled.normal, model.max_slope);
                slope = angle;
                if !stable {
                    flags.insert(HazardFlags::TIP_OVER);
                }
                colliding = self.count_colliding(&settled, angle);
                if colliding > model.collision_point_threshold {
                    flags.insert(HazardFlags::POSITIVE_OBSTACLE);
                }
            }
            SettleStatus::InsufficientSupport if !sparse && covered => {
                flags.insert(HazardFlags::NO_SUPPORT);
            }
            _ => {}
        }
        let cost = if !flags.is_empty() {
            CellCost::Lethal
        } else if settled.status != SettleStatus::Settled || sparse {
            CellCost::Unknown
        } else {
            CellCost::Cost((slope / model.max_slope).clamp(0.0, 1.0))
        };
        CellAssessment {
            cost,
            slope_angle: slope,
            colliding_points: colliding,
            ground_density: density,
            flags,
        }
    }
}

/// Settles the footprint at `query` and combines all three checks.
pub fn assess_cell(
    query: &PoseSE2,
    segmented: &SegmentedCloud,
    model: &RobotModel,
    fidelity: &FidelityLevel,
) -> CellAssessment {
    Evaluator::new(segmented, model, *fidelity, None).assess(query)
}
