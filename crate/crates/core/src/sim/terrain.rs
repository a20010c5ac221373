use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SimError, STREAM_TERRAIN};
use crate::geometry::{Grid2D, GridIndex, GridShape};

/// Base surface before features are stamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BaseSurface {
    Flat,
    /// `z = gx·x + gy·y`.
    Slope { gx: f64, gy: f64 },
    /// Smooth value noise of the given amplitude and lattice wavelength.
    Rough { amplitude: f64, wavelength: f64 },
}

/// Placed terrain feature. Rectangles are axis-aligned and given by their
/// min/max corners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Feature {
    /// Flat-topped cylinder raised by `height`.
    Rock { x: f64, y: f64, radius: f64, height: f64 },
    /// Box wall between two points.
    Wall { x0: f64, y0: f64, x1: f64, y1: f64, thickness: f64, height: f64 },
    /// Rises along +x at `angle` up to `height`, holds for `plateau`, then
    /// descends symmetrically.
    Ramp { x: f64, y_min: f64, y_max: f64, angle: f64, height: f64, plateau: f64 },
    /// Ascending steps along +x.
    Stairs { x: f64, y_min: f64, y_max: f64, rise: f64, run: f64, steps: usize },
    /// Void: cells become NaN.
    Hole { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
    /// Region lowered by `drop`.
    Cliff { x_min: f64, x_max: f64, y_min: f64, y_max: f64, drop: f64 },
    /// A wall across y at `x` with an opening of `width` centred on `y`.
    NarrowGap { x: f64, y: f64, width: f64, span: f64, thickness: f64, height: f64 },
    /// Floating box above the ground.
    Overhang { x_min: f64, x_max: f64, y_min: f64, y_max: f64, z_min: f64, z_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub size_x: f64,
    pub size_y: f64,
    pub resolution: f64,
    pub base: BaseSurface,
    #[serde(default)]
    pub features: Vec<Feature>,
}

impl TerrainSpec {
    pub fn flat(origin_x: f64, origin_y: f64, size_x: f64, size_y: f64, resolution: f64) -> Self {
        Self { origin_x, origin_y, size_x, size_y, resolution, base: BaseSurface::Flat, features: Vec::new() }
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// Generated world: a heightfield of flat-topped cell columns (NaN for void)
/// plus floating boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainField {
    pub heightfield: Grid2D<f64>,
    pub overhangs: Vec<Aabb>,
    /// Cells the robot centre must never enter.
    pub hazards: Grid2D<bool>,
    pub features: Vec<Feature>,
    pub seed: u64,
    max_height: f64,
}

fn rect_overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1 && a.2 < b.3 && b.2 < a.3
}

fn raised_extent(f: &Feature) -> Option<(f64, f64, f64, f64)> {
    match *f {
        Feature::Rock { x, y, radius, .. } => Some((x - radius, x + radius, y - radius, y + radius)),
        Feature::Wall { x0, y0, x1, y1, thickness, .. } => {
            let t = 0.5 * thickness;
            Some((x0.min(x1) - t, x0.max(x1) + t, y0.min(y1) - t, y0.max(y1) + t))
        }
        Feature::NarrowGap { x, y, span, thickness, .. } => {
            Some((x - 0.5 * thickness, x + 0.5 * thickness, y - span, y + span))
        }
        _ => None,
    }
}

/// Distance from `(px, py)` to the segment `a`–`b`.
fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (px - a.0 - t * dx).hypot(py - a.1 - t * dy)
}

fn value_noise(shape: &GridShape, amplitude: f64, wavelength: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_TERRAIN);
    let nx = (shape.width as f64 * shape.resolution / wavelength).ceil() as usize + 2;
    let ny = (shape.height as f64 * shape.resolution / wavelength).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..nx * ny).map(|_| rng.random_range(-1.0..1.0)).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = Vec::with_capacity(shape.len());
    for iy in 0..shape.height {
        for ix in 0..shape.width {
            let u = (ix as f64 + 0.5) * shape.resolution / wavelength;
            let v = (iy as f64 + 0.5) * shape.resolution / wavelength;
            let (i, j) = (u.floor() as usize, v.floor() as usize);
            let (fu, fv) = (smooth(u - i as f64), smooth(v - j as f64));
            let at = |a: usize, b: usize| lattice[b * nx + a];
            let top = at(i, j) * (1.0 - fu) + at(i + 1, j) * fu;
            let bottom = at(i, j + 1) * (1.0 - fu) + at(i + 1, j + 1) * fu;
            out.push(amplitude * (top * (1.0 - fv) + bottom * fv));
        }
    }
    out
}

/// Builds the world: base surface, then features stamped in spec order.
pub fn generate_terrain(spec: &TerrainSpec, seed: u64) -> Result<TerrainField, SimError> {
    if !(spec.size_x > 0.0 && spec.size_y > 0.0 && spec.resolution > 0.0) {
        return Err(SimError::InvalidSpec("terrain dimensions must be positive".into()));
    }
    let holes: Vec<_> = spec
        .features
        .iter()
        .filter_map(|f| match *f {
            Feature::Hole { x_min, x_max, y_min, y_max } => Some((x_min, x_max, y_min, y_max)),
            _ => None,
        })
        .collect();
    for f in &spec.features {
        if let Some(ext) = raised_extent(f) {
            if holes.iter().any(|h| rect_overlap(ext, *h)) {
                return Err(SimError::InvalidSpec(format!("{f:?} overlaps a hole")));
            }
        }
    }

    let width = (spec.size_x / spec.resolution).round() as usize;
    let height = (spec.size_y / spec.resolution).round() as usize;
    let shape = GridShape::new(spec.origin_x, spec.origin_y, spec.resolution, width, height);
    let mut z: Vec<f64> = match spec.base {
        BaseSurface::Flat => vec![0.0; shape.len()],
        BaseSurface::Slope { gx, gy } => (0..shape.len())
            .map(|k| {
                let (x, y) = shape.grid_to_world(shape.unlinear(k));
                gx * x + gy * y
            })
            .collect(),
        BaseSurface::Rough { amplitude, wavelength } => value_noise(&shape, amplitude, wavelength, seed),
    };
    let mut hazard = vec![false; shape.len()];
    let mut overhangs = Vec::new();

    for f in &spec.features {
        if let Feature::Overhang { x_min, x_max, y_min, y_max, z_min, z_max } = *f {
            overhangs.push(Aabb { min: [x_min, y_min, z_min], max: [x_max, y_max, z_max] });
            continue;
        }
        for k in 0..shape.len() {
            let (x, y) = shape.grid_to_world(shape.unlinear(k));
            let cell = &mut z[k];
            match *f {
                Feature::Rock { x: cx, y: cy, radius, height } => {
                    if (x - cx).hypot(y - cy) <= radius {
                        *cell += height;
                        hazard[k] = true;
                    }
                }
                Feature::Wall { x0, y0, x1, y1, thickness, height } => {
                    if segment_distance(x, y, (x0, y0), (x1, y1)) <= 0.5 * thickness {
                        *cell += height;
                        hazard[k] = true;
                    }
                }
                Feature::NarrowGap { x: gx, y: gy, width, span, thickness, height } => {
                    let dy = (y - gy).abs();
                    if (x - gx).abs() <= 0.5 * thickness && dy > 0.5 * width && dy <= span {
                        *cell += height;
                        hazard[k] = true;
                    }
                }
                Feature::Ramp { x: rx, y_min, y_max, angle, height, plateau } => {
                    if y >= y_min && y <= y_max {
                        let run = height / angle.tan();
                        let u = x - rx;
                        let rise = if u <= 0.0 {
                            0.0
                        } else if u < run {
                            u * angle.tan()
                        } else if u <= run + plateau {
                            height
                        } else {
                            (height - (u - run - plateau) * angle.tan()).max(0.0)
                        };
                        *cell += rise;
                    }
                }
                Feature::Stairs { x: sx, y_min, y_max, rise, run, steps } => {
                    if y >= y_min && y <= y_max && x >= sx {
                        let n = (((x - sx) / run).floor() as usize + 1).min(steps);
                        *cell += n as f64 * rise;
                    }
                }
                Feature::Hole { x_min, x_max, y_min, y_max } => {
                    if x >= x_min && x < x_max && y >= y_min && y < y_max {
                        *cell = f64::NAN;
                        hazard[k] = true;
                    }
                }
                Feature::Cliff { x_min, x_max, y_min, y_max, drop } => {
                    if x >= x_min && x < x_max && y >= y_min && y < y_max {
                        *cell -= drop;
                        hazard[k] = true;
                    }
                }
                Feature::Overhang { .. } => unreachable!(),
            }
        }
    }
    let max_height = z
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max)
        .max(overhangs.iter().map(|b| b.max[2]).fold(f64::NEG_INFINITY, f64::max));
    Ok(TerrainField {
        heightfield: Grid2D::from_cells(shape, z),
        overhangs,
        hazards: Grid2D::from_cells(shape, hazard),
        features: spec.features.clone(),
        seed,
        max_height,
    })
}

impl TerrainField {
    pub fn shape(&self) -> &GridShape {
        self.heightfield.shape()
    }

    /// Column height at a world point; NaN over void and outside the field.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        self.heightfield.at_world(x, y).copied().unwrap_or(f64::NAN)
    }

    pub fn height_of(&self, index: GridIndex) -> f64 {
        self.heightfield.get(index).copied().unwrap_or(f64::NAN)
    }

    /// Whether the world point lies on a hazard cell or off the field.
    pub fn is_hazard(&self, x: f64, y: f64) -> bool {
        self.hazards.at_world(x, y).copied().unwrap_or(true)
    }

    pub fn max_height(&self) -> f64 {
        self.max_height
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_field_is_zero() {
        let t = generate_terrain(&TerrainSpec::flat(0.0, 0.0, 20.0, 20.0, 0.1), 1).unwrap();
        assert!(t.heightfield.cells().iter().all(|z| *z == 0.0));
    }

    #[test]
    fn hole_cells_are_nan_exactly() {
        let mut spec = TerrainSpec::flat(0.0, 0.0, 10.0, 10.0, 0.1);
        spec.features.push(Feature::Hole { x_min: 4.0, x_max: 6.0, y_min: 4.0, y_max: 6.0 });
        let t = generate_terrain(&spec, 1).unwrap();
        let nan = t.heightfield.cells().iter().filter(|z| z.is_nan()).count();
        assert_eq!(nan, 400);
        assert!(t.height_at(5.0, 5.0).is_nan());
        assert_eq!(t.height_at(3.95, 5.0), 0.0);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let mut spec = TerrainSpec::flat(0.0, 0.0, 10.0, 10.0, 0.1);
        spec.base = BaseSurface::Rough { amplitude: 0.05, wavelength: 1.0 };
        spec.features.push(Feature::Rock { x: 5.0, y: 5.0, radius: 0.3, height: 0.4 });
        let a = generate_terrain(&spec, 7).unwrap();
        let b = generate_terrain(&spec, 7).unwrap();
        let c = generate_terrain(&spec, 8).unwrap();
        let bits = |t: &TerrainField| t.heightfield.cells().iter().map(|z| z.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn wall_inside_hole_is_rejected() {
        let mut spec = TerrainSpec::flat(0.0, 0.0, 10.0, 10.0, 0.1);
        spec.features.push(Feature::Hole { x_min: 4.0, x_max: 6.0, y_min: 4.0, y_max: 6.0 });
        spec.features.push(Feature::Wall { x0: 5.0, y0: 3.0, x1: 5.0, y1: 7.0, thickness: 0.2, height: 1.0 });
        assert!(matches!(generate_terrain(&spec, 1), Err(SimError::InvalidSpec(_))));
    }

    #[test]
    fn ramp_profile() {
        let mut spec = TerrainSpec::flat(0.0, -2.0, 10.0, 4.0, 0.05);
        let angle = 25f64.to_radians();
        spec.features.push(Feature::Ramp { x: 2.0, y_min: -2.0, y_max: 2.0, angle, height: 0.5, plateau: 3.0 });
        let t = generate_terrain(&spec, 1).unwrap();
        assert_eq!(t.height_at(1.0, 0.0), 0.0);
        assert!((t.height_at(2.525, 0.0) - 0.525 * angle.tan()).abs() < 1e-12);
        assert_eq!(t.height_at(4.0, 0.0), 0.5);
    }
}
