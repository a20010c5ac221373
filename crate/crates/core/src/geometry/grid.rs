use serde::{Deserialize, Serialize};

/// Integer cell coordinates: `ix` along x (columns), `iy` along y (rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex {
    pub ix: usize,
    pub iy: usize,
}

impl GridIndex {
    pub const fn new(ix: usize, iy: usize) -> Self {
        Self { ix, iy }
    }
}

/// Placement and size of a regular grid. Cells are half-open
/// `[origin + k·res, origin + (k+1)·res)` on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub origin_x: f64,
    pub origin_y: f64,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl GridShape {
    pub fn new(origin_x: f64, origin_y: f64, resolution: f64, width: usize, height: usize) -> Self {
        assert!(resolution > 0.0 && resolution.is_finite(), "resolution must be positive");
        Self {
            origin_x,
            origin_y,
            resolution,
            width,
            height,
        }
    }

    /// A square grid of half-extent `range` centred on `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, range: f64, resolution: f64) -> Self {
        let cells = (2.0 * range / resolution).round().max(1.0) as usize;
        let half = 0.5 * cells as f64 * resolution;
        Self::new(cx - half, cy - half, resolution, cells, cells)
    }

    /// Odd-sized square grid with a cell centre exactly at `(cx, cy)`.
    pub fn cell_centered(cx: f64, cy: f64, range: f64, resolution: f64) -> Self {
        let cells = 2 * (range / resolution).round().max(0.0) as usize + 1;
        let half = 0.5 * cells as f64 * resolution;
        Self::new(cx - half, cy - half, resolution, cells, cells)
    }

    /// Like [`GridShape::centered`] but with the origin snapped to a multiple of
    /// the resolution, so cells of successive grids line up in the world.
    pub fn snapped(cx: f64, cy: f64, range: f64, resolution: f64) -> Self {
        let cells = (2.0 * range / resolution).round().max(1.0) as usize;
        let half = 0.5 * cells as f64 * resolution;
        let ox = ((cx - half) / resolution).floor() * resolution;
        let oy = ((cy - half) / resolution).floor() * resolution;
        Self::new(ox, oy, resolution, cells, cells)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `None` is the out-of-bounds value.
    pub fn world_to_grid(&self, x: f64, y: f64) -> Option<GridIndex> {
        let fx = ((x - self.origin_x) / self.resolution).floor();
        let fy = ((y - self.origin_y) / self.resolution).floor();
        if fx >= 0.0 && fy >= 0.0 && fx < self.width as f64 && fy < self.height as f64 {
            Some(GridIndex::new(fx as usize, fy as usize))
        } else {
            None
        }
    }

    /// Centre of a cell in world coordinates.
    pub fn grid_to_world(&self, index: GridIndex) -> (f64, f64) {
        (
            self.origin_x + (index.ix as f64 + 0.5) * self.resolution,
            self.origin_y + (index.iy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn linear(&self, index: GridIndex) -> usize {
        index.iy * self.width + index.ix
    }

    pub fn unlinear(&self, linear: usize) -> GridIndex {
        GridIndex::new(linear % self.width, linear / self.width)
    }

    pub fn contains(&self, index: GridIndex) -> bool {
        index.ix < self.width && index.iy < self.height
    }

    pub fn max_x(&self) -> f64 {
        self.origin_x + self.width as f64 * self.resolution
    }

    pub fn max_y(&self) -> f64 {
        self.origin_y + self.height as f64 * self.resolution
    }
}

/// Row-major grid of cell payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D<T> {
    shape: GridShape,
    cells: Vec<T>,
}

impl<T: Clone> Grid2D<T> {
    pub fn filled(shape: GridShape, value: T) -> Self {
        Self {
            cells: vec![value; shape.len()],
            shape,
        }
    }
}

impl<T> Grid2D<T> {
    pub fn from_cells(shape: GridShape, cells: Vec<T>) -> Self {
        assert_eq!(cells.len(), shape.len(), "cell count must match shape");
        Self { shape, cells }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn get(&self, index: GridIndex) -> Option<&T> {
        self.shape
            .contains(index)
            .then(|| &self.cells[self.shape.linear(index)])
    }

    pub fn get_mut(&mut self, index: GridIndex) -> Option<&mut T> {
        if self.shape.contains(index) {
            let i = self.shape.linear(index);
            Some(&mut self.cells[i])
        } else {
            None
        }
    }

    pub fn at_world(&self, x: f64, y: f64) -> Option<&T> {
        self.shape.world_to_grid(x, y).map(|i| &self.cells[self.shape.linear(i)])
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid2D<U> {
        Grid2D {
            shape: self.shape,
            cells: self.cells.iter().map(f).collect(),
        }
    }

    /// Iterates `(index, cell)` in row-major order.
    pub fn indexed(&self) -> impl Iterator<Item = (GridIndex, &T)> {
        let w = self.shape.width;
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, c)| (GridIndex::new(i % w, i / w), c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_cell_and_boundary() {
        let g = GridShape::new(0.0, 0.0, 0.5, 4, 4);
        assert_eq!(g.world_to_grid(0.49, 0.0), Some(GridIndex::new(0, 0)));
        assert_eq!(g.world_to_grid(0.5, 0.0), Some(GridIndex::new(1, 0)));
        assert_eq!(g.world_to_grid(-1e-9, 0.0), None);
        assert_eq!(g.world_to_grid(2.0, 0.0), None);
    }

    #[test]
    fn centers_round_trip() {
        let g = GridShape::new(-3.7, 12.1, 0.1, 37, 23);
        for iy in 0..g.height {
            for ix in 0..g.width {
                let (x, y) = g.grid_to_world(GridIndex::new(ix, iy));
                assert_eq!(g.world_to_grid(x, y), Some(GridIndex::new(ix, iy)));
            }
        }
    }

    #[test]
    fn cell_centered_puts_a_centre_on_the_query() {
        let g = GridShape::cell_centered(0.0, 0.0, 4.0, 0.1);
        assert_eq!(g.width, 81);
        let idx = g.world_to_grid(0.0, 0.0).unwrap();
        let (x, y) = g.grid_to_world(idx);
        assert!(x.abs() < 1e-12 && y.abs() < 1e-12);
    }

    #[test]
    fn snapped_origin_is_on_lattice() {
        let g = GridShape::snapped(13.37, -4.2, 5.0, 0.25);
        assert_eq!(g.width, 40);
        assert!(((g.origin_x / 0.25) - (g.origin_x / 0.25).round()).abs() < 1e-9);
        assert!(g.origin_x <= 13.37 - 5.0 + 1e-12);
    }
}
