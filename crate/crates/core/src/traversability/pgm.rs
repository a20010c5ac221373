use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use super::{CellAssessment, CellCost, TraversabilityError};
use crate::geometry::{Grid2D, GridShape};

pub const PGM_LETHAL: u8 = 254;
pub const PGM_UNKNOWN: u8 = 255;

/// Byte encoding: 0 free, 1..=253 soft cost, 254 LETHAL, 255 UNKNOWN.
pub fn encode_cost(cost: &CellCost) -> u8 {
    match cost {
        CellCost::Lethal => PGM_LETHAL,
        CellCost::Unknown => PGM_UNKNOWN,
        CellCost::Cost(c) if *c <= 0.0 => 0,
        CellCost::Cost(c) => 1 + (c.min(1.0) * 252.0).round() as u8,
    }
}

/// Writes a binary PGM (P5). Row `iy = 0` (the grid origin) comes first.
pub fn write_pgm<W: Write>(grid: &Grid2D<CellAssessment>, mut out: W) -> std::io::Result<()> {
    let shape = grid.shape();
    write!(out, "P5\n{} {}\n255\n", shape.width, shape.height)?;
    let bytes: Vec<u8> = grid.cells().iter().map(|c| encode_cost(&c.cost)).collect();
    out.write_all(&bytes)
}

/// Reads a P5 file back as `(width, height, bytes)`.
pub fn read_pgm<R: Read>(input: R) -> Result<(usize, usize, Vec<u8>), TraversabilityError> {
    let mut reader = BufReader::new(input);
    let mut header = Vec::new();
    while header.len() < 4 {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(TraversabilityError::Format("truncated header".into()));
        }
        let line = line.split('#').next().unwrap_or("");
        header.extend(line.split_whitespace().map(str::to_owned));
    }
    if header[0] != "P5" {
        return Err(TraversabilityError::Format(format!("bad magic {}", header[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|_| TraversabilityError::Format(format!("bad number {s}")))
    };
    let (w, h, max) = (parse(&header[1])?, parse(&header[2])?, parse(&header[3])?);
    if max != 255 {
        return Err(TraversabilityError::Format(format!("unsupported maxval {max}")));
    }
    let mut data = vec![0u8; w * h];
    reader
        .read_exact(&mut data)
        .map_err(|_| TraversabilityError::Format("truncated raster".into()))?;
    Ok((w, h, data))
}

/// Sidecar metadata of a costmap dump.
#[derive(Debug, Clone, PartialEq)]
pub struct CostmapMeta {
    pub tier: String,
    pub frame: String,
    pub stamp: f64,
    pub shape: GridShape,
}

impl CostmapMeta {
    fn to_text(&self) -> String {
        format!(
            "tier: {}\nframe: {}\nstamp: {}\norigin_x: {}\norigin_y: {}\nresolution: {}\nwidth: {}\nheight: {}\n",
            self.tier,
            self.frame,
            self.stamp,
            self.shape.origin_x,
            self.shape.origin_y,
            self.shape.resolution,
            self.shape.width,
            self.shape.height
        )
    }
}

/// Writes `<dir>/<stem>.pgm` and `<dir>/<stem>.meta`; returns the PGM path.
pub fn write_costmap(
    dir: &Path,
    stem: &str,
    grid: &Grid2D<CellAssessment>,
    meta: &CostmapMeta,
) -> Result<PathBuf, TraversabilityError> {
    fs::create_dir_all(dir)?;
    let pgm = dir.join(format!("{stem}.pgm"));
    let mut buf = Vec::with_capacity(grid.cells().len() + 32);
    write_pgm(grid, &mut buf)?;
    fs::write(&pgm, buf)?;
    fs::write(dir.join(format!("{stem}.meta")), meta.to_text())?;
    Ok(pgm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_bands() {
        assert_eq!(encode_cost(&CellCost::FREE), 0);
        assert_eq!(encode_cost(&CellCost::Cost(1e-9)), 1);
        assert_eq!(encode_cost(&CellCost::Cost(1.0)), 253);
        assert_eq!(encode_cost(&CellCost::Lethal), 254);
        assert_eq!(encode_cost(&CellCost::Unknown), 255);
    }

    #[test]
    fn round_trip_through_file() {
        let shape = GridShape::new(-1.0, 2.0, 0.5, 3, 2);
        let mut grid = Grid2D::filled(shape, CellAssessment::free());
        grid.cells_mut()[1].cost = CellCost::Lethal;
        grid.cells_mut()[5].cost = CellCost::Unknown;
        let dir = tempfile::tempdir().unwrap();
        let meta = CostmapMeta { tier: "mid".into(), frame: "map".into(), stamp: 4.5, shape };
        let path = write_costmap(dir.path(), "mid_0001", &grid, &meta).unwrap();
        let (w, h, data) = read_pgm(fs::File::open(path).unwrap()).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(data, vec![0, 254, 0, 0, 0, 255]);
        let text = fs::read_to_string(dir.path().join("mid_0001.meta")).unwrap();
        assert!(text.contains("resolution: 0.5") && text.contains("stamp: 4.5"));
    }

    #[test]
    fn rejects_wrong_magic() {
        assert!(read_pgm(&b"P2\n1 1\n255\n0"[..]).is_err());
        assert!(read_pgm(&b"P5\n2 2\n255\n\x00"[..]).is_err());
    }
}
