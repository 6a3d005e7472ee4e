//! Field snapshots on disk.
//!
//! Binary format `MGF1`: magic `b"MGF1"`, then `nx`, `ny` as little-endian
//! unsigned 64-bit integers, `lx`, `ly` as little-endian IEEE doubles, then
//! `nx·ny` little-endian doubles in row-major (x slow) order. Writing and
//! reading round-trip bit-exactly.
//!
//! CSV export writes `x,y,value` rows with shortest-round-trip float
//! formatting (also bit-faithful on re-parse).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};

const MAGIC: &[u8; 4] = b"MGF1";

/// Writes a field with its grid geometry.
pub fn write_mgf1(path: &Path, grid: &Grid2D, f: &Field) -> Result<()> {
    if f.nx() != grid.nx() || f.ny() != grid.ny() {
        return Err(Error::DimensionMismatch(format!(
            "write {}: field {}x{} vs grid {}x{}",
            path.display(),
            f.nx(),
            f.ny(),
            grid.nx(),
            grid.ny()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(grid.nx() as u64).to_le_bytes())?;
    w.write_all(&(grid.ny() as u64).to_le_bytes())?;
    w.write_all(&grid.lx().to_le_bytes())?;
    w.write_all(&grid.ly().to_le_bytes())?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// A field read back from disk together with its grid geometry.
#[derive(Debug, Clone)]
pub struct StoredField {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub field: Field,
}

impl StoredField {
    /// Rebuilds the grid this field was sampled on.
    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.nx, self.ny, self.lx, self.ly)
    }
}

/// Reads a field written by [`write_mgf1`].
pub fn read_mgf1(path: &Path) -> Result<StoredField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadFieldFile(format!(
            "{}: bad magic {:?}",
            path.display(),
            magic
        )));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let nx = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let ny = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let lx = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let ly = f64::from_le_bytes(b8);
    let n = nx
        .checked_mul(ny)
        .ok_or_else(|| Error::BadFieldFile(format!("{}: dimension overflow", path.display())))?;
    if n == 0 || n > (1usize << 28) {
        return Err(Error::BadFieldFile(format!(
            "{}: implausible size {nx}x{ny}",
            path.display()
        )));
    }
    let mut raw = vec![0u8; n * 8];
    r.read_exact(&mut raw)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::BadFieldFile(format!(
            "{}: trailing bytes after {n} samples",
            path.display()
        )));
    }
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(StoredField {
        nx,
        ny,
        lx,
        ly,
        field: Field::from_values(nx, ny, values)?,
    })
}

/// Writes `x,y,value` rows for plotting or external tooling.
pub fn write_csv_xyv(path: &Path, grid: &Grid2D, f: &Field) -> Result<()> {
    if f.nx() != grid.nx() || f.ny() != grid.ny() {
        return Err(Error::DimensionMismatch(format!(
            "csv export {}: field {}x{} vs grid {}x{}",
            path.display(),
            f.nx(),
            f.ny(),
            grid.nx(),
            grid.ny()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,value")?;
    for ix in 0..grid.nx() {
        for iy in 0..grid.ny() {
            writeln!(w, "{},{},{}", grid.x(ix), grid.y(iy), f.at(ix, iy))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mgf1_round_trips_bit_exactly() {
        let dir = std::env::temp_dir().join("mgf1_round_trip_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.mgf1");
        let grid = Grid2D::new(16, 24, 7.5, 3.25).unwrap();
        let f = grid.field_from_fn(|x, y| (x * 12.7).sin() * y + f64::MIN_POSITIVE * 3.0);
        write_mgf1(&path, &grid, &f).unwrap();
        let back = read_mgf1(&path).unwrap();
        assert_eq!(back.nx, 16);
        assert_eq!(back.ny, 24);
        assert_eq!(back.lx.to_bits(), 7.5f64.to_bits());
        assert_eq!(back.ly.to_bits(), 3.25f64.to_bits());
        for (a, b) in back.field.values().iter().zip(f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn bad_files_are_rejected() {
        let dir = std::env::temp_dir().join("mgf1_bad_file_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.mgf1");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(read_mgf1(&path), Err(Error::BadFieldFile(_)) | Err(Error::Io(_))));
        // Truncated payload.
        let grid = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let f = grid.zeros();
        write_mgf1(&path, &grid, &f).unwrap();
        let full = std::fs::read(&path).unwrap();
        std::fs::write(&path, &full[..full.len() - 5]).unwrap();
        assert!(read_mgf1(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_export_emits_round_trip_parseable_rows() {
        let dir = std::env::temp_dir().join("csv_export_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        let grid = Grid2D::new(8, 8, 2.0, 2.0).unwrap();
        let f = grid.field_from_fn(|x, y| x * 0.1 + y * std::f64::consts::PI);
        write_csv_xyv(&path, &grid, &f).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        let mut n = 0;
        for (line, (ix, iy)) in lines.zip((0..8).flat_map(|i| (0..8).map(move |j| (i, j)))) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 3);
            assert_eq!(cols[0].parse::<f64>().unwrap().to_bits(), grid.x(ix).to_bits());
            assert_eq!(cols[2].parse::<f64>().unwrap().to_bits(), f.at(ix, iy).to_bits());
            n += 1;
        }
        assert_eq!(n, 64);
        std::fs::remove_dir_all(&dir).ok();
    }
}
