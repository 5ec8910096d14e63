//! Binary slabs, NDJSON records and number formatting shared by all exporters.
//!
//! Slab layout (noise, trajectories, psi fields): ASCII magic without
//! terminator, `nx: u64`, `nrows: u64`, `dx: f64`, `dt: f64`, then `nrows * nx`
//! row-major `f64`, all little-endian. Field slabs hold rows `0..nrows`.

use std::io::{Read, Write};

use crate::error::{LabError, Result};
use crate::lattice::{LatticeGrid, ScalarField};

pub const TRAJ_MAGIC: &[u8] = b"UTRAJ1";
pub const PSI_MAGIC: &[u8] = b"PSIF1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabHeader {
    pub nx: usize,
    pub nrows: usize,
    pub dx: f64,
    pub dt: f64,
}

pub(crate) fn read_header<R: Read>(r: &mut R, magic: &[u8]) -> Result<SlabHeader> {
    let mut m = vec![0u8; magic.len()];
    r.read_exact(&mut m)
        .map_err(|_| LabError::Format("truncated header".into()))?;
    if m != magic {
        return Err(LabError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut b = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut b)
            .map_err(|_| LabError::Format("truncated header".into()))?;
        Ok(b)
    };
    let nx = u64::from_le_bytes(next(r)?) as usize;
    let nrows = u64::from_le_bytes(next(r)?) as usize;
    let dx = f64::from_le_bytes(next(r)?);
    let dt = f64::from_le_bytes(next(r)?);
    if nx == 0 || !(dx > 0.0) || !(dt > 0.0) {
        return Err(LabError::Format(format!("implausible header nx={nx} dx={dx} dt={dt}")));
    }
    Ok(SlabHeader { nx, nrows, dx, dt })
}

pub(crate) fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| LabError::Format(format!("expected {count} values")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Writes a field whose slices are `0..nrows` as a binary slab.
pub fn write_field_slab<W: Write>(field: &ScalarField, magic: &[u8], mut w: W) -> Result<()> {
    let g = field.grid();
    if field.time_indices().iter().enumerate().any(|(k, &n)| k != n) {
        return Err(LabError::InvalidArgument(
            "slab export needs consecutive slices starting at 0".into(),
        ));
    }
    w.write_all(magic)?;
    w.write_all(&(g.nx as u64).to_le_bytes())?;
    w.write_all(&(field.num_slices() as u64).to_le_bytes())?;
    w.write_all(&g.dx().to_le_bytes())?;
    w.write_all(&g.dt().to_le_bytes())?;
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a field slab; the grid's `nt` is `nrows - 1`.
pub fn read_field_slab<R: Read>(magic: &[u8], mut r: R) -> Result<ScalarField> {
    let h = read_header(&mut r, magic)?;
    if h.nrows == 0 {
        return Err(LabError::Format("empty slab".into()));
    }
    let nt = (h.nrows - 1).max(1);
    let grid = LatticeGrid::new(0.5 * h.nx as f64 * h.dx, h.nx, nt as f64 * h.dt, nt)?;
    let values = read_f64s(&mut r, h.nx * h.nrows)?;
    ScalarField::from_rows(grid, (0..h.nrows).collect(), values)
}

/// 17 significant digits, round-trippable.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// One `{"n":..,"t":..,"u":[..]}` line per slice.
pub fn write_field_ndjson<W: Write>(field: &ScalarField, key: &str, mut w: W) -> Result<()> {
    let g = field.grid();
    let mut line = String::new();
    for (k, &n) in field.time_indices().iter().enumerate() {
        line.clear();
        line.push_str(&format!("{{\"n\":{n},\"t\":{},\"{key}\":[", fmt_num(g.t(n))));
        for (i, v) in field.row(k).iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_num(*v));
        }
        line.push_str("]}\n");
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}
