//! Binary grid snapshots and CSV field dumps.
//!
//! Binary layout (all little-endian):
//!
//! | offset | size | content                  |
//! |--------|------|--------------------------|
//! | 0      | 8    | magic `MKSNAP01`         |
//! | 8      | 8    | `nx` as u64              |
//! | 16     | 8    | `nv` as u64              |
//! | 24     | 8    | `t` as f64               |
//! | 32     | 8·nx·nv | values as f64, x outer, v inner |

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{DensityArray, PhaseGrid};

pub const MAGIC: &[u8; 8] = b"MKSNAP01";
pub const HEADER_LEN: usize = 32;

/// A row-major `nx × nv` table tagged with a time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSnapshot {
    pub nx: usize,
    pub nv: usize,
    pub t: f64,
    pub values: Vec<f64>,
}

impl GridSnapshot {
    pub fn from_density(arr: &DensityArray, t: f64) -> Self {
        Self { nx: arr.grid().nx(), nv: arr.grid().nv(), t, values: arr.values().to_vec() }
    }

    pub fn into_density(self) -> Result<DensityArray> {
        let grid = PhaseGrid::new(self.nx, self.nv)?;
        DensityArray::from_values(grid, self.values)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        if self.values.len() != self.nx * self.nv {
            return Err(Error::Format("value count does not match nx·nv".into()));
        }
        w.write_all(MAGIC)?;
        w.write_all(&(self.nx as u64).to_le_bytes())?;
        w.write_all(&(self.nv as u64).to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        let mut body = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            body.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&body)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
        if &header[..8] != MAGIC {
            return Err(Error::Format("bad magic, expected MKSNAP01".into()));
        }
        let word = |k: usize| <[u8; 8]>::try_from(&header[8 * k..8 * (k + 1)]).unwrap();
        let nx = u64::from_le_bytes(word(1)) as usize;
        let nv = u64::from_le_bytes(word(2)) as usize;
        let t = f64::from_le_bytes(word(3));
        let count = nx
            .checked_mul(nv)
            .filter(|c| *c > 0 && *c <= (1 << 31))
            .ok_or_else(|| Error::Format(format!("implausible grid size {nx}x{nv}")))?;
        let mut body = vec![0u8; 8 * count];
        r.read_exact(&mut body).map_err(|e| Error::Format(format!("truncated body: {e}")))?;
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self { nx, nv, t, values })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

/// `x,v,t,a` rows, shortest round-trip float formatting.
pub fn write_field_csv<W: Write>(mut w: W, xs: &[f64], vs: &[f64], t: f64, values: &[f64]) -> Result<()> {
    writeln!(w, "x,v,t,a")?;
    for (i, x) in xs.iter().enumerate() {
        for (j, v) in vs.iter().enumerate() {
            writeln!(w, "{x},{v},{t},{}", values[i * vs.len() + j])?;
        }
    }
    Ok(())
}
