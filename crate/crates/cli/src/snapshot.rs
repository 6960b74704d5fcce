//! Binary field snapshots.
//!
//! Layout, all little-endian: the bytes `DDC1`, u32 `nx`, u32 `nz`, u32
//! field count, f64 time, then each field as `nx * (nz + 1)` f64 values in
//! storage order (x index outer, wall-to-wall z index inner). Fields come in
//! the order omega, T, S, psi. A restart file holds two levels, eight fields,
//! older level first; its time is that of the newer level.

use std::path::Path;

use ddc_core::{Field, FieldKind, Grid, State};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"DDC1";
const HEADER: usize = 4 + 4 * 3 + 8;

/// A decoded snapshot: one level, or two consecutive levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: u32,
    pub nz: u32,
    pub time: f64,
    pub fields: Vec<Vec<f64>>,
}

const KINDS: [FieldKind; 4] = [FieldKind::DirichletZ, FieldKind::NeumannZ, FieldKind::NeumannZ, FieldKind::DirichletZ];

impl Snapshot {
    pub fn from_levels(levels: &[&State]) -> Self {
        let last = levels[levels.len() - 1];
        let (nx, nzl) = last.omega.shape();
        let mut fields = Vec::with_capacity(4 * levels.len());
        for s in levels {
            for f in [&s.omega, &s.temp, &s.salt, &s.psi] {
                fields.push(f.values().to_vec());
            }
        }
        Self {
            nx: nx as u32,
            nz: (nzl - 1) as u32,
            time: last.time,
            fields,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let per = self.fields.first().map_or(0, Vec::len);
        let mut out = Vec::with_capacity(HEADER + 8 * per * self.fields.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.nx.to_le_bytes());
        out.extend_from_slice(&self.nz.to_le_bytes());
        out.extend_from_slice(&(self.fields.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        for f in &self.fields {
            for v in f {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        if bytes.len() < HEADER {
            return Err(CliError::Format(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(CliError::Format("bad magic bytes".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        let (nx, nz, count) = (u32_at(4), u32_at(8), u32_at(12));
        let mut t = [0u8; 8];
        t.copy_from_slice(&bytes[16..24]);
        let time = f64::from_le_bytes(t);
        if count != 4 && count != 8 {
            return Err(CliError::Format(format!("field count {count}, expected 4 or 8")));
        }
        let per = (nx as usize)
            .checked_mul(nz as usize + 1)
            .ok_or_else(|| CliError::Format("grid size overflows".into()))?;
        if per == 0 {
            return Err(CliError::Format("empty grid".into()));
        }
        let expected = HEADER + 8 * per * count as usize;
        if bytes.len() != expected {
            return Err(CliError::Format(format!("{} bytes, expected {expected}", bytes.len())));
        }
        let fields = bytes[HEADER..]
            .chunks_exact(8 * per)
            .map(|chunk| {
                chunk
                    .chunks_exact(8)
                    .map(|b| {
                        let mut a = [0u8; 8];
                        a.copy_from_slice(b);
                        f64::from_le_bytes(a)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { nx, nz, time, fields })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Rebuilds the stored levels on `grid`. Step indices follow from the
    /// time and the step size `k`.
    pub fn into_levels(self, grid: &Grid, k: f64) -> CliResult<Vec<State>> {
        if self.nx as usize != grid.nx() || self.nz as usize != grid.nz() {
            return Err(CliError::Format(format!(
                "snapshot grid {}x{} does not match configured {}x{}",
                self.nx,
                self.nz,
                grid.nx(),
                grid.nz()
            )));
        }
        let step = (self.time / k).round();
        let levels = self.fields.len() / 4;
        if step < (levels - 1) as f64 {
            return Err(CliError::Format(format!("time {} too early for {levels} levels", self.time)));
        }
        let last = step as u64;
        let mut out = Vec::with_capacity(levels);
        let mut it = self.fields.into_iter();
        for l in 0..levels {
            let mut fs = Vec::with_capacity(4);
            for kind in KINDS {
                let v = it.next().unwrap_or_default();
                fs.push(Field::from_values(grid.nx(), grid.nz_layers(), kind, v).map_err(|e| CliError::Format(e.to_string()))?);
            }
            let psi = fs.pop().unwrap_or_else(|| Field::zeros(grid, FieldKind::DirichletZ));
            let salt = fs.pop().unwrap_or_else(|| Field::zeros(grid, FieldKind::NeumannZ));
            let temp = fs.pop().unwrap_or_else(|| Field::zeros(grid, FieldKind::NeumannZ));
            let omega = fs.pop().unwrap_or_else(|| Field::zeros(grid, FieldKind::DirichletZ));
            let s = last + l as u64 + 1 - levels as u64;
            out.push(State {
                omega,
                temp,
                salt,
                psi,
                step: s,
                time: if l + 1 == levels { self.time } else { s as f64 * k },
            });
        }
        Ok(out)
    }
}
