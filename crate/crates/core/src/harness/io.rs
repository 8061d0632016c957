//! Field dumps, PGM frames and the run manifest.
//!
//! Dump layout (little endian): `b"MBOF"`, version `u32`, `d u32`, `n u32`, `P u32`,
//! 4 reserved zero bytes, `Λ f64`, then `P · n^d` values, component-major with axis 0
//! fastest inside a component.

use crate::error::{MboError, Result};
use crate::grid::{Grid, Partition, PhaseField};
use crate::tensions::SurfaceTensionMatrix;
use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;

pub const DUMP_MAGIC: &[u8; 4] = b"MBOF";
pub const DUMP_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

pub fn encode_dump(u: &PhaseField) -> Vec<u8> {
    let g = u.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.len() * u.phases());
    out.extend_from_slice(DUMP_MAGIC);
    out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&(u.phases() as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    out.extend_from_slice(&g.side().to_le_bytes());
    for c in u.components() {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_dump(bytes: &[u8]) -> Result<PhaseField> {
    let bad = |m: &str| MboError::Io(format!("field dump: {m}"));
    if bytes.len() < HEADER_LEN || &bytes[..4] != DUMP_MAGIC {
        return Err(bad("missing MBOF header"));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap());
    if word(1) != DUMP_VERSION {
        return Err(bad(&format!("unsupported version {}", word(1))));
    }
    let (d, n, p) = (word(2) as usize, word(3) as usize, word(4) as usize);
    let side = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let grid = Grid::new(n, d, side)?;
    let expected = HEADER_LEN + 8 * p * grid.len();
    if bytes.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let vals: Vec<f64> = bytes[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let comps = vals.chunks(grid.len()).map(|c| c.to_vec()).collect();
    PhaseField::new_unchecked(grid, comps)
}

pub fn write_dump(path: &Path, u: &PhaseField) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_dump(u))?;
    Ok(())
}

pub fn read_dump(path: &Path) -> Result<PhaseField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_dump(&bytes)
}

/// Binary PGM of the labels; 3-d grids show the slice through the middle of the last axis.
pub fn encode_pgm(chi: &Partition) -> Vec<u8> {
    let g = chi.grid();
    let n = g.n();
    let (w, rows) = if g.dim() == 1 { (n, 1) } else { (n, n) };
    let offset = if g.dim() == 3 { (n / 2) * n * n } else { 0 };
    let scale = 255.0 / (chi.phases() - 1) as f64;
    let mut out = format!("P5\n{w} {rows}\n255\n").into_bytes();
    // top row of the image is the largest second coordinate
    for r in (0..rows).rev() {
        for c in 0..w {
            let label = chi.labels()[offset + r * n + c];
            out.push((label as f64 * scale).round() as u8);
        }
    }
    out
}

pub fn write_pgm(path: &Path, chi: &Partition) -> Result<()> {
    std::fs::write(path, encode_pgm(chi))?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub grid: Grid,
    pub phases: usize,
    pub sigma: Vec<Vec<f64>>,
    pub sigma_lower_bound: f64,
    pub shape: serde_json::Value,
    pub h: f64,
    pub steps: usize,
    pub final_time: f64,
    pub seed: u64,
    pub zeta: Option<String>,
    pub dumps: Vec<String>,
    pub frames: Vec<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, grid: Grid, sigma: &SurfaceTensionMatrix, h: f64, steps: usize, seed: u64) -> Self {
        Manifest {
            command: command.into(),
            grid,
            phases: sigma.phases(),
            sigma: sigma.rows(),
            sigma_lower_bound: sigma.lower_bound(),
            shape: serde_json::Value::Null,
            h,
            steps,
            final_time: h * steps as f64,
            seed,
            zeta: None,
            dumps: Vec::new(),
            frames: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| MboError::Io(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}
