//! Configuration, output files, the Brakke ledger, reference values and refinement studies.

pub mod config;
pub mod geometry;
pub mod io;
pub mod ledger;
pub mod reference;
pub mod study;

pub use config::{ConfigFile, DictionarySpec, StudyConfig};
pub use ledger::{build_ledger, BrakkeLedgerRow, Ledger, LedgerSettings};
pub use study::{refinement_study, StudyReport};

use crate::error::Result;
use crate::grid::{Grid, ShapeSpec, VectorTestField};
use crate::scheme::{run_with, Trajectory};
use crate::variations::{default_radial_field, fourier_dictionary};
use io::Manifest;
use std::path::Path;

/// Fourier fields up to `spec.k` plus, for disks, the smoothed radial field at each center.
pub fn build_dictionary(grid: &Grid, shape: &ShapeSpec, spec: &DictionarySpec) -> Vec<VectorTestField> {
    let mut out = Vec::new();
    if spec.radial {
        match shape {
            ShapeSpec::Disk { center, .. } => out.push(default_radial_field(grid, *center)),
            ShapeSpec::TwoDisks { centers, .. } => {
                for c in centers {
                    out.push(default_radial_field(grid, *c));
                }
            }
            _ => {}
        }
    }
    if spec.k >= 0 {
        out.extend(fourier_dictionary(grid, spec.k));
    }
    out
}

/// Run the scheme for one `h`, writing checkpoints, frames and `manifest.json` under `dir`.
pub fn run_recorded(cfg: &StudyConfig, h: f64, dir: &Path, command: &str) -> Result<(Trajectory, Manifest)> {
    let steps = cfg.steps_for(h)?;
    let chi0 = cfg.initial_partition()?;
    std::fs::create_dir_all(dir)?;
    let mut manifest = Manifest::new(command, cfg.grid, &cfg.sigma, h, steps, cfg.seed);
    manifest.shape = serde_json::to_value(&cfg.shape).unwrap_or(serde_json::Value::Null);
    manifest.zeta = Some(cfg.zeta.label());
    if cfg.dump_every > 0 {
        std::fs::create_dir_all(dir.join("dumps"))?;
    }
    if cfg.frame_every > 0 {
        std::fs::create_dir_all(dir.join("frames"))?;
    }
    let mut dumps = Vec::new();
    let mut frames = Vec::new();
    let traj = run_with(&chi0, &cfg.sigma, h, steps, |n, chi| {
        let last = n == steps;
        if cfg.dump_every > 0 && (n % cfg.dump_every == 0 || last) {
            let name = format!("dumps/step_{n:06}.mbof");
            io::write_dump(&dir.join(&name), &chi.to_phase_field())?;
            dumps.push(name);
        }
        if cfg.frame_every > 0 && (n % cfg.frame_every == 0 || last) {
            let name = format!("frames/step_{n:06}.pgm");
            io::write_pgm(&dir.join(&name), chi)?;
            frames.push(name);
        }
        Ok(())
    })?;
    manifest.dumps = dumps;
    manifest.frames = frames;
    Ok((traj, manifest))
}
