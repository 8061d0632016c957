//! h-refinement studies against closed-form time integrals of the energy.

use super::config::StudyConfig;
use super::ledger::{build_ledger, fmt_g17, LedgerSettings};
use super::reference::{disk_energy_integral, flat_energy_density};
use crate::energetics::energy_eh;
use crate::error::{MboError, Result};
use crate::grid::ShapeSpec;
use crate::scheme::run;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Relative slack before an energy increase between steps is flagged.
pub const MONOTONE_SLACK: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub h: f64,
    pub steps: usize,
    /// `h Σ_{n<N} E_h(χⁿ)`, the integral of the piecewise-constant trajectory.
    pub energy_integral: f64,
    pub oracle: Option<f64>,
    pub abs_error: Option<f64>,
    pub initial_energy: f64,
    /// `E_{4h}(χ⁰)`.
    pub initial_energy_4h: f64,
    /// First extinction time of any phase.
    pub extinction_time: Option<f64>,
    pub energy_dissipation_ok: bool,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyReport {
    pub final_time: f64,
    pub rows: Vec<StudyRow>,
    /// Errors against the oracle decrease along decreasing `h` (None without an oracle).
    pub error_decreasing: Option<bool>,
    /// `E_{4h}(χ⁰) ≤ E_h(χ⁰)` for every `h` in the list.
    pub monotone_in_h: bool,
}

/// Closed-form `∫_0^T E dt` where the shape has one.
pub fn energy_integral_oracle(cfg: &StudyConfig) -> Option<f64> {
    if cfg.sigma.phases() != 2 {
        return None;
    }
    let s = cfg.sigma.get(0, 1);
    let d = cfg.grid.dim() as i32;
    match &cfg.shape {
        // two flat interfaces of area Λ^{d-1}
        ShapeSpec::Stripe { .. } => Some(cfg.final_time * 2.0 * flat_energy_density(s) * cfg.grid.side().powi(d - 1)),
        ShapeSpec::Disk { radius, .. } if d == 2 => Some(disk_energy_integral(*radius, cfg.final_time, s)),
        _ => None,
    }
}

pub fn refinement_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let chi0 = cfg.initial_partition()?;
    let oracle = energy_integral_oracle(cfg);
    let mut order: Vec<f64> = cfg.h_list.clone();
    order.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rows: Vec<Result<StudyRow>> = order
        .par_iter()
        .map(|&h| {
            let steps = cfg.steps_for(h)?;
            let traj = run(&chi0, &cfg.sigma, h, steps)?;
            let mut energies = Vec::with_capacity(steps + 1);
            for chi in &traj.steps {
                energies.push(energy_eh(&chi.to_phase_field(), &cfg.sigma, h)?);
            }
            let mut flags = Vec::new();
            if energies.iter().any(|e| !e.is_finite()) {
                flags.push("diverging".to_string());
            }
            if energies.windows(2).any(|w| w[1] > w[0] + MONOTONE_SLACK * w[0].abs()) {
                flags.push("non-monotone".to_string());
            }
            let energy_integral = h * energies[..steps].iter().sum::<f64>();
            let zeta = crate::energetics::ZetaPreset::one().field(&cfg.grid);
            let settings = LedgerSettings { solver: cfg.solver.clone(), t_samples: 1, dictionary: Vec::new(), skip_slopes: true };
            let ledger = build_ledger(&traj, &zeta, &cfg.sigma, h, &settings)?;
            let extinction_time = (0..cfg.sigma.phases())
                .filter(|&p| chi0.count(p) > 0)
                .filter_map(|p| traj.extinction_step(p))
                .min()
                .map(|n| n as f64 * h);
            let c0 = chi0.to_phase_field();
            Ok(StudyRow {
                h,
                steps,
                energy_integral,
                oracle,
                abs_error: oracle.map(|o| (energy_integral - o).abs()),
                initial_energy: energies[0],
                initial_energy_4h: energy_eh(&c0, &cfg.sigma, 4.0 * h)?,
                extinction_time,
                energy_dissipation_ok: ledger.dissipation_violation().is_none(),
                flags,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let error_decreasing = oracle.map(|_| rows.windows(2).all(|w| w[1].abs_error.unwrap() < w[0].abs_error.unwrap()));
    let monotone_in_h = rows.iter().all(|r| r.initial_energy_4h <= r.initial_energy);
    Ok(StudyReport { final_time: cfg.final_time, rows, error_decreasing, monotone_in_h })
}

impl StudyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,steps,energy_integral,oracle,abs_error,E_h0,E_4h0,extinction_time,energy_dissipation_ok,flags\n");
        let opt = |v: Option<f64>| v.map(fmt_g17).unwrap_or_default();
        for r in &self.rows {
            let cols = [
                fmt_g17(r.h),
                r.steps.to_string(),
                fmt_g17(r.energy_integral),
                opt(r.oracle),
                opt(r.abs_error),
                fmt_g17(r.initial_energy),
                fmt_g17(r.initial_energy_4h),
                opt(r.extinction_time),
                r.energy_dissipation_ok.to_string(),
                r.flags.join(";"),
            ];
            out.push_str(&cols.join(","));
            out.push('\n');
        }
        out
    }

    /// `study.csv` and `study.json` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("study.csv"), self.to_csv())?;
        let json = serde_json::to_string_pretty(self).map_err(|e| MboError::Io(e.to_string()))?;
        std::fs::write(dir.join("study.json"), json + "\n")?;
        Ok(())
    }
}
