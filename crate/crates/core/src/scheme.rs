//! The thresholding time step and the time loop.

use crate::error::{MboError, Result};
use crate::grid::fourier;
use crate::grid::{Grid, Partition};
use crate::tensions::SurfaceTensionMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub steps: Vec<Partition>,
}

impl Trajectory {
    /// Number of steps `N` (the trajectory holds `N + 1` partitions).
    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.steps.len() <= 1
    }

    pub fn final_time(&self) -> f64 {
        self.len() as f64 * self.h
    }

    pub fn grid(&self) -> &Grid {
        self.steps[0].grid()
    }

    /// First step index at which `phase` has no cells.
    pub fn extinction_step(&self, phase: usize) -> Option<usize> {
        self.steps.iter().position(|p| p.count(phase) == 0)
    }
}

fn check_phases(chi: &Partition, sigma: &SurfaceTensionMatrix) -> Result<()> {
    if chi.phases() != sigma.phases() {
        return Err(MboError::InvalidParameter(format!(
            "partition has {} phases, sigma has {}",
            chi.phases(),
            sigma.phases()
        )));
    }
    Ok(())
}

/// `φ_i = G_h ∗ (Σ_{j≠i} σ_ij χ_j)` for every phase.
pub fn potentials(chi: &Partition, sigma: &SurfaceTensionMatrix, h: f64) -> Result<Vec<Vec<f64>>> {
    check_phases(chi, sigma)?;
    if !(h > 0.0) {
        return Err(MboError::NonPositiveVariance(h));
    }
    let grid = *chi.grid();
    let ind = chi.indicators();
    let refs: Vec<&[f64]> = ind.iter().map(|v| v.as_slice()).collect();
    let spectra = fourier::forward(&grid, &refs);
    let g = fourier::gaussian_multiplier(&grid, h, &[], 1.0);
    let p = chi.phases();
    let combined: Vec<fourier::Spectrum> = (0..p)
        .map(|i| {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (j, s) in spectra.iter().enumerate() {
                let w = sigma.get(i, j);
                if j != i && w != 0.0 {
                    acc.par_iter_mut().zip(s.par_iter()).for_each(|(a, b)| *a += b * w);
                }
            }
            acc.par_iter_mut().zip(g.par_iter()).for_each(|(a, m)| *a *= m);
            acc
        })
        .collect();
    Ok(fourier::inverse(&grid, combined))
}

/// Per cell, the lowest-index minimizer of the potentials.
pub fn threshold(grid: Grid, phi: &[Vec<f64>]) -> Result<Partition> {
    let p = phi.len();
    let labels: Vec<u8> = (0..grid.len())
        .into_par_iter()
        .map(|c| {
            let mut best = 0;
            for i in 1..p {
                if phi[i][c] < phi[best][c] {
                    best = i;
                }
            }
            best as u8
        })
        .collect();
    Partition::new(grid, p, labels)
}

/// One thresholding step.
pub fn mbo_step(chi: &Partition, sigma: &SurfaceTensionMatrix, h: f64) -> Result<Partition> {
    let phi = potentials(chi, sigma, h)?;
    if phi.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MboError::NonFinite { step: 0 });
    }
    threshold(*chi.grid(), &phi)
}

/// `N` thresholding steps from `chi0`.
pub fn run(chi0: &Partition, sigma: &SurfaceTensionMatrix, h: f64, steps: usize) -> Result<Trajectory> {
    run_with(chi0, sigma, h, steps, |_, _| Ok(()))
}

/// Time loop with a per-step observer (used for checkpoints).
pub fn run_with(
    chi0: &Partition,
    sigma: &SurfaceTensionMatrix,
    h: f64,
    steps: usize,
    mut observe: impl FnMut(usize, &Partition) -> Result<()>,
) -> Result<Trajectory> {
    if steps < 1 {
        return Err(MboError::InvalidParameter("need at least one step".into()));
    }
    check_phases(chi0, sigma)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(chi0.clone());
    observe(0, chi0)?;
    for n in 1..=steps {
        let next = mbo_step(&out[n - 1], sigma, h).map_err(|e| match e {
            MboError::NonFinite { .. } => MboError::NonFinite { step: n },
            other => other,
        })?;
        observe(n, &next)?;
        out.push(next);
    }
    Ok(Trajectory { h, steps: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, ShapeSpec};

    #[test]
    fn stripe_is_stationary() {
        let g = Grid::new(64, 2, 1.0).unwrap();
        let chi = rasterize(&ShapeSpec::Stripe { axis: 0, fraction: 0.5 }, &g, 2).unwrap();
        let s = SurfaceTensionMatrix::two_phase(1.0).unwrap();
        let next = mbo_step(&chi, &s, 4e-3).unwrap();
        assert_eq!(next, chi);
    }

    #[test]
    fn single_phase_is_fixed() {
        let g = Grid::new(16, 2, 1.0).unwrap();
        let chi = Partition::uniform(g, 3, 1).unwrap();
        let s = SurfaceTensionMatrix::uniform(3).unwrap();
        let t = run(&chi, &s, 1e-2, 5).unwrap();
        assert!(t.steps.iter().all(|p| p == &chi));
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn one_step_run_is_a_step() {
        let g = Grid::new(32, 2, 1.0).unwrap();
        let chi = rasterize(&ShapeSpec::Voronoi { phases: 3, seed: 3 }, &g, 3).unwrap();
        let s = SurfaceTensionMatrix::uniform(3).unwrap();
        let t = run(&chi, &s, 2e-3, 1).unwrap();
        assert_eq!(t.steps[1], mbo_step(&chi, &s, 2e-3).unwrap());
        assert!(run(&chi, &s, 2e-3, 0).is_err());
        assert!(mbo_step(&chi, &s, 0.0).is_err());
    }
}
