//! Variational interpolation between thresholding steps: minimizers of the localized
//! energy plus a `1/(2t)` metric penalty, and the resulting Moreau–Yosida values.

use crate::energetics::{check_zeta, conv, conv_zero_sum, is_unit, weighted};
use crate::error::{MboError, Result};
use crate::grid::{Partition, PhaseField, ScalarField};
use crate::scheme::mbo_step;
use crate::tensions::SurfaceTensionMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Stop when the projected-gradient L² norm is below `tolerance · L^{d/2}`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Nesterov momentum with gradient restart on top of the fixed `1/L` step.
    pub accelerated: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tolerance: 1e-8, max_iterations: 5000, accelerated: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationResult {
    pub u: PhaseField,
    pub t: f64,
    /// `F_t(u)`.
    pub value: f64,
    /// `(1/2h) d_h²(u, χ_prev; ζ)` at the returned `u`.
    pub dissipation: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Euclidean projection of a small vector onto the probability simplex (sort-based).
pub fn project_simplex(v: &mut [f64]) {
    let p = v.len();
    if p == 2 {
        let a = (0.5 * (1.0 + v[0] - v[1])).clamp(0.0, 1.0);
        v[0] = a;
        v[1] = 1.0 - a;
        return;
    }
    let mut s: Vec<f64> = v.to_vec();
    s.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in s.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    let mut total = 0.0;
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
        total += *x;
    }
    // exact renormalization against rounding
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    }
}

fn project_field(values: &mut [Vec<f64>]) {
    let p = values.len();
    let len = values[0].len();
    let mut cells: Vec<f64> = vec![0.0; len * p];
    for (i, comp) in values.iter().enumerate() {
        for (c, v) in comp.iter().enumerate() {
            cells[c * p + i] = *v;
        }
    }
    cells.par_chunks_mut(p).for_each(project_simplex);
    for (i, comp) in values.iter_mut().enumerate() {
        for (c, v) in comp.iter_mut().enumerate() {
            *v = cells[c * p + i];
        }
    }
}

/// The penalized functional `F_t(u) = E_h(u, χ; ζ) + (h/t) (1/2h) d_h²(u, χ; ζ)` in the form
/// `(1/√h)[⟨ζχ, σGχ⟩ + 2⟨ζGχ, σw⟩ + (1 - h/t)⟨ζG½w, σG½w⟩]`, `w = u - χ`.
pub struct Objective<'a> {
    chi: PhaseField,
    zeta: Option<Vec<f64>>,
    sigma: &'a SurfaceTensionMatrix,
    h: f64,
    t: f64,
    /// `ζ G_h∗χ`
    zeta_g_chi: Vec<Vec<f64>>,
    base: f64,
}

impl<'a> Objective<'a> {
    pub fn new(chi_prev: &Partition, zeta: &ScalarField, sigma: &'a SurfaceTensionMatrix, h: f64, t: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(MboError::NonPositiveVariance(h));
        }
        if !(t > 0.0 && t <= h) {
            return Err(MboError::InvalidParameter(format!("t = {t} not in (0, h]")));
        }
        let grid = *chi_prev.grid();
        check_zeta(&grid, zeta)?;
        if chi_prev.phases() != sigma.phases() {
            return Err(MboError::InvalidParameter("phase count does not match sigma".into()));
        }
        let chi = chi_prev.to_phase_field();
        let z = if is_unit(Some(zeta)) { None } else { Some(zeta.values().to_vec()) };
        let g_chi = conv(&grid, chi.components(), h);
        let zeta_g_chi = match &z {
            Some(z) => weighted(z, &g_chi),
            None => g_chi,
        };
        let base = sigma.pair_sum(chi.components(), &zeta_g_chi) * grid.cell_volume() / h.sqrt();
        Ok(Objective { chi, zeta: z, sigma, h, t, zeta_g_chi, base })
    }

    fn grid(&self) -> crate::grid::Grid {
        *self.chi.grid()
    }

    /// Value and L² gradient at `u`.
    pub fn value_and_gradient(&self, u: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
        let grid = self.grid();
        let sqh = self.h.sqrt();
        let vol = grid.cell_volume();
        let w: Vec<Vec<f64>> = u
            .iter()
            .zip(self.chi.components())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        let q = 1.0 - self.h / self.t;
        let gw = conv_zero_sum(&grid, &w, 0.5 * self.h);
        let zgw = match &self.zeta {
            Some(z) => weighted(z, &gw),
            None => gw.clone(),
        };
        let lin = self.sigma.pair_sum(&self.zeta_g_chi, &w);
        let quad = self.sigma.pair_sum(&zgw, &gw);
        let value = self.base + (2.0 * lin + q * quad) * vol / sqh;
        let inner = if q != 0.0 { conv_zero_sum(&grid, &zgw, 0.5 * self.h) } else { vec![vec![0.0; grid.len()]; u.len()] };
        let combined: Vec<Vec<f64>> = self
            .zeta_g_chi
            .iter()
            .zip(&inner)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (2.0 / sqh) * (x + q * y)).collect())
            .collect();
        (value, self.sigma.combine(&combined))
    }

    pub fn value(&self, u: &[Vec<f64>]) -> f64 {
        self.value_and_gradient(u).0
    }

    /// Lipschitz bound of the gradient along zero-sum directions.
    pub fn lipschitz(&self) -> f64 {
        let zmax = self.zeta.as_ref().map(|z| z.iter().cloned().fold(0.0, f64::max)).unwrap_or(1.0);
        2.0 / self.h.sqrt() * (self.h / self.t - 1.0) * self.sigma.upper_bound() * zmax
    }
}

/// `‖L (y - next)‖_{L²}`, the gradient mapping at `y`.
fn gradient_mapping_norm(grid: &crate::grid::Grid, y: &[Vec<f64>], next: &[Vec<f64>], l: f64) -> f64 {
    let s: f64 = y
        .iter()
        .zip(next)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (l * (p - q)).powi(2)).sum::<f64>())
        .sum();
    (s * grid.cell_volume()).sqrt()
}

/// Minimize `F_t` over simplex-valued fields.
pub fn interpolate(
    chi_prev: &Partition,
    t: f64,
    h: f64,
    zeta: &ScalarField,
    sigma: &SurfaceTensionMatrix,
    warm_start: Option<&PhaseField>,
    settings: &SolverSettings,
) -> Result<InterpolationResult> {
    let obj = Objective::new(chi_prev, zeta, sigma, h, t)?;
    let grid = *chi_prev.grid();
    if t == h {
        // linear functional: thresholding is an exact minimizer
        let u = mbo_step(chi_prev, sigma, h)?.to_phase_field();
        let value = obj.value(u.components());
        let dissipation = crate::energetics::dissipation_sq(&u, &obj.chi, sigma, h, Some(zeta))?;
        return Ok(InterpolationResult { u, t, value, dissipation, iterations: 0, grad_norm: 0.0, converged: true });
    }
    if let Some(w) = warm_start {
        grid.check_same(w.grid())?;
    }
    let l = obj.lipschitz();
    let tol = settings.tolerance * grid.side().powf(grid.dim() as f64 / 2.0);
    let mut x: Vec<Vec<f64>> = warm_start.map(|w| w.components().to_vec()).unwrap_or_else(|| obj.chi.components().to_vec());
    project_field(&mut x);
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut best_x = x.clone();
    let mut best_val = f64::INFINITY;
    while iterations < settings.max_iterations {
        let (val_y, gy) = obj.value_and_gradient(&y);
        if val_y <= best_val {
            best_val = val_y;
            best_x = y.clone();
        }
        let mut next: Vec<Vec<f64>> = y.iter().zip(&gy).map(|(a, b)| a.iter().zip(b).map(|(p, d)| p - d / l).collect()).collect();
        project_field(&mut next);
        iterations += 1;
        grad_norm = gradient_mapping_norm(&grid, &y, &next, l);
        if grad_norm <= tol {
            converged = true;
            x = next;
            break;
        }
        if settings.accelerated {
            // restart momentum when it points uphill
            let uphill: f64 = gy
                .iter()
                .zip(next.iter().zip(&x))
                .map(|(g, (a, b))| g.iter().zip(a.iter().zip(b)).map(|(gg, (p, q))| gg * (p - q)).sum::<f64>())
                .sum();
            if uphill > 0.0 {
                theta = 1.0;
                y = next.clone();
            } else {
                let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                let beta = (theta - 1.0) / theta_next;
                y = next
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + beta * (p - q)).collect())
                    .collect();
                theta = theta_next;
            }
        } else {
            y = next.clone();
        }
        x = next;
    }
    let final_x = if converged { x } else { best_x };
    let u = PhaseField::from_raw(grid, final_x);
    let value = obj.value(u.components());
    let dissipation = crate::energetics::dissipation_sq(&u, &obj.chi, sigma, h, Some(zeta))?;
    if !converged {
        log::warn!("interpolation at t = {t:e} stopped after {iterations} iterations, gradient norm {grad_norm:e}");
    }
    Ok(InterpolationResult { u, t, value, dissipation, iterations, grad_norm, converged })
}

/// `E_{h,t}(χ_prev; ζ) = min F_t`.
pub fn moreau_yosida_value(
    chi_prev: &Partition,
    t: f64,
    h: f64,
    zeta: &ScalarField,
    sigma: &SurfaceTensionMatrix,
    settings: &SolverSettings,
) -> Result<f64> {
    Ok(interpolate(chi_prev, t, h, zeta, sigma, None, settings)?.value)
}

/// Midpoints of `count` equal cells in `ln t` over `[h · min_ratio, h]`, with their
/// quadrature weights for `∫ f(s) ds`.
pub fn log_samples(h: f64, count: usize, min_ratio: f64) -> (Vec<f64>, Vec<f64>) {
    let lo = (h * min_ratio).ln();
    let hi = h.ln();
    let dtau = (hi - lo) / count as f64;
    let t: Vec<f64> = (0..count).map(|k| (lo + (k as f64 + 0.5) * dtau).exp()).collect();
    let w = t.iter().map(|&s| s * dtau).collect();
    (t, w)
}

pub const DEFAULT_MIN_RATIO: f64 = 1e-3;

/// Interpolations at each sample time, warm-started from the neighbouring larger time.
/// Results are returned in the order of `t_samples`.
pub fn degiorgi_interpolant_curve(
    chi_prev: &Partition,
    chi_next: &Partition,
    h: f64,
    zeta: &ScalarField,
    sigma: &SurfaceTensionMatrix,
    t_samples: &[f64],
    settings: &SolverSettings,
) -> Result<Vec<InterpolationResult>> {
    let mut order: Vec<usize> = (0..t_samples.len()).collect();
    order.sort_by(|&a, &b| t_samples[b].partial_cmp(&t_samples[a]).unwrap());
    let mut out: Vec<Option<InterpolationResult>> = vec![None; t_samples.len()];
    let mut warm = chi_next.to_phase_field();
    for &k in &order {
        let r = interpolate(chi_prev, t_samples[k], h, zeta, sigma, Some(&warm), settings)?;
        warm = r.u.clone();
        out[k] = Some(r);
    }
    Ok(out.into_iter().map(|r| r.unwrap()).collect())
}

/// Terms of the one-step energy identity
/// `(1/2h) d²(u(h)) + ∫_0^h d²(u(s))/(2s²) ds = E_h(χ,χ;ζ) - E_h(u(h),χ;ζ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyIdentity {
    pub endpoint_metric: f64,
    pub integral: f64,
    pub energy_drop: f64,
    pub samples: usize,
    pub all_converged: bool,
}

impl EnergyIdentity {
    pub fn residual(&self) -> f64 {
        self.endpoint_metric + self.integral - self.energy_drop
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual().abs() / self.energy_drop.abs().max(f64::MIN_POSITIVE)
    }
}

/// Evaluate the energy identity for one step with `count` log-spaced samples.
pub fn energy_identity(
    chi_prev: &Partition,
    h: f64,
    zeta: &ScalarField,
    sigma: &SurfaceTensionMatrix,
    count: usize,
    settings: &SolverSettings,
) -> Result<EnergyIdentity> {
    let chi_next = mbo_step(chi_prev, sigma, h)?;
    let (ts, ws) = log_samples(h, count, DEFAULT_MIN_RATIO);
    let curve = degiorgi_interpolant_curve(chi_prev, &chi_next, h, zeta, sigma, &ts, settings)?;
    Ok(identity_from_curve(chi_prev, &chi_next, h, zeta, sigma, &ts, &ws, &curve)?)
}

#[allow(clippy::too_many_arguments)]
pub fn identity_from_curve(
    chi_prev: &Partition,
    chi_next: &Partition,
    h: f64,
    zeta: &ScalarField,
    sigma: &SurfaceTensionMatrix,
    ts: &[f64],
    ws: &[f64],
    curve: &[InterpolationResult],
) -> Result<EnergyIdentity> {
    let prev = chi_prev.to_phase_field();
    let next = chi_next.to_phase_field();
    let e_start = crate::energetics::localized_energy(&prev, &prev, zeta, sigma, h)?;
    let e_end = crate::energetics::localized_energy(&next, &prev, zeta, sigma, h)?;
    let endpoint_metric = crate::energetics::dissipation_sq(&next, &prev, sigma, h, Some(zeta))?;
    // integrand h D(s) / s², constant extrapolation on (0, t_min)
    let f: Vec<f64> = curve.iter().zip(ts).map(|(r, &s)| h * r.dissipation / (s * s)).collect();
    let (imin, tmin) = ts.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let lower_edge = if ts.len() > 1 {
        // geometric cell edge below the smallest midpoint
        let mut sorted = ts.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        tmin * (sorted[0] / sorted[1]).sqrt()
    } else {
        0.0
    };
    let integral = f.iter().zip(ws).map(|(a, b)| a * b).sum::<f64>() + f[imin] * lower_edge;
    Ok(EnergyIdentity {
        endpoint_metric,
        integral,
        energy_drop: e_start - e_end,
        samples: ts.len(),
        all_converged: curve.iter().all(|r| r.converged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        let mut v = [0.2, 0.3, 0.5];
        project_simplex(&mut v);
        assert!((v[0] - 0.2).abs() < 1e-15 && (v[2] - 0.5).abs() < 1e-15);
        let mut v = [2.0, 0.0, 0.0];
        project_simplex(&mut v);
        assert_eq!(v, [1.0, 0.0, 0.0]);
        let mut v = [0.5, 0.5, 0.5, 0.5];
        project_simplex(&mut v);
        assert!(v.iter().all(|x| (x - 0.25).abs() < 1e-15));
        let mut v = [1.5, -0.7];
        project_simplex(&mut v);
        assert_eq!(v, [1.0, 0.0]);
    }

    #[test]
    fn log_samples_cover_range() {
        let (t, w) = log_samples(2.0, 8, 1e-3);
        assert_eq!(t.len(), 8);
        assert!(t.windows(2).all(|p| p[0] < p[1]) && *t.last().unwrap() < 2.0);
        let total: f64 = w.iter().sum();
        // midpoint rule in τ = ln s for ∫ e^τ dτ undershoots by sinh(Δτ/2)/(Δτ/2)
        let half = 0.5 * (1e3f64).ln() / 8.0;
        let expected = (2.0 - 2e-3) * half / half.sinh();
        assert!((total - expected).abs() < 1e-12);
    }
}
