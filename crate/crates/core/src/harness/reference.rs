//! Closed-form reference values for flat and circular interfaces under `2V = H`.

use crate::energetics::{ZetaPreset, C0};
use crate::grid::{Grid, ShapeSpec};
use crate::tensions::SurfaceTensionMatrix;
use std::f64::consts::PI;

/// Radius of a shrinking circle, zero after extinction.
pub fn circle_radius(r0: f64, t: f64) -> f64 {
    (r0 * r0 - t).max(0.0).sqrt()
}

/// `E` of a flat two-phase configuration per unit interface area.
pub fn flat_energy_density(sigma12: f64) -> f64 {
    2.0 * sigma12 * C0
}

/// `E(χ)` of the initial shape where it has a closed form: two flat interfaces of area
/// `Λ^{d-1}` for a stripe, the circle or sphere perimeter for a disk, 0 for a single phase.
pub fn analytic_energy(shape: &ShapeSpec, grid: &Grid, sigma: &SurfaceTensionMatrix) -> Option<f64> {
    let l = grid.side();
    match shape {
        ShapeSpec::Single { .. } => Some(0.0),
        _ if sigma.phases() != 2 => None,
        ShapeSpec::Stripe { .. } => Some(2.0 * flat_energy_density(sigma.get(0, 1)) * l.powi(grid.dim() as i32 - 1)),
        ShapeSpec::Disk { radius, .. } => {
            let area = match grid.dim() {
                1 => 2.0,
                2 => 2.0 * PI * radius,
                _ => 4.0 * PI * radius * radius,
            };
            Some(flat_energy_density(sigma.get(0, 1)) * area)
        }
        _ => None,
    }
}

/// `∫_0^T E(χ(t)) dt = 2σ c_0 ∫_0^T 2π r(t) dt` for a shrinking circle.
pub fn disk_energy_integral(r0: f64, final_time: f64, sigma12: f64) -> f64 {
    let tail = circle_radius(r0, final_time).powi(3);
    2.0 * sigma12 * C0 * 2.0 * PI * (2.0 / 3.0) * (r0.powi(3) - tail)
}

/// `∫_0^T (c_0/2) Σ_ij σ_ij ∫ |H|² dH¹ dt = ∫_0^T 2π c_0 σ / r(t) dt` for a shrinking circle.
pub fn circle_curvature_integral(r0: f64, final_time: f64, sigma12: f64) -> f64 {
    2.0 * PI * C0 * sigma12 * 2.0 * (r0 - circle_radius(r0, final_time))
}

/// `(c_0/2) Σ_ij σ_ij ∫_0^T ∫ ∇²ζ : (Id - ν⊗ν) dH¹ dt` for a circle of initial radius `r0`
/// around `center` shrinking under `2V = H`, by periodic trapezoid in the angle and
/// midpoint rule in time. Two dimensions only.
pub fn circle_transport_integral(
    zeta: &ZetaPreset,
    grid: &Grid,
    center: [f64; 2],
    r0: f64,
    final_time: f64,
    sigma12: f64,
) -> f64 {
    let t_end = final_time.min(r0 * r0);
    let nt = 4000;
    let nth = 512;
    let dt = t_end / nt as f64;
    let mut total = 0.0;
    for k in 0..nt {
        let r = circle_radius(r0, (k as f64 + 0.5) * dt);
        let mut line = 0.0;
        for m in 0..nth {
            let th = 2.0 * PI * m as f64 / nth as f64;
            let x = [center[0] + r * th.cos(), center[1] + r * th.sin(), 0.0];
            let hs = zeta.hessian(grid, x);
            let tau = [-th.sin(), th.cos()];
            let mut q = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    q += hs[a][b] * tau[a] * tau[b];
                }
            }
            line += q;
        }
        total += line * (2.0 * PI * r / nth as f64) * dt;
    }
    0.5 * C0 * 2.0 * sigma12 * total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((flat_energy_density(1.0) - 0.797_884_560_802_865_4).abs() < 1e-15);
        // full extinction: ∫ 2π r dt = (4π/3) r0³
        let e = disk_energy_integral(0.3, 1.0, 1.0);
        assert!((e - 2.0 * C0 * 4.0 * PI / 3.0 * 0.027).abs() < 1e-14);
        assert!((circle_curvature_integral(0.3, 0.09, 1.0) - 4.0 * PI * C0 * 0.3).abs() < 1e-14);
    }

    #[test]
    fn transport_of_constant_weight_vanishes() {
        let g = Grid::new(64, 2, 1.0).unwrap();
        let v = circle_transport_integral(&ZetaPreset::one(), &g, [0.5, 0.5], 0.3, 0.04, 1.0);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn transport_matches_bessel_series() {
        // ζ = 1 + ½cos(kx): ∫_circle ζ_xx sin²θ r dθ = -½k² r π (J_0(kr) + J_2(kr)) cos(k c)
        // with J_0 + J_2 = 2 J_1(z)/z; checked at one fixed radius through a tiny time window
        let g = Grid::new(64, 2, 1.0).unwrap();
        let (r0, dt) = (0.25, 1e-7);
        let v = circle_transport_integral(&ZetaPreset::CosBump, &g, [0.5, 0.5], r0, dt, 1.0) / dt;
        let k = 2.0 * PI;
        let z = k * r0;
        // J_1 by its power series
        let j1: f64 = (0..30)
            .map(|m: i32| {
                let fact = |n: i32| (1..=n).map(|x| x as f64).product::<f64>();
                (-1f64).powi(m) / (fact(m) * fact(m + 1)) * (z / 2.0).powi(2 * m + 1)
            })
            .sum();
        let expected = C0 * (-0.5 * k * k * r0 * PI * 2.0 * j1 / z) * (k * 0.5).cos();
        assert!((v - expected).abs() < 1e-6 * expected.abs(), "{v} vs {expected}");
    }

    #[test]
    fn disk_energy_close_to_perimeter_law() {
        let g = Grid::new(256, 2, 1.0).unwrap();
        let s = SurfaceTensionMatrix::two_phase(1.0).unwrap();
        let shape = ShapeSpec::centered_disk(&g, 0.25);
        let chi = crate::grid::rasterize(&shape, &g, 2).unwrap().to_phase_field();
        let exact = analytic_energy(&shape, &g, &s).unwrap();
        let eh = crate::energetics::energy_eh(&chi, &s, (8.0 * g.spacing()).powi(2)).unwrap();
        assert!((eh - exact).abs() < 0.02 * exact, "{eh} vs {exact}");
        assert_eq!(analytic_energy(&ShapeSpec::Single { label: 1 }, &g, &s), Some(0.0));
        assert_eq!(analytic_energy(&ShapeSpec::TripleT, &g, &SurfaceTensionMatrix::uniform(3).unwrap()), None);
    }
}
