//! Heat-content energy, the thresholding metric, commutators and their localized versions.

use crate::error::{MboError, Result};
use crate::grid::fourier;
use crate::grid::{Grid, PhaseField, ScalarField};
use crate::tensions::SurfaceTensionMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// First moment of the standard Gaussian on the half line.
pub const C0: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyValue {
    pub value: f64,
    pub h: f64,
    pub localized: bool,
    pub zeta: String,
}

/// Closed-form localization weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ZetaPreset {
    Constant { value: f64 },
    /// `base + amplitude · exp(-|x - center|² / (2 width²))`, periodic distance.
    GaussianBump { center: [f64; 3], width: f64, amplitude: f64, base: f64 },
    /// `1 + ½ cos(2π x_0 / L)`.
    CosBump,
}

impl ZetaPreset {
    pub fn one() -> Self {
        ZetaPreset::Constant { value: 1.0 }
    }

    pub fn default_bump(grid: &Grid) -> Self {
        let c = 0.5 * grid.side();
        ZetaPreset::GaussianBump { center: [c, c, c], width: 0.2 * grid.side(), amplitude: 1.0, base: 0.25 }
    }

    pub fn label(&self) -> String {
        match self {
            ZetaPreset::Constant { value } => format!("constant({value})"),
            ZetaPreset::GaussianBump { width, .. } => format!("gaussian-bump({width})"),
            ZetaPreset::CosBump => "cos-bump".into(),
        }
    }

    pub fn field(&self, grid: &Grid) -> ScalarField {
        let l = grid.side();
        match self {
            ZetaPreset::Constant { value } => ScalarField::constant(*grid, *value),
            ZetaPreset::GaussianBump { center, width, amplitude, base } => ScalarField::from_fn(*grid, |x| {
                let d = grid.periodic_delta(x, *center);
                let r2: f64 = d.iter().take(grid.dim()).map(|t| t * t).sum();
                base + amplitude * (-r2 / (2.0 * width * width)).exp()
            }),
            ZetaPreset::CosBump => ScalarField::from_fn(*grid, |x| 1.0 + 0.5 * (2.0 * PI * x[0] / l).cos()),
        }
    }

    /// Hessian `∂_a ∂_b ζ` at a point (the bump uses the nearest periodic image).
    pub fn hessian(&self, grid: &Grid, x: [f64; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        match self {
            ZetaPreset::Constant { .. } => {}
            ZetaPreset::CosBump => {
                let k = 2.0 * PI / grid.side();
                out[0][0] = -0.5 * k * k * (k * x[0]).cos();
            }
            ZetaPreset::GaussianBump { center, width, amplitude, .. } => {
                let d = grid.periodic_delta(x, *center);
                let w2 = width * width;
                let r2: f64 = d.iter().take(grid.dim()).map(|t| t * t).sum();
                let e = amplitude * (-r2 / (2.0 * w2)).exp();
                for a in 0..grid.dim() {
                    for b in 0..grid.dim() {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        out[a][b] = e * (d[a] * d[b] / (w2 * w2) - delta / w2);
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn is_unit(zeta: Option<&ScalarField>) -> bool {
    match zeta {
        None => true,
        Some(z) => z.is_constant() && z.values()[0] == 1.0,
    }
}

pub(crate) fn check_zeta(grid: &Grid, zeta: &ScalarField) -> Result<()> {
    grid.check_same(zeta.grid())?;
    if let Some(cell) = zeta.values().iter().position(|&v| v < 0.0) {
        return Err(MboError::NegativeWeight { cell, value: zeta.values()[cell] });
    }
    Ok(())
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(MboError::NonPositiveVariance(h))
    }
}

fn check_pair(u: &PhaseField, chi: &PhaseField, sigma: &SurfaceTensionMatrix) -> Result<()> {
    u.grid().check_same(chi.grid())?;
    check_phases(u, sigma)?;
    check_phases(chi, sigma)
}

fn check_phases(u: &PhaseField, sigma: &SurfaceTensionMatrix) -> Result<()> {
    if u.phases() == sigma.phases() {
        Ok(())
    } else {
        Err(MboError::InvalidParameter(format!("{} components vs {} phases", u.phases(), sigma.phases())))
    }
}

pub(crate) fn conv(grid: &Grid, fields: &[Vec<f64>], var: f64) -> Vec<Vec<f64>> {
    let refs: Vec<&[f64]> = fields.iter().map(|v| v.as_slice()).collect();
    fourier::gaussian(grid, &refs, var)
}

/// `conv` for fields summing to zero across components: the last one is recovered from the others.
pub(crate) fn conv_zero_sum(grid: &Grid, fields: &[Vec<f64>], var: f64) -> Vec<Vec<f64>> {
    let p = fields.len();
    if p < 2 {
        return conv(grid, fields, var);
    }
    let mut out = conv(grid, &fields[..p - 1], var);
    let mut last = vec![0.0; grid.len()];
    for f in &out {
        for (o, v) in last.iter_mut().zip(f) {
            *o -= v;
        }
    }
    out.push(last);
    out
}

pub(crate) fn weighted(w: &[f64], fields: &[Vec<f64>]) -> Vec<Vec<f64>> {
    fields.iter().map(|f| f.iter().zip(w).map(|(a, b)| a * b).collect()).collect()
}

/// `E_h(u) = (1/√h) ∫ u·σ G_h∗u`.
pub fn energy_eh(u: &PhaseField, sigma: &SurfaceTensionMatrix, h: f64) -> Result<f64> {
    check_h(h)?;
    check_phases(u, sigma)?;
    let grid = *u.grid();
    let gu = conv(&grid, u.components(), h);
    Ok(sigma.pair_sum(u.components(), &gu) * grid.cell_volume() / h.sqrt())
}

/// `(1/√h) ∫ ζ |G_{h/2}∗(u-χ)|²_σ`, i.e. `d_h²(u,χ;ζ) / (2h)`.
pub fn dissipation_sq(
    u: &PhaseField,
    chi: &PhaseField,
    sigma: &SurfaceTensionMatrix,
    h: f64,
    zeta: Option<&ScalarField>,
) -> Result<f64> {
    check_h(h)?;
    check_pair(u, chi, sigma)?;
    let grid = *u.grid();
    if let Some(z) = zeta {
        check_zeta(&grid, z)?;
    }
    let w = u.diff(chi);
    let gw = conv(&grid, &w, 0.5 * h);
    let lhs = match zeta {
        Some(z) if !is_unit(Some(z)) => weighted(z.values(), &gw),
        _ => gw.clone(),
    };
    let val = -sigma.pair_sum(&lhs, &gw) * grid.cell_volume() / h.sqrt();
    Ok(val.max(0.0))
}

/// `[ζ, G∗] v = ζ G∗v - G∗(ζ v)` with `G_h` or, if `half`, `G_{h/2}`.
pub fn commutator(zeta: &ScalarField, v: &ScalarField, h: f64, half: bool) -> Result<ScalarField> {
    check_h(h)?;
    zeta.grid().check_same(v.grid())?;
    let grid = *v.grid();
    let var = if half { 0.5 * h } else { h };
    let zv: Vec<f64> = zeta.values().iter().zip(v.values()).map(|(a, b)| a * b).collect();
    let out = fourier::gaussian(&grid, &[v.values(), &zv], var);
    let vals = zeta.values().iter().zip(&out[0]).zip(&out[1]).map(|((z, gv), gzv)| z * gv - gzv).collect();
    Ok(ScalarField::from_raw(grid, vals))
}

fn commutator_fields(grid: &Grid, zeta: &[f64], v: &[Vec<f64>], var: f64) -> Vec<Vec<f64>> {
    let zv = weighted(zeta, v);
    let gv = conv(grid, v, var);
    let gzv = conv(grid, &zv, var);
    gv.iter()
        .zip(&gzv)
        .map(|(a, b)| a.iter().zip(b).zip(zeta).map(|((x, y), z)| z * x - y).collect())
        .collect()
}

/// Localized energy `E_h(u, χ; ζ)` with both commutator corrections.
pub fn localized_energy(
    u: &PhaseField,
    chi: &PhaseField,
    zeta: &ScalarField,
    sigma: &SurfaceTensionMatrix,
    h: f64,
) -> Result<f64> {
    check_h(h)?;
    check_pair(u, chi, sigma)?;
    let grid = *u.grid();
    check_zeta(&grid, zeta)?;
    if is_unit(Some(zeta)) {
        return energy_eh(u, sigma, h);
    }
    let z = zeta.values();
    let vol = grid.cell_volume();
    let gu = conv(&grid, u.components(), h);
    let first = sigma.pair_sum(&weighted(z, u.components()), &gu);
    let w = u.diff(chi);
    let comm_chi = commutator_fields(&grid, z, chi.components(), h);
    let second = sigma.pair_sum(&w, &comm_chi);
    let gw = conv(&grid, &w, 0.5 * h);
    let comm_w = commutator_fields(&grid, z, &gw, 0.5 * h);
    let third = sigma.pair_sum(&w, &comm_w);
    Ok((first + second - third) * vol / h.sqrt())
}

/// `(1/√h) ∫ ζ u·σ G_h∗u`, the first term of the localized energy.
pub fn interface_measure_zeta(u: &PhaseField, sigma: &SurfaceTensionMatrix, h: f64, zeta: &ScalarField) -> Result<f64> {
    check_h(h)?;
    check_phases(u, sigma)?;
    let grid = *u.grid();
    check_zeta(&grid, zeta)?;
    if is_unit(Some(zeta)) {
        return energy_eh(u, sigma, h);
    }
    let gu = conv(&grid, u.components(), h);
    Ok(sigma.pair_sum(&weighted(zeta.values(), u.components()), &gu) * grid.cell_volume() / h.sqrt())
}

/// `Σ σ_ij (1/√h) ∫ A : u_i h∇²G_h∗u_j` for a matrix field `A` given row-major as `d × d` fields.
pub fn second_moment_functional(
    u: &PhaseField,
    sigma: &SurfaceTensionMatrix,
    h: f64,
    a: &[ScalarField],
) -> Result<f64> {
    check_h(h)?;
    check_phases(u, sigma)?;
    let grid = *u.grid();
    let d = grid.dim();
    if a.len() != d * d {
        return Err(MboError::InvalidField(format!("matrix field needs {} entries", d * d)));
    }
    for e in a {
        grid.check_same(e.grid())?;
    }
    let refs: Vec<&[f64]> = u.components().iter().map(|v| v.as_slice()).collect();
    let spectra = fourier::forward(&grid, &refs);
    let p = u.phases();
    let mut total = 0.0;
    for j in 0..d {
        for l in 0..d {
            let entry = &a[j * d + l];
            if entry.values().iter().all(|&v| v == 0.0) {
                continue;
            }
            let m = fourier::gaussian_multiplier(&grid, h, &[j, l], h);
            let hess = fourier::inverse(&grid, spectra.iter().map(|s| fourier::multiply(s, &m)).collect());
            let au = weighted(entry.values(), u.components());
            total += sigma.pair_sum(&au, &hess[..p]);
        }
    }
    Ok(total * grid.cell_volume() / h.sqrt())
}

/// `(E_h(u), E_{4h}(u))`.
pub fn monotonicity_check(u: &PhaseField, sigma: &SurfaceTensionMatrix, h: f64) -> Result<(f64, f64)> {
    Ok((energy_eh(u, sigma, h)?, energy_eh(u, sigma, 4.0 * h)?))
}

/// Identity matrix field.
pub fn identity_matrix_field(grid: &Grid) -> Vec<ScalarField> {
    let d = grid.dim();
    (0..d * d).map(|k| ScalarField::constant(*grid, if k / d == k % d { 1.0 } else { 0.0 })).collect()
}

/// `e_a ⊗ e_a` as a matrix field.
pub fn axis_projector_field(grid: &Grid, axis: usize) -> Vec<ScalarField> {
    let d = grid.dim();
    (0..d * d).map(|k| ScalarField::constant(*grid, if k == axis * d + axis { 1.0 } else { 0.0 })).collect()
}
