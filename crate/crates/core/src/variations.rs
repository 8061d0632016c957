//! First variations along inner (transport) variations, local-slope lower bounds and
//! curvature Rayleigh quotients.
//!
//! Transported fields are never formed. Every `(ξ·∇)u` is rewritten as
//! `∇·(ξu) - (∇·ξ)u` and the derivative is moved onto a Gaussian kernel or onto a
//! smooth factor, so only `u` itself is convolved.

use crate::energetics::{check_zeta, conv, is_unit, weighted};
use crate::error::{MboError, Result};
use crate::grid::fourier::{self, Spectrum};
use crate::grid::{FourierMode, Grid, Partition, PhaseField, ScalarField, VectorTestField};
use crate::tensions::SurfaceTensionMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub const DEGENERATE_DENOMINATOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub value: f64,
    pub best: Option<String>,
    pub numerator: f64,
    pub denominator: f64,
    pub degenerate: bool,
}

impl SlopeEstimate {
    fn zero(degenerate: bool) -> Self {
        SlopeEstimate { value: 0.0, best: None, numerator: 0.0, denominator: 0.0, degenerate }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureEstimate {
    pub value: f64,
    pub dictionary_size: usize,
    pub per_step: Vec<f64>,
}

/// Both parts of the localized first variation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalizedVariation {
    pub transport: f64,
    pub commutator: f64,
}

impl LocalizedVariation {
    pub fn total(&self) -> f64 {
        self.transport + self.commutator
    }
}

/// Divergence and Jacobian `∂_k ξ_l` (row-major `k*d + l`) of a vector field.
struct Derivatives {
    div: Vec<f64>,
    jac: Vec<Vec<f64>>,
}

fn derivatives(xi: &VectorTestField, need_jacobian: bool) -> Derivatives {
    let grid = *xi.grid();
    let d = grid.dim();
    let refs: Vec<&[f64]> = xi.components().iter().map(|v| v.as_slice()).collect();
    let grads = fourier::gradient(&grid, &refs); // grads[l][k] = ∂_k ξ_l
    let mut div = vec![0.0; grid.len()];
    for (l, g) in grads.iter().enumerate() {
        for (o, v) in div.iter_mut().zip(&g[l]) {
            *o += v;
        }
    }
    let jac = if need_jacobian {
        let mut jac = Vec::with_capacity(d * d);
        for k in 0..d {
            for g in grads.iter() {
                jac.push(g[k].clone());
            }
        }
        jac
    } else {
        Vec::new()
    };
    Derivatives { div, jac }
}

fn check(u: &PhaseField, xi: &VectorTestField, sigma: &SurfaceTensionMatrix, h: f64) -> Result<()> {
    u.grid().check_same(xi.grid())?;
    if u.phases() != sigma.phases() {
        return Err(MboError::InvalidParameter("phase count does not match sigma".into()));
    }
    if !(h > 0.0) {
        return Err(MboError::NonPositiveVariance(h));
    }
    Ok(())
}

fn components_of(fields: Vec<Vec<f64>>, d: usize) -> Vec<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    let mut it = fields.into_iter();
    loop {
        let chunk: Vec<Vec<f64>> = it.by_ref().take(d).collect();
        if chunk.is_empty() {
            break;
        }
        out.push(chunk);
    }
    out
}

/// `(G_var ∗ f_j, ∇(G_var ∗ f_j))` for each field.
fn values_and_gradients(grid: &Grid, fields: &[Vec<f64>], var: f64) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let d = grid.dim();
    let refs: Vec<&[f64]> = fields.iter().map(|v| v.as_slice()).collect();
    let spectra = fourier::forward(grid, &refs);
    let g = fourier::gaussian_multiplier(grid, var, &[], 1.0);
    let gd: Vec<Spectrum> = (0..d).map(|a| fourier::gaussian_multiplier(grid, var, &[a], 1.0)).collect();
    let mut outs = Vec::with_capacity(fields.len() * (d + 1));
    for s in &spectra {
        outs.push(fourier::multiply(s, &g));
        for m in &gd {
            outs.push(fourier::multiply(s, m));
        }
    }
    let flat = fourier::inverse(grid, outs);
    let mut vals = Vec::new();
    let mut grads = Vec::new();
    for chunk in components_of(flat, d + 1) {
        let mut it = chunk.into_iter();
        vals.push(it.next().unwrap());
        grads.push(it.collect());
    }
    (vals, grads)
}

/// `Σ_cells Σ_i a_i (v·S_i + s R_i)`, summed in cell order so results do not depend on scheduling.
fn contract(a: &[Vec<f64>], v: &[&[f64]], s: &[f64], vecs: &[Vec<Vec<f64>>], scal: &[Vec<f64>]) -> f64 {
    let len = s.len();
    (0..len)
        .into_par_iter()
        .map(|c| {
            let mut acc = 0.0;
            for i in 0..a.len() {
                let mut t = s[c] * scal[i][c];
                for (k, vk) in v.iter().enumerate() {
                    t += vk[c] * vecs[i][k][c];
                }
                acc += a[i][c] * t;
            }
            acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Closed form `(1/√h) Σ σ_ij ∫ ∇ξ : u_i (G_h Id - h∇²G_h)∗u_j`.
pub fn first_variation_energy(u: &PhaseField, xi: &VectorTestField, sigma: &SurfaceTensionMatrix, h: f64) -> Result<f64> {
    check(u, xi, sigma, h)?;
    let grid = *u.grid();
    let d = grid.dim();
    let der = derivatives(xi, true);
    let refs: Vec<&[f64]> = u.components().iter().map(|v| v.as_slice()).collect();
    let spectra = fourier::forward(&grid, &refs);
    // σ-combined spectra so that each matrix entry needs P inverse transforms
    let p = u.phases();
    let combined: Vec<Spectrum> = (0..p)
        .map(|i| {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (j, s) in spectra.iter().enumerate() {
                let w = sigma.get(i, j);
                if w != 0.0 {
                    acc.par_iter_mut().zip(s.par_iter()).for_each(|(a, b)| *a += b * w);
                }
            }
            acc
        })
        .collect();
    let mut total = 0.0;
    for k in 0..d {
        for l in 0..d {
            let jac = &der.jac[k * d + l];
            if jac.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut m = fourier::gaussian_multiplier(&grid, h, &[k, l], -h);
            if k == l {
                let g = fourier::gaussian_multiplier(&grid, h, &[], 1.0);
                for (x, y) in m.iter_mut().zip(&g) {
                    *x += y;
                }
            }
            let f = fourier::inverse(&grid, combined.iter().map(|s| fourier::multiply(s, &m)).collect());
            let ju = weighted(jac, u.components());
            for i in 0..p {
                total += ju[i].iter().zip(&f[i]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    Ok(total * grid.cell_volume() / h.sqrt())
}

/// Precomputed σ-combined `G_h∗u` and `∇G_h∗u` for repeated transport-form evaluations.
struct TransportForm {
    vecs: Vec<Vec<Vec<f64>>>,
    scal: Vec<Vec<f64>>,
}

impl TransportForm {
    fn new(u: &PhaseField, sigma: &SurfaceTensionMatrix, h: f64) -> Self {
        let grid = *u.grid();
        let (gu, grad) = values_and_gradients(&grid, u.components(), h);
        let scal = sigma.combine(&gu);
        let d = grid.dim();
        let vecs = (0..u.phases())
            .map(|i| {
                (0..d)
                    .map(|k| {
                        let mut out = vec![0.0; grid.len()];
                        for (j, gj) in grad.iter().enumerate() {
                            let w = sigma.get(i, j);
                            if w != 0.0 {
                                for (o, v) in out.iter_mut().zip(&gj[k]) {
                                    *o += w * v;
                                }
                            }
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        TransportForm { vecs, scal }
    }

    /// `(2/√h) Σ σ_ij [∫ u_i ξ·∇G∗u_j + ∫ (∇·ξ) u_i G∗u_j]`.
    fn eval(&self, u: &PhaseField, xi: &[&[f64]], div: &[f64], h: f64) -> f64 {
        2.0 * contract(u.components(), xi, div, &self.vecs, &self.scal) * u.grid().cell_volume() / h.sqrt()
    }
}

/// Transport form `(1/√h) ∫ -(ξ·∇)u·σG_h∗u - u·σG_h∗((ξ·∇)u)` in divergence form.
pub fn first_variation_energy_direct(
    u: &PhaseField,
    xi: &VectorTestField,
    sigma: &SurfaceTensionMatrix,
    h: f64,
) -> Result<f64> {
    check(u, xi, sigma, h)?;
    let der = derivatives(xi, false);
    let tf = TransportForm::new(u, sigma, h);
    let comps: Vec<&[f64]> = xi.components().iter().map(|v| v.as_slice()).collect();
    Ok(tf.eval(u, &comps, &der.div, h))
}

/// `-(2/√h) ∫ (u-χ)·σ G_h∗(-(ξ·∇)u)`.
pub fn first_variation_dissipation(
    u: &PhaseField,
    chi: &PhaseField,
    xi: &VectorTestField,
    sigma: &SurfaceTensionMatrix,
    h: f64,
) -> Result<f64> {
    check(u, xi, sigma, h)?;
    u.grid().check_same(chi.grid())?;
    let grid = *u.grid();
    let der = derivatives(xi, false);
    let w = u.diff(chi);
    let (gw, grad) = values_and_gradients(&grid, &w, h);
    // σ-combine over the first index: S_j = Σ_i σ_ij ∇G∗w_i
    let scal = sigma.combine(&gw);
    let d = grid.dim();
    let vecs: Vec<Vec<Vec<f64>>> = (0..u.phases())
        .map(|j| {
            (0..d)
                .map(|k| {
                    let mut out = vec![0.0; grid.len()];
                    for (i, gi) in grad.iter().enumerate() {
                        let s = sigma.get(i, j);
                        if s != 0.0 {
                            for (o, v) in out.iter_mut().zip(&gi[k]) {
                                *o += s * v;
                            }
                        }
                    }
                    out
                })
                .collect()
        })
        .collect();
    let comps: Vec<&[f64]> = xi.components().iter().map(|v| v.as_slice()).collect();
    let s = contract(u.components(), &comps, &der.div, &vecs, &scal);
    Ok(-2.0 * s * grid.cell_volume() / h.sqrt())
}

/// Everything about `(u, χ, ζ)` that does not depend on the test field.
pub struct SlopeContext<'a> {
    u: &'a PhaseField,
    sigma: &'a SurfaceTensionMatrix,
    h: f64,
    zeta: Vec<f64>,
    grad_zeta: Vec<Vec<f64>>,
    unit_zeta: bool,
    transport: TransportForm,
    /// σ-combined `F = G½(ζ G½ w) - ζ G w` and its gradient; `None` when the term vanishes.
    commutator: Option<(Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>)>,
}

impl<'a> SlopeContext<'a> {
    pub fn new(
        u: &'a PhaseField,
        chi: &PhaseField,
        zeta: &ScalarField,
        sigma: &'a SurfaceTensionMatrix,
        h: f64,
    ) -> Result<Self> {
        let grid = *u.grid();
        grid.check_same(chi.grid())?;
        check_zeta(&grid, zeta)?;
        if u.phases() != sigma.phases() || chi.phases() != sigma.phases() {
            return Err(MboError::InvalidParameter("phase count does not match sigma".into()));
        }
        if !(h > 0.0) {
            return Err(MboError::NonPositiveVariance(h));
        }
        let d = grid.dim();
        let unit_zeta = is_unit(Some(zeta));
        let constant_zeta = zeta.is_constant();
        let grad_zeta = if constant_zeta {
            vec![vec![0.0; grid.len()]; d]
        } else {
            fourier::gradient(&grid, &[zeta.values()]).pop().unwrap()
        };
        let transport = TransportForm::new(u, sigma, h);
        let w = u.diff(chi);
        let trivial = constant_zeta || w.iter().all(|c| c.iter().all(|&v| v == 0.0));
        let commutator = if trivial {
            None
        } else {
            let z = zeta.values();
            let gw_half = conv(&grid, &w, 0.5 * h);
            let zv = weighted(z, &gw_half);
            let (a, grad_a) = values_and_gradients(&grid, &zv, 0.5 * h);
            let (gw, grad_gw) = values_and_gradients(&grid, &w, h);
            let p = u.phases();
            let mut f = Vec::with_capacity(p);
            let mut grad_f = Vec::with_capacity(p);
            for i in 0..p {
                f.push(a[i].iter().zip(&gw[i]).zip(z).map(|((x, y), zz)| x - zz * y).collect::<Vec<f64>>());
                let gi: Vec<Vec<f64>> = (0..d)
                    .map(|k| {
                        (0..grid.len())
                            .map(|c| grad_a[i][k][c] - grad_zeta[k][c] * gw[i][c] - z[c] * grad_gw[i][k][c])
                            .collect()
                    })
                    .collect();
                grad_f.push(gi);
            }
            // combine over the first index: W_j = Σ_i σ_ij F_i
            let scal = sigma.combine(&f);
            let vecs: Vec<Vec<Vec<f64>>> = (0..p)
                .map(|j| {
                    (0..d)
                        .map(|k| {
                            let mut out = vec![0.0; grid.len()];
                            for (i, gi) in grad_f.iter().enumerate() {
                                let s = sigma.get(i, j);
                                if s != 0.0 {
                                    for (o, v) in out.iter_mut().zip(&gi[k]) {
                                        *o += s * v;
                                    }
                                }
                            }
                            out
                        })
                        .collect()
                })
                .collect();
            Some((vecs, scal))
        };
        Ok(SlopeContext {
            u,
            sigma,
            h,
            zeta: zeta.values().to_vec(),
            grad_zeta,
            unit_zeta,
            transport,
            commutator,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// Localized first variation split into the transport part `δE_h(u, ζξ)` and the commutator part.
    pub fn variation(&self, xi: &VectorTestField) -> Result<LocalizedVariation> {
        self.grid().check_same(xi.grid())?;
        let der = derivatives(xi, false);
        Ok(self.variation_with(xi, &der))
    }

    fn variation_with(&self, xi: &VectorTestField, der: &Derivatives) -> LocalizedVariation {
        let grid = *self.grid();
        let d = grid.dim();
        let h = self.h;
        let transport = if self.unit_zeta {
            let comps: Vec<&[f64]> = xi.components().iter().map(|v| v.as_slice()).collect();
            self.transport.eval(self.u, &comps, &der.div, h)
        } else {
            let zx: Vec<Vec<f64>> = xi.components().iter().map(|c| c.iter().zip(&self.zeta).map(|(a, b)| a * b).collect()).collect();
            let div: Vec<f64> = (0..grid.len())
                .map(|c| {
                    let mut s = self.zeta[c] * der.div[c];
                    for k in 0..d {
                        s += self.grad_zeta[k][c] * xi.component(k)[c];
                    }
                    s
                })
                .collect();
            let comps: Vec<&[f64]> = zx.iter().map(|v| v.as_slice()).collect();
            self.transport.eval(self.u, &comps, &div, h)
        };
        let commutator = match &self.commutator {
            None => 0.0,
            Some((vecs, scal)) => {
                let comps: Vec<&[f64]> = xi.components().iter().map(|v| v.as_slice()).collect();
                2.0 * contract(self.u.components(), &comps, &der.div, vecs, scal) * grid.cell_volume() / h.sqrt()
            }
        };
        LocalizedVariation { transport, commutator }
    }

    /// `2√h ∫ ζ |G_{h/2}∗((ξ·∇)u)|²_σ`, with the divergence on the kernel.
    pub fn denominator(&self, xi: &VectorTestField) -> Result<f64> {
        self.grid().check_same(xi.grid())?;
        let der = derivatives(xi, false);
        Ok(self.denominator_with(xi, &der))
    }

    fn denominator_with(&self, xi: &VectorTestField, der: &Derivatives) -> f64 {
        let grid = *self.grid();
        let d = grid.dim();
        let p = self.u.phases();
        let var = 0.5 * self.h;
        let g = fourier::gaussian_multiplier(&grid, var, &[], -1.0);
        let gd: Vec<Spectrum> = (0..d).map(|a| fourier::gaussian_multiplier(&grid, var, &[a], 1.0)).collect();
        // Σ_j (ξ·∇)u_j = 0, so the last phase follows from the others
        let computed = p - 1;
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(computed * (d + 1));
        for j in 0..computed {
            let uj = self.u.component(j);
            for k in 0..d {
                inputs.push(uj.iter().zip(xi.component(k)).map(|(a, b)| a * b).collect());
            }
            inputs.push(uj.iter().zip(&der.div).map(|(a, b)| a * b).collect());
        }
        let refs: Vec<&[f64]> = inputs.iter().map(|v| v.as_slice()).collect();
        let spectra = fourier::forward(&grid, &refs);
        let mut outs = Vec::with_capacity(computed);
        for j in 0..computed {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
            for k in 0..d {
                fourier::multiply_acc(&mut acc, &spectra[j * (d + 1) + k], &gd[k]);
            }
            fourier::multiply_acc(&mut acc, &spectra[j * (d + 1) + d], &g);
            outs.push(acc);
        }
        let mut t = fourier::inverse(&grid, outs);
        let mut last = vec![0.0; grid.len()];
        for f in &t {
            for (o, v) in last.iter_mut().zip(f) {
                *o -= v;
            }
        }
        t.push(last);
        let lhs = if self.unit_zeta { t.clone() } else { weighted(&self.zeta, &t) };
        let val = -self.sigma.pair_sum(&lhs, &t) * grid.cell_volume();
        2.0 * self.h.sqrt() * val.max(0.0)
    }

    /// Ratio `|numerator| / √denominator` for one test field.
    pub fn ratio(&self, xi: &VectorTestField) -> Result<(f64, f64, f64)> {
        self.grid().check_same(xi.grid())?;
        let der = derivatives(xi, false);
        let num = self.variation_with(xi, &der).total();
        let den = self.denominator_with(xi, &der);
        let r = if den > DEGENERATE_DENOMINATOR { num.abs() / den.sqrt() } else { 0.0 };
        Ok((r, num, den))
    }

    /// Largest ratio over the dictionary, clamped at zero.
    pub fn slope(&self, dictionary: &[VectorTestField]) -> Result<SlopeEstimate> {
        if dictionary.is_empty() {
            return Err(MboError::InvalidParameter("empty test-field dictionary".into()));
        }
        let mut best = SlopeEstimate::zero(true);
        for xi in dictionary {
            let (r, num, den) = self.ratio(xi)?;
            if den > DEGENERATE_DENOMINATOR {
                best.degenerate = false;
                if r > best.value || best.best.is_none() {
                    best = SlopeEstimate { value: r, best: Some(xi.label().to_string()), numerator: num.abs(), denominator: den, degenerate: false };
                }
            }
        }
        if best.degenerate {
            return Ok(SlopeEstimate::zero(true));
        }
        Ok(best)
    }
}

/// `(d/ds) E_h(u_s, χ; ζ)` at `s = 0`, split into its two parts.
pub fn localized_first_variation(
    u: &PhaseField,
    chi: &PhaseField,
    zeta: &ScalarField,
    xi: &VectorTestField,
    sigma: &SurfaceTensionMatrix,
    h: f64,
) -> Result<LocalizedVariation> {
    SlopeContext::new(u, chi, zeta, sigma, h)?.variation(xi)
}

/// Lower bound on the local slope of `E_h(·, χ; ζ)` at `u` over a dictionary of test fields.
pub fn slope_lower_bound(
    u: &PhaseField,
    chi: &PhaseField,
    zeta: &ScalarField,
    sigma: &SurfaceTensionMatrix,
    h: f64,
    dictionary: &[VectorTestField],
) -> Result<SlopeEstimate> {
    SlopeContext::new(u, chi, zeta, sigma, h)?.slope(dictionary)
}

/// `h Σ_n slope²` over consecutive pairs, the slope at `χⁿ` taken for `E_h(·, χⁿ⁻¹; ζ)`.
pub fn curvature_rayleigh(
    window: &[Partition],
    zeta: &ScalarField,
    sigma: &SurfaceTensionMatrix,
    h: f64,
    dictionary: &[VectorTestField],
) -> Result<CurvatureEstimate> {
    let mut per_step = Vec::with_capacity(window.len().saturating_sub(1));
    for pair in window.windows(2) {
        let prev = pair[0].to_phase_field();
        let cur = pair[1].to_phase_field();
        let s = slope_lower_bound(&cur, &prev, zeta, sigma, h, dictionary)?;
        per_step.push(s.value * s.value);
    }
    let value = h * per_step.iter().sum::<f64>();
    Ok(CurvatureEstimate { value, dictionary_size: dictionary.len(), per_step })
}

/// Fourier vector fields with `|m|_∞ ≤ k`, cosine and sine in each component, one mode of
/// each `±m` pair, plus the constant fields.
pub fn fourier_dictionary(grid: &Grid, k: i32) -> Vec<VectorTestField> {
    let d = grid.dim();
    let mut out = Vec::new();
    for a in 0..d {
        let mode = FourierMode { m: [0; 3], component: a, cos_coeff: 1.0, sin_coeff: 0.0 };
        out.push(VectorTestField::from_modes(*grid, vec![mode], format!("const[{a}]")).unwrap());
    }
    let range = -k..=k;
    let mut modes: Vec<[i32; 3]> = Vec::new();
    for m0 in range.clone() {
        for m1 in if d > 1 { range.clone() } else { 0..=0 } {
            for m2 in if d > 2 { range.clone() } else { 0..=0 } {
                let m = [m0, m1, m2];
                // keep the lexicographically positive representative
                let first = m.iter().find(|&&v| v != 0);
                if matches!(first, Some(&v) if v > 0) {
                    modes.push(m);
                }
            }
        }
    }
    for m in modes {
        for a in 0..d {
            for (c, s, tag) in [(1.0, 0.0, "cos"), (0.0, 1.0, "sin")] {
                let mode = FourierMode { m, component: a, cos_coeff: c, sin_coeff: s };
                let label = format!("{tag}{:?}[{a}]", &m[..d]);
                out.push(VectorTestField::from_modes(*grid, vec![mode], label).unwrap());
            }
        }
    }
    out
}

/// Smoothed radial field `(x-c)/√(|x-c|² + ε²)`, tapered to zero between `inner` and `outer`.
pub fn radial_field(grid: &Grid, center: [f64; 3], eps: f64, inner: f64, outer: f64) -> VectorTestField {
    let d = grid.dim();
    VectorTestField::from_fn(*grid, "radial", |x| {
        let dx = grid.periodic_delta(x, center);
        let r2: f64 = dx.iter().take(d).map(|t| t * t).sum();
        let r = r2.sqrt();
        let taper = if r <= inner {
            1.0
        } else if r >= outer {
            0.0
        } else {
            let s = (r - inner) / (outer - inner);
            0.5 * (1.0 + (std::f64::consts::PI * s).cos())
        };
        let f = taper / (r2 + eps * eps).sqrt();
        let mut v = [0.0; 3];
        for a in 0..d {
            v[a] = dx[a] * f;
        }
        v
    })
}

/// Radial field with default smoothing for a disk centered at `center`.
pub fn default_radial_field(grid: &Grid, center: [f64; 3]) -> VectorTestField {
    let l = grid.side();
    radial_field(grid, center, 4.0 * grid.spacing(), 0.35 * l, 0.48 * l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, ShapeSpec};

    #[test]
    fn dictionary_size() {
        let g = Grid::new(16, 2, 1.0).unwrap();
        assert_eq!(fourier_dictionary(&g, 3).len(), 2 + 24 * 4);
        let g1 = Grid::new(16, 1, 1.0).unwrap();
        assert_eq!(fourier_dictionary(&g1, 2).len(), 1 + 2 * 2);
    }

    #[test]
    fn constant_field_gives_zero_variation() {
        let g = Grid::new(32, 2, 1.0).unwrap();
        let u = rasterize(&ShapeSpec::centered_disk(&g, 0.2), &g, 2).unwrap().to_phase_field();
        let s = SurfaceTensionMatrix::two_phase(1.0).unwrap();
        let xi = VectorTestField::constant(g, [0.3, -0.2, 0.0]);
        assert!(first_variation_energy(&u, &xi, &s, 4e-3).unwrap().abs() < 1e-12);
        assert!(first_variation_energy_direct(&u, &xi, &s, 4e-3).unwrap().abs() < 1e-10);
    }

    #[test]
    fn single_phase_slope_is_zero() {
        let g = Grid::new(16, 2, 1.0).unwrap();
        let u = Partition::uniform(g, 2, 1).unwrap().to_phase_field();
        let s = SurfaceTensionMatrix::two_phase(1.0).unwrap();
        let z = ScalarField::constant(g, 1.0);
        let est = slope_lower_bound(&u, &u, &z, &s, 1e-2, &fourier_dictionary(&g, 1)).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.degenerate);
    }
}
