//! Discrete Fourier machinery on the torus: transforms of real fields packed in pairs,
//! and Gaussian-derivative multipliers.

use super::Grid;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

pub type Spectrum = Vec<Complex64>;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Cells handed to one worker task; lanes are batched so small grids stay cheap.
const TASK_CELLS: usize = 1 << 14;

/// Unnormalized in-place transform along every axis.
fn transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let fft = plan(n, inverse);
    let scratch_len = fft.get_inplace_scratch_len();
    let block = n * (TASK_CELLS / n).max(1);
    let run_lanes = |buf: &mut [Complex64]| {
        buf.par_chunks_mut(block).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, lanes| fft.process_with_scratch(lanes, scratch),
        );
    };
    run_lanes(data);
    if grid.dim() == 1 {
        return;
    }
    let total = grid.len();
    let mut tmp = vec![Complex64::new(0.0, 0.0); total];
    for axis in 1..grid.dim() {
        let s = grid.stride(axis);
        // [outer][j][inner] -> [outer][inner][j] and back
        transpose_blocks(data, &mut tmp, n, s);
        run_lanes(&mut tmp);
        transpose_blocks(&tmp, data, s, n);
    }
}

/// Transpose each consecutive `rows × cols` matrix of `src` into `dst`, in square tiles.
fn transpose_blocks(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    let tc = tile(cols);
    let tr = tile(rows);
    // a task owns `tc` rows of one transposed matrix
    dst.par_chunks_mut(tc * rows).enumerate().for_each(|(b, out)| {
        let c0 = (b * tc) % cols;
        let m = (b * tc) / cols;
        let base = m * rows * cols;
        for r0 in (0..rows).step_by(tr) {
            for r in r0..r0 + tr {
                let from = &src[base + r * cols + c0..base + r * cols + c0 + tc];
                for (c, v) in from.iter().enumerate() {
                    out[c * rows + r] = *v;
                }
            }
        }
    });
}

/// Largest divisor of `m` not above 32.
fn tile(m: usize) -> usize {
    (1..=32.min(m)).rev().find(|t| m % t == 0).unwrap_or(1)
}

/// Flat index of `-k` for every flat index `k`.
fn negation_table(grid: &Grid) -> Vec<usize> {
    let n = grid.n();
    let neg: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
    let d = grid.dim();
    let (n1, n2) = (if d > 1 { n } else { 1 }, if d > 2 { n } else { 1 });
    let (s1, s2) = (if d > 1 { grid.stride(1) } else { 0 }, if d > 2 { grid.stride(2) } else { 0 });
    let mut out = Vec::with_capacity(grid.len());
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            let off = neg[i1] * s1 + neg[i2] * s2;
            out.extend(neg.iter().map(|&i0| off + i0));
        }
    }
    out
}

/// Spectra of real fields. Fields are transformed two at a time as `a + i b`.
pub fn forward(grid: &Grid, fields: &[&[f64]]) -> Vec<Spectrum> {
    let mut out: Vec<Spectrum> = Vec::with_capacity(fields.len());
    let neg = negation_table(grid);
    for pair in fields.chunks(2) {
        let mut z: Spectrum = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
            [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            _ => unreachable!(),
        };
        transform(grid, &mut z, false);
        if pair.len() == 1 {
            out.push(z);
            continue;
        }
        let len = z.len();
        let mut sa = vec![Complex64::new(0.0, 0.0); len];
        let mut sb = vec![Complex64::new(0.0, 0.0); len];
        sa.par_iter_mut().zip(sb.par_iter_mut()).enumerate().for_each(|(k, (pa, pb))| {
            let zk = z[k];
            let zm = z[neg[k]].conj();
            *pa = (zk + zm) * 0.5;
            *pb = (zk - zm) * Complex64::new(0.0, -0.5);
        });
        out.push(sa);
        out.push(sb);
    }
    out
}

/// Real parts of the inverse transforms, packing Hermitian spectra in pairs.
pub fn inverse(grid: &Grid, spectra: Vec<Spectrum>) -> Vec<Vec<f64>> {
    let scale = 1.0 / grid.len() as f64;
    let mut out = Vec::with_capacity(spectra.len());
    let mut it = spectra.into_iter();
    while let Some(a) = it.next() {
        match it.next() {
            Some(b) => {
                let mut z: Spectrum = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| x + Complex64::new(-y.im, y.re))
                    .collect();
                transform(grid, &mut z, true);
                out.push(z.iter().map(|c| c.re * scale).collect());
                out.push(z.iter().map(|c| c.im * scale).collect());
            }
            None => {
                let mut z = a;
                transform(grid, &mut z, true);
                out.push(z.iter().map(|c| c.re * scale).collect());
            }
        }
    }
    out
}

/// Angular wave number `2π m / L` for each index along one axis.
pub fn wavenumbers(grid: &Grid) -> Vec<f64> {
    let n = grid.n() as i64;
    let k = 2.0 * PI / grid.side();
    (0..n).map(|i| if i <= n / 2 { i } else { i - n }).map(|m| m as f64 * k).collect()
}

/// Wave numbers for odd-order derivative factors: zero at the Nyquist index so that
/// real fields map to real fields.
pub fn odd_wavenumbers(grid: &Grid) -> Vec<f64> {
    let mut k = wavenumbers(grid);
    k[grid.n() / 2] = 0.0;
    k
}

/// Multiplier of `∂_{a1} … ∂_{ar} G_var` (derivatives listed by axis), times `scale`.
/// `var = 0` yields a plain spectral derivative.
pub fn gaussian_multiplier(grid: &Grid, var: f64, derivs: &[usize], scale: f64) -> Spectrum {
    let k = wavenumbers(grid);
    let ko = odd_wavenumbers(grid);
    let g1: Vec<f64> = k.iter().map(|&kk| (-0.5 * var * kk * kk).exp()).collect();
    let mut count = [0usize; 3];
    for &a in derivs {
        count[a] += 1;
    }
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mi = grid.multi_index(idx);
            let mut g = scale;
            let mut factor = Complex64::new(1.0, 0.0);
            for a in 0..grid.dim() {
                g *= g1[mi[a]];
                match count[a] {
                    0 => {}
                    c if c % 2 == 0 => {
                        let kk = k[mi[a]];
                        factor *= Complex64::new(-(kk * kk), 0.0).powi(c as i32 / 2);
                    }
                    c => {
                        let kk = ko[mi[a]];
                        let even = Complex64::new(-(kk * kk), 0.0).powi(c as i32 / 2);
                        factor *= even * Complex64::new(0.0, kk);
                    }
                }
            }
            factor * g
        })
        .collect()
}

pub fn multiply(spec: &[Complex64], mult: &[Complex64]) -> Spectrum {
    spec.par_iter().zip(mult.par_iter()).map(|(a, b)| a * b).collect()
}

pub fn multiply_acc(acc: &mut [Complex64], spec: &[Complex64], mult: &[Complex64]) {
    acc.par_iter_mut().zip(spec.par_iter().zip(mult.par_iter())).for_each(|(o, (a, b))| *o += a * b);
}

/// Convolve each field with the Gaussian of variance `var`.
pub fn gaussian(grid: &Grid, fields: &[&[f64]], var: f64) -> Vec<Vec<f64>> {
    if fields.is_empty() {
        return Vec::new();
    }
    let mult = gaussian_multiplier(grid, var, &[], 1.0);
    let spectra = forward(grid, fields).into_iter().map(|s| multiply(&s, &mult)).collect();
    inverse(grid, spectra)
}

/// `∇(G_var ∗ f)` for each field, as `d` components per field.
pub fn gaussian_gradient(grid: &Grid, fields: &[&[f64]], var: f64) -> Vec<Vec<Vec<f64>>> {
    let mults: Vec<Spectrum> = (0..grid.dim()).map(|a| gaussian_multiplier(grid, var, &[a], 1.0)).collect();
    let spectra = forward(grid, fields);
    let mut all = Vec::new();
    for s in &spectra {
        for m in &mults {
            all.push(multiply(s, m));
        }
    }
    let flat = inverse(grid, all);
    flat.chunks(grid.dim()).map(|c| c.to_vec()).collect()
}

/// Plain spectral gradient of each field.
pub fn gradient(grid: &Grid, fields: &[&[f64]]) -> Vec<Vec<Vec<f64>>> {
    gaussian_gradient(grid, fields, 0.0)
}

/// Spectral divergence `Σ_a ∂_a (G_var ∗ v_a)` of a vector field given by components.
pub fn gaussian_divergence(grid: &Grid, comps: &[&[f64]], var: f64) -> Vec<f64> {
    let spectra = forward(grid, comps);
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (a, s) in spectra.iter().enumerate() {
        let m = gaussian_multiplier(grid, var, &[a], 1.0);
        multiply_acc(&mut acc, s, &m);
    }
    inverse(grid, vec![acc]).pop().unwrap()
}
