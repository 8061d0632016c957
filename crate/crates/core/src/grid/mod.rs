//! Periodic cubic grids on the flat torus `[0, L)^d` and the fields that live on them.
//!
//! Cells are stored flat with axis 0 varying fastest. Every integral is the
//! plain cell sum times `cell_volume`.

pub mod fourier;
mod kernel;
mod shapes;

pub use kernel::{convolve, Convolved, KernelKind, SpectralKernel};
pub use shapes::{rasterize, ShapeSpec};

use crate::error::{MboError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    dim: usize,
    side: f64,
}

/// Build a grid with `n` cells per axis in dimension `d` and period `side`.
pub fn make_grid(n: usize, d: usize, side: f64) -> Result<Grid> {
    Grid::new(n, d, side)
}

impl Grid {
    pub fn new(n: usize, dim: usize, side: f64) -> Result<Grid> {
        if !(1..=3).contains(&dim) {
            return Err(MboError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 {
            return Err(MboError::InvalidGrid(format!("n = {n} < 8")));
        }
        if n % 2 != 0 {
            return Err(MboError::InvalidGrid(format!("n = {n} is odd")));
        }
        if !(side > 0.0) || !side.is_finite() {
            return Err(MboError::InvalidGrid(format!("side length {side} must be positive")));
        }
        Ok(Grid { n, dim, side })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow(axis as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for slot in out.iter_mut().take(self.dim) {
            *slot = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat_index(&self, mi: [usize; 3]) -> usize {
        let mut idx = 0;
        for a in (0..self.dim).rev() {
            idx = idx * self.n + mi[a];
        }
        idx
    }

    /// Cell-center coordinates; unused axes are zero.
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let dx = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (mi[a] as f64 + 0.5) * dx;
        }
        x
    }

    /// Minimal-image displacement `x - y` on the torus.
    pub fn periodic_delta(&self, x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            let mut t = x[a] - y[a];
            t -= self.side * (t / self.side).round();
            out[a] = t;
        }
        out
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.cell_volume()
    }

    pub fn l2_norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(MboError::GridMismatch)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(MboError::InvalidField(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MboError::InvalidField(format!("non-finite value at cell {i}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        ScalarField { grid, values }
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.l2_norm(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every cell holds the same value bit for bit.
    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|v| v.to_bits() == self.values[0].to_bits())
    }
}

/// One Fourier mode `coeff * trig(2π m·x / L)` in vector component `component`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub m: [i32; 3],
    pub component: usize,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorTestField {
    grid: Grid,
    values: Vec<Vec<f64>>,
    modes: Option<Vec<FourierMode>>,
    label: String,
}

impl VectorTestField {
    pub fn new(grid: Grid, values: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.dim() || values.iter().any(|c| c.len() != grid.len()) {
            return Err(MboError::InvalidField("vector field shape does not match grid".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MboError::InvalidField("non-finite vector field value".into()));
        }
        Ok(VectorTestField { grid, values, modes: None, label: label.into() })
    }

    pub fn from_fn(grid: Grid, label: impl Into<String>, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut values = vec![vec![0.0; grid.len()]; grid.dim()];
        for i in 0..grid.len() {
            let v = f(grid.center(i));
            for (a, comp) in values.iter_mut().enumerate() {
                comp[i] = v[a];
            }
        }
        VectorTestField { grid, values, modes: None, label: label.into() }
    }

    /// Realize a finite Fourier sum at the cell centers.
    pub fn from_modes(grid: Grid, modes: Vec<FourierMode>, label: impl Into<String>) -> Result<Self> {
        if let Some(m) = modes.iter().find(|m| m.component >= grid.dim()) {
            return Err(MboError::InvalidField(format!("mode component {} out of range", m.component)));
        }
        let k = 2.0 * std::f64::consts::PI / grid.side();
        let mut values = vec![vec![0.0; grid.len()]; grid.dim()];
        for i in 0..grid.len() {
            let x = grid.center(i);
            for mode in &modes {
                let phase: f64 = (0..grid.dim()).map(|a| mode.m[a] as f64 * x[a]).sum::<f64>() * k;
                values[mode.component][i] += mode.cos_coeff * phase.cos() + mode.sin_coeff * phase.sin();
            }
        }
        Ok(VectorTestField { grid, values, modes: Some(modes), label: label.into() })
    }

    pub fn constant(grid: Grid, v: [f64; 3]) -> Self {
        Self::from_fn(grid, "constant", move |_| v)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, a: usize) -> &[f64] {
        &self.values[a]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn modes(&self) -> Option<&[FourierMode]> {
        self.modes.as_deref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Pointwise product with a scalar weight; the mode list is dropped.
    pub fn scaled_by(&self, w: &[f64]) -> VectorTestField {
        let values = self
            .values
            .iter()
            .map(|c| c.iter().zip(w).map(|(x, y)| x * y).collect())
            .collect();
        VectorTestField { grid: self.grid, values, modes: None, label: format!("{}*w", self.label) }
    }

    pub fn scale(&self, c: f64) -> VectorTestField {
        let values = self.values.iter().map(|comp| comp.iter().map(|x| x * c).collect()).collect();
        VectorTestField { grid: self.grid, values, modes: None, label: self.label.clone() }
    }

    pub fn add(&self, other: &VectorTestField) -> VectorTestField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        VectorTestField {
            grid: self.grid,
            values,
            modes: None,
            label: format!("{}+{}", self.label, other.label),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    grid: Grid,
    phases: usize,
    labels: Vec<u8>,
}

impl Partition {
    pub fn new(grid: Grid, phases: usize, labels: Vec<u8>) -> Result<Self> {
        if !(2..=64).contains(&phases) {
            return Err(MboError::InvalidField(format!("phase count {phases} not in 2..=64")));
        }
        if labels.len() != grid.len() {
            return Err(MboError::InvalidField("label count does not match grid".into()));
        }
        if let Some(i) = labels.iter().position(|&l| l as usize >= phases) {
            return Err(MboError::InvalidField(format!("label {} at cell {i} out of range", labels[i])));
        }
        Ok(Partition { grid, phases, labels })
    }

    pub fn uniform(grid: Grid, phases: usize, label: u8) -> Result<Self> {
        Self::new(grid, phases, vec![label; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn indicator(&self, phase: usize) -> Vec<f64> {
        self.labels.iter().map(|&l| if l as usize == phase { 1.0 } else { 0.0 }).collect()
    }

    pub fn indicators(&self) -> Vec<Vec<f64>> {
        (0..self.phases).map(|i| self.indicator(i)).collect()
    }

    pub fn count(&self, phase: usize) -> usize {
        self.labels.iter().filter(|&&l| l as usize == phase).count()
    }

    pub fn volume_of(&self, phase: usize) -> f64 {
        self.count(phase) as f64 * self.grid.cell_volume()
    }

    pub fn to_phase_field(&self) -> PhaseField {
        PhaseField { grid: self.grid, values: self.indicators() }
    }
}

/// Simplex-valued field, stored component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseField {
    grid: Grid,
    values: Vec<Vec<f64>>,
}

pub const SIMPLEX_TOL: f64 = 1e-12;

impl PhaseField {
    pub fn new(grid: Grid, values: Vec<Vec<f64>>) -> Result<Self> {
        let f = Self::new_unchecked(grid, values)?;
        f.check_simplex(SIMPLEX_TOL)?;
        Ok(f)
    }

    /// Shape checks only; used for validation-mode inputs that are not simplex-valued.
    pub fn new_unchecked(grid: Grid, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() < 2 || values.iter().any(|c| c.len() != grid.len()) {
            return Err(MboError::InvalidField("phase field shape does not match grid".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MboError::InvalidField("non-finite phase value".into()));
        }
        Ok(PhaseField { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<Vec<f64>>) -> Self {
        PhaseField { grid, values }
    }

    pub fn uniform(grid: Grid, weights: &[f64]) -> Result<Self> {
        Self::new(grid, weights.iter().map(|&w| vec![w; grid.len()]).collect())
    }

    pub fn check_simplex(&self, tol: f64) -> Result<()> {
        for i in 0..self.grid.len() {
            let mut s = 0.0;
            for c in &self.values {
                let v = c[i];
                if v < -tol || v > 1.0 + tol {
                    return Err(MboError::InvalidField(format!("component {v} outside [0,1] at cell {i}")));
                }
                s += v;
            }
            if (s - 1.0).abs() > tol {
                return Err(MboError::InvalidField(format!("components sum to {s} at cell {i}")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn phases(&self) -> usize {
        self.values.len()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.values
    }

    /// Componentwise difference `self - other` (zero-sum when both are simplex-valued).
    pub fn diff(&self, other: &PhaseField) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect()
    }

    pub fn l1_distance(&self, other: &PhaseField) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .sum();
        s * self.grid.cell_volume()
    }

    /// Label of the largest component per cell (lowest index on ties).
    pub fn to_partition(&self) -> Partition {
        let labels = (0..self.grid.len())
            .map(|i| {
                let mut best = 0;
                for p in 1..self.values.len() {
                    if self.values[p][i] > self.values[best][i] {
                        best = p;
                    }
                }
                best as u8
            })
            .collect();
        Partition { grid: self.grid, phases: self.values.len(), labels }
    }
}
