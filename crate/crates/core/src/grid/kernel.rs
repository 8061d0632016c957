use super::fourier::{self, Spectrum};
use super::{Grid, ScalarField};
use crate::error::{MboError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `G_h`
    G,
    /// `G_{h/2}`
    GHalf,
    /// `√h ∇G_h`, one output per axis
    SqrtHGradG,
    /// `h ∇²G_h`, `d × d` outputs, row-major
    HHessG,
    /// `G_h Id − h ∇²G_h`, `d × d` outputs, row-major
    GIdMinusHHess,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralKernel {
    grid: Grid,
    h: f64,
    kind: KernelKind,
}

impl SpectralKernel {
    pub fn new(grid: Grid, h: f64, kind: KernelKind) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(MboError::NonPositiveVariance(h));
        }
        let k = SpectralKernel { grid, h, kind };
        if k.under_resolved() {
            log::warn!(
                "kernel under-resolved: sqrt(h) = {:.3e} < 2 dx = {:.3e}",
                h.sqrt(),
                2.0 * grid.spacing()
            );
        }
        Ok(k)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn under_resolved(&self) -> bool {
        self.h.sqrt() < 2.0 * self.grid.spacing()
    }

    /// Variance of the underlying Gaussian.
    pub fn variance(&self) -> f64 {
        match self.kind {
            KernelKind::GHalf => 0.5 * self.h,
            _ => self.h,
        }
    }

    pub fn output_count(&self) -> usize {
        let d = self.grid.dim();
        match self.kind {
            KernelKind::G | KernelKind::GHalf => 1,
            KernelKind::SqrtHGradG => d,
            KernelKind::HHessG | KernelKind::GIdMinusHHess => d * d,
        }
    }

    /// Frequency-space multipliers, one per output.
    pub fn multipliers(&self) -> Vec<Spectrum> {
        let g = &self.grid;
        let d = g.dim();
        let h = self.h;
        match self.kind {
            KernelKind::G | KernelKind::GHalf => vec![fourier::gaussian_multiplier(g, self.variance(), &[], 1.0)],
            KernelKind::SqrtHGradG => (0..d).map(|a| fourier::gaussian_multiplier(g, h, &[a], h.sqrt())).collect(),
            KernelKind::HHessG => {
                let mut out = Vec::with_capacity(d * d);
                for j in 0..d {
                    for l in 0..d {
                        out.push(fourier::gaussian_multiplier(g, h, &[j, l], h));
                    }
                }
                out
            }
            KernelKind::GIdMinusHHess => {
                let base = fourier::gaussian_multiplier(g, h, &[], 1.0);
                let mut out = Vec::with_capacity(d * d);
                for j in 0..d {
                    for l in 0..d {
                        let mut m = fourier::gaussian_multiplier(g, h, &[j, l], -h);
                        if j == l {
                            for (x, b) in m.iter_mut().zip(&base) {
                                *x += b;
                            }
                        }
                        out.push(m);
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Convolved {
    Scalar(ScalarField),
    Vector(Vec<ScalarField>),
    Matrix(Vec<ScalarField>),
}

impl Convolved {
    pub fn scalar(self) -> Option<ScalarField> {
        match self {
            Convolved::Scalar(s) => Some(s),
            _ => None,
        }
    }

    pub fn fields(self) -> Vec<ScalarField> {
        match self {
            Convolved::Scalar(s) => vec![s],
            Convolved::Vector(v) | Convolved::Matrix(v) => v,
        }
    }
}

/// Circular convolution realized as a frequency-space multiplier.
pub fn convolve(field: &ScalarField, kernel: &SpectralKernel) -> Result<Convolved> {
    field.grid().check_same(kernel.grid())?;
    let grid = *field.grid();
    let spec = fourier::forward(&grid, &[field.values()]).pop().unwrap();
    let outs: Vec<Spectrum> = kernel.multipliers().iter().map(|m| fourier::multiply(&spec, m)).collect();
    let fields: Vec<ScalarField> = fourier::inverse(&grid, outs)
        .into_iter()
        .map(|v| ScalarField::from_raw(grid, v))
        .collect();
    Ok(match kernel.kind() {
        KernelKind::G | KernelKind::GHalf => Convolved::Scalar(fields.into_iter().next().unwrap()),
        KernelKind::SqrtHGradG => Convolved::Vector(fields),
        _ => Convolved::Matrix(fields),
    })
}
