//! Surface-tension matrices: admissibility checks, the certified lower bound on the
//! zero-sum subspace, and the induced norm.

use crate::error::{MboError, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use std::fmt;

pub const TRIANGLE_SLACK: f64 = 1e-12;
const ZERO_SUM_TOL: f64 = 1e-8;

/// Why a matrix was rejected. Indices are zero-based; display is one-based.
#[derive(Clone, Debug, PartialEq)]
pub enum SigmaRejection {
    NotSquare { rows: usize, row_len: usize },
    TooFewPhases(usize),
    NonFinite { i: usize, j: usize },
    Asymmetric { i: usize, j: usize },
    NonzeroDiagonal { i: usize },
    NonPositive { i: usize, j: usize },
    Triangle { i: usize, j: usize, k: usize },
    NotConditionallyNegative { bound: f64 },
}

impl fmt::Display for SigmaRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaRejection::NotSquare { rows, row_len } => write!(f, "not square: {rows} rows, a row of length {row_len}"),
            SigmaRejection::TooFewPhases(p) => write!(f, "need at least 2 phases, got {p}"),
            SigmaRejection::NonFinite { i, j } => write!(f, "non-finite entry at ({},{})", i + 1, j + 1),
            SigmaRejection::Asymmetric { i, j } => write!(f, "asymmetric at pair ({},{})", i + 1, j + 1),
            SigmaRejection::NonzeroDiagonal { i } => write!(f, "nonzero diagonal at {}", i + 1),
            SigmaRejection::NonPositive { i, j } => write!(f, "non-positive tension at pair ({},{})", i + 1, j + 1),
            SigmaRejection::Triangle { i, j, k } => {
                write!(f, "triangle inequality fails at ({},{},{}): s_{}{} >= s_{}{} + s_{}{}", i + 1, j + 1, k + 1, i + 1, j + 1, i + 1, k + 1, k + 1, j + 1)
            }
            SigmaRejection::NotConditionallyNegative { bound } => {
                write!(f, "not conditionally negative definite: lower bound {bound:e} <= 0")
            }
        }
    }
}

impl std::error::Error for SigmaRejection {}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceTensionMatrix {
    phases: usize,
    entries: Vec<f64>,
    lower_bound: f64,
    upper_bound: f64,
}

/// Orthonormal basis of the zero-sum subspace (Helmert columns), `P × (P-1)`.
pub fn zero_sum_basis(p: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(p, p - 1);
    for k in 1..p {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            b[(i, k - 1)] = 1.0 / norm;
        }
        b[(k, k - 1)] = -(k as f64) / norm;
    }
    b
}

/// Check admissibility of a dense row-major matrix given as rows.
pub fn validate_sigma(rows: &[Vec<f64>]) -> std::result::Result<SurfaceTensionMatrix, SigmaRejection> {
    let p = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != p) {
        return Err(SigmaRejection::NotSquare { rows: p, row_len: r.len() });
    }
    if p < 2 {
        return Err(SigmaRejection::TooFewPhases(p));
    }
    for i in 0..p {
        for j in 0..p {
            if !rows[i][j].is_finite() {
                return Err(SigmaRejection::NonFinite { i, j });
            }
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            if rows[i][j] != rows[j][i] {
                return Err(SigmaRejection::Asymmetric { i, j });
            }
        }
    }
    for i in 0..p {
        if rows[i][i] != 0.0 {
            return Err(SigmaRejection::NonzeroDiagonal { i });
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            if !(rows[i][j] > 0.0) {
                return Err(SigmaRejection::NonPositive { i, j });
            }
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            for k in 0..p {
                if k == i || k == j {
                    continue;
                }
                if rows[i][j] >= rows[i][k] + rows[k][j] - TRIANGLE_SLACK {
                    let mut t = [i, j, k];
                    t.sort_unstable();
                    return Err(SigmaRejection::Triangle { i: t[0], j: t[1], k: t[2] });
                }
            }
        }
    }
    let s = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
    let b = zero_sum_basis(p);
    let projected = b.transpose() * &s * &b;
    let eig = nalgebra::SymmetricEigen::new(projected);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let lower_bound = -max;
    if !(lower_bound > 0.0) {
        return Err(SigmaRejection::NotConditionallyNegative { bound: lower_bound });
    }
    Ok(SurfaceTensionMatrix { phases: p, entries: rows.concat(), lower_bound, upper_bound: -min })
}

impl SurfaceTensionMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        validate_sigma(rows).map_err(MboError::from)
    }

    /// `σ_ij = 1 - δ_ij`.
    pub fn uniform(p: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
        Self::from_rows(&rows)
    }

    /// Two phases with tension `s`.
    pub fn two_phase(s: f64) -> Result<Self> {
        Self::from_rows(&[vec![0.0, s], vec![s, 0.0]])
    }

    /// Low-angle grain-boundary law `s(θ) = (θ/θ*)(1 - ln(θ/θ*))` below the cutoff `θ*`,
    /// and 1 above. Angles in degrees; misorientation is `|θ_i - θ_j|`.
    pub fn read_shockley(orientations: &[f64], cutoff: f64) -> Result<Self> {
        let p = orientations.len();
        let law = |t: f64| {
            if t >= cutoff {
                1.0
            } else {
                let r = t / cutoff;
                if r <= 0.0 {
                    0.0
                } else {
                    r * (1.0 - r.ln())
                }
            }
        };
        let rows: Vec<Vec<f64>> = (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| if i == j { 0.0 } else { law((orientations[i] - orientations[j]).abs()) })
                    .collect()
            })
            .collect();
        Self::from_rows(&rows)
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.phases + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.phases).map(|r| r.to_vec()).collect()
    }

    /// Certified `σ̲`: `ξ·σξ ≤ -σ̲ |ξ|²` on zero-sum vectors.
    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// Largest `|eigenvalue|` of `σ` on the zero-sum subspace.
    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }

    pub fn min_offdiag(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.phases {
            for j in 0..self.phases {
                if i != j {
                    m = m.min(self.get(i, j));
                }
            }
        }
        m
    }

    /// `σ v` for a P-vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.phases).map(|i| (0..self.phases).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    /// Pointwise `-ξ·σξ`.
    pub fn norm_sq_at(&self, xi: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.phases {
            for j in 0..self.phases {
                s += self.get(i, j) * xi[i] * xi[j];
            }
        }
        -s
    }

    /// Componentwise linear combination `(σ f)_i = Σ_j σ_ij f_j` of fields.
    pub fn combine(&self, fields: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let len = fields[0].len();
        (0..self.phases)
            .map(|i| {
                let mut out = vec![0.0; len];
                for (j, f) in fields.iter().enumerate() {
                    let s = self.get(i, j);
                    if s != 0.0 {
                        for (o, v) in out.iter_mut().zip(f) {
                            *o += s * v;
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// `Σ_ij σ_ij ∫ a_i b_j` as a plain cell sum (caller multiplies by the cell volume).
    pub fn pair_sum(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.phases {
            for j in 0..self.phases {
                let w = self.get(i, j);
                if w != 0.0 {
                    s += w * a[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum::<f64>();
                }
            }
        }
        s
    }
}

/// `-ξ·σξ` per cell for a zero-sum field given component-major.
pub fn sigma_norm_sq(xi: &[Vec<f64>], sigma: &SurfaceTensionMatrix) -> Result<Vec<f64>> {
    if xi.len() != sigma.phases() {
        return Err(MboError::InvalidField("component count does not match sigma".into()));
    }
    let len = xi[0].len();
    let mut out = vec![0.0; len];
    let mut v = vec![0.0; xi.len()];
    for (cell, o) in out.iter_mut().enumerate() {
        for (k, c) in xi.iter().enumerate() {
            v[k] = c[cell];
        }
        let sum: f64 = v.iter().sum();
        if sum.abs() > ZERO_SUM_TOL {
            return Err(MboError::NotZeroSum { cell, sum });
        }
        *o = sigma.norm_sq_at(&v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_three_phases() {
        let s = SurfaceTensionMatrix::uniform(3).unwrap();
        assert!((s.lower_bound() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_phase_bound() {
        let s = SurfaceTensionMatrix::two_phase(2.0).unwrap();
        assert!((s.lower_bound() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_violation_is_named() {
        let rows = vec![vec![0.0, 3.0, 1.0], vec![3.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert_eq!(validate_sigma(&rows), Err(SigmaRejection::Triangle { i: 0, j: 1, k: 2 }));
        let msg = validate_sigma(&rows).unwrap_err().to_string();
        assert!(msg.contains("(1,2,3)"), "{msg}");
        // equality must also reject
        let rows = vec![vec![0.0, 2.0, 1.0], vec![2.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(validate_sigma(&rows), Err(SigmaRejection::Triangle { .. })));
    }

    #[test]
    fn distinct_rejections() {
        assert!(matches!(validate_sigma(&[vec![0.0, 1.0], vec![2.0, 0.0]]), Err(SigmaRejection::Asymmetric { .. })));
        assert!(matches!(validate_sigma(&[vec![1.0, 1.0], vec![1.0, 0.0]]), Err(SigmaRejection::NonzeroDiagonal { i: 0 })));
        assert!(matches!(validate_sigma(&[vec![0.0, 0.0], vec![0.0, 0.0]]), Err(SigmaRejection::NonPositive { i: 0, j: 1 })));
        assert!(matches!(validate_sigma(&[vec![0.0]]), Err(SigmaRejection::TooFewPhases(1))));
        assert!(matches!(validate_sigma(&[vec![0.0, 1.0]]), Err(SigmaRejection::NotSquare { .. })));
    }

    #[test]
    fn norm_examples() {
        let s = SurfaceTensionMatrix::two_phase(1.0).unwrap();
        let a = 0.7;
        let out = sigma_norm_sq(&[vec![a, 0.0], vec![-a, 0.0]], &s).unwrap();
        assert!((out[0] - 2.0 * a * a).abs() < 1e-15);
        assert_eq!(out[1], 0.0);
        assert!(sigma_norm_sq(&[vec![1.0], vec![0.0]], &s).is_err());
    }

    #[test]
    fn read_shockley_preset() {
        let s = SurfaceTensionMatrix::read_shockley(&[0.0, 20.0, 40.0], 15.0).unwrap();
        assert_eq!(s.get(0, 1), 1.0);
        assert!(SurfaceTensionMatrix::read_shockley(&[0.0, 0.0], 15.0).is_err());
        let s = SurfaceTensionMatrix::read_shockley(&[0.0, 10.0, 30.0], 15.0).unwrap();
        assert!(s.get(0, 1) < 1.0 && s.get(0, 1) > 0.9);
    }

    #[test]
    fn helmert_basis_is_orthonormal() {
        for p in 2..7 {
            let b = zero_sum_basis(p);
            let gram = b.transpose() * &b;
            for i in 0..p - 1 {
                for j in 0..p - 1 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[(i, j)] - e).abs() < 1e-14);
                }
                assert!(b.column(i).sum().abs() < 1e-14);
            }
        }
    }
}
