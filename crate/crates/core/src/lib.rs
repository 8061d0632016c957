//! Thresholding (MBO) scheme for multi-phase mean-curvature flow on periodic grids,
//! with the energies, metrics, interpolations and first variations used to check
//! energy-dissipation and Brakke-type inequalities at finite step size.

pub mod energetics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod scheme;
pub mod tensions;
pub mod variational;
pub mod variations;

pub use energetics::{C0, ZetaPreset};
pub use error::{MboError, Result};
pub use grid::{make_grid, Grid, Partition, PhaseField, ScalarField, ShapeSpec, VectorTestField};
pub use scheme::{mbo_step, run, Trajectory};
pub use tensions::{validate_sigma, SurfaceTensionMatrix};
