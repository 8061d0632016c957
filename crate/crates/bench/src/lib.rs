//! Benchmark fixtures shared by the criterion benches.

use mbo_core::grid::rasterize;
use mbo_core::{Grid, Partition, ShapeSpec, SurfaceTensionMatrix};

pub struct Fixture {
    pub chi: Partition,
    pub sigma: SurfaceTensionMatrix,
    pub h: f64,
}

/// Centered disk of radius 0.3 with `√h = 6Δx`.
pub fn disk(n: usize) -> Fixture {
    let g = Grid::new(n, 2, 1.0).expect("grid");
    let chi = rasterize(&ShapeSpec::centered_disk(&g, 0.3), &g, 2).expect("disk");
    Fixture { chi, sigma: SurfaceTensionMatrix::two_phase(1.0).expect("sigma"), h: (6.0 * g.spacing()).powi(2) }
}

/// T-junction with uniform tensions and `√h = 6Δx`.
pub fn triple(n: usize) -> Fixture {
    let g = Grid::new(n, 2, 1.0).expect("grid");
    let chi = rasterize(&ShapeSpec::TripleT, &g, 3).expect("triple");
    Fixture { chi, sigma: SurfaceTensionMatrix::uniform(3).expect("sigma"), h: (6.0 * g.spacing()).powi(2) }
}
