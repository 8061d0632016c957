use super::{Grid, Partition};
use crate::error::{MboError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Initial data. Coordinates are absolute positions on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    /// Phase 0 on `{x_axis < fraction L}`, phase 1 elsewhere.
    Stripe { axis: usize, fraction: f64 },
    /// Phase 0 inside the ball, phase 1 outside.
    Disk { center: [f64; 3], radius: f64 },
    /// Two balls; with three phases they carry labels 0 and 1 on background 2,
    /// with two phases both carry label 0.
    TwoDisks { centers: [[f64; 3]; 2], radius: f64 },
    /// Lower half `{x_1 < L/2}` split at `x_0 = L/2` into phases 0 and 1, upper half phase 2.
    TripleT,
    /// Nearest of `phases` uniformly drawn seeds (periodic distance).
    Voronoi { phases: usize, seed: u64 },
    /// Every cell in phase `label`.
    Single { label: u8 },
}

impl ShapeSpec {
    pub fn centered_disk(grid: &Grid, radius: f64) -> ShapeSpec {
        let c = 0.5 * grid.side();
        ShapeSpec::Disk { center: [c, c, c], radius }
    }

    pub fn default_two_disks(grid: &Grid) -> ShapeSpec {
        let l = grid.side();
        ShapeSpec::TwoDisks { centers: [[0.28 * l, 0.5 * l, 0.5 * l], [0.72 * l, 0.5 * l, 0.5 * l]], radius: 0.17 * l }
    }

    /// Phase counts the shape can be rasterized with.
    pub fn accepts_phases(&self, p: usize) -> bool {
        match self {
            ShapeSpec::Stripe { .. } | ShapeSpec::Disk { .. } => p == 2,
            ShapeSpec::TwoDisks { .. } => p == 2 || p == 3,
            ShapeSpec::TripleT => p == 3,
            ShapeSpec::Voronoi { phases, .. } => p == *phases,
            ShapeSpec::Single { label } => (*label as usize) < p,
        }
    }

    pub fn validate(&self, grid: &Grid, p: usize) -> Result<()> {
        if !self.accepts_phases(p) {
            return Err(MboError::InvalidShape(format!("phase count {p} inconsistent with {self:?}")));
        }
        let half = 0.5 * grid.side();
        match self {
            ShapeSpec::Stripe { axis, fraction } => {
                if *axis >= grid.dim() {
                    return Err(MboError::InvalidShape(format!("stripe axis {axis} out of range")));
                }
                if !(*fraction > 0.0 && *fraction < 1.0) {
                    return Err(MboError::InvalidShape(format!("stripe fraction {fraction} not in (0,1)")));
                }
            }
            ShapeSpec::Disk { radius, .. } | ShapeSpec::TwoDisks { radius, .. } => {
                if !(*radius > 0.0) || *radius >= half {
                    return Err(MboError::InvalidShape(format!("radius {radius} must lie in (0, L/2)")));
                }
            }
            ShapeSpec::TripleT => {
                if grid.dim() < 2 {
                    return Err(MboError::InvalidShape("triple_T needs d >= 2".into()));
                }
            }
            ShapeSpec::Voronoi { phases, .. } => {
                if *phases < 2 {
                    return Err(MboError::InvalidShape("voronoi needs at least two seeds".into()));
                }
            }
            ShapeSpec::Single { .. } => {}
        }
        Ok(())
    }
}

fn dist2(grid: &Grid, x: [f64; 3], c: [f64; 3]) -> f64 {
    grid.periodic_delta(x, c).iter().take(grid.dim()).map(|t| t * t).sum()
}

/// Cell-center membership test; deterministic for a given spec.
pub fn rasterize(spec: &ShapeSpec, grid: &Grid, phases: usize) -> Result<Partition> {
    spec.validate(grid, phases)?;
    let l = grid.side();
    let labels: Vec<u8> = match spec {
        ShapeSpec::Single { label } => vec![*label; grid.len()],
        ShapeSpec::Stripe { axis, fraction } => (0..grid.len())
            .map(|i| if grid.center(i)[*axis] < fraction * l { 0 } else { 1 })
            .collect(),
        ShapeSpec::Disk { center, radius } => (0..grid.len())
            .map(|i| if dist2(grid, grid.center(i), *center) < radius * radius { 0 } else { 1 })
            .collect(),
        ShapeSpec::TwoDisks { centers, radius } => {
            let r2 = radius * radius;
            (0..grid.len())
                .map(|i| {
                    let x = grid.center(i);
                    let inside: Vec<bool> = centers.iter().map(|c| dist2(grid, x, *c) < r2).collect();
                    match (phases, inside[0], inside[1]) {
                        (2, true, _) | (2, _, true) => 0,
                        (2, _, _) => 1,
                        (_, true, _) => 0,
                        (_, _, true) => 1,
                        _ => 2,
                    }
                })
                .collect()
        }
        ShapeSpec::TripleT => (0..grid.len())
            .map(|i| {
                let x = grid.center(i);
                if x[1] < 0.5 * l {
                    if x[0] < 0.5 * l {
                        0
                    } else {
                        1
                    }
                } else {
                    2
                }
            })
            .collect(),
        ShapeSpec::Voronoi { phases: p, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let seeds: Vec<[f64; 3]> = (0..*p)
                .map(|_| {
                    let mut s = [0.0; 3];
                    for v in s.iter_mut().take(grid.dim()) {
                        *v = rng.gen::<f64>() * l;
                    }
                    s
                })
                .collect();
            (0..grid.len())
                .map(|i| {
                    let x = grid.center(i);
                    let mut best = 0;
                    let mut bd = f64::INFINITY;
                    for (k, s) in seeds.iter().enumerate() {
                        let d = dist2(grid, x, *s);
                        if d < bd {
                            bd = d;
                            best = k;
                        }
                    }
                    best as u8
                })
                .collect()
        }
    };
    Partition::new(*grid, phases, labels)
}
