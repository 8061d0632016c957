//! Measurements on trajectories: area decay, extinction, triple-junction angles.

use crate::grid::{Grid, Partition};
use crate::scheme::Trajectory;
use nalgebra::{Matrix2, Vector2};

#[derive(Clone, Debug, PartialEq)]
pub struct AreaDecay {
    /// Least-squares `dA/dt` over the fitted window.
    pub slope: f64,
    /// Last step with `A ≥ A_0/2`.
    pub half_life_step: usize,
    pub initial_area: f64,
}

/// Linear fit of the area of `phase` against time while it is at least half its initial value.
pub fn area_decay(traj: &Trajectory, phase: usize) -> Option<AreaDecay> {
    let a0 = traj.steps[0].volume_of(phase);
    let half = traj.steps.iter().rposition(|p| p.volume_of(phase) >= 0.5 * a0)?;
    if half < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = (0..=half).map(|n| (n as f64 * traj.h, traj.steps[n].volume_of(phase))).collect();
    let m = pts.len() as f64;
    let (st, sa) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let (tm, am) = (st / m, sa / m);
    let num: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - am)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    Some(AreaDecay { slope: num / den, half_life_step: half, initial_area: a0 })
}

pub fn extinction_time(traj: &Trajectory, phase: usize) -> Option<f64> {
    traj.extinction_step(phase).map(|n| n as f64 * traj.h)
}

fn label_at(chi: &Partition, i: isize, j: isize) -> u8 {
    let g = chi.grid();
    let n = g.n() as isize;
    let (a, b) = (i.rem_euclid(n) as usize, j.rem_euclid(n) as usize);
    chi.labels()[g.flat_index([a, b, 0])]
}

/// Grid vertices whose four surrounding cells carry three distinct labels, merged into
/// clusters of nearby vertices. Two-dimensional grids only.
pub fn triple_junctions(chi: &Partition) -> Vec<[f64; 2]> {
    let g = chi.grid();
    assert_eq!(g.dim(), 2, "junction detection is two-dimensional");
    let n = g.n() as isize;
    let dx = g.spacing();
    let mut verts: Vec<[f64; 2]> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut ls = [label_at(chi, i - 1, j - 1), label_at(chi, i, j - 1), label_at(chi, i - 1, j), label_at(chi, i, j)];
            ls.sort_unstable();
            let distinct = 1 + ls.windows(2).filter(|w| w[0] != w[1]).count();
            if distinct >= 3 {
                verts.push([i as f64 * dx, j as f64 * dx]);
            }
        }
    }
    // greedy clustering within a few cells, periodic distance
    let reach = 4.0 * dx;
    let mut clusters: Vec<(Vec<[f64; 2]>, [f64; 2])> = Vec::new();
    for v in verts {
        let hit = clusters.iter_mut().find(|(_, anchor)| dist(g, v, *anchor) <= reach);
        match hit {
            Some((members, _)) => members.push(v),
            None => clusters.push((vec![v], v)),
        }
    }
    clusters
        .into_iter()
        .map(|(members, anchor)| {
            let mut m = [0.0; 2];
            for v in &members {
                let d = g.periodic_delta([v[0], v[1], 0.0], [anchor[0], anchor[1], 0.0]);
                m[0] += d[0];
                m[1] += d[1];
            }
            let k = members.len() as f64;
            [wrap(g, anchor[0] + m[0] / k), wrap(g, anchor[1] + m[1] / k)]
        })
        .collect()
}

fn wrap(g: &Grid, x: f64) -> f64 {
    x.rem_euclid(g.side())
}

fn dist(g: &Grid, a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = g.periodic_delta([a[0], a[1], 0.0], [b[0], b[1], 0.0]);
    d[0].hypot(d[1])
}

#[derive(Clone, Debug, PartialEq)]
pub struct JunctionAngles {
    pub junction: [f64; 2],
    /// Interface label pairs in counterclockwise order of their tangent directions.
    pub pairs: Vec<(u8, u8)>,
    /// Tangent directions in radians, `(-π, π]`.
    pub directions: Vec<f64>,
    /// Opening angles between consecutive tangents in degrees; they sum to 360.
    pub angles: Vec<f64>,
}

/// Interface tangents at a junction: for every label pair, the cell-face midpoints with
/// `r_in ≤ |x - junction| ≤ r_out` are fitted by a parabola through the junction in the frame of
/// their principal axis, and the parabola's tangent at the junction is taken.
pub fn junction_angles(chi: &Partition, junction: [f64; 2], r_in: f64, r_out: f64) -> Option<JunctionAngles> {
    let g = chi.grid();
    let n = g.n() as isize;
    let dx = g.spacing();
    let mut faces: Vec<((u8, u8), [f64; 2])> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let here = label_at(chi, i, j);
            for (di, dj) in [(1isize, 0isize), (0, 1)] {
                let there = label_at(chi, i + di, j + dj);
                if here == there {
                    continue;
                }
                let x = [(i as f64 + 0.5 + 0.5 * di as f64) * dx, (j as f64 + 0.5 + 0.5 * dj as f64) * dx];
                let d = g.periodic_delta([x[0], x[1], 0.0], [junction[0], junction[1], 0.0]);
                let r = d[0].hypot(d[1]);
                if r >= r_in && r <= r_out {
                    faces.push(((here.min(there), here.max(there)), [d[0], d[1]]));
                }
            }
        }
    }
    let mut keys: Vec<(u8, u8)> = faces.iter().map(|f| f.0).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut rays: Vec<((u8, u8), f64)> = Vec::new();
    for key in keys {
        let pts: Vec<[f64; 2]> = faces.iter().filter(|f| f.0 == key).map(|f| f.1).collect();
        if pts.len() < 5 {
            continue;
        }
        if let Some(dir) = fit_tangent(&pts) {
            rays.push((key, dir));
        }
    }
    if rays.len() != 3 {
        return None;
    }
    rays.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let directions: Vec<f64> = rays.iter().map(|r| r.1).collect();
    let angles: Vec<f64> = (0..3)
        .map(|k| {
            let next = if k == 2 { directions[0] + 2.0 * std::f64::consts::PI } else { directions[k + 1] };
            (next - directions[k]).to_degrees()
        })
        .collect();
    Some(JunctionAngles { junction, pairs: rays.iter().map(|r| r.0).collect(), directions, angles })
}

/// Direction (angle) of the tangent at the origin of the curve sampled by `pts`
/// (relative coordinates), pointing away from the origin.
fn fit_tangent(pts: &[[f64; 2]]) -> Option<f64> {
    let m = pts.len() as f64;
    let mean = pts.iter().fold([0.0; 2], |a, p| [a[0] + p[0] / m, a[1] + p[1] / m]);
    // principal axis through the origin, oriented towards the points
    let mut c: Matrix2<f64> = Matrix2::zeros();
    for p in pts {
        c[(0, 0)] += p[0] * p[0];
        c[(0, 1)] += p[0] * p[1];
        c[(1, 1)] += p[1] * p[1];
    }
    c[(1, 0)] = c[(0, 1)];
    let eig = c.symmetric_eigen();
    let k = if eig.eigenvalues[0] > eig.eigenvalues[1] { 0 } else { 1 };
    let mut e = [eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)]];
    if e[0] * mean[0] + e[1] * mean[1] < 0.0 {
        e = [-e[0], -e[1]];
    }
    let nrm = [-e[1], e[0]];
    // y = c1 x + c2 x² in the (e, nrm) frame, through the junction
    let mut a: Matrix2<f64> = Matrix2::zeros();
    let mut b: Vector2<f64> = Vector2::zeros();
    for p in pts {
        let x = p[0] * e[0] + p[1] * e[1];
        let y = p[0] * nrm[0] + p[1] * nrm[1];
        let row = Vector2::new(x, x * x);
        a += row * row.transpose();
        b += row * y;
    }
    let coef = a.lu().solve(&b)?;
    let slope = coef[0];
    let base = e[1].atan2(e[0]);
    let mut th = base + slope.atan();
    if th > std::f64::consts::PI {
        th -= 2.0 * std::f64::consts::PI;
    }
    if th <= -std::f64::consts::PI {
        th += 2.0 * std::f64::consts::PI;
    }
    Some(th)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, ShapeSpec};

    #[test]
    fn straight_t_junction_has_right_angles() {
        let g = Grid::new(64, 2, 1.0).unwrap();
        let chi = rasterize(&ShapeSpec::TripleT, &g, 3).unwrap();
        let js = triple_junctions(&chi);
        assert_eq!(js.len(), 4);
        let j = js.iter().find(|j| dist(&g, **j, [0.5, 0.5]) < 1e-9).expect("junction at the center");
        let a = junction_angles(&chi, *j, 0.03, 0.2).unwrap();
        let mut ang = a.angles.clone();
        ang.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (got, want) in ang.iter().zip([90.0, 90.0, 180.0]) {
            assert!((got - want).abs() < 1e-6, "{ang:?}");
        }
    }

    #[test]
    fn synthetic_120_degree_junction() {
        let g = Grid::new(256, 2, 1.0).unwrap();
        let c = [0.5, 0.5];
        let labels = (0..g.len())
            .map(|i| {
                let x = g.center(i);
                let th = (x[1] - c[1]).atan2(x[0] - c[0]).rem_euclid(2.0 * std::f64::consts::PI);
                ((th / (2.0 * std::f64::consts::PI / 3.0)).floor() as u8).min(2)
            })
            .collect();
        let chi = Partition::new(g, 3, labels).unwrap();
        let a = junction_angles(&chi, c, 0.03, 0.12).unwrap();
        for ang in a.angles {
            assert!((ang - 120.0).abs() < 1.0, "{ang}");
        }
    }

    #[test]
    fn disk_area_decays() {
        let g = Grid::new(128, 2, 1.0).unwrap();
        let chi = rasterize(&ShapeSpec::centered_disk(&g, 0.3), &g, 2).unwrap();
        let s = crate::tensions::SurfaceTensionMatrix::two_phase(1.0).unwrap();
        let h = (6.0 * g.spacing()).powi(2);
        let t = crate::scheme::run(&chi, &s, h, 25).unwrap();
        let fit = area_decay(&t, 0).unwrap();
        assert!(fit.slope < 0.0);
        assert!(extinction_time(&t, 1).is_none());
    }
}
