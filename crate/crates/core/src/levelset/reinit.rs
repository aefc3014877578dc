//! Restores the signed-distance property with fast sweeping.
//!
//! Cells adjacent to a sign change are fixed first by the subcell estimate
//! `phi / |grad phi|`, where each gradient component is the largest of the
//! central and one-sided differences. That keeps the zero level in place.
//! The remaining cells are filled by Gauss-Seidel sweeps of the Godunov
//! upwind Eikonal update in four orderings.

use serde::{Deserialize, Serialize};

use super::LevelSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReinitSettings {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ReinitSettings {
    fn default() -> Self {
        Self {
            tol: 0.0,
            max_sweeps: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinitReport {
    pub sweeps: usize,
    pub last_change: f64,
    pub converged: bool,
}

pub fn reinitialize(ls: &mut LevelSet, settings: &ReinitSettings) -> ReinitReport {
    let g = *ls.grid();
    let (nx, ny, d) = (g.nx(), g.ny(), g.delta());
    let phi = ls.phi().to_vec();
    let n = g.len();
    let pos: Vec<bool> = phi.iter().map(|v| *v > 0.0).collect();

    let big = 1e10;
    let mut dist = vec![big; n];
    let mut fixed = vec![false; n];
    for j in 0..ny {
        for i in 0..nx {
            let k = g.idx(i, j);
            let e = g.idx(g.east(i), j);
            let w = g.idx(g.west(i), j);
            let mut near = pos[e] != pos[k] || pos[w] != pos[k];
            let up = (j + 1 < ny).then(|| g.idx(i, j + 1));
            let dn = (j > 0).then(|| g.idx(i, j - 1));
            near |= up.is_some_and(|q| pos[q] != pos[k]);
            near |= dn.is_some_and(|q| pos[q] != pos[k]);
            if !near {
                continue;
            }
            let comp = |a: Option<usize>, b: Option<usize>| -> f64 {
                let mut m: f64 = 0.0;
                if let (Some(a), Some(b)) = (a, b) {
                    m = m.max((phi[a] - phi[b]).abs() / 2.0);
                }
                if let Some(a) = a {
                    m = m.max((phi[a] - phi[k]).abs());
                }
                if let Some(b) = b {
                    m = m.max((phi[k] - phi[b]).abs());
                }
                m / d
            };
            let gx = comp(Some(e), Some(w));
            let gy = comp(up, dn);
            let gn = gx.hypot(gy).max(1e-12);
            dist[k] = (phi[k] / gn).abs();
            fixed[k] = true;
        }
    }

    let update = |dist: &mut [f64], i: usize, j: usize| -> f64 {
        let k = g.idx(i, j);
        if fixed[k] {
            return 0.0;
        }
        let a = dist[g.idx(g.east(i), j)].min(dist[g.idx(g.west(i), j)]);
        let mut b = big;
        if j + 1 < ny {
            b = b.min(dist[g.idx(i, j + 1)]);
        }
        if j > 0 {
            b = b.min(dist[g.idx(i, j - 1)]);
        }
        let cand = if (a - b).abs() >= d {
            a.min(b) + d
        } else {
            0.5 * (a + b + (2.0 * d * d - (a - b) * (a - b)).sqrt())
        };
        if cand < dist[k] {
            let ch = dist[k] - cand;
            dist[k] = cand;
            if ch >= big * 0.5 {
                return f64::INFINITY;
            }
            return ch;
        }
        0.0
    };

    let mut sweeps = 0;
    let mut last_change = f64::INFINITY;
    let mut converged = fixed.iter().all(|f| !*f);
    while !converged && sweeps < settings.max_sweeps {
        let mut change: f64 = 0.0;
        for order in 0..4 {
            let xs: Box<dyn Iterator<Item = usize>> = if order & 1 == 0 {
                Box::new(0..nx)
            } else {
                Box::new((0..nx).rev())
            };
            let xs: Vec<usize> = xs.collect();
            let ys: Vec<usize> = if order & 2 == 0 {
                (0..ny).collect()
            } else {
                (0..ny).rev().collect()
            };
            for &j in &ys {
                for &i in &xs {
                    change = change.max(update(&mut dist, i, j));
                }
            }
            sweeps += 1;
        }
        last_change = change;
        converged = change <= settings.tol;
    }
    if !converged {
        log::warn!(
            "reinitialization stopped after {sweeps} sweeps with change {last_change:e}"
        );
    }
    if fixed.iter().any(|f| *f) {
        for (k, v) in ls.phi_mut().iter_mut().enumerate() {
            *v = if pos[k] { dist[k] } else { -dist[k] };
        }
    }
    ReinitReport {
        sweeps,
        last_change,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::levelset::column_heights;

    #[test]
    fn signed_distance_is_fixed_point() {
        let g = Grid::new(64, 32, 2.0).unwrap();
        let mut ls = LevelSet::flat(g, 0.37).unwrap();
        let before = ls.clone();
        let rep = reinitialize(&mut ls, &ReinitSettings::default());
        assert!(rep.converged);
        for (a, b) in ls.phi().iter().zip(before.phi()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_plane_is_restored() {
        let g = Grid::new(64, 32, 2.0).unwrap();
        let mut ls = LevelSet::from_fn(g, |_, y| 2.0 * (0.41 - y));
        let h0 = column_heights(&ls).unwrap();
        reinitialize(&mut ls, &ReinitSettings::default());
        let h1 = column_heights(&ls).unwrap();
        for (a, b) in h0.iter().zip(&h1) {
            assert!((a - b).abs() < 0.1 * g.delta());
        }
        for j in 1..g.ny() - 1 {
            for i in 0..g.nx() {
                assert!((ls.grad_norm(i, j) - 1.0).abs() < 0.1);
            }
        }
    }
}
