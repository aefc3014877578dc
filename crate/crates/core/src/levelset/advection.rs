//! Inflow-implicit / outflow-explicit finite-volume advection of the level set
//! under its extended normal speed.
//!
//! The front equation `phi_t = F |grad phi|` is written as
//! `phi_t + G |grad phi| = 0` with `G = -F`. For every cell edge `pq` the
//! coefficient `a_pq = G_p (phibar_p - phibar_pq) / |grad phi_pq|` is split
//! into its positive part (implicit) and negative part (explicit):
//!
//! `phi_p^n + r sum a_f (phi_p^n - phi_q^n) = phi_p^{n-1} - r sum a_b (phi_p^{n-1} - phi_q^{n-1})`
//!
//! with `r = dt / delta^2`. Edge values come from the diamond cell spanned by
//! the two cell centres and the two edge end nodes. Wall edges use linearly
//! extrapolated ghosts and are treated explicitly.

use super::geometry::node_value;
use super::LevelSet;
use crate::error::{Error, Result};
use crate::linalg::{gauss_seidel, CsrBuilder, CsrMatrix, Tolerance};

/// Floor on the edge gradient magnitude.
pub const GRAD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AdvectionSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Rows that differ from the identity.
    pub active_rows: Vec<usize>,
}

pub fn assemble_advection(ls: &LevelSet, speed: &[f64], dt: f64) -> Result<AdvectionSystem> {
    let g = *ls.grid();
    g.check_len("speed", speed.len())?;
    if !(dt >= 0.0) {
        return Err(Error::Domain(format!("time step {dt} must be non-negative")));
    }
    let (nx, ny, d) = (g.nx(), g.ny(), g.delta());
    let phi = ls.phi();
    let r = dt / (d * d);

    let mut nodes = vec![0.0; nx * (ny + 1)];
    for j in 0..=ny {
        for i in 0..nx {
            nodes[j * nx + i] = node_value(&g, phi, i, j);
        }
    }
    let node = |i: usize, j: usize| nodes[j * nx + (i % nx)];
    let ghost_below = |i: usize| 2.0 * phi[g.idx(i, 0)] - phi[g.idx(i, 1)];
    let ghost_above = |i: usize| 2.0 * phi[g.idx(i, ny - 1)] - phi[g.idx(i, ny - 2)];

    let mut b = CsrBuilder::new(g.len(), 5 * g.len());
    let mut rhs = phi.to_vec();
    let mut active_rows = Vec::new();

    for j in 0..ny {
        for i in 0..nx {
            let p = g.idx(i, j);
            let gp = -speed[p];
            let phip = phi[p];
            if gp == 0.0 {
                b.add(p, 1.0);
                b.finish_row();
                continue;
            }
            let mut diag = 1.0;
            let mut explicit = 0.0;
            // (neighbour value, node 1, node 2, neighbour index if interior)
            let e = g.east(i);
            let edges: [(f64, f64, f64, Option<usize>); 4] = [
                (phi[g.idx(e, j)], node(i + 1, j), node(i + 1, j + 1), Some(g.idx(e, j))),
                (phi[g.idx(g.west(i), j)], node(i, j), node(i, j + 1), Some(g.idx(g.west(i), j))),
                if j + 1 < ny {
                    (phi[g.idx(i, j + 1)], node(i, j + 1), node(i + 1, j + 1), Some(g.idx(i, j + 1)))
                } else {
                    (ghost_above(i), node(i, ny), node(i + 1, ny), None)
                },
                if j > 0 {
                    (phi[g.idx(i, j - 1)], node(i, j), node(i + 1, j), Some(g.idx(i, j - 1)))
                } else {
                    (ghost_below(i), node(i, 0), node(i + 1, 0), None)
                },
            ];
            for (phiq, n1, n2, q) in edges {
                let bar = 0.25 * (phip + phiq + n1 + n2);
                let grad = (((phiq - phip) / d).powi(2) + ((n2 - n1) / d).powi(2)).sqrt();
                let a = gp * (phip - bar) / grad.max(GRAD_FLOOR);
                match q {
                    Some(q) => {
                        let af = a.max(0.0);
                        let ab = a.min(0.0);
                        if af > 0.0 {
                            diag += r * af;
                            b.add(q, -r * af);
                        }
                        explicit += r * ab * (phip - phiq);
                    }
                    None => explicit += r * a * (phip - phiq),
                }
            }
            b.add(p, diag);
            b.finish_row();
            rhs[p] -= explicit;
            active_rows.push(p);
        }
    }
    Ok(AdvectionSystem {
        matrix: b.build(),
        rhs,
        active_rows,
    })
}

/// One semi-implicit step; returns the advanced field.
pub fn advect_levelset(ls: &LevelSet, speed: &[f64], dt: f64) -> Result<LevelSet> {
    let sys = assemble_advection(ls, speed, dt)?;
    let mut x = sys.rhs.clone();
    if !sys.active_rows.is_empty() {
        gauss_seidel(
            &sys.matrix,
            &sys.rhs,
            &mut x,
            &sys.active_rows,
            Tolerance::new(0.0, 1e-13, 500),
            "level-set advection",
        )?;
    }
    LevelSet::new(*ls.grid(), x)
}
