//! Backward-Euler heat operators for one phase, with the melting front imposed
//! as a sharp Dirichlet condition by the symmetric ghost-fluid construction.
//!
//! For a cell `p` whose neighbour `q` lies across the front, the crossing sits
//! at the fraction `theta = phi_p / (phi_p - phi_q)` of the spacing and the
//! link contributes `dt / (theta delta^2)` to the diagonal and the same factor
//! times the front temperature to the right-hand side. The matrix therefore
//! stays symmetric positive definite. Top and bottom walls are Dirichlet at
//! half a cell. In the liquid, explicit first-order upwind advection in flux
//! form is applied before the implicit solve:
//!
//! `A T^{n+1} = E T^n + b`.

use crate::error::Result;
use crate::grid::Grid;
use crate::linalg::{pcg, CsrBuilder, CsrMatrix, Jacobi, Tolerance};

/// Smallest admissible crossing fraction in a ghost-fluid link.
pub const THETA_MIN: f64 = 1e-8;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Liquid,
    Solid,
}

impl Phase {
    #[inline]
    pub fn contains(self, phi: f64) -> bool {
        match self {
            Phase::Liquid => phi > 0.0,
            Phase::Solid => phi <= 0.0,
        }
    }
}

/// Dirichlet data on the walls and on the front.
#[derive(Debug, Clone, Copy)]
pub struct ThermalBc<'a> {
    pub t_bottom: f64,
    pub t_melt: f64,
    /// Top-wall temperature per column.
    pub top: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceLink {
    pub row: usize,
    pub cell: usize,
    pub other: usize,
    pub theta: f64,
    pub coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallLink {
    pub row: usize,
    pub column: usize,
    pub top: bool,
    pub coef: f64,
}

#[derive(Debug, Clone)]
pub struct HeatSystem {
    pub phase: Phase,
    /// Unknown index to cell index.
    pub cells: Vec<usize>,
    index: Vec<usize>,
    pub matrix: CsrMatrix,
    pub advection: Option<CsrMatrix>,
    pub interface: Vec<InterfaceLink>,
    pub walls: Vec<WallLink>,
    precond: Jacobi,
}

/// Velocity on the staggered faces, laid out as in `FlowState`.
#[derive(Debug, Clone, Copy)]
pub struct FaceVelocity<'a> {
    pub u: &'a [f64],
    pub v: &'a [f64],
}

impl HeatSystem {
    pub fn build(
        grid: &Grid,
        phi: &[f64],
        phase: Phase,
        dt: f64,
        velocity: Option<FaceVelocity<'_>>,
    ) -> Self {
        let (ny, d) = (grid.ny(), grid.delta());
        let mut index = vec![NONE; grid.len()];
        let mut cells = Vec::new();
        for (k, &p) in phi.iter().enumerate() {
            if phase.contains(p) {
                index[k] = cells.len();
                cells.push(k);
            }
        }
        let r = dt / (d * d);
        let mut b = CsrBuilder::new(cells.len(), 5 * cells.len());
        let mut interface = Vec::new();
        let mut walls = Vec::new();
        for (row, &k) in cells.iter().enumerate() {
            let (i, j) = grid.coords(k);
            let mut diag = 1.0;
            let mut neigh = [NONE; 4];
            neigh[0] = grid.idx(grid.east(i), j);
            neigh[1] = grid.idx(grid.west(i), j);
            if j + 1 < ny {
                neigh[2] = grid.idx(i, j + 1);
            }
            if j > 0 {
                neigh[3] = grid.idx(i, j - 1);
            }
            for (slot, &q) in neigh.iter().enumerate() {
                if q == NONE {
                    let top = slot == 2;
                    let coef = 2.0 * r;
                    diag += coef;
                    walls.push(WallLink {
                        row,
                        column: i,
                        top,
                        coef,
                    });
                    continue;
                }
                if q == k {
                    // single-column grid: periodic self-coupling cancels
                    continue;
                }
                if index[q] != NONE {
                    diag += r;
                    b.add(index[q], -r);
                } else {
                    let theta = (phi[k] / (phi[k] - phi[q])).clamp(THETA_MIN, 1.0);
                    let coef = r / theta;
                    diag += coef;
                    interface.push(InterfaceLink {
                        row,
                        cell: k,
                        other: q,
                        theta,
                        coef,
                    });
                }
            }
            b.add(row, diag);
            b.finish_row();
        }
        let matrix = b.build();
        let advection = velocity.map(|vel| advection_matrix(grid, &cells, &index, dt, vel));
        let precond = Jacobi::new(&matrix);
        Self {
            phase,
            cells,
            index,
            matrix,
            advection,
            interface,
            walls,
            precond,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Unknown index of a cell, if it belongs to this phase.
    pub fn unknown(&self, cell: usize) -> Option<usize> {
        let u = self.index[cell];
        (u != NONE).then_some(u)
    }

    pub fn gather(&self, field: &[f64]) -> Vec<f64> {
        self.cells.iter().map(|&k| field[k]).collect()
    }

    pub fn scatter(&self, x: &[f64], field: &mut [f64]) {
        for (&k, &v) in self.cells.iter().zip(x) {
            field[k] = v;
        }
    }

    /// Right-hand side contributed by the wall and front Dirichlet data.
    pub fn boundary_rhs(&self, bc: &ThermalBc<'_>) -> Vec<f64> {
        let mut rhs = vec![0.0; self.len()];
        for w in &self.walls {
            let val = if w.top { bc.top[w.column] } else { bc.t_bottom };
            rhs[w.row] += w.coef * val;
        }
        for l in &self.interface {
            rhs[l.row] += l.coef * bc.t_melt;
        }
        rhs
    }

    /// `E x` (identity without advection).
    pub fn apply_advection(&self, x: &[f64]) -> Vec<f64> {
        match &self.advection {
            Some(e) => e.mul(x),
            None => x.to_vec(),
        }
    }

    /// `E^T x` (identity without advection).
    pub fn apply_advection_transpose(&self, x: &[f64]) -> Vec<f64> {
        match &self.advection {
            Some(e) => {
                let mut y = vec![0.0; x.len()];
                e.transpose_matvec(x, &mut y);
                y
            }
            None => x.to_vec(),
        }
    }

    /// Solves `A x = rhs` starting from `guess`.
    pub fn solve(&self, rhs: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        let mut x = match guess {
            Some(g) => g.to_vec(),
            None => vec![0.0; self.len()],
        };
        let context = match self.phase {
            Phase::Liquid => "liquid heat solve",
            Phase::Solid => "solid heat solve",
        };
        pcg(
            &self.matrix,
            rhs,
            &mut x,
            &self.precond,
            Tolerance::new(1e-13, 1e-15, 2000),
            context,
        )?;
        Ok(x)
    }

    /// Solves `A^T x = rhs`. The ghost-fluid operator is symmetric, so this
    /// is the same solve.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.solve(rhs, None)
    }

    /// One forward step of this phase; writes the phase cells of `out`.
    pub fn step(&self, t_old: &[f64], bc: &ThermalBc<'_>, out: &mut [f64]) -> Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        let x0 = self.gather(t_old);
        let mut rhs = self.apply_advection(&x0);
        for (r, b) in rhs.iter_mut().zip(self.boundary_rhs(bc)) {
            *r += b;
        }
        let x = self.solve(&rhs, Some(&x0))?;
        self.scatter(&x, out);
        Ok(())
    }
}

fn advection_matrix(
    grid: &Grid,
    cells: &[usize],
    index: &[usize],
    dt: f64,
    vel: FaceVelocity<'_>,
) -> CsrMatrix {
    let (nx, ny, d) = (grid.nx(), grid.ny(), grid.delta());
    let c = dt / d;
    let mut b = CsrBuilder::new(cells.len(), 5 * cells.len());
    for (row, &k) in cells.iter().enumerate() {
        let (i, j) = grid.coords(k);
        let e = grid.east(i);
        // (neighbour cell, outward face velocity)
        let mut faces = [(NONE, 0.0); 4];
        faces[0] = (grid.idx(e, j), vel.u[j * nx + e]);
        faces[1] = (grid.idx(grid.west(i), j), -vel.u[j * nx + i]);
        if j + 1 < ny {
            faces[2] = (grid.idx(i, j + 1), vel.v[(j + 1) * nx + i]);
        }
        if j > 0 {
            faces[3] = (grid.idx(i, j - 1), -vel.v[j * nx + i]);
        }
        let mut diag = 1.0;
        for (q, un) in faces {
            if q == NONE || index[q] == NONE || q == k {
                continue;
            }
            if un > 0.0 {
                diag -= c * un;
            } else if un < 0.0 {
                b.add(index[q], -c * un);
            }
        }
        b.add(row, diag);
        b.finish_row();
    }
    b.build()
}
