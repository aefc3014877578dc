//! Boussinesq Navier-Stokes in the liquid on the MAC mesh.
//!
//! Scaled form `u_t + u . grad u = -grad p + Pr Ra T e_y + Pr lap u` (the
//! pressure absorbs the Prandtl factor). One step is: explicit first-order
//! upwind advection, implicit viscosity with ghost-fluid no-slip on the
//! front, then an incremental projection that adds buoyancy and the old
//! pressure gradient before solving for the pressure increment on liquid
//! cells. Faces are active only when both neighbouring cells are liquid.

use super::params::PhysicalParams;
use super::state::FlowState;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{norm_inf, pcg, CsrBuilder, CsrMatrix, IncompleteCholesky, Jacobi, Tolerance};

const NONE: usize = usize::MAX;
const THETA_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsReport {
    pub cfl: f64,
    pub poisson_iterations: usize,
    pub max_divergence: f64,
}

struct PoissonCache {
    mask: Vec<bool>,
    cells: Vec<usize>,
    matrix: CsrMatrix,
    precond: IncompleteCholesky,
}

pub struct NsSolver {
    grid: Grid,
    poisson: Option<PoissonCache>,
}

#[inline]
pub fn u_active(grid: &Grid, liquid: &[bool], i: usize, j: usize) -> bool {
    liquid[grid.idx(grid.west(i), j)] && liquid[grid.idx(i, j)]
}

#[inline]
pub fn v_active(grid: &Grid, liquid: &[bool], i: usize, j: usize) -> bool {
    j > 0 && j < grid.ny() && liquid[grid.idx(i, j - 1)] && liquid[grid.idx(i, j)]
}

/// Discrete divergence per liquid cell (zero elsewhere).
pub fn divergence(grid: &Grid, liquid: &[bool], u: &[f64], v: &[f64]) -> Vec<f64> {
    let (nx, d) = (grid.nx(), grid.delta());
    let mut div = vec![0.0; grid.len()];
    for j in 0..grid.ny() {
        for i in 0..nx {
            let k = grid.idx(i, j);
            if !liquid[k] {
                continue;
            }
            let e = grid.east(i);
            let ue = if u_active(grid, liquid, e, j) { u[j * nx + e] } else { 0.0 };
            let uw = if u_active(grid, liquid, i, j) { u[j * nx + i] } else { 0.0 };
            let vn = if v_active(grid, liquid, i, j + 1) { v[(j + 1) * nx + i] } else { 0.0 };
            let vs = if v_active(grid, liquid, i, j) { v[j * nx + i] } else { 0.0 };
            div[k] = (ue - uw + vn - vs) / d;
        }
    }
    div
}

fn ghost_theta(phi_self: f64, phi_other: f64) -> f64 {
    if phi_other < phi_self {
        (phi_self / (phi_self - phi_other)).clamp(THETA_MIN, 1.0)
    } else {
        1.0
    }
}

impl NsSolver {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            poisson: None,
        }
    }

    /// Advances `state.u`, `state.v`, `state.p` by one step using the
    /// temperature in `state` for buoyancy. `bottom_u` moves the lower wall
    /// tangentially (zero in physical runs).
    pub fn step(
        &mut self,
        state: &mut FlowState,
        phi: &[f64],
        params: &PhysicalParams,
        dt: f64,
        bottom_u: f64,
    ) -> Result<NsReport> {
        let g = self.grid;
        let (nx, ny, d) = (g.nx(), g.ny(), g.delta());
        let liquid: Vec<bool> = phi.iter().map(|p| *p > 0.0).collect();

        for j in 0..ny {
            for i in 0..nx {
                if !u_active(&g, &liquid, i, j) {
                    state.u[j * nx + i] = 0.0;
                }
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                if !v_active(&g, &liquid, i, j) {
                    state.v[j * nx + i] = 0.0;
                }
            }
        }
        for (k, p) in state.p.iter_mut().enumerate() {
            if !liquid[k] {
                *p = 0.0;
            }
        }

        let quiescent = params.ra == 0.0
            && bottom_u == 0.0
            && state.u.iter().all(|x| *x == 0.0)
            && state.v.iter().all(|x| *x == 0.0);
        if quiescent {
            return Ok(NsReport {
                cfl: 0.0,
                poisson_iterations: 0,
                max_divergence: 0.0,
            });
        }

        let cfl = dt / d * (norm_inf(&state.u) + norm_inf(&state.v));
        if cfl > 1.0 {
            return Err(Error::Cfl { cfl, dt });
        }

        let u = &state.u;
        let v = &state.v;
        let c = dt * params.pr / (d * d);
        let phi_u = |i: usize, j: usize| 0.5 * (phi[g.idx(g.west(i), j)] + phi[g.idx(i, j)]);
        let phi_v = |i: usize, j: usize| 0.5 * (phi[g.idx(i, j - 1)] + phi[g.idx(i, j)]);

        // ---- u predictor
        let mut u_index = vec![NONE; u.len()];
        let mut u_faces = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if u_active(&g, &liquid, i, j) {
                    u_index[j * nx + i] = u_faces.len();
                    u_faces.push((i, j));
                }
            }
        }
        let mut bu = CsrBuilder::new(u_faces.len(), 5 * u_faces.len());
        let mut rhs_u = Vec::with_capacity(u_faces.len());
        for (row, &(i, j)) in u_faces.iter().enumerate() {
            let f = j * nx + i;
            let (e, w) = (g.east(i), g.west(i));
            let uc = u[f];
            let ue = u[j * nx + e];
            let uw = u[j * nx + w];
            let un = if j + 1 < ny { u[(j + 1) * nx + i] } else { 0.0 };
            let us = if j > 0 { u[(j - 1) * nx + i] } else { bottom_u };
            let vbar = 0.25 * (v[j * nx + w] + v[j * nx + i] + v[(j + 1) * nx + w] + v[(j + 1) * nx + i]);
            let dudx = if uc > 0.0 { uc - uw } else { ue - uc } / d;
            let dudy = if vbar > 0.0 { uc - us } else { un - uc } / d;
            let mut rhs = uc - dt * (uc * dudx + vbar * dudy);

            let mut diag = 1.0;
            let me = phi_u(i, j);
            for (ni, nj, wall) in [
                (Some(e), Some(j), None),
                (Some(w), Some(j), None),
                (Some(i), (j + 1 < ny).then_some(j + 1), Some(0.0)),
                (Some(i), j.checked_sub(1), Some(bottom_u)),
            ] {
                let (ni, nj) = match (ni, nj) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        let uw_val = wall.unwrap();
                        diag += 2.0 * c;
                        rhs += 2.0 * c * uw_val;
                        continue;
                    }
                };
                let q = nj * nx + ni;
                if q == f {
                    continue;
                }
                if u_index[q] != NONE {
                    diag += c;
                    bu.add(u_index[q], -c);
                } else {
                    diag += c / ghost_theta(me, phi_u(ni, nj));
                }
            }
            bu.add(row, diag);
            bu.finish_row();
            rhs_u.push(rhs);
        }
        let mu = bu.build();

        // ---- v predictor
        let mut v_index = vec![NONE; v.len()];
        let mut v_faces = Vec::new();
        for j in 1..ny {
            for i in 0..nx {
                if v_active(&g, &liquid, i, j) {
                    v_index[j * nx + i] = v_faces.len();
                    v_faces.push((i, j));
                }
            }
        }
        let mut bv = CsrBuilder::new(v_faces.len(), 5 * v_faces.len());
        let mut rhs_v = Vec::with_capacity(v_faces.len());
        for (row, &(i, j)) in v_faces.iter().enumerate() {
            let f = j * nx + i;
            let (e, w) = (g.east(i), g.west(i));
            let vc = v[f];
            let vn = v[(j + 1) * nx + i];
            let vs = v[(j - 1) * nx + i];
            let ve = v[j * nx + e];
            let vw = v[j * nx + w];
            let ubar = 0.25 * (u[(j - 1) * nx + i] + u[(j - 1) * nx + e] + u[j * nx + i] + u[j * nx + e]);
            let dvdx = if ubar > 0.0 { vc - vw } else { ve - vc } / d;
            let dvdy = if vc > 0.0 { vc - vs } else { vn - vc } / d;
            let rhs = vc - dt * (ubar * dvdx + vc * dvdy);

            let mut diag = 1.0;
            let me = phi_v(i, j);
            for (ni, nj) in [(e, j), (w, j), (i, j + 1), (i, j - 1)] {
                let q = nj * nx + ni;
                if q == f {
                    continue;
                }
                if nj == 0 || nj == ny {
                    // wall face with v = 0 one spacing away
                    diag += c;
                } else if v_index[q] != NONE {
                    diag += c;
                    bv.add(v_index[q], -c);
                } else {
                    diag += c / ghost_theta(me, phi_v(ni, nj));
                }
            }
            bv.add(row, diag);
            bv.finish_row();
            rhs_v.push(rhs);
        }
        let mv = bv.build();

        let tol = Tolerance::new(1e-12, 1e-14, 2000);
        let mut us: Vec<f64> = u_faces.iter().map(|&(i, j)| u[j * nx + i]).collect();
        pcg(&mu, &rhs_u, &mut us, &Jacobi::new(&mu), tol, "viscous u solve")?;
        let mut vs: Vec<f64> = v_faces.iter().map(|&(i, j)| v[j * nx + i]).collect();
        pcg(&mv, &rhs_v, &mut vs, &Jacobi::new(&mv), tol, "viscous v solve")?;

        // ---- buoyancy and old pressure gradient
        let temp = &state.temperature;
        let p = &state.p;
        let buoy = params.pr * params.ra;
        let mut unew = vec![0.0; state.u.len()];
        let mut vnew = vec![0.0; state.v.len()];
        for (&(i, j), val) in u_faces.iter().zip(&us) {
            let dp = (p[g.idx(i, j)] - p[g.idx(g.west(i), j)]) / d;
            unew[j * nx + i] = val - dt * dp;
        }
        for (&(i, j), val) in v_faces.iter().zip(&vs) {
            let tf = 0.5 * (temp[g.idx(i, j - 1)] + temp[g.idx(i, j)]);
            let dp = (p[g.idx(i, j)] - p[g.idx(i, j - 1)]) / d;
            vnew[j * nx + i] = val + dt * (buoy * tf - dp);
        }

        // ---- projection
        if self.poisson.as_ref().is_none_or(|c| c.mask != liquid) {
            self.poisson = Some(build_poisson(&g, &liquid));
        }
        let cache = self.poisson.as_ref().unwrap();
        let div = divergence(&g, &liquid, &unew, &vnew);
        let rhs: Vec<f64> = cache.cells.iter().map(|&k| -div[k] / dt).collect();
        let mut dp = vec![0.0; cache.cells.len()];
        let stats = pcg(
            &cache.matrix,
            &rhs,
            &mut dp,
            &cache.precond,
            Tolerance::new(1e-12, 1e-10 / dt, 5000),
            "pressure Poisson solve",
        )?;
        let mut dpf = vec![0.0; g.len()];
        for (&k, &val) in cache.cells.iter().zip(&dp) {
            dpf[k] = val;
        }
        for &(i, j) in &u_faces {
            unew[j * nx + i] -= dt * (dpf[g.idx(i, j)] - dpf[g.idx(g.west(i), j)]) / d;
        }
        for &(i, j) in &v_faces {
            vnew[j * nx + i] -= dt * (dpf[g.idx(i, j)] - dpf[g.idx(i, j - 1)]) / d;
        }
        for &k in &cache.cells {
            state.p[k] += dpf[k];
        }
        state.u = unew;
        state.v = vnew;
        if state.u.iter().chain(&state.v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("velocity".into()));
        }
        let max_divergence = norm_inf(&divergence(&g, &liquid, &state.u, &state.v));
        Ok(NsReport {
            cfl,
            poisson_iterations: stats.iterations,
            max_divergence,
        })
    }
}

fn build_poisson(g: &Grid, liquid: &[bool]) -> PoissonCache {
    let (ny, d) = (g.ny(), g.delta());
    let mut index = vec![NONE; g.len()];
    let mut cells = Vec::new();
    for (k, &l) in liquid.iter().enumerate() {
        if l {
            index[k] = cells.len();
            cells.push(k);
        }
    }
    let h2 = 1.0 / (d * d);
    let mut b = CsrBuilder::new(cells.len(), 5 * cells.len());
    for (row, &k) in cells.iter().enumerate() {
        let (i, j) = g.coords(k);
        let mut diag = 0.0;
        let mut link = |active: bool, q: usize, b: &mut CsrBuilder| {
            if active && q != k {
                diag += h2;
                b.add(index[q], -h2);
            }
        };
        let e = g.east(i);
        link(u_active(g, liquid, e, j), g.idx(e, j), &mut b);
        link(u_active(g, liquid, i, j), g.idx(g.west(i), j), &mut b);
        if j + 1 < ny {
            link(v_active(g, liquid, i, j + 1), g.idx(i, j + 1), &mut b);
        }
        if j > 0 {
            link(v_active(g, liquid, i, j), g.idx(i, j - 1), &mut b);
        }
        b.add(row, if diag > 0.0 { diag } else { 1.0 });
        b.finish_row();
    }
    let matrix = b.build();
    let precond = IncompleteCholesky::new(&matrix);
    PoissonCache {
        mask: liquid.to_vec(),
        cells,
        matrix,
        precond,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(ra: f64) -> PhysicalParams {
        PhysicalParams {
            ra,
            ..PhysicalParams::default()
        }
    }

    #[test]
    fn quiescent_fluid_stays_at_rest() {
        let g = Grid::new(32, 16, 2.0).unwrap();
        let phi: Vec<f64> = (0..g.len()).map(|k| 0.6 - g.yc(g.coords(k).1)).collect();
        let mut st = FlowState::at_rest(&g, g.zeros());
        let mut ns = NsSolver::new(g);
        for _ in 0..5 {
            ns.step(&mut st, &phi, &params(1e5), 1e-3, 0.0).unwrap();
        }
        assert!(st.max_speed() < 1e-14);
        let p0 = st.p[0];
        assert!(st.p.iter().enumerate().all(|(k, p)| phi[k] <= 0.0 || (p - p0).abs() < 1e-12));
    }

    #[test]
    fn uniform_temperature_is_hydrostatic() {
        let g = Grid::new(32, 16, 2.0).unwrap();
        let phi: Vec<f64> = (0..g.len())
            .map(|k| {
                let (i, j) = g.coords(k);
                0.5 + 0.1 * (std::f64::consts::PI * g.xc(i)).sin() - g.yc(j)
            })
            .collect();
        let mut st = FlowState::at_rest(&g, vec![0.37; g.len()]);
        let mut ns = NsSolver::new(g);
        for _ in 0..10 {
            let rep = ns.step(&mut st, &phi, &params(1e5), 1e-3, 0.0).unwrap();
            assert!(rep.max_divergence < 1e-8);
        }
        assert!(st.max_speed() < 1e-10, "{}", st.max_speed());
    }

    #[test]
    fn couette_profile_is_linear() {
        // Liquid layer 0 < y < 0.5 between a sliding bottom wall and the front.
        let g = Grid::new(4, 64, 1.0 / 16.0).unwrap();
        let h = 0.5;
        let phi: Vec<f64> = (0..g.len()).map(|k| h - g.yc(g.coords(k).1)).collect();
        let mut st = FlowState::at_rest(&g, g.zeros());
        let mut ns = NsSolver::new(g);
        for _ in 0..800 {
            ns.step(&mut st, &phi, &params(0.0), 2e-3, 1.0).unwrap();
        }
        let mut worst: f64 = 0.0;
        for j in 0..g.ny() {
            let y = g.yc(j);
            if y < h {
                let exact = 1.0 - y / h;
                worst = worst.max((st.u[j * g.nx()] - exact).abs());
            }
        }
        assert!(worst < 0.02, "{worst}");
    }

    #[test]
    fn cfl_violation_is_reported() {
        let g = Grid::new(16, 8, 2.0).unwrap();
        let phi = vec![1.0; g.len()];
        let mut st = FlowState::at_rest(&g, g.zeros());
        st.u.iter_mut().for_each(|x| *x = 100.0);
        let mut ns = NsSolver::new(g);
        assert!(matches!(
            ns.step(&mut st, &phi, &params(1.0), 1e-2, 0.0),
            Err(Error::Cfl { .. })
        ));
    }
}
