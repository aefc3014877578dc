//! Reverse sweep over a recorded forward trajectory.
//!
//! Reverse step `n` mirrors forward step `n` using checkpoint `n`: the phase
//! systems are rebuilt from `phi^n` and the velocity `u^{n+1}`, the front
//! probes from `phi^n` and `T^{n+1}`.
//!
//! Heat: `A^T lambda = Theta^{n+1} + front data`, `Theta^n = E^T lambda`.
//! Walls are homogeneous Dirichlet for the adjoint and the control
//! sensitivity is the wall flux `2 lambda / delta`.
//!
//! Front: `psi^n = psi^{n+1} - dt div(psi W) - dt S` with `W = F n`, upwind
//! fluxes and no flux through the band edge. The source
//! `S = [dlambda/dn dT/dn]_solid - [dlambda/dn dT/dn]_liquid` over `|grad phi|`
//! is evaluated per segment and extended along the normals.

use super::terminal::terminal_state;
use super::{AdjointSettings, CostWeights, DesiredState};
use crate::error::{Error, Result};
use crate::forward::{
    build_probes, side_derivatives, FaceVelocity, ForwardProblem, HeatSystem, Phase, ProbeData,
    Trajectory,
};
use crate::grid::Grid;
use crate::levelset::{
    compute_normals, extend_velocity, sample_field, LevelSet, NormalField, PhaseGeometry,
};

/// Adjoint fields at one reverse time.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct AdjointOutput {
    /// Adjoint wall flux on the top wall per column, indexed by forward step.
    pub wall_theta: Vec<Vec<f64>>,
    pub dts: Vec<f64>,
    pub terminal: AdjointState,
    pub initial: AdjointState,
}

/// Front value `St psi |grad phi|` at each ghost link crossing.
pub fn front_link_values(sys: &HeatSystem, psi: &[f64], normals: &NormalField, st: f64) -> Vec<f64> {
    sys.interface
        .iter()
        .map(|l| {
            let a = 1.0 - l.theta;
            let psi_g = a * psi[l.cell] + l.theta * psi[l.other];
            let grad = a * normals.grad_norm[l.cell] + l.theta * normals.grad_norm[l.other];
            st * psi_g * grad
        })
        .collect()
}

/// One reverse heat step on a phase. Returns `lambda` on the phase unknowns;
/// `Theta^n` on the phase is `E^T lambda`.
pub fn adjoint_heat_step(sys: &HeatSystem, theta_next: &[f64], link_values: &[f64]) -> Result<Vec<f64>> {
    if sys.is_empty() {
        return Ok(Vec::new());
    }
    let mut rhs = sys.gather(theta_next);
    for (l, v) in sys.interface.iter().zip(link_values) {
        rhs[l.row] += l.coef * v;
    }
    sys.solve_transpose(&rhs)
}

/// Conservative backward transport of `psi` in the band with `W = F n`.
pub fn step_adjoint_levelset(
    grid: &Grid,
    psi: &[f64],
    speed: &[f64],
    normals: &NormalField,
    band: &[bool],
    dt: f64,
) -> Vec<f64> {
    let (nx, ny, d) = (grid.nx(), grid.ny(), grid.delta());
    let wx: Vec<f64> = (0..grid.len()).map(|k| speed[k] * normals.nx[k]).collect();
    let wy: Vec<f64> = (0..grid.len()).map(|k| speed[k] * normals.ny[k]).collect();
    let mut out = psi.to_vec();
    let c = dt / d;
    let mut flux = |k: usize, q: usize, wf: f64| {
        // flux from k to q
        if !(band[k] && band[q]) || k == q {
            return;
        }
        let f = if wf > 0.0 { wf * psi[k] } else { wf * psi[q] };
        out[k] -= c * f;
        out[q] += c * f;
    };
    for j in 0..ny {
        for i in 0..nx {
            let k = grid.idx(i, j);
            let e = grid.idx(grid.east(i), j);
            flux(k, e, 0.5 * (wx[k] + wx[e]));
            if j + 1 < ny {
                let n = grid.idx(i, j + 1);
                flux(k, n, 0.5 * (wy[k] + wy[n]));
            }
        }
    }
    out
}

fn check_band(grid: &Grid, geom: &PhaseGeometry, band: &[bool], nb: usize) -> Result<()> {
    for k in geom.cut_cells() {
        let (i, j) = grid.coords(k);
        let mut neigh = vec![grid.idx(grid.east(i), j), grid.idx(grid.west(i), j)];
        if j > 0 {
            neigh.push(grid.idx(i, j - 1));
        }
        if j + 1 < grid.ny() {
            neigh.push(grid.idx(i, j + 1));
        }
        if neigh.iter().any(|&q| !band[q]) {
            return Err(Error::BandTooNarrow(nb));
        }
    }
    Ok(())
}

fn segment_samples(grid: &Grid, geom: &PhaseGeometry, f: &[f64]) -> Vec<f64> {
    geom.segments
        .iter()
        .map(|s| {
            let [x, y] = s.midpoint();
            sample_field(grid, f, x, y)
        })
        .collect()
}

/// Runs the reverse sweep for control `w` over a complete trajectory.
pub fn run_adjoint(
    problem: &ForwardProblem,
    traj: &Trajectory,
    w: &[f64],
    desired: &DesiredState,
    weights: &CostWeights,
    settings: &AdjointSettings,
) -> Result<AdjointOutput> {
    weights.validate()?;
    settings.validate()?;
    if !traj.complete {
        return Err(Error::Domain("the adjoint needs a complete forward trajectory".into()));
    }
    let g = problem.grid;
    let params = &problem.params;
    let ext = &problem.numerics.extension;
    let n_steps = traj.len();
    let final_ls = LevelSet::new(g, traj.final_phi.clone())?;
    let terminal = terminal_state(
        &final_ls,
        &traj.final_temperature,
        traj.final_time,
        desired,
        weights,
        settings,
        ext,
    )?;
    let mut theta = terminal.theta.clone();
    let mut psi = terminal.psi.clone();
    let zero_top = vec![0.0; g.nx()];
    let mut wall_theta = vec![Vec::new(); n_steps];
    let mut dts = vec![0.0; n_steps];

    for n in (0..n_steps).rev() {
        let cp = traj.get(n)?;
        let ctx = |e: Error| e.at_step(n, cp.time);
        let ls = LevelSet::new(g, cp.phi.clone())?;
        let geom = PhaseGeometry::build(&ls);
        let normals = compute_normals(&ls);
        let vel = FaceVelocity { u: &cp.u, v: &cp.v };
        let liquid = HeatSystem::build(&g, &cp.phi, Phase::Liquid, cp.dt, Some(vel));
        let solid = HeatSystem::build(&g, &cp.phi, Phase::Solid, cp.dt, None);

        let mut lambda = g.zeros();
        let mut theta_new = g.zeros();
        let mut wall = vec![0.0; g.nx()];
        for sys in [&liquid, &solid] {
            let links = front_link_values(sys, &psi, &normals, params.st);
            let lam = adjoint_heat_step(sys, &theta, &links).map_err(ctx)?;
            sys.scatter(&lam, &mut lambda);
            sys.scatter(&sys.apply_advection_transpose(&lam), &mut theta_new);
            for wl in sys.walls.iter().filter(|wl| wl.top) {
                wall[wl.column] = 2.0 * lam[wl.row] / g.delta();
            }
        }
        wall_theta[n] = wall;
        dts[n] = cp.dt;

        // front source from the jump of normal-derivative products
        let probes = build_probes(&g, &cp.phi, &geom);
        let tdata = ProbeData {
            field: &cp.temperature,
            bottom: params.t_bottom,
            top: w,
        };
        let ldata = ProbeData {
            field: &lambda,
            bottom: 0.0,
            top: &zero_top,
        };
        let source: Vec<f64> = probes
            .iter()
            .map(|p| {
                let [x, y] = p.point;
                let grad = sample_field(&g, &normals.grad_norm, x, y).max(1e-8);
                let front = params.st * sample_field(&g, &psi, x, y) * grad;
                let (tl, ts) = side_derivatives(p, &tdata, params.t_melt);
                let (ll, ls_) = side_derivatives(p, &ldata, front);
                (ls_ * ts - ll * tl) / (p.n_axis * p.n_axis) / grad
            })
            .collect();
        let s_ext = extend_velocity(&ls, &geom, &normals, &source, ext).map_err(ctx)?;
        check_band(&g, &geom, &s_ext.band, ext.nb_width).map_err(ctx)?;

        let mut next = step_adjoint_levelset(&g, &psi, &cp.speed, &normals, &s_ext.band, cp.dt);
        for (p, s) in next.iter_mut().zip(&s_ext.field) {
            *p -= cp.dt * s;
        }
        if n % settings.reextend_every == 0 && !geom.segments.is_empty() {
            let seg = segment_samples(&g, &geom, &next);
            next = extend_velocity(&ls, &geom, &normals, &seg, ext).map_err(ctx)?.field;
        }
        psi = next;
        theta = theta_new;
    }

    Ok(AdjointOutput {
        wall_theta,
        dts,
        terminal,
        initial: AdjointState { theta, psi, time: 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::{band_mask, compute_normals};

    #[test]
    fn zero_speed_leaves_psi_unchanged() {
        let g = Grid::new(16, 16, 1.0).unwrap();
        let ls = LevelSet::flat(g, 0.5).unwrap();
        let normals = compute_normals(&ls);
        let band = band_mask(&ls, 4);
        let psi: Vec<f64> = (0..g.len()).map(|k| (k as f64).sin()).collect();
        let out = step_adjoint_levelset(&g, &psi, &g.zeros(), &normals, &band, 1e-2);
        assert_eq!(out, psi);
    }

    #[test]
    fn band_transport_conserves_total() {
        let g = Grid::new(32, 32, 1.0).unwrap();
        let ls = LevelSet::flat(g, 0.5).unwrap();
        let normals = compute_normals(&ls);
        let band = band_mask(&ls, 6);
        let mut psi: Vec<f64> = (0..g.len())
            .map(|k| {
                let y = g.yc(g.coords(k).1);
                if band[k] { (-((y - 0.5) / 0.05).powi(2)).exp() } else { 0.0 }
            })
            .collect();
        let speed = vec![0.8; g.len()];
        let total0: f64 = psi.iter().sum();
        let peak0 = psi.iter().cloned().fold(0.0, f64::max);
        for _ in 0..20 {
            psi = step_adjoint_levelset(&g, &psi, &speed, &normals, &band, 1e-3);
        }
        let total: f64 = psi.iter().sum();
        assert!((total - total0).abs() < 1e-6 * total0.abs());
        // W = F n points down for a flat front, so the profile drifts down
        let centroid: f64 = psi.iter().enumerate().map(|(k, p)| p * g.yc(g.coords(k).1)).sum::<f64>() / total;
        assert!(centroid < 0.5);
        assert!(psi.iter().cloned().fold(0.0, f64::max) <= peak0 + 1e-12);
    }
}
