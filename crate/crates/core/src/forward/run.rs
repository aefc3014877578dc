use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::heat::{FaceVelocity, HeatSystem, Phase, ThermalBc};
use super::ns::NsSolver;
use super::params::{NumericalSettings, PhysicalParams};
use super::state::FlowState;
use super::stefan::{build_probes, stefan_speeds, ProbeData};
use super::trajectory::{Checkpoint, Trajectory};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::levelset::{
    advect_levelset, average_height, compute_normals, effective_rayleigh, extend_velocity,
    reinitialize, LevelSet, PhaseGeometry,
};

/// Fraction of the domain height at which a run is stopped early.
pub const FRONT_STOP_HEIGHT: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardProblem {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub numerics: NumericalSettings,
    /// Tangential speed of the bottom wall; only used by verification runs.
    pub bottom_wall_velocity: f64,
    /// Replaces the seeded initial temperature when set.
    pub start_temperature: Option<Vec<f64>>,
}

impl ForwardProblem {
    pub fn new(grid: Grid, params: PhysicalParams, numerics: NumericalSettings) -> Result<Self> {
        params.validate()?;
        numerics.validate()?;
        if !(numerics.h0 > 0.0 && numerics.h0 < grid.height()) {
            return Err(Error::Domain(format!(
                "initial front height {} must lie inside (0, {})",
                numerics.h0,
                grid.height()
            )));
        }
        Ok(Self {
            grid,
            params,
            numerics,
            bottom_wall_velocity: 0.0,
            start_temperature: None,
        })
    }

    /// Zero initial temperature plus the seeded perturbation, unless a start
    /// field was supplied.
    pub fn initial_temperature(&self) -> Vec<f64> {
        if let Some(t) = &self.start_temperature {
            return t.clone();
        }
        let amp = self.numerics.noise_amplitude;
        if amp == 0.0 {
            return self.grid.zeros();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.numerics.seed);
        (0..self.grid.len()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()
    }

    pub fn initial_levelset(&self) -> Result<LevelSet> {
        LevelSet::flat(self.grid, self.numerics.h0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Store per-step checkpoints for a reverse sweep.
    pub record: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub h_bar: f64,
    pub ra_e: f64,
    pub max_u: f64,
    pub melted_volume: f64,
}

pub struct ForwardOutput {
    pub state: FlowState,
    pub phi: LevelSet,
    pub diagnostics: Vec<DiagnosticRow>,
    pub trajectory: Option<Trajectory>,
    pub stopped_early: bool,
    pub steps: usize,
    pub control: Vec<f64>,
}

impl ForwardOutput {
    pub fn final_time(&self) -> f64 {
        self.state.time
    }
}

/// What an observer sees: the initial state as step 0, then the state after
/// each completed step.
pub struct StepView<'a> {
    pub step: usize,
    pub state: &'a FlowState,
    pub phi: &'a LevelSet,
    pub row: &'a DiagnosticRow,
}

pub fn run_forward(problem: &ForwardProblem, w: &[f64], options: RunOptions) -> Result<ForwardOutput> {
    run_forward_observed(problem, w, options, &mut |_| {})
}

pub fn run_forward_observed(
    problem: &ForwardProblem,
    w: &[f64],
    options: RunOptions,
    observer: &mut dyn FnMut(&StepView<'_>),
) -> Result<ForwardOutput> {
    let g = problem.grid;
    let params = &problem.params;
    let num = &problem.numerics;
    if w.len() != g.nx() {
        return Err(Error::Dimension(format!(
            "control has {} values for {} columns",
            w.len(),
            g.nx()
        )));
    }
    params.check_control(w)?;
    if let Some(t) = &problem.start_temperature {
        g.check_len("start temperature", t.len())?;
    }
    let steps = num.steps();
    let dt = num.dt;

    let mut ls = problem.initial_levelset()?;
    let mut geom = PhaseGeometry::build(&ls);
    let mut normals = compute_normals(&ls);
    let mut state = FlowState::at_rest(&g, problem.initial_temperature());
    let mut ns = NsSolver::new(g);
    let mut trajectory = if options.record {
        Some(Trajectory::new(
            g,
            steps,
            num.memory_budget_mb.saturating_mul(1 << 20),
            state.temperature.clone(),
        )?)
    } else {
        None
    };

    let h0 = average_height(&ls)?;
    let mut diagnostics = vec![DiagnosticRow {
        t: 0.0,
        h_bar: h0,
        ra_e: effective_rayleigh(params.ra, params.t_melt, h0),
        max_u: 0.0,
        melted_volume: 0.0,
    }];
    observer(&StepView {
        step: 0,
        state: &state,
        phi: &ls,
        row: &diagnostics[0],
    });
    let v0 = geom.liquid_volume();
    let bc = ThermalBc {
        t_bottom: params.t_bottom,
        t_melt: params.t_melt,
        top: w,
    };
    let mut stopped_early = false;
    let mut done = 0;

    for n in 0..steps {
        let t_n = n as f64 * dt;
        let ctx = |e: Error| e.at_step(n, t_n);

        ns.step(&mut state, ls.phi(), params, dt, problem.bottom_wall_velocity)
            .map_err(ctx)?;

        let mut t_new = state.temperature.clone();
        let vel = FaceVelocity {
            u: &state.u,
            v: &state.v,
        };
        HeatSystem::build(&g, ls.phi(), Phase::Liquid, dt, Some(vel))
            .step(&state.temperature, &bc, &mut t_new)
            .map_err(ctx)?;
        HeatSystem::build(&g, ls.phi(), Phase::Solid, dt, None)
            .step(&state.temperature, &bc, &mut t_new)
            .map_err(ctx)?;
        state.temperature = t_new;

        let probes = build_probes(&g, ls.phi(), &geom);
        let data = ProbeData {
            field: &state.temperature,
            bottom: params.t_bottom,
            top: w,
        };
        let v = stefan_speeds(&probes, &data, params.t_melt, params.st);
        let ext = extend_velocity(&ls, &geom, &normals, &v, &num.extension).map_err(ctx)?;
        let mut next = advect_levelset(&ls, &ext.field, dt).map_err(ctx)?;
        let reinit = (n + 1) % num.reinit_every == 0;
        if reinit {
            reinitialize(&mut next, &num.reinit);
        }

        if let Some(tr) = trajectory.as_mut() {
            tr.push(Checkpoint {
                step: n,
                time: t_n,
                dt,
                phi: ls.phi().to_vec(),
                temperature: state.temperature.clone(),
                u: state.u.clone(),
                v: state.v.clone(),
                speed: ext.field,
                reinitialized: reinit,
            })
            .map_err(ctx)?;
        }

        ls = next;
        geom = PhaseGeometry::build(&ls);
        normals = compute_normals(&ls);
        state.time = (n + 1) as f64 * dt;
        done = n + 1;

        let h_bar = average_height(&ls).map_err(|e| e.at_step(n, state.time))?;
        let row = DiagnosticRow {
            t: state.time,
            h_bar,
            ra_e: effective_rayleigh(params.ra, params.t_melt, h_bar),
            max_u: state.max_speed(),
            melted_volume: geom.liquid_volume() - v0,
        };
        diagnostics.push(row);
        observer(&StepView {
            step: n + 1,
            state: &state,
            phi: &ls,
            row: &row,
        });
        if h_bar > FRONT_STOP_HEIGHT * g.height() {
            log::warn!("front reached {h_bar:.4} at t = {:e}; stopping early", state.time);
            stopped_early = true;
            break;
        }
    }

    if let Some(tr) = trajectory.as_mut() {
        tr.final_temperature = state.temperature.clone();
        tr.final_phi = ls.phi().to_vec();
        tr.final_time = state.time;
        tr.complete = !stopped_early;
    }
    Ok(ForwardOutput {
        state,
        phi: ls,
        diagnostics,
        trajectory,
        stopped_early,
        steps: done,
        control: w.to_vec(),
    })
}

/// Recomputes the end-of-step temperature of step `n` from the stored
/// checkpoint data (level set, velocity) and the preceding temperature.
pub fn replay_temperature(problem: &ForwardProblem, traj: &Trajectory, w: &[f64], n: usize) -> Result<Vec<f64>> {
    let g = problem.grid;
    let cp = traj.get(n)?;
    let t_old = traj.temperature_before(n)?;
    let bc = ThermalBc {
        t_bottom: problem.params.t_bottom,
        t_melt: problem.params.t_melt,
        top: w,
    };
    let mut out = t_old.clone();
    let vel = FaceVelocity { u: &cp.u, v: &cp.v };
    HeatSystem::build(&g, &cp.phi, Phase::Liquid, cp.dt, Some(vel)).step(&t_old, &bc, &mut out)?;
    HeatSystem::build(&g, &cp.phi, Phase::Solid, cp.dt, None).step(&t_old, &bc, &mut out)?;
    Ok(out)
}
