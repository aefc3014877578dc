use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::Basis;
use crate::adjoint::{
    evaluate_cost, run_adjoint, wall_gradient, AdjointOutput, AdjointSettings, CostBreakdown,
    CostWeights, DesiredState,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forward::{run_forward, ForwardOutput, ForwardProblem, RunOptions};

/// Number of cost evaluations (forward solves) and gradient evaluations
/// (adjoint sweeps) actually executed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub cost: usize,
    pub gradient: usize,
}

impl EvalCounts {
    pub fn total(&self) -> usize {
        self.cost + self.gradient
    }
}

#[derive(Debug, Default)]
pub struct Counter {
    cost: AtomicUsize,
    gradient: AtomicUsize,
}

impl Counter {
    pub fn add_cost(&self) {
        self.cost.fetch_add(1, Ordering::Relaxed);
    }
    pub fn add_gradient(&self) {
        self.gradient.fetch_add(1, Ordering::Relaxed);
    }
    pub fn get(&self) -> EvalCounts {
        EvalCounts {
            cost: self.cost.load(Ordering::Relaxed),
            gradient: self.gradient.load(Ordering::Relaxed),
        }
    }
}

/// A cost over a coefficient vector.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, a: &[f64]) -> Result<f64>;

    /// Value and gradient at `a`.
    fn gradient(&self, a: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Like [`Objective::value`], but may keep whatever a following
    /// [`Objective::gradient`] call at the same point can reuse.
    fn value_keep(&self, a: &[f64]) -> Result<f64> {
        self.value(a)
    }

    fn counts(&self) -> EvalCounts;
}

/// Objective built from closures; used for analytic test functions.
pub struct FnObjective<F, G> {
    dim: usize,
    f: F,
    g: G,
    counter: Counter,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F, g: G) -> Self {
        Self {
            dim,
            f,
            g,
            counter: Counter::default(),
        }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, a: &[f64]) -> Result<f64> {
        self.counter.add_cost();
        Ok((self.f)(a))
    }
    fn gradient(&self, a: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.counter.add_cost();
        self.counter.add_gradient();
        Ok(((self.f)(a), (self.g)(a)))
    }
    fn counts(&self) -> EvalCounts {
        self.counter.get()
    }
}

struct Kept {
    a: Vec<f64>,
    cost: CostBreakdown,
    out: ForwardOutput,
}

/// The melting control problem: wall temperature from a basis, forward
/// solve, tracking cost and adjoint gradient.
pub struct MeltObjective {
    pub problem: ForwardProblem,
    pub basis: Basis,
    pub desired: DesiredState,
    pub weights: CostWeights,
    pub adjoint: AdjointSettings,
    counter: Counter,
    kept: Mutex<Option<Kept>>,
}

impl MeltObjective {
    pub fn new(
        problem: ForwardProblem,
        basis: Basis,
        desired: DesiredState,
        weights: CostWeights,
        adjoint: AdjointSettings,
    ) -> Result<Self> {
        weights.validate()?;
        adjoint.validate()?;
        problem.grid.check_len("desired temperature", desired.temperature.len())?;
        problem.grid.check_len("desired level set", desired.phi.len())?;
        Ok(Self {
            problem,
            basis,
            desired,
            weights,
            adjoint,
            counter: Counter::default(),
            kept: Mutex::new(None),
        })
    }

    /// One counted forward solve and its cost.
    pub fn forward(&self, a: &[f64], record: bool) -> Result<(CostBreakdown, ForwardOutput)> {
        let w = self.basis.wall(&self.problem.grid, a)?;
        self.counter.add_cost();
        let out = run_forward(&self.problem, &w, RunOptions { record })?;
        let cost = evaluate_cost(
            &self.problem.grid,
            &out.state.temperature,
            &out.phi,
            &w,
            out.final_time(),
            &self.desired,
            &self.weights,
        )?;
        if !cost.total().is_finite() {
            return Err(Error::NonFinite("cost functional".into()));
        }
        Ok((cost, out))
    }

    /// Cost, coefficient gradient and the adjoint sweep behind it. Reuses
    /// the last kept forward solve when it was taken at `a`.
    pub fn adjoint_at(&self, a: &[f64]) -> Result<(f64, Vec<f64>, AdjointOutput)> {
        let e = self.solve_at(a)?;
        Ok((e.cost.total(), e.gradient, e.adjoint))
    }

    /// Everything one gradient evaluation produces.
    pub fn solve_at(&self, a: &[f64]) -> Result<FullEvaluation> {
        let kept = self.kept.lock().unwrap().take().filter(|k| k.a == a);
        let (cost, output) = match kept {
            Some(k) => (k.cost, k.out),
            None => self.forward(a, true)?,
        };
        let traj = output
            .trajectory
            .as_ref()
            .ok_or_else(|| Error::Domain("forward solve kept no trajectory".into()))?;
        let w = &output.control;
        self.counter.add_gradient();
        let adjoint = run_adjoint(&self.problem, traj, w, &self.desired, &self.weights, &self.adjoint)?;
        let dw = wall_gradient(&adjoint, w, &self.weights, output.final_time(), self.problem.grid.delta())?;
        let gradient = self.basis.pullback(&self.problem.grid, a, &dw)?;
        if gradient.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cost gradient".into()));
        }
        Ok(FullEvaluation {
            cost,
            output,
            wall_gradient: dw,
            gradient,
            adjoint,
        })
    }
}

pub struct FullEvaluation {
    pub cost: CostBreakdown,
    pub output: ForwardOutput,
    /// `dJ/dw` per wall column.
    pub wall_gradient: Vec<f64>,
    /// `dJ/da` per coefficient.
    pub gradient: Vec<f64>,
    pub adjoint: AdjointOutput,
}

impl Objective for MeltObjective {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn value(&self, a: &[f64]) -> Result<f64> {
        Ok(self.forward(a, false)?.0.total())
    }

    fn value_keep(&self, a: &[f64]) -> Result<f64> {
        let (cost, out) = self.forward(a, true)?;
        let j = cost.total();
        *self.kept.lock().unwrap() = Some(Kept { a: a.to_vec(), cost, out });
        Ok(j)
    }

    fn gradient(&self, a: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (j, g, _) = self.adjoint_at(a)?;
        Ok((j, g))
    }

    fn counts(&self) -> EvalCounts {
        self.counter.get()
    }
}

/// Central-difference gradient, `2 dim` cost evaluations run as one batch.
pub fn fd_gradient(obj: &dyn Objective, a: &[f64], step: f64, exec: Execution) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("difference step {step} must be positive")));
    }
    let points: Vec<Vec<f64>> = (0..a.len())
        .flat_map(|k| {
            [1.0, -1.0].map(|s| {
                let mut p = a.to_vec();
                p[k] += s * step;
                p
            })
        })
        .collect();
    let values = exec.map(&points, |p| obj.value(p));
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(values.chunks(2).map(|c| (c[0] - c[1]) / (2.0 * step)).collect())
}
