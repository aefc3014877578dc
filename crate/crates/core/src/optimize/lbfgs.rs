//! Limited-memory BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{EvalCounts, Objective};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LbfgsSettings {
    pub memory: usize,
    pub max_iter: usize,
    pub armijo: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub cost_tol: f64,
    /// Accept a non-decreasing step when the line search fails instead of
    /// stopping; the relative-cost test then only fires on decrease.
    pub allow_increase: bool,
    /// Length of the first trial step while no curvature pair is stored.
    pub initial_step: f64,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 50,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 20,
            grad_tol: 1e-6,
            step_tol: 1e-8,
            cost_tol: 1e-8,
            allow_increase: false,
            initial_step: 1.0,
        }
    }
}

impl LbfgsSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.memory >= 1
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial_step > 0.0
            && self.grad_tol >= 0.0
            && self.step_tol >= 0.0
            && self.cost_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid L-BFGS settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientNorm,
    StepSize,
    CostChange,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub j: f64,
    pub grad_norm: f64,
    pub a: Vec<f64>,
    pub step: f64,
    pub counts: EvalCounts,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub a: Vec<f64>,
    pub j: f64,
    pub grad: Vec<f64>,
    pub history: Vec<IterRecord>,
    pub status: StopReason,
    /// Calls made, including trials of a final failed line search.
    pub counts: EvalCounts,
}

impl LbfgsResult {
    pub fn relative_cost(&self) -> f64 {
        self.j / self.history[0].j
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Stopping tests on the last two records.
pub fn check_convergence(history: &[IterRecord], settings: &LbfgsSettings) -> Option<StopReason> {
    let last = history.last()?;
    if last.grad_norm < settings.grad_tol {
        return Some(StopReason::GradientNorm);
    }
    if history.len() < 2 {
        return None;
    }
    let prev = &history[history.len() - 2];
    let rel_step = last
        .a
        .iter()
        .zip(&prev.a)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    if rel_step < settings.step_tol {
        return Some(StopReason::StepSize);
    }
    let dj = last.j - prev.j;
    let rel_cost = dj.abs() / last.j.abs().max(f64::MIN_POSITIVE);
    if rel_cost < settings.cost_tol && !(settings.allow_increase && dj > 0.0) {
        return Some(StopReason::CostChange);
    }
    None
}

/// Two-loop recursion: `-H g` with `H0 = gamma I` from the newest pair.
fn direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alpha.push((a, rho));
    }
    let gamma = pairs.back().map_or(1.0, |(s, y)| dot(s, y) / dot(y, y));
    for qi in &mut q {
        *qi *= gamma;
    }
    for ((s, y), (a, rho)) in pairs.iter().zip(alpha.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

fn check_finite(j: f64, g: &[f64]) -> Result<()> {
    if !j.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cost or gradient during L-BFGS".into()));
    }
    Ok(())
}

pub fn lbfgs_minimize(obj: &dyn Objective, a0: &[f64], settings: &LbfgsSettings) -> Result<LbfgsResult> {
    lbfgs_minimize_observed(obj, a0, settings, &mut |_| {})
}

/// L-BFGS calling `observe` after every accepted iterate.
pub fn lbfgs_minimize_observed(
    obj: &dyn Objective,
    a0: &[f64],
    settings: &LbfgsSettings,
    observe: &mut dyn FnMut(&IterRecord),
) -> Result<LbfgsResult> {
    settings.validate()?;
    if a0.len() != obj.dim() {
        return Err(Error::Dimension(format!(
            "initial guess has {} entries, objective takes {}",
            a0.len(),
            obj.dim()
        )));
    }
    let mut a = a0.to_vec();
    let (mut j, mut g) = obj.gradient(&a)?;
    check_finite(j, &g)?;
    let mut history = vec![IterRecord {
        k: 0,
        j,
        grad_norm: norm(&g),
        a: a.clone(),
        step: 0.0,
        counts: obj.counts(),
    }];
    observe(&history[0]);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();

    let status = loop {
        if let Some(reason) = check_convergence(&history, settings) {
            break reason;
        }
        let k = history.len();
        if k > settings.max_iter {
            break StopReason::MaxIterations;
        }
        let mut d = direction(&g, &pairs);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            log::debug!("L-BFGS direction is not a descent direction; restarting from -g");
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let mut sigma = if pairs.is_empty() {
            (settings.initial_step / norm(&d)).min(1.0 / f64::EPSILON)
        } else {
            1.0
        };

        let mut accepted = None;
        let mut last_trial = None;
        for _ in 0..=settings.max_backtracks {
            let trial: Vec<f64> = a.iter().zip(&d).map(|(x, di)| x + sigma * di).collect();
            match obj.value_keep(&trial) {
                Ok(jt) if jt.is_nan() => return Err(Error::NonFinite("cost during line search".into())),
                Ok(jt) if jt <= j + settings.armijo * sigma * slope => {
                    accepted = Some((trial, sigma));
                    break;
                }
                Ok(_) => last_trial = Some((trial, sigma)),
                Err(e) if e.is_input_error() => return Err(e),
                Err(e) => log::warn!("line-search trial at step {sigma:e} failed: {e}"),
            }
            sigma *= settings.shrink;
        }
        let (a_new, sigma) = match (accepted, settings.allow_increase, last_trial) {
            (Some(t), _, _) => t,
            (None, true, Some(t)) => {
                log::info!("line search failed; accepting an increase of the cost");
                pairs.clear();
                t
            }
            _ => break StopReason::LineSearchFailed,
        };

        let (j_new, g_new) = obj.gradient(&a_new)?;
        check_finite(j_new, &g_new)?;
        let s: Vec<f64> = a_new.iter().zip(&a).map(|(x, y)| x - y).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(x, y)| x - y).collect();
        if dot(&s, &y) > 0.0 {
            if pairs.len() == settings.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y));
        } else {
            log::debug!("curvature condition violated; clearing the L-BFGS memory");
            pairs.clear();
        }
        a = a_new;
        j = j_new;
        g = g_new;
        history.push(IterRecord {
            k,
            j,
            grad_norm: norm(&g),
            a: a.clone(),
            step: sigma,
            counts: obj.counts(),
        });
        observe(history.last().unwrap());
        log::info!("L-BFGS iteration {k}: J = {j:e}, |grad J| = {:e}", norm(&g));
    };

    Ok(LbfgsResult {
        a,
        j,
        grad: g,
        history,
        status,
        counts: obj.counts(),
    })
}
