//! Adaptive particle swarm optimization.
//!
//! Each generation the swarm is classified from its evolutionary factor
//! `f = (d_g - d_min) / (d_max - d_min)`, where `d_i` is the mean distance of
//! particle `i` to the others and `d_g` that of the global best. The state
//! sets the inertia `1 / (1 + 1.5 exp(-2.6 f))` and nudges the acceleration
//! coefficients. In the convergence and jumping-out states the global best
//! is perturbed along one random coordinate (elitist learning) so a stalled
//! swarm can leave a local basin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwarmPhase {
    Exploration,
    Exploitation,
    Convergence,
    JumpingOut,
}

impl SwarmPhase {
    fn next(self) -> Self {
        match self {
            SwarmPhase::Exploration => SwarmPhase::Exploitation,
            SwarmPhase::Exploitation => SwarmPhase::Convergence,
            SwarmPhase::Convergence => SwarmPhase::JumpingOut,
            SwarmPhase::JumpingOut => SwarmPhase::Exploration,
        }
    }

    fn memberships(f: f64) -> [(SwarmPhase, f64); 4] {
        let explore = match f {
            f if f <= 0.4 => 0.0,
            f if f <= 0.6 => 5.0 * f - 2.0,
            f if f <= 0.7 => 1.0,
            f if f <= 0.8 => -10.0 * f + 8.0,
            _ => 0.0,
        };
        let exploit = match f {
            f if f <= 0.2 => 0.0,
            f if f <= 0.3 => 10.0 * f - 2.0,
            f if f <= 0.4 => 1.0,
            f if f <= 0.6 => -5.0 * f + 3.0,
            _ => 0.0,
        };
        let converge = match f {
            f if f <= 0.1 => 1.0,
            f if f <= 0.3 => -5.0 * f + 1.5,
            _ => 0.0,
        };
        let jump = match f {
            f if f <= 0.7 => 0.0,
            f if f <= 0.9 => 5.0 * f - 3.5,
            _ => 1.0,
        };
        [
            (SwarmPhase::Exploration, explore),
            (SwarmPhase::Exploitation, exploit),
            (SwarmPhase::Convergence, converge),
            (SwarmPhase::JumpingOut, jump),
        ]
    }

    /// Fuzzy classification; ties keep the previous state or move to its
    /// successor in the cycle.
    pub fn classify(f: f64, previous: SwarmPhase) -> SwarmPhase {
        let m = Self::memberships(f);
        let best = m.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        let top: Vec<SwarmPhase> = m.iter().filter(|(_, v)| *v >= best - 1e-12).map(|(s, _)| *s).collect();
        if top.contains(&previous) {
            previous
        } else if top.contains(&previous.next()) {
            previous.next()
        } else {
            top[0]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoSettings {
    pub swarm_size: usize,
    pub max_evals: usize,
    pub seed: u64,
    /// Stop as soon as the best cost is at or below this value.
    pub target: Option<f64>,
    /// Velocity limit as a fraction of each bound range.
    pub max_velocity: f64,
}

impl Default for PsoSettings {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            max_evals: 1000,
            seed: 1,
            target: None,
            max_velocity: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub index: usize,
    pub j: f64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub index: usize,
    pub phase: SwarmPhase,
    pub factor: f64,
    pub best: f64,
    pub evals: usize,
}

#[derive(Debug, Clone)]
pub struct PsoResult {
    pub a: Vec<f64>,
    pub j: f64,
    pub evals: Vec<EvalRecord>,
    pub generations: Vec<Generation>,
}

impl PsoResult {
    /// Evaluations needed before the best cost first reached `level`.
    pub fn evals_to_reach(&self, level: f64) -> Option<usize> {
        self.evals.iter().find(|e| e.best <= level).map(|e| e.index + 1)
    }
}

struct Bookkeeping {
    best_a: Vec<f64>,
    best_j: f64,
    evals: Vec<EvalRecord>,
}

impl Bookkeeping {
    fn record(&mut self, a: &[f64], j: f64) {
        if j < self.best_j {
            self.best_j = j;
            self.best_a = a.to_vec();
        }
        self.evals.push(EvalRecord {
            index: self.evals.len(),
            j,
            best: self.best_j,
        });
    }
}

fn evaluate(obj: &dyn Objective, points: &[Vec<f64>], exec: Execution) -> Vec<f64> {
    exec.map(points, |p| match obj.value(p) {
        Ok(j) if !j.is_nan() => j,
        Ok(_) => f64::INFINITY,
        Err(e) => {
            log::warn!("particle evaluation failed, scored as infinite cost: {e}");
            f64::INFINITY
        }
    })
}

fn mean_distances(x: &[Vec<f64>], range: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            if n < 2 {
                return 0.0;
            }
            let s: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    x[i].iter()
                        .zip(&x[j])
                        .zip(range)
                        .map(|((a, b), r)| ((a - b) / r).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .sum();
            s / (n - 1) as f64
        })
        .collect()
}

pub fn pso_minimize(
    obj: &dyn Objective,
    bounds: &[(f64, f64)],
    settings: &PsoSettings,
    exec: Execution,
) -> Result<PsoResult> {
    let dim = obj.dim();
    if bounds.len() != dim {
        return Err(Error::Dimension(format!("{} bounds for {dim} coefficients", bounds.len())));
    }
    if bounds.iter().any(|(lo, hi)| !(hi > lo)) {
        return Err(Error::Domain("every bound needs lower < upper".into()));
    }
    if !(settings.max_velocity >= 0.0) {
        return Err(Error::Domain("the velocity limit must be non-negative".into()));
    }
    if settings.swarm_size == 0 || settings.max_evals < settings.swarm_size {
        return Err(Error::Domain("the budget must cover at least one swarm generation".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let range: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let vmax: Vec<f64> = range.iter().map(|r| settings.max_velocity * r).collect();
    let np = settings.swarm_size;

    let mut x: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..np)
        .map(|_| vmax.iter().map(|m| if *m > 0.0 { rng.gen_range(-*m..*m) } else { 0.0 }).collect())
        .collect();
    let mut book = Bookkeeping {
        best_a: x[0].clone(),
        best_j: f64::INFINITY,
        evals: Vec::new(),
    };
    let fx = evaluate(obj, &x, exec);
    for (p, j) in x.iter().zip(&fx) {
        book.record(p, *j);
    }
    let mut pbest = x.clone();
    let mut pbest_j = fx;
    let (mut c1, mut c2) = (2.0f64, 2.0f64);
    let mut phase = SwarmPhase::Exploration;
    let mut generations = Vec::new();
    let max_gen = settings.max_evals / np;
    let reached = |b: &Bookkeeping| settings.target.is_some_and(|t| b.best_j <= t);

    let mut gen = 0;
    while book.evals.len() + np <= settings.max_evals && !reached(&book) {
        gen += 1;
        let gidx = (0..np).min_by(|&a, &b| pbest_j[a].total_cmp(&pbest_j[b])).unwrap();
        let d = mean_distances(&x, &range);
        let (dmin, dmax) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let factor = if dmax > dmin { (d[gidx] - dmin) / (dmax - dmin) } else { 0.0 };
        phase = SwarmPhase::classify(factor, phase);
        let delta = rng.gen_range(0.05..0.1);
        let (d1, d2) = match phase {
            SwarmPhase::Exploration => (delta, -delta),
            SwarmPhase::Exploitation => (0.5 * delta, -0.5 * delta),
            SwarmPhase::Convergence => (0.5 * delta, 0.5 * delta),
            SwarmPhase::JumpingOut => (-delta, delta),
        };
        c1 = (c1 + d1).clamp(1.5, 2.5);
        c2 = (c2 + d2).clamp(1.5, 2.5);
        if c1 + c2 > 4.0 {
            let s = 4.0 / (c1 + c2);
            c1 *= s;
            c2 *= s;
        }
        let inertia = 1.0 / (1.0 + 1.5 * (-2.6 * factor).exp());

        let gbest = book.best_a.clone();
        for i in 0..np {
            for k in 0..dim {
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let mut vk = inertia * v[i][k] + c1 * r1 * (pbest[i][k] - x[i][k]) + c2 * r2 * (gbest[k] - x[i][k]);
                vk = vk.clamp(-vmax[k], vmax[k]);
                let mut xk = x[i][k] + vk;
                let (lo, hi) = bounds[k];
                if xk < lo || xk > hi {
                    xk = xk.clamp(lo, hi);
                    vk = 0.0;
                }
                x[i][k] = xk;
                v[i][k] = vk;
            }
        }
        let fx = evaluate(obj, &x, exec);
        for i in 0..np {
            book.record(&x[i], fx[i]);
            if fx[i] < pbest_j[i] {
                pbest_j[i] = fx[i];
                pbest[i] = x[i].clone();
            }
        }

        let elitist = matches!(phase, SwarmPhase::Convergence | SwarmPhase::JumpingOut);
        if elitist && book.evals.len() < settings.max_evals && !reached(&book) {
            let sigma = 1.0 - 0.9 * (gen as f64 / max_gen.max(1) as f64).min(1.0);
            let k = rng.gen_range(0..dim);
            let mut p = book.best_a.clone();
            let n = Normal::new(0.0, sigma).expect("positive spread");
            p[k] = (p[k] + range[k] * n.sample(&mut rng)).clamp(bounds[k].0, bounds[k].1);
            let j = evaluate(obj, std::slice::from_ref(&p), Execution::Sequential)[0];
            book.record(&p, j);
            // the probe replaces the worst particle whether or not it improved
            let worst = (0..np).max_by(|&a, &b| pbest_j[a].total_cmp(&pbest_j[b])).unwrap();
            x[worst] = p.clone();
            pbest[worst] = p;
            pbest_j[worst] = j;
        }
        generations.push(Generation {
            index: gen,
            phase,
            factor,
            best: book.best_j,
            evals: book.evals.len(),
        });
        log::debug!("PSO generation {gen}: {phase:?}, f = {factor:.3}, best {:e}", book.best_j);
    }

    Ok(PsoResult {
        a: book.best_a,
        j: book.best_j,
        evals: book.evals,
        generations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_follows_the_factor() {
        let p = SwarmPhase::Exploration;
        assert_eq!(SwarmPhase::classify(0.05, p), SwarmPhase::Convergence);
        assert_eq!(SwarmPhase::classify(0.35, p), SwarmPhase::Exploitation);
        assert_eq!(SwarmPhase::classify(0.65, p), SwarmPhase::Exploration);
        assert_eq!(SwarmPhase::classify(0.95, p), SwarmPhase::JumpingOut);
        // f = 0.5: exploitation 0.5, exploration 0.5; keep the previous state
        assert_eq!(SwarmPhase::classify(0.5, SwarmPhase::Exploration), SwarmPhase::Exploration);
        assert_eq!(SwarmPhase::classify(0.5, SwarmPhase::Exploitation), SwarmPhase::Exploitation);
    }

    #[test]
    fn invalid_setups_are_rejected() {
        let obj = crate::optimize::FnObjective::new(2, |_: &[f64]| 0.0, |_: &[f64]| vec![0.0; 2]);
        let s = PsoSettings::default();
        assert!(pso_minimize(&obj, &[(0.0, 1.0)], &s, Execution::Sequential).is_err());
        assert!(pso_minimize(&obj, &[(0.0, 1.0), (1.0, 1.0)], &s, Execution::Sequential).is_err());
    }
}
