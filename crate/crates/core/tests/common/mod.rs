#![allow(dead_code)]

use libm::{erf, erfc};

/// Two-phase similarity solution of the Stefan problem with the liquid below
/// the front, held at `t_b` on the bottom wall and `t_inf` far into the solid.
#[derive(Debug, Clone, Copy)]
pub struct Similarity {
    pub lambda: f64,
    pub t_b: f64,
    pub t_m: f64,
    pub t_inf: f64,
}

impl Similarity {
    /// Root of `lambda sqrt(pi) exp(lambda^2) = St [(Tb - TM)/erf(lambda) - (TM - Tinf)/erfc(lambda)]`
    /// by bisection.
    pub fn solve(st: f64, t_b: f64, t_m: f64, t_inf: f64) -> Self {
        let f = |l: f64| {
            l * std::f64::consts::PI.sqrt() * (l * l).exp() - st * ((t_b - t_m) / erf(l) - (t_m - t_inf) / erfc(l))
        };
        let (mut lo, mut hi) = (1e-6, 3.0);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self {
            lambda: 0.5 * (lo + hi),
            t_b,
            t_m,
            t_inf,
        }
    }

    pub fn front(&self, t: f64) -> f64 {
        2.0 * self.lambda * t.sqrt()
    }

    /// Time at which the front sits at height `h`.
    pub fn time_at(&self, h: f64) -> f64 {
        (h / (2.0 * self.lambda)).powi(2)
    }

    pub fn temperature(&self, y: f64, t: f64) -> f64 {
        let eta = y / (2.0 * t.sqrt());
        if eta < self.lambda {
            self.t_b - (self.t_b - self.t_m) * erf(eta) / erf(self.lambda)
        } else {
            self.t_inf + (self.t_m - self.t_inf) * erfc(eta) / erfc(self.lambda)
        }
    }
}

/// Cosine similarity of two vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}
