use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Largest wall temperature the clamp lets through; the wall must stay
/// strictly below the melting temperature.
pub const WALL_MARGIN: f64 = -1e-6;

/// Parametrization of the top-wall temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `w = -|a1| - |a2| (1 - tanh(2x)^2)`, a localized cold spot at the centre.
    TanhBasis,
    /// `w = sum_n a_n sin^n(2 pi x) + a_{n+4} cos^n(2 pi x)`, `n = 1..4`.
    TrigPowerBasis,
}

// sign(0) := 1 keeps the start a = 0 differentiable from one side.
fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

impl Basis {
    pub fn dim(self) -> usize {
        match self {
            Basis::TanhBasis => 2,
            Basis::TrigPowerBasis => 8,
        }
    }

    fn check(self, a: &[f64]) -> Result<()> {
        if a.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{:?} takes {} coefficients, got {}",
                self,
                self.dim(),
                a.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("control coefficients".into()));
        }
        Ok(())
    }

    /// Unclamped wall temperature at the centred coordinate `x`.
    pub fn eval(self, a: &[f64], x: f64) -> f64 {
        match self {
            Basis::TanhBasis => {
                let t = (2.0 * x).tanh();
                -a[0].abs() - a[1].abs() * (1.0 - t * t)
            }
            Basis::TrigPowerBasis => {
                let (s, c) = (2.0 * std::f64::consts::PI * x).sin_cos();
                let (mut sp, mut cp, mut w) = (1.0, 1.0, 0.0);
                for n in 0..4 {
                    sp *= s;
                    cp *= c;
                    w += a[n] * sp + a[n + 4] * cp;
                }
                w
            }
        }
    }

    /// `dw/da_i` at `x`.
    pub fn derivative(self, a: &[f64], x: f64) -> Vec<f64> {
        match self {
            Basis::TanhBasis => {
                let t = (2.0 * x).tanh();
                vec![-sign(a[0]), -sign(a[1]) * (1.0 - t * t)]
            }
            Basis::TrigPowerBasis => {
                let (s, c) = (2.0 * std::f64::consts::PI * x).sin_cos();
                let mut d = vec![0.0; 8];
                let (mut sp, mut cp) = (1.0, 1.0);
                for n in 0..4 {
                    sp *= s;
                    cp *= c;
                    d[n] = sp;
                    d[n + 4] = cp;
                }
                d
            }
        }
    }

    /// Wall temperature per column, clamped below the melting temperature.
    pub fn wall(self, grid: &Grid, a: &[f64]) -> Result<Vec<f64>> {
        self.check(a)?;
        let mut clamped = 0;
        let w: Vec<f64> = (0..grid.nx())
            .map(|i| {
                let v = self.eval(a, grid.x_centered(i));
                if v > WALL_MARGIN {
                    clamped += 1;
                    WALL_MARGIN
                } else {
                    v
                }
            })
            .collect();
        if clamped > 0 {
            log::debug!("wall temperature clamped in {clamped} of {} columns", grid.nx());
        }
        Ok(w)
    }

    /// Pulls a wall gradient back to the coefficients. The clamp is passed
    /// straight through so the optimizer can leave the infeasible region.
    pub fn pullback(self, grid: &Grid, a: &[f64], dw: &[f64]) -> Result<Vec<f64>> {
        self.check(a)?;
        if dw.len() != grid.nx() {
            return Err(Error::Dimension(format!(
                "wall gradient has {} columns, grid has {}",
                dw.len(),
                grid.nx()
            )));
        }
        let mut g = vec![0.0; self.dim()];
        for (i, d) in dw.iter().enumerate() {
            for (gk, dk) in g.iter_mut().zip(self.derivative(a, grid.x_centered(i))) {
                *gk += d * dk;
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_values() {
        let b = Basis::TanhBasis;
        assert!((b.eval(&[0.3, 2.0], 0.0) + 2.3).abs() < 1e-15);
        assert!((b.eval(&[0.3, 2.0], 40.0) + 0.3).abs() < 1e-12);
        assert_eq!(b.eval(&[-0.3, -2.0], 0.0), b.eval(&[0.3, 2.0], 0.0));
        for x in [-2.0, -0.3, 0.0, 1.1] {
            assert!(b.eval(&[0.3, 2.0], x) <= -0.3);
        }
    }

    #[test]
    fn zero_trig_coefficients_give_zero() {
        for x in [-1.7, 0.0, 0.13] {
            assert_eq!(Basis::TrigPowerBasis.eval(&[0.0; 8], x), 0.0);
        }
        // sin^2 + cos^2 = 1
        let mut a = [0.0; 8];
        a[1] = -1.0;
        a[5] = -1.0;
        assert!((Basis::TrigPowerBasis.eval(&a, 0.37) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_differences() {
        let x = 0.31;
        for (b, a) in [
            (Basis::TanhBasis, vec![0.4, -1.3]),
            (Basis::TrigPowerBasis, vec![0.1, -0.2, 0.3, 0.05, -0.7, 0.2, 0.1, -0.4]),
        ] {
            let d = b.derivative(&a, x);
            for k in 0..a.len() {
                let mut p = a.clone();
                let mut m = a.clone();
                p[k] += 1e-6;
                m[k] -= 1e-6;
                let fd = (b.eval(&p, x) - b.eval(&m, x)) / 2e-6;
                assert!((fd - d[k]).abs() < 1e-8, "{b:?} {k}");
            }
        }
    }

    #[test]
    fn wall_is_clamped_below_melting() {
        let g = Grid::new(16, 4, 4.0).unwrap();
        let w = Basis::TanhBasis.wall(&g, &[0.0, 0.0]).unwrap();
        assert!(w.iter().all(|v| *v == WALL_MARGIN));
        let mut a = [0.0; 8];
        a[0] = 1.0;
        let w = Basis::TrigPowerBasis.wall(&g, &a).unwrap();
        assert!(w.iter().all(|v| *v < 0.0));
        assert!(Basis::TanhBasis.wall(&g, &[0.0]).is_err());
        assert!(Basis::TanhBasis.wall(&g, &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn pullback_is_the_transposed_jacobian() {
        let g = Grid::new(16, 4, 4.0).unwrap();
        let a = [0.5, 1.0];
        let dw: Vec<f64> = (0..16).map(|i| i as f64 - 3.0).collect();
        let got = Basis::TanhBasis.pullback(&g, &a, &dw).unwrap();
        let want0: f64 = -dw.iter().sum::<f64>();
        assert!((got[0] - want0).abs() < 1e-14);
    }
}
