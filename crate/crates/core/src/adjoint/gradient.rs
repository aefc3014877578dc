use super::{AdjointOutput, CostWeights};
use crate::error::{Error, Result};

/// Sensitivity of the cost to the top-wall temperature of each column,
/// `dJ/dw_c = sum_n dt_n Theta_n,c delta + beta3 t_f delta w_c`.
pub fn wall_gradient_from_history(
    wall_theta: &[Vec<f64>],
    dts: &[f64],
    w: &[f64],
    weights: &CostWeights,
    t_f: f64,
    delta: f64,
) -> Result<Vec<f64>> {
    if wall_theta.len() != dts.len() {
        return Err(Error::Dimension("wall history and time steps differ in length".into()));
    }
    let mut g: Vec<f64> = w.iter().map(|v| weights.beta3 * t_f * delta * v).collect();
    for (row, dt) in wall_theta.iter().zip(dts) {
        if row.len() != w.len() {
            return Err(Error::Dimension(format!(
                "wall history has {} columns, control has {}",
                row.len(),
                w.len()
            )));
        }
        for (gc, th) in g.iter_mut().zip(row) {
            *gc += dt * th * delta;
        }
    }
    Ok(g)
}

pub fn wall_gradient(adj: &AdjointOutput, w: &[f64], weights: &CostWeights, t_f: f64, delta: f64) -> Result<Vec<f64>> {
    wall_gradient_from_history(&adj.wall_theta, &adj.dts, w, weights, t_f, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_history_reduces_to_penalty() {
        let w = vec![-0.3; 8];
        let hist = vec![vec![0.0; 8]; 10];
        let dts = vec![0.02; 10];
        let g = wall_gradient_from_history(&hist, &dts, &w, &CostWeights::default(), 0.2, 0.5).unwrap();
        for v in g {
            assert!((v - 1e-3 * 0.2 * 0.5 * -0.3).abs() < 1e-15);
        }
    }
}
