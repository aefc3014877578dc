use super::{CostWeights, DesiredState};
use crate::error::Result;
use crate::grid::Grid;
use crate::levelset::{sample_field, LevelSet, PhaseGeometry};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostBreakdown {
    pub temperature: f64,
    pub front: f64,
    pub control: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.temperature + self.front + self.control
    }
}

/// `beta3/2 * t_f * sum_col w^2 delta`; the control is constant in time.
pub fn control_cost(w: &[f64], t_f: f64, delta: f64, beta3: f64) -> f64 {
    0.5 * beta3 * t_f * w.iter().map(|v| v * v * delta).sum::<f64>()
}

/// Tracking cost of a final state. The front term is a midpoint rule over
/// the interface segments of the final level set.
pub fn evaluate_cost(
    grid: &Grid,
    temperature: &[f64],
    phi: &LevelSet,
    w: &[f64],
    t_f: f64,
    desired: &DesiredState,
    weights: &CostWeights,
) -> Result<CostBreakdown> {
    grid.check_len("final temperature", temperature.len())?;
    grid.check_len("final level set", phi.phi().len())?;
    grid.check_len("desired temperature", desired.temperature.len())?;
    grid.check_len("desired level set", desired.phi.len())?;
    if phi.grid() != grid {
        return Err(crate::Error::Dimension("level set lives on another grid".into()));
    }
    let area = grid.cell_area();
    let temp: f64 = temperature
        .iter()
        .zip(&desired.temperature)
        .map(|(t, d)| (t - d) * (t - d) * area)
        .sum();
    let geom = PhaseGeometry::build(phi);
    let front: f64 = geom
        .segments
        .iter()
        .map(|s| {
            let [x, y] = s.midpoint();
            let diff = phi.sample(x, y) - sample_field(grid, &desired.phi, x, y);
            diff * diff * s.length
        })
        .sum();
    Ok(CostBreakdown {
        temperature: 0.5 * weights.beta1 * temp,
        front: 0.5 * weights.beta2 * front,
        control: control_cost(w, t_f, grid.delta(), weights.beta3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_tracking_with_zero_control_costs_nothing() {
        let g = Grid::new(16, 8, 2.0).unwrap();
        let ls = LevelSet::flat(g, 0.3).unwrap();
        let t: Vec<f64> = (0..g.len()).map(|k| k as f64 * 0.01).collect();
        let d = DesiredState::new(&g, t.clone(), ls.phi().to_vec()).unwrap();
        let c = evaluate_cost(&g, &t, &ls, &[0.0; 16], 0.2, &d, &CostWeights::default()).unwrap();
        assert!(c.total().abs() < 1e-14);
    }

    #[test]
    fn flat_offset_front_term() {
        // Both fronts flat: the integrand is the constant offset squared.
        let g = Grid::new(16, 8, 2.0).unwrap();
        let ls = LevelSet::flat(g, 0.3).unwrap();
        let target = LevelSet::flat(g, 0.35).unwrap();
        let d = DesiredState::new(&g, g.zeros(), target.phi().to_vec()).unwrap();
        let c = evaluate_cost(&g, &g.zeros(), &ls, &[0.0; 16], 0.2, &d, &CostWeights::default()).unwrap();
        assert!((c.front - 0.5 * 0.05f64.powi(2) * 2.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let g = Grid::new(16, 8, 2.0).unwrap();
        let ls = LevelSet::flat(g, 0.3).unwrap();
        let d = DesiredState {
            temperature: vec![0.0; 3],
            phi: ls.phi().to_vec(),
        };
        assert!(evaluate_cost(&g, &g.zeros(), &ls, &[0.0; 16], 0.2, &d, &CostWeights::default()).is_err());
    }
}
