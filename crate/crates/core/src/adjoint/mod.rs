//! Incomplete continuous adjoint of the melting problem.
//!
//! The velocity is frozen from the forward trajectory (no Navier-Stokes
//! adjoint). The heat adjoint `Theta` is solved with the transposed forward
//! operators of each phase, the front couples through `Theta = St psi |grad phi|`
//! and the auxiliary front variable `psi` is transported backward in the
//! narrow band with the Stefan speed.

pub mod cost;
pub mod gradient;
pub mod sweep;
pub mod terminal;

use serde::{Deserialize, Serialize};

pub use cost::{control_cost, evaluate_cost, CostBreakdown};
pub use gradient::{wall_gradient, wall_gradient_from_history};
pub use sweep::{
    adjoint_heat_step, front_link_values, run_adjoint, step_adjoint_levelset, AdjointOutput,
    AdjointState,
};
pub use terminal::{terminal_psi_segments, terminal_state, terminal_theta};

use crate::error::{Error, Result};
use crate::forward::ForwardOutput;
use crate::grid::Grid;
use crate::levelset::{band_mask, LevelSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            beta1: 1.0,
            beta2: 1.0,
            beta3: 1e-3,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 >= 0.0 && self.beta2 >= 0.0) {
            return Err(Error::Domain("cost weights must be non-negative".into()));
        }
        if !(self.beta3 > 0.0) {
            return Err(Error::Domain(format!(
                "control weight beta3 = {} must be positive",
                self.beta3
            )));
        }
        Ok(())
    }
}

/// Which function the front-tracking term differentiates at the final time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalForm {
    /// `g = phi_d^2`: the tracking integrand restricted to the front, where
    /// `phi^f` vanishes. Consistent with the discrete cost.
    #[default]
    Desired,
    /// `g = (phi^f - phi_d)^2`.
    Difference,
    /// `g = (phi^f)^2`, the literal terminal formula.
    Displayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdjointSettings {
    pub terminal_form: TerminalForm,
    /// Rebuild `psi` from its front values every this many reverse steps.
    pub reextend_every: usize,
}

impl Default for AdjointSettings {
    fn default() -> Self {
        Self {
            terminal_form: TerminalForm::Desired,
            reextend_every: 5,
        }
    }
}

impl AdjointSettings {
    pub fn validate(&self) -> Result<()> {
        if self.reextend_every == 0 {
            return Err(Error::Domain("reextend_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Target final temperature and front.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredState {
    pub temperature: Vec<f64>,
    pub phi: Vec<f64>,
}

impl DesiredState {
    pub fn new(grid: &Grid, temperature: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        grid.check_len("desired temperature", temperature.len())?;
        grid.check_len("desired level set", phi.len())?;
        Ok(Self { temperature, phi })
    }

    pub fn from_output(out: &ForwardOutput) -> Self {
        Self {
            temperature: out.state.temperature.clone(),
            phi: out.phi.phi().to_vec(),
        }
    }

    /// Largest `| |grad phi_d| - 1 |` over the band of `nb` cells.
    pub fn eikonal_defect(&self, grid: &Grid, nb: usize) -> Result<f64> {
        let ls = LevelSet::new(*grid, self.phi.clone())?;
        let band = band_mask(&ls, nb);
        let mut worst: f64 = 0.0;
        for (k, inside) in band.iter().enumerate() {
            if *inside {
                let (i, j) = grid.coords(k);
                worst = worst.max((ls.grad_norm(i, j) - 1.0).abs());
            }
        }
        Ok(worst)
    }
}
