use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levelset::{ExtensionSettings, ReinitSettings};

/// Dimensionless groups and boundary temperatures of the melting problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub ra: f64,
    pub pr: f64,
    pub st: f64,
    pub t_bottom: f64,
    pub t_melt: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            ra: 1e5,
            pr: 1.0,
            st: 1.0,
            t_bottom: 0.7,
            t_melt: 0.0,
        }
    }
}

impl PhysicalParams {
    /// `Ra = 0` is accepted: it switches buoyancy off for pure conduction runs.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if !(self.ra >= 0.0 && self.ra.is_finite()) {
            return bad(format!("Ra = {} must be non-negative", self.ra));
        }
        if !(self.pr > 0.0) {
            return bad(format!("Pr = {} must be positive", self.pr));
        }
        if !(self.st > 0.0) {
            return bad(format!("St = {} must be positive", self.st));
        }
        if !(self.t_melt < self.t_bottom) {
            return bad(format!(
                "melting temperature {} must be below the bottom temperature {}",
                self.t_melt, self.t_bottom
            ));
        }
        Ok(())
    }

    /// Checks `w(x) < T_M` on the top wall.
    pub fn check_control(&self, w: &[f64]) -> Result<()> {
        if let Some((i, v)) = w
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v < self.t_melt) || !v.is_finite())
        {
            return Err(Error::Domain(format!(
                "top-wall temperature {v} in column {i} is not below the melting temperature {}",
                self.t_melt
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericalSettings {
    pub dt: f64,
    pub t_final: f64,
    /// Initial front height.
    pub h0: f64,
    /// Reinitialise the level set every this many steps.
    pub reinit_every: usize,
    pub extension: ExtensionSettings,
    pub reinit: ReinitSettings,
    /// Amplitude of the seeded perturbation added to the initial temperature.
    pub noise_amplitude: f64,
    pub seed: u64,
    /// Trajectories larger than this are spilled to a temporary file.
    pub memory_budget_mb: usize,
}

impl Default for NumericalSettings {
    fn default() -> Self {
        Self {
            dt: 2e-4,
            t_final: 0.2,
            h0: 0.05,
            reinit_every: 5,
            extension: ExtensionSettings::default(),
            reinit: ReinitSettings::default(),
            noise_amplitude: 1e-3,
            seed: 7,
            memory_budget_mb: 2048,
        }
    }
}

impl NumericalSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Domain(format!(
                "t_final = {} must be positive",
                self.t_final
            )));
        }
        if self.reinit_every == 0 {
            return Err(Error::Domain("reinit_every must be at least 1".into()));
        }
        if !(self.noise_amplitude >= 0.0) {
            return Err(Error::Domain("noise amplitude must be non-negative".into()));
        }
        self.extension.validate()
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }
}
