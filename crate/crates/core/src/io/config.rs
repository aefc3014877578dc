//! Campaign configuration.
//!
//! A run starts from a built-in profile (`desk` or `paper`); a TOML file
//! overrides any subset of it, section by section. Unknown keys anywhere are
//! rejected so that typos fail loudly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adjoint::{AdjointSettings, CostWeights};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forward::{ForwardProblem, NumericalSettings, PhysicalParams};
use crate::grid::Grid;
use crate::optimize::{Basis, LbfgsSettings, PsoSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 128 x 32 cells to `t = 0.2`; minutes per optimization on a laptop.
    Desk,
    /// 256 x 64 cells to `t = 0.4`.
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Parse(format!("unknown profile {other:?} (expected desk or paper)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    /// Domain width over height.
    pub aspect: f64,
}

/// Top-wall temperature: a constant, or basis coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub basis: Basis,
    pub coefficients: Vec<f64>,
    /// Constant wall temperature; overrides the basis for forward runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<f64>,
}

/// How the desired final state is obtained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// Generate the target with these coefficients of the control basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    /// Generate the target with a constant wall temperature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<f64>,
    /// Read `temperature` and `phi` snapshots from this directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl TargetConfig {
    pub fn is_empty(&self) -> bool {
        self.coefficients.is_none() && self.wall.is_none() && self.dir.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_evals: usize,
    pub seed: u64,
    pub max_velocity: f64,
    /// `[lower, upper]` per coefficient.
    pub bounds: Vec<[f64; 2]>,
}

impl PsoConfig {
    pub fn settings(&self) -> PsoSettings {
        PsoSettings {
            swarm_size: self.swarm_size,
            max_evals: self.max_evals,
            seed: self.seed,
            target: None,
            max_velocity: self.max_velocity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckConfig {
    pub fd_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write field snapshots every this many steps; 0 writes only the final fields.
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicalParams,
    pub numerics: NumericalSettings,
    pub control: ControlConfig,
    #[serde(default)]
    pub target: TargetConfig,
    pub cost: CostWeights,
    pub adjoint: AdjointSettings,
    pub lbfgs: LbfgsSettings,
    pub pso: PsoConfig,
    pub gradcheck: GradcheckConfig,
    pub output: OutputConfig,
    pub execution: Execution,
}

impl RunConfig {
    pub fn profile(profile: Profile) -> Self {
        let (ny, t_final, dt) = match profile {
            Profile::Desk => (32, 0.2, 2e-4),
            Profile::Paper => (64, 0.4, 1e-4),
        };
        RunConfig {
            grid: GridConfig { nx: 4 * ny, ny, aspect: 4.0 },
            physics: PhysicalParams::default(),
            numerics: NumericalSettings {
                dt,
                t_final,
                ..Default::default()
            },
            control: ControlConfig {
                basis: Basis::TanhBasis,
                coefficients: vec![0.0, 0.0],
                wall: None,
            },
            target: TargetConfig::default(),
            cost: CostWeights::default(),
            adjoint: AdjointSettings::default(),
            lbfgs: LbfgsSettings {
                max_iter: 25,
                ..Default::default()
            },
            pso: {
                let d = PsoSettings::default();
                PsoConfig {
                    swarm_size: d.swarm_size,
                    max_evals: d.max_evals,
                    seed: d.seed,
                    max_velocity: d.max_velocity,
                    bounds: vec![[0.0, 1.0], [0.0, 4.0]],
                }
            },
            gradcheck: GradcheckConfig { fd_step: 1e-3 },
            output: OutputConfig { snapshot_every: 0 },
            execution: Execution::Parallel,
        }
    }

    /// Profile defaults overridden by the TOML text.
    pub fn from_toml(profile: Profile, text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut base = toml::Table::try_from(Self::profile(profile)).map_err(|e| Error::Parse(e.to_string()))?;
        merge(&mut base, user);
        let cfg: RunConfig = base.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(profile: Profile, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(profile, &text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.numerics.validate()?;
        self.cost.validate()?;
        self.adjoint.validate()?;
        self.lbfgs.validate()?;
        let g = self.grid;
        if (g.nx as f64 - g.aspect * g.ny as f64).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "nx = {} must equal aspect * ny = {} * {}",
                g.nx, g.aspect, g.ny
            )));
        }
        let grid = self.build_grid()?;
        if !(self.numerics.h0 > 0.0 && self.numerics.h0 < grid.height()) {
            return Err(Error::Domain(format!("h0 = {} must lie inside the cavity", self.numerics.h0)));
        }
        let dim = self.control.basis.dim();
        if self.control.coefficients.len() != dim {
            return Err(Error::Domain(format!(
                "control has {} coefficients, {:?} takes {dim}",
                self.control.coefficients.len(),
                self.control.basis
            )));
        }
        if let Some(c) = &self.target.coefficients {
            if c.len() != dim {
                return Err(Error::Domain("target coefficients do not match the basis".into()));
            }
        }
        if self.pso.bounds.len() != dim || self.pso.bounds.iter().any(|[lo, hi]| !(hi > lo)) {
            return Err(Error::Domain(format!("pso.bounds needs {dim} pairs with lower < upper")));
        }
        if !(self.gradcheck.fd_step > 0.0) {
            return Err(Error::Domain("gradcheck.fd_step must be positive".into()));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::new(self.grid.nx, self.grid.ny, self.grid.aspect)
    }

    pub fn forward_problem(&self) -> Result<ForwardProblem> {
        ForwardProblem::new(self.build_grid()?, self.physics, self.numerics)
    }

    pub fn pso_bounds(&self) -> Vec<(f64, f64)> {
        self.pso.bounds.iter().map(|[lo, hi]| (*lo, *hi)).collect()
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate_and_round_trip() {
        for p in [Profile::Desk, Profile::Paper] {
            let c = RunConfig::profile(p);
            c.validate().unwrap();
            let back = RunConfig::from_toml(p, &c.to_toml()).unwrap();
            assert_eq!(back, c);
        }
        assert_eq!(RunConfig::profile(Profile::Desk).grid.nx, 128);
        assert_eq!(RunConfig::profile(Profile::Paper).grid.ny, 64);
    }

    #[test]
    fn file_overrides_single_keys() {
        let c = RunConfig::from_toml(Profile::Desk, "[physics]\nra = 1e4\n[numerics]\nh0 = 0.1\n").unwrap();
        assert_eq!(c.physics.ra, 1e4);
        assert_eq!(c.physics.st, 1.0);
        assert_eq!(c.numerics.h0, 0.1);
        assert_eq!(c.numerics.dt, 2e-4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml(Profile::Desk, "[physics]\nrayleigh = 1e4\n").is_err());
        assert!(RunConfig::from_toml(Profile::Desk, "colour = 1\n").is_err());
        assert!(RunConfig::from_toml(Profile::Desk, "[numerics.extension]\nwidth = 3\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[numerics]\ndt = 0.0\n",
            "[numerics]\nh0 = 1.5\n",
            "[grid]\nnx = 100\n",
            "[physics]\nst = -1.0\n",
            "[control]\ncoefficients = [1.0]\n",
            "[cost]\nbeta3 = 0.0\n",
        ] {
            let e = RunConfig::from_toml(Profile::Desk, text).unwrap_err();
            assert!(e.is_input_error(), "{text}: {e}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::profile(Profile::Desk);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.physics.ra = 1e4;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
