//! Signed-distance level set for the melting front and its kinematics.
//!
//! Convention: `phi > 0` in the liquid (lower layer), `phi < 0` in the solid,
//! so a flat front at height `h` is `phi = h - y`.

pub mod advection;
pub mod extension;
pub mod geometry;
pub mod reinit;

pub use advection::{advect_levelset, assemble_advection, AdvectionSystem};
pub use extension::{band_mask, extend_velocity, Extension, ExtensionSettings};
pub use geometry::{compute_curvature, compute_normals, CellKind, NormalField, PhaseGeometry, Segment};
pub use reinit::{reinitialize, ReinitReport, ReinitSettings};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Critical Rayleigh number of a layer between rigid plates.
pub const RA_CRITICAL: f64 = 1707.76;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    grid: Grid,
    phi: Vec<f64>,
}

impl LevelSet {
    pub fn new(grid: Grid, phi: Vec<f64>) -> Result<Self> {
        grid.check_len("level set", phi.len())?;
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("level set".into()));
        }
        Ok(Self { grid, phi })
    }

    /// Samples `f(x, y)` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut phi = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                phi.push(f(grid.xc(i), grid.yc(j)));
            }
        }
        Self { grid, phi }
    }

    /// Horizontal front at height `h0`, liquid below.
    pub fn flat(grid: Grid, h0: f64) -> Result<Self> {
        if !(h0 > 0.0 && h0 < grid.height()) {
            return Err(Error::Domain(format!(
                "initial front height {h0} must lie strictly inside (0, {})",
                grid.height()
            )));
        }
        Ok(Self::from_fn(grid, |_, y| h0 - y))
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    #[inline]
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
    #[inline]
    pub fn phi_mut(&mut self) -> &mut [f64] {
        &mut self.phi
    }
    pub fn into_inner(self) -> Vec<f64> {
        self.phi
    }
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.phi[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn is_liquid(&self, k: usize) -> bool {
        self.phi[k] > 0.0
    }

    /// Central-difference gradient, one-sided at the top and bottom walls.
    pub fn gradient(&self, i: usize, j: usize) -> (f64, f64) {
        gradient_of(&self.grid, &self.phi, i, j)
    }

    pub fn grad_norm(&self, i: usize, j: usize) -> f64 {
        let (gx, gy) = self.gradient(i, j);
        gx.hypot(gy)
    }

    /// Bilinear interpolation at an arbitrary point (periodic in `x`,
    /// clamped to the outermost cell centres in `y`).
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        sample_field(&self.grid, &self.phi, x, y)
    }
}

pub(crate) fn gradient_of(grid: &Grid, f: &[f64], i: usize, j: usize) -> (f64, f64) {
    let d = grid.delta();
    let ny = grid.ny();
    let gx = (f[grid.idx(grid.east(i), j)] - f[grid.idx(grid.west(i), j)]) / (2.0 * d);
    let gy = if j == 0 {
        (f[grid.idx(i, 1)] - f[grid.idx(i, 0)]) / d
    } else if j == ny - 1 {
        (f[grid.idx(i, j)] - f[grid.idx(i, j - 1)]) / d
    } else {
        (f[grid.idx(i, j + 1)] - f[grid.idx(i, j - 1)]) / (2.0 * d)
    };
    (gx, gy)
}

/// Bilinear interpolation of a cell-centred field.
pub fn sample_field(grid: &Grid, f: &[f64], x: f64, y: f64) -> f64 {
    let d = grid.delta();
    let nx = grid.nx();
    let ny = grid.ny();
    let fx = (x / d - 0.5).rem_euclid(nx as f64);
    let i0 = (fx.floor() as usize).min(nx - 1);
    let tx = fx - i0 as f64;
    let i1 = grid.east(i0);
    let fy = (y / d - 0.5).clamp(0.0, (ny - 1) as f64);
    let j0 = (fy.floor() as usize).min(ny - 2);
    let ty = fy - j0 as f64;
    let j1 = j0 + 1;
    let v00 = f[grid.idx(i0, j0)];
    let v10 = f[grid.idx(i1, j0)];
    let v01 = f[grid.idx(i0, j1)];
    let v11 = f[grid.idx(i1, j1)];
    (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
}

/// Front height `h(x_i)` in every column from linear interpolation of the
/// zero crossing between cell centres.
pub fn column_heights(ls: &LevelSet) -> Result<Vec<f64>> {
    let g = ls.grid();
    let mut h = Vec::with_capacity(g.nx());
    for i in 0..g.nx() {
        let mut found = None;
        let mut count = 0;
        for j in 0..g.ny() - 1 {
            let a = ls.at(i, j);
            let b = ls.at(i, j + 1);
            if (a > 0.0) != (b > 0.0) {
                count += 1;
                if count > 1 {
                    return Err(Error::MultivaluedFront(i));
                }
                found = Some(g.yc(j) + g.delta() * a / (a - b));
            }
        }
        let hi = match found {
            Some(y) => y,
            None if ls.at(i, 0) <= 0.0 => (g.yc(0) + ls.at(i, 0)).max(0.0),
            None => (g.yc(g.ny() - 1) + ls.at(i, g.ny() - 1)).min(g.height()),
        };
        h.push(hi);
    }
    Ok(h)
}

/// Mean fluid depth over the periodic width.
pub fn average_height(ls: &LevelSet) -> Result<f64> {
    let h = column_heights(ls)?;
    Ok(h.iter().sum::<f64>() / h.len() as f64)
}

/// Largest deviation of the front from its mean height.
pub fn front_roughness(ls: &LevelSet) -> Result<f64> {
    let h = column_heights(ls)?;
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    Ok(h.iter().fold(0.0, |m, v| f64::max(m, (v - mean).abs())))
}

/// Rayleigh number based on the instantaneous liquid depth.
pub fn effective_rayleigh(ra: f64, t_melt: f64, h_bar: f64) -> f64 {
    ra * (1.0 - t_melt) * h_bar.powi(3)
}
