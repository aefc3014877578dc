//! Extension of interface speeds off the front, constant along normals.
//!
//! Cut cells are frozen at their segment value. Band cells start from a
//! closest-point projection onto the front and are then relaxed with a
//! first-order upwind discretisation of `F_tau + S(phi) n . grad F = 0` for
//! as many pseudo-time iterations as the band is wide.

use serde::{Deserialize, Serialize};

use super::geometry::{NormalField, PhaseGeometry};
use super::LevelSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSettings {
    /// Pseudo time step as a fraction of the grid spacing (upwind CFL number).
    pub pseudo_time_ratio: f64,
    /// Narrow-band half width in cells; also the iteration count.
    pub nb_width: usize,
}

impl Default for ExtensionSettings {
    fn default() -> Self {
        Self {
            pseudo_time_ratio: 0.45,
            nb_width: 8,
        }
    }
}

impl ExtensionSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.pseudo_time_ratio > 0.0 && self.pseudo_time_ratio <= 0.5) {
            return Err(Error::Domain(format!(
                "pseudo_time_ratio {} must lie in (0, 0.5]",
                self.pseudo_time_ratio
            )));
        }
        if self.nb_width < 4 {
            return Err(Error::Domain(format!(
                "nb_width {} must be at least 4",
                self.nb_width
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Extension {
    pub field: Vec<f64>,
    pub band: Vec<bool>,
    pub iterations: usize,
    /// Max `|S(phi) n . grad F|` over the band before each iteration and after the last.
    pub residual_history: Vec<f64>,
    /// The same measure for a band initialised to zero (only cut cells set).
    pub zero_start_residual: f64,
}

impl Extension {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }
}

/// Cells with `|phi| <= nb * delta`.
pub fn band_mask(ls: &LevelSet, nb_width: usize) -> Vec<bool> {
    let lim = nb_width as f64 * ls.grid().delta();
    ls.phi().iter().map(|p| p.abs() <= lim).collect()
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2], dx: impl Fn(f64, f64) -> f64) -> f64 {
    let ax = dx(p[0], a[0]);
    let ay = a[1] - p[1];
    let bx = ax + (b[0] - a[0]);
    let by = b[1] - p[1];
    // foot on segment from p's frame: a' = (ax, ay), b' = (bx, by)
    let (tx, ty) = (bx - ax, by - ay);
    let l2 = tx * tx + ty * ty;
    let t = if l2 > 0.0 {
        (-(ax * tx + ay * ty) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (ax + t * tx).hypot(ay + t * ty)
}

pub fn extend_velocity(
    ls: &LevelSet,
    geom: &PhaseGeometry,
    normals: &NormalField,
    segment_values: &[f64],
    settings: &ExtensionSettings,
) -> Result<Extension> {
    settings.validate()?;
    if segment_values.len() != geom.segments.len() {
        return Err(Error::Dimension(format!(
            "{} interface values for {} segments",
            segment_values.len(),
            geom.segments.len()
        )));
    }
    let g = *ls.grid();
    let d = g.delta();
    let phi = ls.phi();
    let n = g.len();

    let mut frozen = vec![false; n];
    let mut f = vec![0.0; n];
    for (s, v) in geom.segments.iter().zip(segment_values) {
        frozen[s.cell] = true;
        f[s.cell] = *v;
    }
    let mut band = band_mask(ls, settings.nb_width);
    for k in 0..n {
        band[k] |= frozen[k];
    }
    let active: Vec<usize> = (0..n).filter(|&k| band[k] && !frozen[k]).collect();

    let sign: Vec<f64> = phi.iter().map(|p| p / (p * p + d * d).sqrt()).collect();

    let residual = |f: &[f64], out: Option<&mut Vec<f64>>| -> f64 {
        let mut worst: f64 = 0.0;
        let mut rates = out;
        for (slot, &k) in active.iter().enumerate() {
            let (i, j) = g.coords(k);
            let a = sign[k] * normals.nx[k];
            let b = sign[k] * normals.ny[k];
            let nb = |q: usize| band[q];
            let dx = if a > 0.0 {
                let q = g.idx(g.west(i), j);
                if nb(q) { (f[k] - f[q]) / d } else { 0.0 }
            } else {
                let q = g.idx(g.east(i), j);
                if nb(q) { (f[q] - f[k]) / d } else { 0.0 }
            };
            let dy = if b > 0.0 {
                if j > 0 && nb(g.idx(i, j - 1)) {
                    (f[k] - f[g.idx(i, j - 1)]) / d
                } else {
                    0.0
                }
            } else if j + 1 < g.ny() && nb(g.idx(i, j + 1)) {
                (f[g.idx(i, j + 1)] - f[k]) / d
            } else {
                0.0
            };
            let r = a * dx + b * dy;
            worst = worst.max(r.abs());
            if let Some(out) = rates.as_deref_mut() {
                out[slot] = r;
            }
        }
        worst
    };

    let zero_start_residual = residual(&f, None);

    // Closest-point initialisation from the foot point x - phi n: segments
    // near the foot are averaged with weights `length * (1 - r/R)^2`, which
    // keeps the result continuous when segments appear, vanish or trade
    // places as the nearest one.
    if !geom.segments.is_empty() {
        let radius = 1.5 * d;
        for &k in &active {
            let (i, j) = g.coords(k);
            let foot = [g.xc(i) - phi[k] * normals.nx[k], g.yc(j) - phi[k] * normals.ny[k]];
            let fi = ((foot[0] / d).floor() as isize).rem_euclid(g.nx() as isize);
            let fj = ((foot[1] / d).floor() as isize).clamp(0, g.ny() as isize - 1);
            let mut nearest: Option<(f64, usize)> = None;
            let (mut acc, mut wsum) = (0.0, 0.0);
            for dj in -3..=3isize {
                let jj = fj + dj;
                if jj < 0 || jj >= g.ny() as isize {
                    continue;
                }
                for di in -3..=3isize {
                    let ii = (fi + di).rem_euclid(g.nx() as isize) as usize;
                    if let Some(sidx) = geom.segment_of[g.idx(ii, jj as usize)] {
                        let s = &geom.segments[sidx];
                        let dist = point_segment_distance(foot, s.a, s.b, |from, to| g.periodic_dx(from, to));
                        if nearest.is_none_or(|(bd, _)| dist < bd) {
                            nearest = Some((dist, sidx));
                        }
                        let r = (1.0 - dist / radius).max(0.0);
                        let wgt = s.length * r * r;
                        acc += wgt * segment_values[sidx];
                        wsum += wgt;
                    }
                }
            }
            if wsum > 0.0 {
                f[k] = acc / wsum;
            } else if let Some((_, sidx)) = nearest {
                f[k] = segment_values[sidx];
            }
        }
    }

    let dtau = settings.pseudo_time_ratio * d;
    let mut history = Vec::with_capacity(settings.nb_width + 1);
    let mut rates = vec![0.0; active.len()];
    for _ in 0..settings.nb_width {
        history.push(residual(&f, Some(&mut rates)));
        for (slot, &k) in active.iter().enumerate() {
            f[k] -= dtau * rates[slot];
        }
    }
    history.push(residual(&f, None));

    let first = history[0];
    let last = *history.last().unwrap();
    if !last.is_finite() || last > 1.5 * first + 1e-12 {
        return Err(Error::ExtensionStalled(history));
    }
    Ok(Extension {
        field: f,
        band,
        iterations: settings.nb_width,
        residual_history: history,
        zero_start_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::levelset::compute_normals;

    fn setup(h0: f64) -> (LevelSet, PhaseGeometry, NormalField) {
        let g = Grid::new(128, 32, 4.0).unwrap();
        let ls = LevelSet::flat(g, h0).unwrap();
        let geom = PhaseGeometry::build(&ls);
        let n = compute_normals(&ls);
        (ls, geom, n)
    }

    #[test]
    fn constant_speed_is_fixed_point() {
        let (ls, geom, n) = setup(0.3);
        let v = vec![1.0; geom.segments.len()];
        let ext = extend_velocity(&ls, &geom, &n, &v, &ExtensionSettings::default()).unwrap();
        for k in 0..ls.grid().len() {
            if ext.band[k] {
                assert!((ext.field[k] - 1.0).abs() < 1e-14);
            }
        }
        assert_eq!(ext.iterations, 8);
    }

    #[test]
    fn sine_speed_is_constant_in_y() {
        let (ls, geom, n) = setup(0.3);
        let g = *ls.grid();
        let b = g.width();
        let v: Vec<f64> = geom
            .segments
            .iter()
            .map(|s| (2.0 * std::f64::consts::PI * s.midpoint()[0] / b).sin())
            .collect();
        let ext = extend_velocity(&ls, &geom, &n, &v, &ExtensionSettings::default()).unwrap();
        for k in 0..g.len() {
            if ext.band[k] {
                let (i, _) = g.coords(k);
                let exact = (2.0 * std::f64::consts::PI * g.xc(i) / b).sin();
                assert!((ext.field[k] - exact).abs() < 0.05);
            }
        }
        assert!(ext.final_residual() * 10.0 <= ext.zero_start_residual);
    }

    #[test]
    fn cut_cells_keep_their_values() {
        let (ls, geom, n) = setup(0.4);
        let v: Vec<f64> = (0..geom.segments.len()).map(|i| i as f64 * 0.01).collect();
        let ext = extend_velocity(&ls, &geom, &n, &v, &ExtensionSettings::default()).unwrap();
        for (s, val) in geom.segments.iter().zip(&v) {
            assert_eq!(ext.field[s.cell], *val);
        }
    }

    #[test]
    fn settings_are_validated() {
        let bad = ExtensionSettings {
            pseudo_time_ratio: 0.6,
            nb_width: 8,
        };
        assert!(bad.validate().is_err());
        let thin = ExtensionSettings {
            pseudo_time_ratio: 0.45,
            nb_width: 2,
        };
        assert!(thin.validate().is_err());
    }
}
