//! One-sided normal derivatives at the front and the Stefan front speed.
//!
//! Every interface segment gets a probe along the grid axis closest to its
//! normal. The probe starts at the zero crossing of `phi` between two cell
//! centres on that axis and collects up to three same-phase samples on each
//! side (cells, or the wall when the layer is thin). A quadratic through the
//! front value and the first two samples gives the derivative moving away
//! from the front into each phase, blended towards the quadratic through the
//! next two when the first sample nearly coincides with the front; dividing
//! by `|n_axis|` converts it to a normal derivative. The speed is
//!
//! `v = St (dT/ds_solid + dT/ds_liquid) / |n_axis|`,
//!
//! positive when the front moves into the solid (melting).

use crate::grid::Grid;
use crate::levelset::PhaseGeometry;

/// Samples nearer to the front than `NEAR_LO` cells carry no gradient
/// information; between `NEAR_LO` and `NEAR_HI` the stencil blends smoothly
/// into one that starts at the next sample, so the derivative stays a
/// continuous function of the front position.
const NEAR_LO: f64 = 0.1;
const NEAR_HI: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Cell(usize),
    BottomWall(usize),
    TopWall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSide {
    pub dist: [f64; 3],
    pub sample: [Sample; 3],
    /// Number of usable samples (1 means first-order fallback).
    pub len: usize,
    pub spacing: f64,
}

/// Derivative weights at 0 of the quadratic through `(0, d1, d2)`.
fn quad_weights(d1: f64, d2: f64) -> [f64; 3] {
    [
        -(1.0 / d1 + 1.0 / d2),
        d2 / (d1 * (d2 - d1)),
        -d1 / (d2 * (d2 - d1)),
    ]
}

fn blend_weight(d0: f64, spacing: f64) -> f64 {
    let s = ((d0 / spacing - NEAR_LO) / (NEAR_HI - NEAR_LO)).clamp(0.0, 1.0);
    1.0 - s * s * (3.0 - 2.0 * s)
}

impl ProbeSide {
    /// Coefficients `(c_front, [c_1, c_2, c_3])` of the derivative at the
    /// front, moving into the phase, as a linear form of the samples.
    pub fn weights(&self) -> (f64, [f64; 3]) {
        let d = self.dist;
        match self.len {
            0 => (0.0, [0.0; 3]),
            1 => (-1.0 / d[0], [1.0 / d[0], 0.0, 0.0]),
            n => {
                let beta = blend_weight(d[0], self.spacing);
                let far = if n == 2 {
                    [-1.0 / d[1], 0.0, 1.0 / d[1], 0.0]
                } else {
                    let q = quad_weights(d[1], d[2]);
                    [q[0], 0.0, q[1], q[2]]
                };
                let near = if beta < 1.0 {
                    let q = quad_weights(d[0], d[1]);
                    [q[0], q[1], q[2], 0.0]
                } else {
                    [0.0; 4]
                };
                let c: Vec<f64> = (0..4).map(|m| (1.0 - beta) * near[m] + beta * far[m]).collect();
                (c[0], [c[1], c[2], c[3]])
            }
        }
    }

    /// Derivative at the front moving into the phase.
    pub fn derivative(&self, front: f64, value: impl Fn(Sample) -> f64) -> f64 {
        let (c0, c) = self.weights();
        let mut acc = c0 * front;
        for m in 0..self.len.min(3) {
            if c[m] != 0.0 {
                acc += c[m] * value(self.sample[m]);
            }
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub segment: usize,
    pub vertical: bool,
    /// `|n . e_axis|` of the segment normal.
    pub n_axis: f64,
    /// Crossing point on the probe line.
    pub point: [f64; 2],
    pub liquid: ProbeSide,
    pub solid: ProbeSide,
    /// Set when a side fell back to first order or the probe had to switch axis.
    pub flagged: bool,
}

/// Builds one probe per interface segment.
pub fn build_probes(grid: &Grid, phi: &[f64], geom: &PhaseGeometry) -> Vec<Probe> {
    geom.segments
        .iter()
        .enumerate()
        .map(|(s_idx, s)| {
            let prefer_vertical = s.normal[1].abs() >= s.normal[0].abs();
            let mid = s.midpoint();
            let first = probe_axis(grid, phi, s.cell, mid, prefer_vertical);
            let (mut probe, switched) = match first {
                Some(p) => (p, false),
                None => match probe_axis(grid, phi, s.cell, mid, !prefer_vertical) {
                    Some(p) => (p, true),
                    None => {
                        // No crossing on either axis through this cell: degenerate
                        // sliver. Fall back to a zero-width probe on the cell itself.
                        let side = ProbeSide {
                            dist: [grid.delta(), 2.0 * grid.delta(), 3.0 * grid.delta()],
                            sample: [Sample::Cell(s.cell); 3],
                            len: 1,
                            spacing: grid.delta(),
                        };
                        (
                            Probe {
                                segment: s_idx,
                                vertical: true,
                                n_axis: 1.0,
                                point: mid,
                                liquid: side,
                                solid: side,
                                flagged: true,
                            },
                            true,
                        )
                    }
                },
            };
            probe.segment = s_idx;
            let n = if probe.vertical { s.normal[1] } else { s.normal[0] };
            probe.n_axis = n.abs().max(std::f64::consts::FRAC_1_SQRT_2 * 0.5);
            probe.flagged |= switched || probe.liquid.len < 2 || probe.solid.len < 2;
            probe
        })
        .collect()
}

fn probe_axis(grid: &Grid, phi: &[f64], cell: usize, mid: [f64; 2], vertical: bool) -> Option<Probe> {
    let (ci, cj) = grid.coords(cell);
    let d = grid.delta();
    if vertical {
        let ny = grid.ny();
        let mut best: Option<(f64, usize)> = None;
        for j in 0..ny - 1 {
            let a = phi[grid.idx(ci, j)];
            let b = phi[grid.idx(ci, j + 1)];
            if (a > 0.0) != (b > 0.0) {
                let y = grid.yc(j) + d * a / (a - b);
                let dist = (y - mid[1]).abs();
                if best.is_none_or(|(bd, _)| dist < bd) {
                    best = Some((dist, j));
                }
            }
        }
        let (_, j) = best?;
        let a = phi[grid.idx(ci, j)];
        let b = phi[grid.idx(ci, j + 1)];
        let y = grid.yc(j) + d * a / (a - b);
        let lower_liquid = a > 0.0;
        let walk = |start: usize, up: bool, liquid: bool| -> ProbeSide {
            let mut dist = [0.0; 3];
            let mut sample = [Sample::Cell(0); 3];
            let mut len = 0;
            let mut jj = start as isize;
            while len < 3 {
                if jj < 0 || jj >= ny as isize {
                    let (wall_y, s) = if jj < 0 {
                        (0.0, Sample::BottomWall(ci))
                    } else {
                        (grid.height(), Sample::TopWall(ci))
                    };
                    let dd = (wall_y - y).abs();
                    if dd > 0.0 && (len == 0 || dd > dist[0]) {
                        dist[len] = dd;
                        sample[len] = s;
                        len += 1;
                    }
                    break;
                }
                let k = grid.idx(ci, jj as usize);
                if (phi[k] > 0.0) != liquid {
                    break;
                }
                let dd = (grid.yc(jj as usize) - y).abs();
                if dd > 1e-12 * d {
                    dist[len] = dd;
                    sample[len] = Sample::Cell(k);
                    len += 1;
                }
                jj += if up { 1 } else { -1 };
            }
            fix_side(dist, sample, len, d)
        };
        let (liquid, solid) = if lower_liquid {
            (walk(j, false, true), walk(j + 1, true, false))
        } else {
            (walk(j + 1, true, true), walk(j, false, false))
        };
        Some(Probe {
            segment: 0,
            vertical: true,
            n_axis: 1.0,
            point: [grid.xc(ci), y],
            liquid,
            solid,
            flagged: false,
        })
    } else {
        let nx = grid.nx();
        let mut best: Option<(f64, usize)> = None;
        for i in 0..nx {
            let e = grid.east(i);
            if e == i {
                break;
            }
            let a = phi[grid.idx(i, cj)];
            let b = phi[grid.idx(e, cj)];
            if (a > 0.0) != (b > 0.0) {
                let x = grid.xc(i) + d * a / (a - b);
                let dist = grid.periodic_dx(mid[0], x).abs();
                if best.is_none_or(|(bd, _)| dist < bd) {
                    best = Some((dist, i));
                }
            }
        }
        let (_, i) = best?;
        let e = grid.east(i);
        let a = phi[grid.idx(i, cj)];
        let b = phi[grid.idx(e, cj)];
        let t = a / (a - b);
        let west_liquid = a > 0.0;
        let walk = |start: usize, east: bool, liquid: bool, first_dist: f64| -> ProbeSide {
            let mut dist = [0.0; 3];
            let mut sample = [Sample::Cell(0); 3];
            let mut len = 0;
            let mut ii = start;
            let mut dd = first_dist;
            for _ in 0..nx {
                if len == 3 {
                    break;
                }
                let k = grid.idx(ii, cj);
                if (phi[k] > 0.0) != liquid {
                    break;
                }
                if dd > 1e-12 * d {
                    dist[len] = dd;
                    sample[len] = Sample::Cell(k);
                    len += 1;
                }
                ii = if east { grid.east(ii) } else { grid.west(ii) };
                dd += d;
            }
            fix_side(dist, sample, len, d)
        };
        let dw = t * d;
        let de = (1.0 - t) * d;
        let (liquid, solid) = if west_liquid {
            (walk(i, false, true, dw), walk(e, true, false, de))
        } else {
            (walk(e, true, true, de), walk(i, false, false, dw))
        };
        Some(Probe {
            segment: 0,
            vertical: false,
            n_axis: 1.0,
            point: [grid.xc(i) + t * d, grid.yc(cj)],
            liquid,
            solid,
            flagged: false,
        })
    }
}

fn fix_side(dist: [f64; 3], sample: [Sample; 3], len: usize, d: f64) -> ProbeSide {
    if len == 0 {
        // Isolated sliver: no sample on this side; use a flat profile.
        return ProbeSide {
            dist: [d, 2.0 * d, 3.0 * d],
            sample,
            len: 0,
            spacing: d,
        };
    }
    ProbeSide {
        dist,
        sample,
        len,
        spacing: d,
    }
}

/// Field lookup used by the probes: cell values plus wall Dirichlet data.
#[derive(Debug, Clone, Copy)]
pub struct ProbeData<'a> {
    pub field: &'a [f64],
    pub bottom: f64,
    pub top: &'a [f64],
}

impl ProbeData<'_> {
    #[inline]
    pub fn value(&self, s: Sample) -> f64 {
        match s {
            Sample::Cell(k) => self.field[k],
            Sample::BottomWall(_) => self.bottom,
            Sample::TopWall(c) => self.top[c],
        }
    }
}

/// Derivatives `(dT/ds into liquid, dT/ds into solid)` with `front` imposed.
pub fn side_derivatives(probe: &Probe, data: &ProbeData<'_>, front: f64) -> (f64, f64) {
    let eval = |side: &ProbeSide| {
        if side.len == 0 {
            0.0
        } else {
            side.derivative(front, |s| data.value(s))
        }
    };
    (eval(&probe.liquid), eval(&probe.solid))
}

/// Front speed per segment.
pub fn stefan_speeds(probes: &[Probe], data: &ProbeData<'_>, t_melt: f64, st: f64) -> Vec<f64> {
    probes
        .iter()
        .map(|p| {
            let (dl, ds) = side_derivatives(p, data, t_melt);
            st * (dl + ds) / p.n_axis
        })
        .collect()
}
