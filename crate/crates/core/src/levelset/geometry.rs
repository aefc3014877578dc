//! Phase geometry extracted from the level set: cell classification, liquid
//! volume fractions, face apertures and one interface segment per cut cell.
//!
//! Corner (node) values are averages of the four surrounding cell centres;
//! at the top and bottom walls the field is linearly extrapolated.

use super::{gradient_of, LevelSet};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Solid,
    Liquid,
    Cut,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub cell: usize,
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// Unit normal pointing towards increasing `phi` (into the liquid).
    pub normal: [f64; 2],
    pub length: f64,
}

impl Segment {
    pub fn midpoint(&self) -> [f64; 2] {
        [0.5 * (self.a[0] + self.b[0]), 0.5 * (self.a[1] + self.b[1])]
    }
}

#[derive(Debug, Clone)]
pub struct PhaseGeometry {
    grid: Grid,
    pub kind: Vec<CellKind>,
    /// `phi > 0` at the cell centre; this is the mask every solver uses.
    pub liquid: Vec<bool>,
    pub fraction: Vec<f64>,
    /// Liquid aperture of the west face of each cell (`nx * ny`).
    pub aperture_x: Vec<f64>,
    /// Liquid aperture of the south face of each cell row `j = 0..=ny`.
    pub aperture_y: Vec<f64>,
    pub segments: Vec<Segment>,
    pub segment_of: Vec<Option<usize>>,
}

/// Node value at corner `(i, j)`, `i` in `0..nx` (periodic), `j` in `0..=ny`.
pub(crate) fn node_value(grid: &Grid, phi: &[f64], i: usize, j: usize) -> f64 {
    let iw = grid.west(i);
    let ny = grid.ny();
    let col = |ii: usize, jj: isize| -> f64 {
        if jj < 0 {
            2.0 * phi[grid.idx(ii, 0)] - phi[grid.idx(ii, 1)]
        } else if jj as usize >= ny {
            2.0 * phi[grid.idx(ii, ny - 1)] - phi[grid.idx(ii, ny - 2)]
        } else {
            phi[grid.idx(ii, jj as usize)]
        }
    };
    let j = j as isize;
    0.25 * (col(iw, j - 1) + col(i, j - 1) + col(iw, j) + col(i, j))
}

fn zero_point(pa: [f64; 2], pb: [f64; 2], fa: f64, fb: f64) -> [f64; 2] {
    let t = fa / (fa - fb);
    [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
}

fn polygon_area(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..n {
        let p = pts[k];
        let q = pts[(k + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s.abs()
}

fn liquid_fraction_1d(fa: f64, fb: f64) -> f64 {
    match (fa > 0.0, fb > 0.0) {
        (true, true) => 1.0,
        (false, false) => 0.0,
        (true, false) => fa / (fa - fb),
        (false, true) => fb / (fb - fa),
    }
}

impl PhaseGeometry {
    pub fn build(ls: &LevelSet) -> Self {
        let grid = *ls.grid();
        let phi = ls.phi();
        let (nx, ny, d) = (grid.nx(), grid.ny(), grid.delta());

        let mut nodes = vec![0.0; nx * (ny + 1)];
        for j in 0..=ny {
            for i in 0..nx {
                nodes[j * nx + i] = node_value(&grid, phi, i, j);
            }
        }
        let node = |i: usize, j: usize| nodes[j * nx + (i % nx)];

        let mut kind = Vec::with_capacity(grid.len());
        let mut fraction = Vec::with_capacity(grid.len());
        let mut segments = Vec::new();
        let mut segment_of = vec![None; grid.len()];

        for j in 0..ny {
            for i in 0..nx {
                let k = grid.idx(i, j);
                let x0 = i as f64 * d;
                let y0 = j as f64 * d;
                let pts = [[x0, y0], [x0 + d, y0], [x0 + d, y0 + d], [x0, y0 + d]];
                let vals = [node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)];
                let pos = vals.iter().filter(|v| **v > 0.0).count();
                if pos == 4 {
                    kind.push(CellKind::Liquid);
                    fraction.push(1.0);
                    continue;
                }
                if pos == 0 {
                    kind.push(CellKind::Solid);
                    fraction.push(0.0);
                    continue;
                }
                kind.push(CellKind::Cut);

                let mut poly = Vec::with_capacity(6);
                let mut crossings = Vec::with_capacity(4);
                for e in 0..4 {
                    let (a, b) = (e, (e + 1) % 4);
                    if vals[a] > 0.0 {
                        poly.push(pts[a]);
                    }
                    if (vals[a] > 0.0) != (vals[b] > 0.0) {
                        let z = zero_point(pts[a], pts[b], vals[a], vals[b]);
                        poly.push(z);
                        crossings.push(z);
                    }
                }
                fraction.push((polygon_area(&poly) / (d * d)).clamp(0.0, 1.0));

                let (pa, pb) = if crossings.len() == 2 {
                    (crossings[0], crossings[1])
                } else {
                    // Saddle: keep the chord nearest to the centre.
                    let c = [x0 + 0.5 * d, y0 + 0.5 * d];
                    let dist = |p: [f64; 2], q: [f64; 2]| {
                        let m = [0.5 * (p[0] + q[0]) - c[0], 0.5 * (p[1] + q[1]) - c[1]];
                        m[0].hypot(m[1])
                    };
                    let pairs = [(0, 1), (2, 3), (1, 2), (3, 0)];
                    let &(ia, ib) = pairs
                        .iter()
                        .min_by(|x, y| {
                            dist(crossings[x.0], crossings[x.1])
                                .total_cmp(&dist(crossings[y.0], crossings[y.1]))
                        })
                        .unwrap();
                    (crossings[ia], crossings[ib])
                };
                let gx = ((vals[1] + vals[2]) - (vals[0] + vals[3])) / (2.0 * d);
                let gy = ((vals[2] + vals[3]) - (vals[0] + vals[1])) / (2.0 * d);
                let tx = pb[0] - pa[0];
                let ty = pb[1] - pa[1];
                let length = tx.hypot(ty);
                let mut normal = if length > 1e-14 * d {
                    [-ty / length, tx / length]
                } else {
                    let g = gx.hypot(gy).max(1e-300);
                    [gx / g, gy / g]
                };
                if normal[0] * gx + normal[1] * gy < 0.0 {
                    normal = [-normal[0], -normal[1]];
                }
                segment_of[k] = Some(segments.len());
                segments.push(Segment {
                    cell: k,
                    a: pa,
                    b: pb,
                    normal,
                    length,
                });
            }
        }

        let mut aperture_x = Vec::with_capacity(grid.len());
        for j in 0..ny {
            for i in 0..nx {
                aperture_x.push(liquid_fraction_1d(node(i, j), node(i, j + 1)));
            }
        }
        let mut aperture_y = Vec::with_capacity(nx * (ny + 1));
        for j in 0..=ny {
            for i in 0..nx {
                aperture_y.push(liquid_fraction_1d(node(i, j), node(i + 1, j)));
            }
        }

        Self {
            grid,
            kind,
            liquid: phi.iter().map(|v| *v > 0.0).collect(),
            fraction,
            aperture_x,
            aperture_y,
            segments,
            segment_of,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Liquid volume (area per unit depth).
    pub fn liquid_volume(&self) -> f64 {
        self.fraction.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn front_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn cut_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.segments.iter().map(|s| s.cell)
    }
}

/// Unit normals `grad(phi)/|grad(phi)|` at cell centres.
#[derive(Debug, Clone)]
pub struct NormalField {
    pub nx: Vec<f64>,
    pub ny: Vec<f64>,
    pub grad_norm: Vec<f64>,
    /// Cells where the gradient vanished and the normal was borrowed.
    pub flagged: Vec<bool>,
}

impl NormalField {
    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.nx[k], self.ny[k]]
    }
}

pub fn compute_normals(ls: &LevelSet) -> NormalField {
    let g = *ls.grid();
    let n = g.len();
    let mut nxv = vec![0.0; n];
    let mut nyv = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut flagged = vec![false; n];
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let k = g.idx(i, j);
            let (gx, gy) = ls.gradient(i, j);
            let m = gx.hypot(gy);
            gn[k] = m;
            if m > 1e-12 {
                nxv[k] = gx / m;
                nyv[k] = gy / m;
            } else {
                flagged[k] = true;
            }
        }
    }
    if flagged.iter().any(|f| *f) {
        // Borrow from the nearest valid cell, searching outwards ring by ring.
        let snapshot: Vec<usize> = (0..n).filter(|k| flagged[*k]).collect();
        for k in snapshot {
            let (i, j) = g.coords(k);
            let mut done = false;
            for r in 1..g.nx().max(g.ny()) as isize {
                for dj in -r..=r {
                    for di in -r..=r {
                        if di.abs() != r && dj.abs() != r {
                            continue;
                        }
                        let jj = j as isize + dj;
                        if jj < 0 || jj >= g.ny() as isize {
                            continue;
                        }
                        let ii = (i as isize + di).rem_euclid(g.nx() as isize) as usize;
                        let q = g.idx(ii, jj as usize);
                        if gn[q] > 1e-12 {
                            nxv[k] = nxv[q];
                            nyv[k] = nyv[q];
                            done = true;
                            break;
                        }
                    }
                    if done {
                        break;
                    }
                }
                if done {
                    break;
                }
            }
            if !done {
                nyv[k] = -1.0;
            }
        }
    }
    NormalField {
        nx: nxv,
        ny: nyv,
        grad_norm: gn,
        flagged,
    }
}

/// Mean curvature `div(grad(phi)/|grad(phi)|)` at cell centres plus the flag
/// mask of cells where the gradient vanished (curvature set to zero there).
pub fn compute_curvature(ls: &LevelSet) -> (Vec<f64>, Vec<bool>) {
    let g = *ls.grid();
    let d = g.delta();
    let phi = ls.phi();
    let mut kappa = vec![0.0; g.len()];
    let mut flagged = vec![false; g.len()];
    for j in 0..g.ny() {
        // Shift the stencil inwards at the walls so second differences exist.
        let jc = j.clamp(1, g.ny() - 2);
        for i in 0..g.nx() {
            let k = g.idx(i, j);
            let (gx, gy) = gradient_of(&g, phi, i, j);
            let m2 = gx * gx + gy * gy;
            if m2.sqrt() <= 1e-12 {
                flagged[k] = true;
                continue;
            }
            let (e, w) = (g.east(i), g.west(i));
            let f = |ii: usize, jj: usize| phi[g.idx(ii, jj)];
            let fxx = (f(e, j) - 2.0 * f(i, j) + f(w, j)) / (d * d);
            let fyy = (f(i, jc + 1) - 2.0 * f(i, jc) + f(i, jc - 1)) / (d * d);
            let fxy = (f(e, jc + 1) - f(w, jc + 1) - f(e, jc - 1) + f(w, jc - 1)) / (4.0 * d * d);
            kappa[k] = (fxx * gy * gy - 2.0 * gx * gy * fxy + fyy * gx * gx) / (m2 * m2.sqrt());
        }
    }
    (kappa, flagged)
}
