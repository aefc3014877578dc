//! Uniform Cartesian mesh with square cells, periodic in `x`.
//!
//! Cells are addressed `(i, j)` with `i` along the periodic horizontal axis and
//! `j` from the bottom wall upwards; flat storage is row-major (`j * nx + i`).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    delta: f64,
    aspect: f64,
    height: f64,
}

impl Grid {
    /// Builds a grid of `nx = aspect * ny` square cells on a domain of height 1.
    pub fn new(nx: usize, ny: usize, aspect: f64) -> Result<Self> {
        if nx < 1 || ny < 4 {
            return Err(Error::Domain(format!("grid {nx}x{ny} is too small")));
        }
        if !(aspect > 0.0) || !aspect.is_finite() {
            return Err(Error::Domain(format!("aspect ratio {aspect} must be positive")));
        }
        let height = 1.0;
        let delta = height / ny as f64;
        let expected = aspect * ny as f64;
        if (expected - nx as f64).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::Domain(format!(
                "nx = {nx} does not equal aspect * ny = {expected}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            delta,
            aspect,
            height,
        })
    }

    /// Grid with `ny` rows and as many columns as the aspect ratio requires.
    pub fn with_rows(ny: usize, aspect: f64) -> Result<Self> {
        let nx = (aspect * ny as f64).round() as usize;
        Self::new(nx, ny, aspect)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }
    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }
    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }
    #[inline]
    pub fn aspect(&self) -> f64 {
        self.aspect
    }
    #[inline]
    pub fn height(&self) -> f64 {
        self.height
    }
    #[inline]
    pub fn width(&self) -> f64 {
        self.aspect * self.height
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }
    #[inline]
    pub fn east(&self, i: usize) -> usize {
        if i + 1 == self.nx {
            0
        } else {
            i + 1
        }
    }
    #[inline]
    pub fn west(&self, i: usize) -> usize {
        if i == 0 {
            self.nx - 1
        } else {
            i - 1
        }
    }

    /// Cell-centre abscissa in `[0, b)`.
    #[inline]
    pub fn xc(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.delta
    }
    #[inline]
    pub fn yc(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.delta
    }
    /// Abscissa measured from the domain midpoint, in `[-b/2, b/2]`.
    #[inline]
    pub fn x_centered(&self, i: usize) -> f64 {
        self.xc(i) - 0.5 * self.width()
    }

    /// Cell area.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.delta * self.delta
    }

    /// Shortest signed periodic displacement `to - from` along `x`.
    pub fn periodic_dx(&self, from: f64, to: f64) -> f64 {
        let w = self.width();
        let mut d = to - from;
        d -= w * (d / w).round();
        d
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }

    /// Checks that a field has one value per cell.
    pub fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Dimension(format!(
                "{what} has {len} values, grid {}x{} needs {}",
                self.nx,
                self.ny,
                self.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_is_uniform() {
        let g = Grid::new(128, 32, 4.0).unwrap();
        assert_eq!(g.delta(), 1.0 / 32.0);
        assert!((g.width() / g.nx() as f64 - g.delta()).abs() < 1e-15);
    }

    #[test]
    fn rejects_inconsistent_columns() {
        assert!(Grid::new(100, 32, 4.0).is_err());
        assert!(Grid::new(128, 32, -1.0).is_err());
    }

    #[test]
    fn periodic_neighbours_wrap() {
        let g = Grid::new(8, 4, 2.0).unwrap();
        assert_eq!(g.east(7), 0);
        assert_eq!(g.west(0), 7);
        assert!((g.periodic_dx(0.1, 1.9) + 0.2).abs() < 1e-12);
    }
}
