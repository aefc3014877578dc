use crate::grid::Grid;

/// Velocity on the staggered mesh plus cell-centred pressure and temperature.
///
/// `u[j * nx + i]` lives on the west face of cell `(i, j)`;
/// `v[j * nx + i]` on the south face of cell `(i, j)` for `j = 0..=ny`.
/// The temperature is stored in both phases.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub temperature: Vec<f64>,
    pub time: f64,
}

impl FlowState {
    pub fn at_rest(grid: &Grid, temperature: Vec<f64>) -> Self {
        Self {
            u: vec![0.0; grid.len()],
            v: vec![0.0; grid.nx() * (grid.ny() + 1)],
            p: vec![0.0; grid.len()],
            temperature,
            time: 0.0,
        }
    }

    pub fn max_speed(&self) -> f64 {
        let mu = self.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mv = self.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        mu.max(mv)
    }

    /// Cell-centred horizontal velocity (periodic in `x`).
    pub fn u_center(&self, grid: &Grid, i: usize, j: usize) -> f64 {
        let nx = grid.nx();
        0.5 * (self.u[j * nx + i] + self.u[j * nx + grid.east(i)])
    }

    /// Both velocity components at every cell centre.
    pub fn centered_velocity(&self, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
        let mut u = grid.zeros();
        let mut v = grid.zeros();
        for k in 0..grid.len() {
            let (i, j) = grid.coords(k);
            u[k] = self.u_center(grid, i, j);
            v[k] = self.v_center(grid, i, j);
        }
        (u, v)
    }

    /// Cell-centred vertical velocity.
    pub fn v_center(&self, grid: &Grid, i: usize, j: usize) -> f64 {
        let nx = grid.nx();
        0.5 * (self.v[j * nx + i] + self.v[(j + 1) * nx + i])
    }
}
