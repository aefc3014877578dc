//! Per-step checkpoints of the forward run, kept in memory or spilled to an
//! anonymous temporary file when they would exceed the memory budget.
//!
//! Checkpoint `n` holds what the reverse sweep needs to mirror forward step
//! `n`: the level set at the start of the step (the phase geometry is rebuilt
//! from it), the temperature and velocity at the end of the step, and the
//! extended front speed used to advance the level set.

use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    /// Time at the start of the step.
    pub time: f64,
    pub dt: f64,
    pub phi: Vec<f64>,
    pub temperature: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub speed: Vec<f64>,
    /// Whether the level set was reinitialised at the end of this step.
    pub reinitialized: bool,
}

enum Store {
    Memory(Vec<Checkpoint>),
    Disk { file: Mutex<File>, count: usize },
}

pub struct Trajectory {
    grid: Grid,
    store: Store,
    pub initial_temperature: Vec<f64>,
    pub final_temperature: Vec<f64>,
    pub final_phi: Vec<f64>,
    pub final_time: f64,
    pub complete: bool,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("steps", &self.len())
            .field("on_disk", &self.is_on_disk())
            .field("final_time", &self.final_time)
            .field("complete", &self.complete)
            .finish()
    }
}

impl Trajectory {
    /// Bytes used by one checkpoint on this grid.
    pub fn checkpoint_bytes(grid: &Grid) -> usize {
        let n = grid.len();
        let nv = grid.nx() * (grid.ny() + 1);
        8 * (4 + 4 * n + nv)
    }

    pub fn new(grid: Grid, expected_steps: usize, budget_bytes: usize, initial_temperature: Vec<f64>) -> Result<Self> {
        let need = expected_steps.saturating_mul(Self::checkpoint_bytes(&grid));
        let store = if need > budget_bytes {
            log::info!(
                "trajectory needs {} MiB, spilling checkpoints to a temporary file",
                need >> 20
            );
            Store::Disk {
                file: Mutex::new(tempfile::tempfile()?),
                count: 0,
            }
        } else {
            Store::Memory(Vec::with_capacity(expected_steps))
        };
        Ok(Self {
            grid,
            store,
            final_temperature: initial_temperature.clone(),
            initial_temperature,
            final_phi: Vec::new(),
            final_time: 0.0,
            complete: false,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        match &self.store {
            Store::Memory(v) => v.len(),
            Store::Disk { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_on_disk(&self) -> bool {
        matches!(self.store, Store::Disk { .. })
    }

    fn last_time(&self) -> Option<f64> {
        if self.is_empty() {
            None
        } else {
            self.get(self.len() - 1).ok().map(|c| c.time)
        }
    }

    pub fn push(&mut self, cp: Checkpoint) -> Result<()> {
        let n = self.grid.len();
        let nv = self.grid.nx() * (self.grid.ny() + 1);
        if cp.phi.len() != n || cp.temperature.len() != n || cp.u.len() != n || cp.speed.len() != n || cp.v.len() != nv {
            return Err(Error::Dimension("checkpoint fields do not match the grid".into()));
        }
        if let Some(t) = self.last_time() {
            if !(cp.time > t) {
                return Err(Error::Domain(format!(
                    "checkpoint time {} does not follow {}",
                    cp.time, t
                )));
            }
        }
        match &mut self.store {
            Store::Memory(v) => v.push(cp),
            Store::Disk { file, count } => {
                let mut buf = Vec::with_capacity(Self::checkpoint_bytes(&self.grid));
                for x in [cp.step as f64, cp.time, cp.dt, if cp.reinitialized { 1.0 } else { 0.0 }] {
                    buf.extend_from_slice(&x.to_le_bytes());
                }
                for field in [&cp.phi, &cp.temperature, &cp.u, &cp.v, &cp.speed] {
                    for x in field.iter() {
                        buf.extend_from_slice(&x.to_le_bytes());
                    }
                }
                let f = file.get_mut().expect("trajectory file lock poisoned");
                f.seek(SeekFrom::End(0))?;
                f.write_all(&buf)?;
                *count += 1;
            }
        }
        Ok(())
    }

    pub fn get(&self, n: usize) -> Result<Checkpoint> {
        match &self.store {
            Store::Memory(v) => v.get(n).cloned().ok_or(Error::MissingCheckpoint(n)),
            Store::Disk { file, count } => {
                if n >= *count {
                    return Err(Error::MissingCheckpoint(n));
                }
                let size = Self::checkpoint_bytes(&self.grid);
                let mut buf = vec![0u8; size];
                {
                    let mut f = file.lock().expect("trajectory file lock poisoned");
                    f.seek(SeekFrom::Start((n * size) as u64))?;
                    f.read_exact(&mut buf)?;
                }
                let mut vals = buf
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
                let step = vals.next().unwrap() as usize;
                let time = vals.next().unwrap();
                let dt = vals.next().unwrap();
                let reinitialized = vals.next().unwrap() != 0.0;
                let n_cells = self.grid.len();
                let nv = self.grid.nx() * (self.grid.ny() + 1);
                let mut take = |m: usize| -> Vec<f64> { vals.by_ref().take(m).collect() };
                let phi = take(n_cells);
                let temperature = take(n_cells);
                let u = take(n_cells);
                let v = take(nv);
                let speed = take(n_cells);
                Ok(Checkpoint {
                    step,
                    time,
                    dt,
                    phi,
                    temperature,
                    u,
                    v,
                    speed,
                    reinitialized,
                })
            }
        }
    }

    /// Temperature at the start of step `n`.
    pub fn temperature_before(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            Ok(self.initial_temperature.clone())
        } else {
            Ok(self.get(n - 1)?.temperature)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(g: &Grid, step: usize) -> Checkpoint {
        let n = g.len();
        let f = |s: f64| (0..n).map(|k| s + k as f64).collect::<Vec<_>>();
        Checkpoint {
            step,
            time: step as f64 * 0.1,
            dt: 0.1,
            phi: f(1.0),
            temperature: f(2.0),
            u: f(3.0),
            v: (0..g.nx() * (g.ny() + 1)).map(|k| -(k as f64)).collect(),
            speed: f(4.0),
            reinitialized: step % 2 == 1,
        }
    }

    #[test]
    fn disk_and_memory_round_trip() {
        let g = Grid::new(8, 4, 2.0).unwrap();
        let mut mem = Trajectory::new(g, 3, usize::MAX, g.zeros()).unwrap();
        let mut disk = Trajectory::new(g, 3, 0, g.zeros()).unwrap();
        assert!(disk.is_on_disk() && !mem.is_on_disk());
        for s in 0..3 {
            mem.push(cp(&g, s)).unwrap();
            disk.push(cp(&g, s)).unwrap();
        }
        for s in 0..3 {
            assert_eq!(mem.get(s).unwrap(), disk.get(s).unwrap());
        }
        assert!(matches!(disk.get(3), Err(Error::MissingCheckpoint(3))));
    }

    #[test]
    fn times_must_increase() {
        let g = Grid::new(8, 4, 2.0).unwrap();
        let mut t = Trajectory::new(g, 2, usize::MAX, g.zeros()).unwrap();
        t.push(cp(&g, 1)).unwrap();
        assert!(t.push(cp(&g, 0)).is_err());
    }
}
