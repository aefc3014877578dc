//! Field snapshots: a five-line text header (`nx`, `ny`, `delta`, `time`,
//! `field`) followed by the cell values in row-major order, one per line.
//! Values are written in shortest round-trip scientific notation, so a
//! snapshot read back is bit-identical to the field that was written.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub delta: f64,
    pub time: f64,
    pub field: String,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn new(grid: &Grid, time: f64, field: &str, values: Vec<f64>) -> Result<Self> {
        grid.check_len(field, values.len())?;
        if field.is_empty() || field.contains(char::is_whitespace) {
            return Err(Error::Domain(format!("field name {field:?} must be one word")));
        }
        Ok(Self {
            nx: grid.nx(),
            ny: grid.ny(),
            delta: grid.delta(),
            time,
            field: field.to_string(),
            values,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(24 * self.values.len() + 64);
        let _ = writeln!(s, "nx {}", self.nx);
        let _ = writeln!(s, "ny {}", self.ny);
        let _ = writeln!(s, "delta {:e}", self.delta);
        let _ = writeln!(s, "time {:e}", self.time);
        let _ = writeln!(s, "field {}", self.field);
        for v in &self.values {
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("snapshot ends before the {key} line")))?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok(v.trim().to_string()),
                _ => Err(Error::Parse(format!("expected `{key} ...`, found {line:?}"))),
            }
        };
        let num = |v: String, key: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::Parse(format!("bad {key} value {v:?}")))
        };
        let nx: usize = header("nx")?.parse().map_err(|_| Error::Parse("bad nx".into()))?;
        let ny: usize = header("ny")?.parse().map_err(|_| Error::Parse("bad ny".into()))?;
        let delta = num(header("delta")?, "delta")?;
        let time = num(header("time")?, "time")?;
        let field = header("field")?;
        let values = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad value {l:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != nx * ny {
            return Err(Error::Parse(format!(
                "snapshot {field} holds {} values, header says {nx} x {ny}",
                values.len()
            )));
        }
        Ok(Self {
            nx,
            ny,
            delta,
            time,
            field,
            values,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Checks that the snapshot lives on `grid`.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.nx != grid.nx() || self.ny != grid.ny() || (self.delta - grid.delta()).abs() > 1e-12 * grid.delta() {
            return Err(Error::Dimension(format!(
                "snapshot {} is {}x{} with spacing {:e}, grid is {}x{} with {:e}",
                self.field,
                self.nx,
                self.ny,
                self.delta,
                grid.nx(),
                grid.ny(),
                grid.delta()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let g = Grid::new(8, 4, 2.0).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|k| (k as f64 * 0.37).sin() / 3.0 + 1e-300 * k as f64).collect();
        let s = Snapshot::new(&g, 0.1 + 0.2, "temperature", vals).unwrap();
        let back = Snapshot::parse(&s.to_text()).unwrap();
        assert_eq!(back, s);
        back.check_grid(&g).unwrap();
        assert!(back.check_grid(&Grid::new(16, 8, 2.0).unwrap()).is_err());
    }

    #[test]
    fn malformed_input_is_reported() {
        assert!(Snapshot::parse("nx 2\nny 1\ndelta 1\ntime 0\nfield a\n1\n").is_err());
        assert!(Snapshot::parse("ny 1\n").is_err());
        assert!(Snapshot::parse("nx 1\nny 1\ndelta x\ntime 0\nfield a\n1\n").is_err());
        let g = Grid::new(8, 4, 2.0).unwrap();
        assert!(Snapshot::new(&g, 0.0, "two words", g.zeros()).is_err());
    }
}
