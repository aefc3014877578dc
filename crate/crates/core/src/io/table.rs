use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Numbers in shortest round-trip scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

/// CSV writer that flushes every row, so a failing run leaves every row it
/// completed on disk.
pub struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
    width: usize,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut inner = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        inner.write_record(header).map_err(csv_err)?;
        inner.flush()?;
        Ok(Self {
            inner,
            width: header.len(),
        })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        self.record(&values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>())
    }

    pub fn record(&mut self, fields: &[String]) -> Result<()> {
        if fields.len() != self.width {
            return Err(Error::Dimension(format!(
                "CSV row has {} fields, header has {}",
                fields.len(),
                self.width
            )));
        }
        self.inner.write_record(fields).map_err(csv_err)?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// A CSV file read back as a header and numeric columns. Non-numeric
/// cells are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| Error::Parse(format!("{}: bad number {c:?}", path.display()))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/t.csv");
        let mut w = CsvOut::create(&p, &["a", "b"]).unwrap();
        w.row(&[1.0, 0.1 + 0.2]).unwrap();
        w.row(&[-3e-300, 5.0]).unwrap();
        assert!(w.row(&[1.0]).is_err());
        w.finish().unwrap();
        let t = NumericTable::read(&p).unwrap();
        assert_eq!(t.header, vec!["a", "b"]);
        assert_eq!(t.column("b").unwrap(), vec![0.1 + 0.2, 5.0]);
        assert_eq!(t.rows[1][0], -3e-300);
        assert!(t.column("c").is_none());
    }
}
