//! Long-format plot data: one row per point, `series,label,x,y`, where the
//! label is the short configuration hash of the campaign that produced it.

use std::path::{Path, PathBuf};

use super::{fmt_num, CampaignManifest, CsvOut, NumericTable};
use crate::error::{Error, Result};

pub const PLOTDATA_FILE: &str = "plotdata.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Which columns of each artifact kind become series, and against what.
fn layout(kind: &str) -> Option<(&'static str, &'static [&'static str])> {
    match kind {
        "diagnostics" => Some(("t", &["h_bar", "Ra_e", "max_u", "melted_volume"])),
        "history" => Some(("k", &["J", "J_over_J0", "grad_norm"])),
        "pso_evals" => Some(("eval", &["J", "J_over_J0"])),
        "gradient" => Some(("index", &["adjoint", "fd"])),
        _ => None,
    }
}

fn rename(kind: &str, column: &str) -> String {
    match (kind, column) {
        ("gradient", c) => format!("{c}_gradient"),
        ("pso_evals", "J_over_J0") => "pso_best_over_J0".into(),
        ("pso_evals", "J") => "pso_J".into(),
        _ => column.to_string(),
    }
}

/// Series of one campaign directory.
pub fn campaign_series(dir: &Path) -> Result<Vec<Series>> {
    let m = CampaignManifest::read(dir)?;
    m.verify(dir)?;
    let mut out = Vec::new();
    for a in &m.artifacts {
        let Some((xcol, ycols)) = layout(&a.kind) else {
            continue;
        };
        let t = NumericTable::read(&dir.join(&a.path))?;
        let x = t
            .column(xcol)
            .ok_or_else(|| Error::Parse(format!("{} lacks column {xcol}", a.path)))?;
        for c in ycols {
            if let Some(y) = t.column(c) {
                out.push(Series {
                    name: rename(&a.kind, c),
                    label: m.label().to_string(),
                    x: x.clone(),
                    y,
                });
            }
        }
    }
    Ok(out)
}

/// Campaign directories at `root`: itself if it holds a manifest, otherwise
/// each immediate subdirectory that does.
pub fn campaigns(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(super::MANIFEST_FILE).exists() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs = Vec::new();
    if root.is_dir() {
        for entry in std::fs::read_dir(root)? {
            let p = entry?.path();
            if p.join(super::MANIFEST_FILE).exists() {
                dirs.push(p);
            }
        }
    }
    if dirs.is_empty() {
        return Err(Error::Domain(format!("no campaign manifest under {}", root.display())));
    }
    dirs.sort();
    Ok(dirs)
}

/// Writes `plotdata.csv` at `root` and returns the series it holds.
pub fn write_plotdata(root: &Path) -> Result<Vec<Series>> {
    let mut all = Vec::new();
    for dir in campaigns(root)? {
        all.extend(campaign_series(&dir)?);
    }
    let mut w = CsvOut::create(&root.join(PLOTDATA_FILE), &["series", "label", "x", "y"])?;
    for s in &all {
        for (x, y) in s.x.iter().zip(&s.y) {
            w.record(&[s.name.clone(), s.label.clone(), fmt_num(*x), fmt_num(*y)])?;
        }
    }
    w.finish()?;
    Ok(all)
}
