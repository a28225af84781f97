//! Output files: one CSV table and one JSON summary per command, written
//! with deterministic formatting so identical runs are byte-identical.

use anyhow::{Context, Result};
use flagflow::{Chamber, DimensionProfile, MorseComponent};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output dir {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn write_csv(
        &self,
        command: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<PathBuf> {
        let path = self.dir.join(format!("{command}.csv"));
        let mut writer = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        writer.write_record(header)?;
        for row in rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, command: &str, summary: &T) -> Result<PathBuf> {
        let path = self.dir.join(format!("{command}.json"));
        let mut text = serde_json::to_string_pretty(summary)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

/// Shortest round-trip decimal representation; deterministic across runs.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Flattened profile label like `f0:[[1,0],[0,2]]`.
pub fn profile_label(p: &DimensionProfile) -> String {
    let mut parts = Vec::new();
    for (f, d) in p.factors().iter().enumerate() {
        let rows: Vec<String> = d
            .iter()
            .map(|row| {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        parts.push(format!("f{f}:[{}]", rows.join(",")));
    }
    parts.join(";")
}

/// Induced factor structure label like "f0:(g0:-, g1:RP(1))".
pub fn structure_label(comp: &MorseComponent) -> String {
    let mut parts = Vec::new();
    for (f, groups) in comp.factor_structure.iter().enumerate() {
        let inner: Vec<String> = groups
            .iter()
            .enumerate()
            .map(|(g, dims)| {
                if dims.is_empty() {
                    format!("g{g}:point")
                } else {
                    let cells: Vec<String> = dims.iter().map(|v| v.to_string()).collect();
                    format!("g{g}:flag({})", cells.join(","))
                }
            })
            .collect();
        parts.push(format!("f{f}:({})", inner.join(",")));
    }
    parts.join(";")
}

#[derive(Serialize)]
pub struct ChamberSummary {
    pub eigenvalues: Vec<Vec<f64>>,
    pub multiplicities: Vec<Vec<usize>>,
}

pub fn chamber_summary(c: &Chamber) -> ChamberSummary {
    ChamberSummary {
        eigenvalues: c.factors().iter().map(|f| f.eigenvalues.clone()).collect(),
        multiplicities: c
            .factors()
            .iter()
            .map(|f| f.multiplicities.clone())
            .collect(),
    }
}
