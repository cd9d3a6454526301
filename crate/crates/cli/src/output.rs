//! File writers. Numbers in CSV files use 17 significant digits so that
//! reruns can be compared byte for byte.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use poiseuille_core::bounds::{BoundReport, BoundsSet};
use poiseuille_core::rheology::RegimeClass;
use poiseuille_core::steady::ExistenceReport;
use poiseuille_core::unsteady::Termination;
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV file with a header line and one row per index.
pub fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> io::Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    debug_assert!(columns.iter().all(|c| c.len() == rows));
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format_number(c[i])).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

#[derive(Debug, Serialize)]
struct MonitorRecord<'a> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a BoundReport,
}

/// One JSON record per line.
pub fn write_monitor_log(path: &Path, log: &[BoundReport]) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in log {
        let rec = MonitorRecord { schema_version: SCHEMA_VERSION, report: r };
        serde_json::to_writer(&mut w, &rec).map_err(io::Error::other)?;
        writeln!(w)?;
    }
    w.flush()
}

/// Record written to `summary.json` by every command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub regime: Option<RegimeClass>,
    pub existence: Option<ExistenceReport>,
    pub bounds: Option<BoundsSet>,
    pub termination: Option<Termination>,
    /// Command-specific results.
    pub details: serde_json::Value,
    /// Files written, relative to the output directory, including this
    /// summary.
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

/// Tracks written files relative to an output directory.
#[derive(Debug)]
pub struct ArtifactSet {
    root: PathBuf,
    names: Vec<String>,
}

impl ArtifactSet {
    pub fn new(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), names: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Registers `name` and returns its full path.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.root.join(name)
    }

    pub fn into_names(self) -> Vec<String> {
        self.names
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_csv(&p, &["Y", "V"], &[&[0.0, 1.0], &[2.0, 3.0]]).unwrap();
        let text = fs::read_to_string(p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Y,V");
        assert_eq!(lines[2], "1.0000000000000000e0,3.0000000000000000e0");
    }
}
