//! Run reports: `report.json` plus the `mass.csv` and `refinement.csv` tables
//! derived from it.
//!
//! Reports hold no timings or host details, so identical runs write identical
//! bytes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::scenario::SCHEMA_VERSION;

pub const REPORT_FILE: &str = "report.json";
pub const MASS_FILE: &str = "mass.csv";
pub const REFINEMENT_FILE: &str = "refinement.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassRow {
    pub t: f64,
    pub mass: f64,
    pub boundary_mass: f64,
    /// Sampled `sup |DΦ_t|` over the initial atoms.
    pub jacobian_bound: f64,
    /// `jacobian_bound^k · M(T_0)`.
    pub mass_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementRow {
    pub study: String,
    pub refinement: usize,
    pub h: f64,
    pub residual: f64,
    /// Log-log slope against the previous row of the same study.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub mass_curve: Vec<MassRow>,
    pub refinement: Vec<RefinementRow>,
}

#[derive(Debug)]
pub enum ReportError {
    Missing(PathBuf),
    Malformed(String),
    Io(std::io::Error),
}

impl std::fmt::Display for ReportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReportError::Missing(p) => write!(f, "no report at {}", p.display()),
            ReportError::Malformed(m) => write!(f, "malformed report: {m}"),
            ReportError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

impl std::error::Error for ReportError {}

impl From<std::io::Error> for ReportError {
    fn from(e: std::io::Error) -> Self {
        ReportError::Io(e)
    }
}

impl From<csv::Error> for ReportError {
    fn from(e: csv::Error) -> Self {
        ReportError::Io(e.into())
    }
}

impl Report {
    pub fn new(scenario: &str, seed: u64) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.to_string(),
            seed,
            pass: true,
            checks: Vec::new(),
            mass_curve: Vec::new(),
            refinement: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    /// Writes `report.json` and both CSV tables into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<(), ReportError> {
        std::fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self).map_err(|e| ReportError::Malformed(e.to_string()))?;
        text.push('\n');
        std::fs::write(dir.join(REPORT_FILE), text)?;
        self.write_tables(dir)
    }

    pub fn read(dir: &Path) -> Result<Report, ReportError> {
        let path = dir.join(REPORT_FILE);
        if !path.is_file() {
            return Err(ReportError::Missing(path));
        }
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| ReportError::Malformed(e.to_string()))
    }

    /// `mass.csv` and `refinement.csv`, a pure function of the report.
    pub fn write_tables(&self, dir: &Path) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_path(dir.join(MASS_FILE))?;
        for row in &self.mass_curve {
            w.serialize(row)?;
        }
        if self.mass_curve.is_empty() {
            w.write_record(["t", "mass", "boundary_mass", "jacobian_bound", "mass_bound"])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join(REFINEMENT_FILE))?;
        for row in &self.refinement {
            w.serialize(row)?;
        }
        if self.refinement.is_empty() {
            w.write_record(["study", "refinement", "h", "residual", "slope"])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Human-readable summary: one line per check, then the refinement table.
    pub fn table(&self) -> String {
        let mut out = format!("scenario {} (seed {})\n", self.scenario, self.seed);
        let width = self.checks.iter().map(|c| c.suite.len() + c.name.len() + 1).max().unwrap_or(0);
        for c in &self.checks {
            let label = format!("{}/{}", c.suite, c.name);
            out += &format!(
                "  {} {label:<width$}  {:>13.6e}  {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.value,
                c.band()
            );
        }
        if !self.refinement.is_empty() {
            out += &format!("  {:<10} {:>10} {:>12} {:>13} {:>8}\n", "study", "refinement", "h", "residual", "slope");
            for r in &self.refinement {
                let slope = r.slope.map_or_else(|| "-".to_string(), |s| format!("{s:.3}"));
                out += &format!("  {:<10} {:>10} {:>12.4e} {:>13.6e} {:>8}\n", r.study, r.refinement, r.h, r.residual, slope);
            }
        }
        out += &format!(
            "{} checks, {} failed: {}\n",
            self.checks.len(),
            self.failures(),
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo", 4);
        r.checks.push(Check::at_most("existence", "weak residual", 1e-7, 1e-4));
        r.checks.push(Check::at_least("uniqueness", "frozen", 1e-3, 1e-2));
        r.mass_curve.push(MassRow { t: 0.0, mass: 1.0, boundary_mass: 2.0, jacobian_bound: 1.0, mass_bound: 1.0 });
        r.refinement.push(RefinementRow { study: "existence".into(), refinement: 10, h: 0.1, residual: 1e-3, slope: None });
        r.refinement.push(RefinementRow { study: "existence".into(), refinement: 20, h: 0.05, residual: 2.5e-4, slope: Some(2.0) });
        r.finish();
        r
    }

    #[test]
    fn round_trip_and_idempotent_tables() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        assert!(!r.pass);
        r.write(dir.path()).unwrap();
        let back = Report::read(dir.path()).unwrap();
        assert_eq!(back, r);
        let first = std::fs::read(dir.path().join(REFINEMENT_FILE)).unwrap();
        back.write_tables(dir.path()).unwrap();
        assert_eq!(std::fs::read(dir.path().join(REFINEMENT_FILE)).unwrap(), first);
        let text = String::from_utf8(first).unwrap();
        assert_eq!(text.lines().next().unwrap(), "study,refinement,h,residual,slope");
        assert!(text.contains("existence,10,0.1,0.001,\n"));
    }

    #[test]
    fn missing_report_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Report::read(dir.path()), Err(ReportError::Missing(_))));
        std::fs::write(dir.path().join(REPORT_FILE), "{").unwrap();
        assert!(matches!(Report::read(dir.path()), Err(ReportError::Malformed(_))));
    }

    #[test]
    fn table_lists_every_check() {
        let t = sample().table();
        assert!(t.contains("PASS existence/weak residual"));
        assert!(t.contains("FAIL uniqueness/frozen"));
        assert!(t.ends_with("2 checks, 1 failed: FAIL\n"));
    }
}
