//! Verdict lines, CSV tables and the JSON envelope each subcommand writes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// One asserted invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub bound: f64,
    pub detail: String,
    /// A failure means the numerics did not converge rather than that an
    /// invariant is false.
    #[serde(skip)]
    pub convergence: bool,
}

impl Verdict {
    /// `observed <= bound`.
    pub fn le(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: observed <= bound,
            observed,
            bound,
            detail: String::new(),
            convergence: false,
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            observed: f64::from(u8::from(passed)),
            bound: 1.0,
            detail: detail.into(),
            convergence: false,
        }
    }

    pub fn convergence(mut self) -> Self {
        self.convergence = true;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        if self.detail.is_empty() {
            format!("{tag} {}: {:e} <= {:e}", self.name, self.observed, self.bound)
        } else {
            format!("{tag} {}: {}", self.name, self.detail)
        }
    }
}

pub const VERDICT_CSV_HEADER: [&str; 4] = ["invariant", "passed", "observed", "bound"];

/// A CSV table: header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }
}

/// Everything a subcommand produced.
pub struct Outcome<R: Serialize> {
    pub command: &'static str,
    pub result: R,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
    pub notices: Vec<String>,
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    command: &'a str,
    config: &'a ExperimentConfig,
    passed: bool,
    verdicts: &'a [Verdict],
    notices: &'a [String],
    result: &'a R,
}

impl<R: Serialize> Outcome<R> {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Writes `<command>.json`, `<command>_verdicts.csv` and one CSV per
    /// table under the output directory; returns the written paths.
    pub fn write(&self, config: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
        let dir = &config.output_dir;
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let stem = self.command.replace('-', "_");
        let mut written = Vec::new();

        let json_path = dir.join(format!("{stem}.json"));
        let env = Envelope {
            command: self.command,
            config,
            passed: self.passed(),
            verdicts: &self.verdicts,
            notices: &self.notices,
            result: &self.result,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        fs::write(&json_path, text)?;
        written.push(json_path);

        let rows = self
            .verdicts
            .iter()
            .map(|v| vec![v.name.clone(), v.passed.to_string(), v.observed.to_string(), v.bound.to_string()])
            .collect();
        let verdicts = Table::new(&format!("{stem}_verdicts"), &VERDICT_CSV_HEADER, rows);
        for t in std::iter::once(&verdicts).chain(&self.tables) {
            let path = dir.join(format!("{}.csv", t.name));
            write_csv(&path, t)?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn print(&self) {
        for n in &self.notices {
            println!("NOTE {n}");
        }
        for v in &self.verdicts {
            println!("{}", v.line());
        }
    }

    /// The first failing invariant as an error.
    pub fn status(&self) -> CliResult<()> {
        match self.verdicts.iter().find(|v| !v.passed) {
            None => Ok(()),
            Some(v) if v.convergence => Err(CliError::Numeric(v.name.clone())),
            Some(v) => Err(CliError::Invariant(v.name.clone())),
        }
    }
}

fn write_csv(path: &Path, t: &Table) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&t.header)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
