//! Batch experiment runners.
//!
//! Each runner replays one of the standard studies end to end, writes
//! plot-ready CSV (plus graymaps and a state snapshot where applicable)
//! into an output directory and returns a [`Report`] whose checks mirror
//! the assertions the run is expected to satisfy. Runners are
//! deterministic under a fixed seed.

pub mod association;
pub mod data;
pub mod lissajous;
pub mod metrics;
pub mod persistence;
pub mod popeq;
pub mod reconstruction;
pub mod shapes;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CalError, Result};

/// Default configuration (including topology) for the population-equation
/// study.
pub const POPEQ_CONFIG: &str = include_str!("../../configs/popeq.toml");
/// Default configuration for the three-level persistence study.
pub const PERSISTENCE_CONFIG: &str = include_str!("../../configs/persistence.toml");
/// Default configuration for the 15-region rotating-shapes study.
pub const SHAPES_CONFIG: &str = include_str!("../../configs/shapes.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Reconstruction,
    Lissajous,
    Popeq,
    Persistence,
    Shapes,
    Association,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Reconstruction,
        ExperimentKind::Lissajous,
        ExperimentKind::Popeq,
        ExperimentKind::Persistence,
        ExperimentKind::Shapes,
        ExperimentKind::Association,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Reconstruction => "reconstruction",
            ExperimentKind::Lissajous => "lissajous",
            ExperimentKind::Popeq => "popeq",
            ExperimentKind::Persistence => "persistence",
            ExperimentKind::Shapes => "shapes",
            ExperimentKind::Association => "association",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = CalError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                CalError::InvalidParameter(format!(
                    "unknown experiment `{s}`; expected one of {:?}",
                    Self::ALL.map(|k| k.name())
                ))
            })
    }
}

/// One assertion evaluated by a runner.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Outcome of one runner invocation.
#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Free-form observations that are reported but not asserted.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        Self {
            experiment,
            seed,
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, pass, detail));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = format!("experiment: {} (seed {})\n", self.experiment, self.seed);
        for c in &self.checks {
            out.push_str(&format!(
                "{} {}: {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("note {n}\n"));
        }
        out
    }

    /// Writes the rendered report next to the runner's other artifacts.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join("report.txt"), self.render())?;
        Ok(())
    }
}

/// Dispatches one experiment, with the embedded default configuration
/// when no config text is given.
pub fn run(
    kind: ExperimentKind,
    config_text: Option<&str>,
    seed: u64,
    out_dir: &Path,
) -> Result<Report> {
    std::fs::create_dir_all(out_dir)?;
    let report = match kind {
        ExperimentKind::Reconstruction => {
            reconstruction::run(config_text.unwrap_or(""), seed, out_dir)?
        }
        ExperimentKind::Lissajous => lissajous::run(config_text.unwrap_or(""), seed, out_dir)?,
        ExperimentKind::Popeq => popeq::run(config_text.unwrap_or(POPEQ_CONFIG), seed, out_dir)?,
        ExperimentKind::Persistence => {
            persistence::run(config_text.unwrap_or(PERSISTENCE_CONFIG), seed, out_dir)?
        }
        ExperimentKind::Shapes => shapes::run(config_text.unwrap_or(SHAPES_CONFIG), seed, out_dir)?,
        ExperimentKind::Association => {
            association::run(config_text.unwrap_or(""), seed, out_dir)?
        }
    };
    report.write_to(out_dir)?;
    Ok(report)
}
