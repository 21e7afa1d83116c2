//! Driver behind the `icn-lighthall` binary: scenario loading, CSV output,
//! FIB reports and trace replay.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lighthall_core::scenario::Scenario;
use lighthall_core::simnet::{fib_report, run_scenario, DelayClass, MetricsReport};
use lighthall_core::trace::{ReplayOutcome, Trace};

pub const TRACE_FILE: &str = "trace.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// `key=value` overrides, applied in order after the file is read.
    pub overrides: Vec<String>,
    pub trace: bool,
}

impl RunConfig {
    pub fn new(scenario: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            scenario: scenario.into(),
            out: out.into(),
            seed: None,
            overrides: Vec::new(),
            trace: false,
        }
    }

    /// Reads the scenario file and applies `--seed` and `--set` overrides.
    pub fn load(&self) -> Result<Scenario> {
        load_scenario(&self.scenario, self.seed, &self.overrides)
    }
}

fn load_scenario(path: &Path, seed: Option<u64>, overrides: &[String]) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut all: Vec<String> = overrides.to_vec();
    if let Some(seed) = seed {
        all.push(format!("seed={seed}"));
    }
    Scenario::parse_with_overrides(&text, &all).with_context(|| format!("scenario {}", path.display()))
}

/// Every CSV file a run writes, in write order.
pub fn output_files(report: &MetricsReport) -> Result<Vec<(String, String)>> {
    let mut files = vec![
        ("delays.csv".to_string(), report.delays_csv()),
        ("messages.csv".to_string(), report.messages_csv()),
        ("fib.csv".to_string(), report.fib_csv()),
    ];
    for class in DelayClass::ALL {
        if !report.samples(class).is_empty() {
            files.push((format!("cdf_{}.csv", class.as_str()), report.cdf_csv(class)?));
        }
    }
    files.push(("decisions.csv".to_string(), report.decisions_csv()));
    Ok(files)
}

/// Runs the configured scenario and writes its outputs. Returns the paths
/// written.
pub fn cmd_run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let scenario = config.load()?;
    let report = run_scenario(&scenario)?;
    fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
    let mut written = Vec::new();
    let mut files = output_files(&report)?;
    if config.trace {
        files.push((TRACE_FILE.to_string(), Trace::record(&scenario, &report).render()));
    }
    for (name, body) in files {
        let path = config.out.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_fib_report(m: usize, n: usize) -> Result<String> {
    Ok(fib_report(m, n)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayVerdict {
    Match,
    Diverged {
        index: usize,
        recorded: Option<String>,
        replayed: Option<String>,
    },
    /// The configuration supplied alongside the trace is not the recorded one.
    ConfigMismatch(String),
}

impl ReplayVerdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            ReplayVerdict::Match => 0,
            ReplayVerdict::Diverged { .. } => 2,
            ReplayVerdict::ConfigMismatch(_) => 1,
        }
    }
}

/// Re-runs a trace. When a scenario file or overrides are given, the
/// resulting configuration must equal the recorded one before anything runs.
pub fn cmd_replay(trace: &Path, scenario: Option<&Path>, overrides: &[String]) -> Result<ReplayVerdict> {
    let text = fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
    let trace = Trace::parse(&text).context("parsing trace")?;
    let expected = match scenario {
        Some(path) => Some(load_scenario(path, None, overrides)?),
        None if !overrides.is_empty() => Some(trace.scenario.with_overrides(overrides)?),
        None => None,
    };
    if let Some(expected) = expected {
        if expected != trace.scenario {
            let diff = first_line_diff(&trace.scenario.render(), &expected.render());
            return Ok(ReplayVerdict::ConfigMismatch(diff));
        }
    }
    Ok(match trace.replay()? {
        ReplayOutcome::Match => ReplayVerdict::Match,
        ReplayOutcome::Diverged {
            index,
            recorded,
            replayed,
        } => ReplayVerdict::Diverged {
            index,
            recorded,
            replayed,
        },
    })
}

fn first_line_diff(recorded: &str, given: &str) -> String {
    let (a, b): (Vec<&str>, Vec<&str>) = (recorded.lines().collect(), given.lines().collect());
    (0..a.len().max(b.len()))
        .find(|&i| a.get(i) != b.get(i))
        .map(|i| {
            format!(
                "recorded `{}`, given `{}`",
                a.get(i).unwrap_or(&"<none>"),
                b.get(i).unwrap_or(&"<none>")
            )
        })
        .unwrap_or_default()
}
