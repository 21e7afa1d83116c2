//! Run traces: the canonical scenario followed by every observable outcome
//! of the run, one line each. Replaying re-runs the scenario and compares
//! line by line.

use thiserror::Error;

use crate::scenario::{Scenario, ScenarioError};
use crate::simnet::{run_scenario, MetricsReport, SimError};

pub const TRACE_MARKER: &str = "[trace]";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace has no {TRACE_MARKER} section")]
    MissingMarker,

    #[error("trace scenario: {0}")]
    Scenario(#[from] ScenarioError),

    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub scenario: Scenario,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayOutcome {
    Match,
    /// First differing line; `None` when one side ran out of lines.
    Diverged {
        index: usize,
        recorded: Option<String>,
        replayed: Option<String>,
    },
}

/// Flattens everything observable in `report` into trace lines.
pub fn report_lines(report: &MetricsReport) -> Vec<String> {
    let mut out: Vec<String> = report.events.iter().map(|e| format!("event {e}")).collect();
    for (class, samples) in &report.delay_samples {
        out.extend(samples.iter().map(|s| format!("delay {} {s}", class.as_str())));
    }
    for ((link, dir, ty), c) in &report.messages {
        out.push(format!(
            "link {link} {} {ty} sent={} delivered={} lost={}",
            dir.as_str(),
            c.sent,
            c.delivered,
            c.lost
        ));
    }
    for (node, size) in &report.fib_sizes {
        out.push(format!("fib {node} {size}"));
    }
    out.extend(report.decisions.iter().map(|d| format!("decision {}", d.csv_row())));
    out.push(format!("failures {:?}", report.failures));
    out
}

impl Trace {
    pub fn record(scenario: &Scenario, report: &MetricsReport) -> Self {
        Self {
            scenario: scenario.clone(),
            lines: report_lines(report),
        }
    }

    pub fn render(&self) -> String {
        let mut out = self.scenario.render();
        out.push('\n');
        out.push_str(TRACE_MARKER);
        out.push('\n');
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut scenario_text = String::new();
        let mut lines: Option<Vec<String>> = None;
        for line in text.lines() {
            match &mut lines {
                Some(v) => v.push(line.to_string()),
                None if line.trim() == TRACE_MARKER => lines = Some(Vec::new()),
                None => {
                    scenario_text.push_str(line);
                    scenario_text.push('\n');
                }
            }
        }
        let lines = lines.ok_or(TraceError::MissingMarker)?;
        Ok(Self {
            scenario: Scenario::parse(&scenario_text)?,
            lines,
        })
    }

    /// Re-runs the recorded scenario and reports the first divergence.
    pub fn replay(&self) -> Result<ReplayOutcome, TraceError> {
        let replayed = report_lines(&run_scenario(&self.scenario)?);
        Ok(first_divergence(&self.lines, &replayed))
    }
}

pub fn first_divergence(recorded: &[String], replayed: &[String]) -> ReplayOutcome {
    let n = recorded.len().max(replayed.len());
    (0..n)
        .find(|&i| recorded.get(i) != replayed.get(i))
        .map_or(ReplayOutcome::Match, |index| ReplayOutcome::Diverged {
            index,
            recorded: recorded.get(index).cloned(),
            replayed: replayed.get(index).cloned(),
        })
}
