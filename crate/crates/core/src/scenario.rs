//! Scenario files: a sectioned `key = value` text format plus schedule lines.
//!
//! ```text
//! [topology]
//! kind = home
//! nodes = 3
//!
//! [links]
//! latency_ms = 5
//! loss.home2 = 0.2
//!
//! [schedule]
//! seed = 7
//! duration_ms = 600000
//! lux 0 * 450
//! move 30000 IN od1
//! command 5000 /home/light/floor1 switchOFF 3
//! ```
//!
//! Files are parsed into a flat key map first so `--set` overrides can be
//! applied before the typed [`Scenario`] is built and validated.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::apps::{Command, ControlMode, Direction, Thresholds};
use crate::names::Name;
use crate::time::VirtualTime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("unknown key {0}")]
    UnknownKey(String),

    #[error("override {0:?} is not key=value")]
    MalformedOverride(String),
}

fn invalid(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

const KNOWN_KEYS: &[&str] = &[
    "topology.kind",
    "topology.nodes",
    "topology.m",
    "topology.n",
    "topology.filtering",
    "links.latency_ms",
    "links.loss_rate",
    "links.processing_ms",
    "thresholds.min_lux",
    "thresholds.max_lux",
    "apps.luminosity",
    "apps.lux_period_ms",
    "apps.lux_lifetime_ms",
    "apps.initial_lux",
    "apps.omi_delay_ms",
    "apps.notify_lifetime_ms",
    "apps.max_retransmissions",
    "apps.ack_freshness_ms",
    "apps.command_lifetime_ms",
    "apps.max_rebroadcasts",
    "apps.control",
    "schedule.seed",
    "schedule.duration_ms",
];

/// Short names accepted by `--set`.
pub const OVERRIDE_ALIASES: &[(&str, &str)] = &[
    ("seed", "schedule.seed"),
    ("duration", "schedule.duration_ms"),
    ("loss_rate", "links.loss_rate"),
    ("latency", "links.latency_ms"),
    ("processing", "links.processing_ms"),
    ("filtering", "topology.filtering"),
    ("m", "topology.m"),
    ("n", "topology.n"),
    ("N", "topology.nodes"),
    ("nodes", "topology.nodes"),
    ("min_lux", "thresholds.min_lux"),
    ("max_lux", "thresholds.max_lux"),
    ("control", "apps.control"),
];

fn is_known_key(key: &str) -> bool {
    if KNOWN_KEYS.contains(&key) {
        return true;
    }
    ["links.latency.", "links.loss."]
        .iter()
        .any(|p| key.strip_prefix(p).is_some_and(|label| !label.is_empty()))
}

fn resolve_key(key: &str) -> Result<String, ScenarioError> {
    let full = OVERRIDE_ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map_or(key, |(_, full)| full);
    if is_known_key(full) {
        Ok(full.to_string())
    } else {
        Err(ScenarioError::UnknownKey(key.to_string()))
    }
}

/// A scenario file before typing: `section.key` values and schedule lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawScenario {
    values: BTreeMap<String, String>,
    /// Schedule lines with their source line numbers.
    events: Vec<(usize, String)>,
}

impl RawScenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut raw = RawScenario::default();
        let mut section: Option<String> = None;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let syntax = |message: String| ScenarioError::Syntax { line: lineno, message };
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(format!("unterminated section header {line:?}")))?
                    .trim();
                if !["topology", "links", "schedule", "thresholds", "apps"].contains(&name) {
                    return Err(syntax(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some(sec) = section.as_deref() else {
                return Err(syntax("content before the first section".into()));
            };
            match line.split_once('=') {
                Some((k, v)) => {
                    let key = format!("{sec}.{}", k.trim());
                    if !is_known_key(&key) {
                        return Err(syntax(format!("unknown key {key}")));
                    }
                    if raw.values.insert(key.clone(), v.trim().to_string()).is_some() {
                        return Err(syntax(format!("duplicate key {key}")));
                    }
                }
                None if sec == "schedule" => raw.events.push((lineno, line.to_string())),
                None => return Err(syntax(format!("expected key = value, got {line:?}"))),
            }
        }
        Ok(raw)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Applies one `key=value` override. Keys are either `section.key` or one
    /// of [`OVERRIDE_ALIASES`].
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ScenarioError> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| ScenarioError::MalformedOverride(spec.to_string()))?;
        let key = resolve_key(k.trim())?;
        self.values.insert(key, v.trim().to_string());
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologySpec {
    /// Star around one home router.
    Home { nodes: usize },
    /// Chain of `m` routers with `n` light sections each.
    Exhibition { m: usize, n: usize, filtering: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub latency_ms: u64,
    pub loss_rate: f64,
}

/// Link defaults plus per-link overrides keyed by link label.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub latency_ms: u64,
    pub loss_rate: f64,
    pub processing_ms: u64,
    pub latency_overrides: BTreeMap<String, u64>,
    pub loss_overrides: BTreeMap<String, f64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            latency_ms: 5,
            loss_rate: 0.0,
            processing_ms: 1,
            latency_overrides: BTreeMap::new(),
            loss_overrides: BTreeMap::new(),
        }
    }
}

impl LinkConfig {
    pub fn params(&self, link: &str) -> LinkParams {
        LinkParams {
            latency_ms: self.latency_overrides.get(link).copied().unwrap_or(self.latency_ms),
            loss_rate: self.loss_overrides.get(link).copied().unwrap_or(self.loss_rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppParams {
    pub luminosity: bool,
    pub lux_period_ms: u64,
    pub lux_lifetime_ms: u64,
    /// Reading reported before the first `lux` line applies.
    pub initial_lux: u32,
    pub omi_delay_ms: u64,
    pub notify_lifetime_ms: u64,
    pub max_retransmissions: u32,
    pub ack_freshness_ms: u64,
    pub command_lifetime_ms: u64,
    pub max_rebroadcasts: u32,
    pub control: ControlMode,
}

impl Default for AppParams {
    fn default() -> Self {
        Self {
            luminosity: true,
            lux_period_ms: 5000,
            lux_lifetime_ms: 2000,
            initial_lux: 500,
            omi_delay_ms: 2000,
            notify_lifetime_ms: 4000,
            max_retransmissions: 3,
            ack_freshness_ms: 1000,
            command_lifetime_ms: 4000,
            max_rebroadcasts: 3,
            control: ControlMode::Multicast,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveEvent {
    pub at: VirtualTime,
    pub direction: Direction,
    /// Occupancy detector id, e.g. `od1`.
    pub detector: String,
}

/// `None` targets every luminosity detector (`*` in files).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LuxEvent {
    pub at: VirtualTime,
    pub detector: Option<String>,
    pub value: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandEvent {
    pub at: VirtualTime,
    pub prefix: Name,
    pub command: Command,
    pub expected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: TopologySpec,
    pub links: LinkConfig,
    pub thresholds: Thresholds,
    pub apps: AppParams,
    pub seed: u64,
    pub duration_ms: u64,
    pub moves: Vec<MoveEvent>,
    pub lux: Vec<LuxEvent>,
    pub commands: Vec<CommandEvent>,
}

/// Movement gaits take 800 ms; detections on one detector must not overlap.
pub const MIN_MOVE_SPACING_MS: u64 = 1000;

impl Scenario {
    /// Empty scenario over `topology` with default parameters.
    pub fn new(topology: TopologySpec) -> Self {
        Self {
            topology,
            links: LinkConfig::default(),
            thresholds: Thresholds::new(300, 800).expect("valid defaults"),
            apps: AppParams::default(),
            seed: 1,
            duration_ms: 0,
            moves: Vec::new(),
            lux: Vec::new(),
            commands: Vec::new(),
        }
    }

    /// Three home nodes, twenty alternating IN/OUT movements one minute
    /// apart, five-second lux readings, no loss.
    pub fn reference_home() -> Self {
        let mut s = Scenario::new(TopologySpec::Home { nodes: 3 });
        s.seed = 2017;
        s.duration_ms = 1_200_000;
        s.moves = (0..20u64)
            .map(|k| MoveEvent {
                at: VirtualTime(30_000 + 60_000 * k),
                direction: if k % 2 == 0 { Direction::In } else { Direction::Out },
                detector: format!("od{}", k % 3 + 1),
            })
            .collect();
        s.lux = [(0, 450), (240_000, 150), (480_000, 900), (720_000, 200), (960_000, 550)]
            .into_iter()
            .map(|(at, value)| LuxEvent {
                at: VirtualTime(at),
                detector: None,
                value,
            })
            .collect();
        s
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Self::from_raw(&RawScenario::parse(text)?)
    }

    /// Parses `text`, applies `overrides` in order, then validates.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ScenarioError> {
        let mut raw = RawScenario::parse(text)?;
        for o in overrides {
            raw.apply_override(o)?;
        }
        Self::from_raw(&raw)
    }

    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ScenarioError> {
        Self::parse_with_overrides(&self.render(), overrides)
    }

    pub fn from_raw(raw: &RawScenario) -> Result<Self, ScenarioError> {
        let kind = raw.get("topology.kind").unwrap_or("home");
        let topology = match kind {
            "home" => {
                for k in ["topology.m", "topology.n", "topology.filtering"] {
                    if raw.get(k).is_some() {
                        return Err(invalid(k, "only applies to kind = exhibition"));
                    }
                }
                TopologySpec::Home {
                    nodes: num(raw, "topology.nodes", 3)?,
                }
            }
            "exhibition" => {
                if raw.get("topology.nodes").is_some() {
                    return Err(invalid("topology.nodes", "only applies to kind = home"));
                }
                TopologySpec::Exhibition {
                    m: num(raw, "topology.m", 5)?,
                    n: num(raw, "topology.n", 4)?,
                    filtering: flag(raw, "topology.filtering", false)?,
                }
            }
            other => {
                return Err(invalid(
                    "topology.kind",
                    format!("expected home or exhibition, got {other:?}"),
                ))
            }
        };

        let mut links = LinkConfig {
            latency_ms: num(raw, "links.latency_ms", 5)?,
            loss_rate: rate(raw, "links.loss_rate")?.unwrap_or(0.0),
            processing_ms: num(raw, "links.processing_ms", 1)?,
            ..LinkConfig::default()
        };
        for key in raw.values.keys() {
            if let Some(label) = key.strip_prefix("links.latency.") {
                links.latency_overrides.insert(label.to_string(), num(raw, key, 0)?);
            } else if let Some(label) = key.strip_prefix("links.loss.") {
                links
                    .loss_overrides
                    .insert(label.to_string(), rate(raw, key)?.unwrap_or(0.0));
            }
        }

        let min = num(raw, "thresholds.min_lux", 300)?;
        let max = num(raw, "thresholds.max_lux", 800)?;
        let thresholds = Thresholds::new(min, max)
            .map_err(|_| invalid("thresholds.min_lux", format!("must be below max_lux ({min} >= {max})")))?;

        let d = AppParams::default();
        let apps = AppParams {
            luminosity: flag(raw, "apps.luminosity", d.luminosity)?,
            lux_period_ms: num(raw, "apps.lux_period_ms", d.lux_period_ms)?,
            lux_lifetime_ms: num(raw, "apps.lux_lifetime_ms", d.lux_lifetime_ms)?,
            initial_lux: num(raw, "apps.initial_lux", d.initial_lux)?,
            omi_delay_ms: num(raw, "apps.omi_delay_ms", d.omi_delay_ms)?,
            notify_lifetime_ms: num(raw, "apps.notify_lifetime_ms", d.notify_lifetime_ms)?,
            max_retransmissions: num(raw, "apps.max_retransmissions", d.max_retransmissions)?,
            ack_freshness_ms: num(raw, "apps.ack_freshness_ms", d.ack_freshness_ms)?,
            command_lifetime_ms: num(raw, "apps.command_lifetime_ms", d.command_lifetime_ms)?,
            max_rebroadcasts: num(raw, "apps.max_rebroadcasts", d.max_rebroadcasts)?,
            control: match raw.get("apps.control") {
                None => d.control,
                Some(v) => v.parse().map_err(|e: String| invalid("apps.control", e))?,
            },
        };

        let mut s = Scenario {
            topology,
            links,
            thresholds,
            apps,
            seed: num(raw, "schedule.seed", 1)?,
            duration_ms: num(raw, "schedule.duration_ms", 0)?,
            moves: Vec::new(),
            lux: Vec::new(),
            commands: Vec::new(),
        };
        for (line, text) in &raw.events {
            s.parse_event(*line, text)?;
        }
        s.validate()?;
        Ok(s)
    }

    fn parse_event(&mut self, line: usize, text: &str) -> Result<(), ScenarioError> {
        let syntax = |message: String| ScenarioError::Syntax { line, message };
        let fields: Vec<&str> = text.split_whitespace().collect();
        let time = |s: &str| {
            s.parse::<u64>()
                .map(VirtualTime)
                .map_err(|_| syntax(format!("bad time {s:?}")))
        };
        match fields.as_slice() {
            ["move", t, dir, det] => self.moves.push(MoveEvent {
                at: time(t)?,
                direction: dir.parse().map_err(|_| syntax(format!("bad direction {dir:?}")))?,
                detector: det.to_string(),
            }),
            ["lux", t, det, v] => self.lux.push(LuxEvent {
                at: time(t)?,
                detector: (*det != "*").then(|| det.to_string()),
                value: v.parse().map_err(|_| syntax(format!("bad lux value {v:?}")))?,
            }),
            ["command", t, prefix, cmd, expected] => self.commands.push(CommandEvent {
                at: time(t)?,
                prefix: Name::parse(prefix).map_err(|e| syntax(e.to_string()))?,
                command: cmd.parse().map_err(syntax)?,
                expected: expected
                    .parse()
                    .map_err(|_| syntax(format!("bad light count {expected:?}")))?,
            }),
            _ => return Err(syntax(format!("unrecognised schedule line {text:?}"))),
        }
        Ok(())
    }

    /// Link labels for the configured topology.
    pub fn link_labels(&self) -> Vec<String> {
        match self.topology {
            TopologySpec::Home { nodes } => std::iter::once("controller".to_string())
                .chain((1..=nodes).map(|i| format!("home{i}")))
                .collect(),
            TopologySpec::Exhibition { m, n, .. } => std::iter::once("controller".to_string())
                .chain((2..=m).map(|k| format!("router{k}")))
                .chain((1..=m).flat_map(|k| (1..=n).map(move |j| format!("light-{k}-{j}"))))
                .collect(),
        }
    }

    fn detectors(&self, prefix: &str) -> Vec<String> {
        match self.topology {
            TopologySpec::Home { nodes } => (1..=nodes).map(|i| format!("{prefix}{i}")).collect(),
            TopologySpec::Exhibition { .. } => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self.topology {
            TopologySpec::Home { nodes } => {
                if nodes < 1 {
                    return Err(invalid("topology.nodes", "must be at least 1"));
                }
            }
            TopologySpec::Exhibition { m, n, .. } => {
                if m < 1 {
                    return Err(invalid("topology.m", "must be at least 1"));
                }
                if n < 1 {
                    return Err(invalid("topology.n", "must be at least 1"));
                }
            }
        }
        let labels = self.link_labels();
        for key in self.links.latency_overrides.keys() {
            if !labels.contains(key) {
                return Err(invalid(&format!("links.latency.{key}"), "no such link"));
            }
        }
        for (key, r) in &self.links.loss_overrides {
            if !labels.contains(key) {
                return Err(invalid(&format!("links.loss.{key}"), "no such link"));
            }
            check_rate(&format!("links.loss.{key}"), *r)?;
        }
        check_rate("links.loss_rate", self.links.loss_rate)?;
        if self.apps.lux_period_ms == 0 {
            return Err(invalid("apps.lux_period_ms", "must be positive"));
        }
        if self.apps.notify_lifetime_ms == 0 {
            return Err(invalid("apps.notify_lifetime_ms", "must be positive"));
        }

        let ods = self.detectors("od");
        let mut last = None;
        let mut last_on: BTreeMap<&str, VirtualTime> = BTreeMap::new();
        for m in &self.moves {
            if !ods.contains(&m.detector) {
                return Err(invalid(
                    "schedule",
                    format!("move names unknown detector {}", m.detector),
                ));
            }
            if last.is_some_and(|t| m.at <= t) {
                return Err(invalid(
                    "schedule",
                    format!("move times must be strictly increasing (at {})", m.at),
                ));
            }
            if let Some(prev) = last_on.get(m.detector.as_str()) {
                if m.at.since(*prev) < MIN_MOVE_SPACING_MS {
                    return Err(invalid(
                        "schedule",
                        format!(
                            "moves on {} must be at least {MIN_MOVE_SPACING_MS} ms apart",
                            m.detector
                        ),
                    ));
                }
            }
            last = Some(m.at);
            last_on.insert(&m.detector, m.at);
        }

        let lds = self.detectors("ld");
        let mut last_lux: BTreeMap<Option<&str>, VirtualTime> = BTreeMap::new();
        for l in &self.lux {
            if let Some(d) = &l.detector {
                if !lds.contains(d) {
                    return Err(invalid("schedule", format!("lux names unknown detector {d}")));
                }
            } else if lds.is_empty() {
                return Err(invalid("schedule", "lux lines need luminosity detectors"));
            }
            let key = l.detector.as_deref();
            if last_lux.get(&key).is_some_and(|t| l.at <= *t) {
                return Err(invalid(
                    "schedule",
                    format!("lux times must be strictly increasing (at {})", l.at),
                ));
            }
            last_lux.insert(key, l.at);
        }

        let light_root = Name::parse("/home/light").expect("static");
        let mut last = None;
        for c in &self.commands {
            if !light_root.is_prefix_of(&c.prefix) {
                return Err(invalid(
                    "schedule",
                    format!("command prefix {} is not under /home/light", c.prefix),
                ));
            }
            if c.expected < 1 {
                return Err(invalid("schedule", "command must expect at least 1 light"));
            }
            if last.is_some_and(|t| c.at <= t) {
                return Err(invalid(
                    "schedule",
                    format!("command times must be strictly increasing (at {})", c.at),
                ));
            }
            last = Some(c.at);
        }
        Ok(())
    }

    /// Step-hold lux value for detector `ld` at `t`.
    pub fn lux_at(&self, ld: &str, t: VirtualTime) -> u32 {
        self.lux
            .iter()
            .enumerate()
            .filter(|(_, l)| l.at <= t && l.detector.as_deref().is_none_or(|d| d == ld))
            .max_by_key(|(i, l)| (l.at, *i))
            .map_or(self.apps.initial_lux, |(_, l)| l.value)
    }

    /// Canonical text form. Parsing it yields an equal scenario.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("[topology]\n");
        match self.topology {
            TopologySpec::Home { nodes } => {
                let _ = writeln!(out, "kind = home\nnodes = {nodes}");
            }
            TopologySpec::Exhibition { m, n, filtering } => {
                let _ = writeln!(out, "kind = exhibition\nm = {m}\nn = {n}\nfiltering = {filtering}");
            }
        }
        let l = &self.links;
        let _ = writeln!(
            out,
            "\n[links]\nlatency_ms = {}\nloss_rate = {}\nprocessing_ms = {}",
            l.latency_ms, l.loss_rate, l.processing_ms
        );
        for (k, v) in &l.latency_overrides {
            let _ = writeln!(out, "latency.{k} = {v}");
        }
        for (k, v) in &l.loss_overrides {
            let _ = writeln!(out, "loss.{k} = {v}");
        }
        let _ = writeln!(
            out,
            "\n[thresholds]\nmin_lux = {}\nmax_lux = {}",
            self.thresholds.min_lux(),
            self.thresholds.max_lux()
        );
        let a = &self.apps;
        let _ = writeln!(
            out,
            "\n[apps]\nluminosity = {}\nlux_period_ms = {}\nlux_lifetime_ms = {}\ninitial_lux = {}\n\
             omi_delay_ms = {}\nnotify_lifetime_ms = {}\nmax_retransmissions = {}\nack_freshness_ms = {}\n\
             command_lifetime_ms = {}\nmax_rebroadcasts = {}\ncontrol = {}",
            a.luminosity,
            a.lux_period_ms,
            a.lux_lifetime_ms,
            a.initial_lux,
            a.omi_delay_ms,
            a.notify_lifetime_ms,
            a.max_retransmissions,
            a.ack_freshness_ms,
            a.command_lifetime_ms,
            a.max_rebroadcasts,
            a.control.as_str()
        );
        let _ = writeln!(
            out,
            "\n[schedule]\nseed = {}\nduration_ms = {}",
            self.seed, self.duration_ms
        );
        for m in &self.moves {
            let _ = writeln!(out, "move {} {} {}", m.at, m.direction.as_str(), m.detector);
        }
        for x in &self.lux {
            let _ = writeln!(out, "lux {} {} {}", x.at, x.detector.as_deref().unwrap_or("*"), x.value);
        }
        for c in &self.commands {
            let _ = writeln!(out, "command {} {} {} {}", c.at, c.prefix, c.command, c.expected);
        }
        out
    }
}

fn num<T: std::str::FromStr>(raw: &RawScenario, key: &str, default: T) -> Result<T, ScenarioError> {
    match raw.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| invalid(key, format!("expected a non-negative integer, got {v:?}"))),
    }
}

fn flag(raw: &RawScenario, key: &str, default: bool) -> Result<bool, ScenarioError> {
    match raw.get(key) {
        None => Ok(default),
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        Some(v) => Err(invalid(key, format!("expected true or false, got {v:?}"))),
    }
}

fn rate(raw: &RawScenario, key: &str) -> Result<Option<f64>, ScenarioError> {
    raw.get(key)
        .map(|v| {
            let r: f64 = v
                .parse()
                .map_err(|_| invalid(key, format!("expected a probability, got {v:?}")))?;
            check_rate(key, r).map(|_| r)
        })
        .transpose()
}

fn check_rate(key: &str, r: f64) -> Result<(), ScenarioError> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(invalid(key, format!("must be within [0, 1], got {r}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::name;
    use proptest::prelude::*;

    const HOME: &str = "
# comment
[topology]
kind = home
nodes = 2

[links]
latency.home1 = 7
loss.home2 = 0.25

[schedule]
seed = 9
duration_ms = 60000
lux 0 * 450
lux 10000 ld2 100
move 1000 IN od1
move 5000 OUT od2   # trailing comment
command 2000 /home/light/floor1 switchOFF 2
";

    #[test]
    fn parses_home_file() {
        let s = Scenario::parse(HOME).unwrap();
        assert_eq!(s.topology, TopologySpec::Home { nodes: 2 });
        assert_eq!(s.seed, 9);
        assert_eq!(s.duration_ms, 60000);
        assert_eq!(s.links.params("home1").latency_ms, 7);
        assert_eq!(s.links.params("home2").loss_rate, 0.25);
        assert_eq!(s.links.params("controller").latency_ms, 5);
        assert_eq!(s.moves.len(), 2);
        assert_eq!(s.moves[1].direction, Direction::Out);
        assert_eq!(s.commands[0].prefix, name("/home/light/floor1"));
        assert_eq!(s.commands[0].expected, 2);
    }

    #[test]
    fn lux_step_hold() {
        let s = Scenario::parse(HOME).unwrap();
        assert_eq!(s.lux_at("ld1", VirtualTime(0)), 450);
        assert_eq!(s.lux_at("ld2", VirtualTime(9999)), 450);
        assert_eq!(s.lux_at("ld2", VirtualTime(10000)), 100);
        assert_eq!(s.lux_at("ld1", VirtualTime(50000)), 450);
        let empty = Scenario::new(TopologySpec::Home { nodes: 1 });
        assert_eq!(empty.lux_at("ld1", VirtualTime(5)), 500);
    }

    #[test]
    fn render_round_trips() {
        for s in [Scenario::parse(HOME).unwrap(), Scenario::reference_home()] {
            let text = s.render();
            assert_eq!(Scenario::parse(&text).unwrap(), s);
            assert_eq!(Scenario::parse(&text).unwrap().render(), text);
        }
    }

    #[test]
    fn overrides_and_aliases() {
        let s = Scenario::parse_with_overrides(HOME, &["seed=11".into(), "links.loss.home1=0.5".into(), "N=3".into()])
            .unwrap();
        assert_eq!(s.seed, 11);
        assert_eq!(s.links.params("home1").loss_rate, 0.5);
        assert_eq!(s.topology, TopologySpec::Home { nodes: 3 });

        let err = Scenario::parse_with_overrides(HOME, &["bogus=1".into()]).unwrap_err();
        assert_eq!(err, ScenarioError::UnknownKey("bogus".into()));
        let err = Scenario::parse_with_overrides(HOME, &["seed".into()]).unwrap_err();
        assert!(matches!(err, ScenarioError::MalformedOverride(_)));
    }

    #[test]
    fn exhibition_overrides() {
        let text = "[topology]\nkind = exhibition\nm = 5\nn = 4\n";
        let s = Scenario::parse_with_overrides(text, &["filtering=true".into()]).unwrap();
        assert_eq!(
            s.topology,
            TopologySpec::Exhibition {
                m: 5,
                n: 4,
                filtering: true
            }
        );

        let err = Scenario::parse_with_overrides(text, &["m=0".into()]).unwrap_err();
        assert_eq!(err.to_string(), "topology.m: must be at least 1");
        let err = Scenario::parse_with_overrides(HOME, &["filtering=true".into()]).unwrap_err();
        assert!(err.to_string().starts_with("topology.filtering"));
    }

    #[test]
    fn validation_errors() {
        let cases = [
            ("[topology]\nnodes = 0\n", "topology.nodes"),
            ("[thresholds]\nmin_lux = 800\nmax_lux = 300\n", "thresholds.min_lux"),
            ("[links]\nloss_rate = 1.5\n", "links.loss_rate"),
            ("[links]\nloss.home9 = 0.1\n", "links.loss.home9"),
            ("[schedule]\nmove 5 IN od1\nmove 5 OUT od2\n", "schedule"),
            ("[schedule]\nmove 5 IN od7\n", "schedule"),
            ("[schedule]\nmove 0 IN od1\nmove 500 OUT od1\n", "schedule"),
            ("[schedule]\ncommand 0 /home/other switchON 1\n", "schedule"),
            ("[schedule]\ncommand 0 /home/light switchON 0\n", "schedule"),
            ("[apps]\nlux_period_ms = 0\n", "apps.lux_period_ms"),
        ];
        for (text, field) in cases {
            match Scenario::parse(text) {
                Err(ScenarioError::Invalid { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        for (text, line) in [
            ("nodes = 3\n", 1),
            ("[topology]\n[weird]\n", 2),
            ("[topology]\nnodes\n", 2),
            ("[topology]\nnodes = 1\nnodes = 2\n", 3),
            ("[schedule]\nmove x IN od1\n", 2),
            ("[schedule]\n\nteleport 5\n", 3),
            ("[topology\n", 1),
            ("[topology]\ncolour = red\n", 2),
        ] {
            match Scenario::parse(text) {
                Err(ScenarioError::Syntax { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn link_labels() {
        let s = Scenario::new(TopologySpec::Exhibition {
            m: 2,
            n: 2,
            filtering: false,
        });
        assert_eq!(
            s.link_labels(),
            [
                "controller",
                "router2",
                "light-1-1",
                "light-1-2",
                "light-2-1",
                "light-2-2"
            ]
        );
    }

    proptest! {
        #[test]
        fn any_text_parses_or_errors(text in "\\PC{0,200}") {
            let _ = Scenario::parse(&text);
        }

        #[test]
        fn generated_scenarios_round_trip(
            nodes in 1usize..5,
            seed in any::<u64>(),
            loss in 0.0f64..=1.0,
            gaps in proptest::collection::vec(1000u64..90_000, 0..8),
        ) {
            let mut s = Scenario::new(TopologySpec::Home { nodes });
            s.seed = seed;
            s.links.loss_rate = loss;
            let mut t = 0;
            for (i, g) in gaps.iter().enumerate() {
                t += g;
                s.moves.push(MoveEvent {
                    at: VirtualTime(t),
                    direction: if i % 2 == 0 { Direction::In } else { Direction::Out },
                    detector: "od1".into(),
                });
            }
            s.duration_ms = t + 10_000;
            prop_assert_eq!(Scenario::parse(&s.render()).unwrap(), s);
        }
    }
}
