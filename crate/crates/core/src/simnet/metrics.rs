//! Run metrics, their CSV forms, and empirical CDFs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::apps::{Actuation, DecisionRecord, Movement};
use crate::names::Name;
use crate::packets::PacketType;
use crate::time::VirtualTime;

use super::SimError;

/// Operation classes for delivery delays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DelayClass {
    /// Luminosity detector to controller.
    LdShc,
    /// Occupancy detector to controller, measured from detection.
    OdShc,
    /// Controller to light node, measured from command issue.
    ShcLn,
    /// Occupancy detection to the ACK arriving back at the detector.
    OdAckRtt,
}

impl DelayClass {
    pub const ALL: [DelayClass; 4] = [
        DelayClass::LdShc,
        DelayClass::OdShc,
        DelayClass::ShcLn,
        DelayClass::OdAckRtt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DelayClass::LdShc => "ld_shc",
            DelayClass::OdShc => "od_shc",
            DelayClass::ShcLn => "shc_ln",
            DelayClass::OdAckRtt => "od_ack_rtt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

/// `Up` runs from the node a link is named after toward its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkDir {
    Up,
    Down,
}

impl LinkDir {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkDir::Up => "up",
            LinkDir::Down => "down",
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            LinkDir::Up => LinkDir::Down,
            LinkDir::Down => LinkDir::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkCounts {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
}

/// One packet put on a link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRecord {
    pub sent_at: VirtualTime,
    pub link: String,
    pub dir: LinkDir,
    pub packet_type: PacketType,
    pub name: Name,
    /// `None` when the packet was lost.
    pub arrives_at: Option<VirtualTime>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Failures {
    pub notify_retransmissions: u64,
    pub notify_give_ups: u64,
    pub harvest_rebroadcasts: u64,
    pub harvest_abandoned: u64,
    pub duplicate_acks: u64,
    pub duplicate_notifications: u64,
    pub dropped_no_route: u64,
    pub dropped_duplicate_nonce: u64,
    pub app_errors: u64,
}

/// A packet handed to an application.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Delivery {
    pub at: VirtualTime,
    pub app: String,
    pub packet_type: PacketType,
    pub name: Name,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActuationRecord {
    pub at: VirtualTime,
    pub light: String,
    pub actuation: Actuation,
    pub command: Name,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotifyOutcome {
    /// Detected but not yet sent, or still unacknowledged at the end.
    Pending,
    Acked,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotificationRecord {
    pub detector: String,
    pub movement: Movement,
    pub name: Name,
    pub attempts: u32,
    pub outcome: NotifyOutcome,
}

/// How often the controller saw one occupancy notification name.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Receipts {
    pub total: u32,
    /// Receipts that changed state (not deduplicated).
    pub fresh: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetricsReport {
    pub delay_samples: BTreeMap<DelayClass, Vec<u64>>,
    pub messages: BTreeMap<(String, LinkDir, PacketType), LinkCounts>,
    pub fib_sizes: BTreeMap<String, usize>,
    pub failures: Failures,
    pub link_log: Vec<LinkRecord>,
    pub deliveries: Vec<Delivery>,
    pub actuations: Vec<ActuationRecord>,
    pub decisions: Vec<DecisionRecord>,
    pub notifications: Vec<NotificationRecord>,
    pub controller_receipts: BTreeMap<Name, Receipts>,
    /// One line per processed event, in processing order.
    pub events: Vec<String>,
}

impl MetricsReport {
    pub fn samples(&self, class: DelayClass) -> &[u64] {
        self.delay_samples.get(&class).map_or(&[], Vec::as_slice)
    }

    pub fn links(&self) -> impl Iterator<Item = &str> {
        let mut last: Option<&str> = None;
        self.messages.keys().filter_map(move |(l, _, _)| {
            if last == Some(l.as_str()) {
                None
            } else {
                last = Some(l.as_str());
                last
            }
        })
    }

    /// `class,sample_ms`
    pub fn delays_csv(&self) -> String {
        let mut out = String::from("class,sample_ms\n");
        for (class, samples) in &self.delay_samples {
            for s in samples {
                let _ = writeln!(out, "{},{s}", class.as_str());
            }
        }
        out
    }

    /// `link,dir,type,count`, counting packets sent onto the link.
    pub fn messages_csv(&self) -> String {
        let mut out = String::from("link,dir,type,count\n");
        for ((link, dir, ty), c) in &self.messages {
            let _ = writeln!(out, "{link},{},{},{}", dir.as_str(), ty.as_str(), c.sent);
        }
        out
    }

    /// `node,fib_size`
    pub fn fib_csv(&self) -> String {
        let mut out = String::from("node,fib_size\n");
        for (node, size) in &self.fib_sizes {
            let _ = writeln!(out, "{node},{size}");
        }
        out
    }

    pub fn decisions_csv(&self) -> String {
        let mut out = format!("{}\n", DecisionRecord::CSV_HEADER);
        for d in &self.decisions {
            let _ = writeln!(out, "{}", d.csv_row());
        }
        out
    }

    /// `value_ms,fraction`
    pub fn cdf_csv(&self, class: DelayClass) -> Result<String, SimError> {
        let mut out = String::from("value_ms,fraction\n");
        for p in cdf(self.samples(class))? {
            let _ = writeln!(out, "{},{}", p.value_ms, p.fraction);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPoint {
    pub value_ms: u64,
    /// Fraction of samples `<= value_ms`.
    pub fraction: f64,
}

/// Empirical CDF with one point per distinct sample value.
pub fn cdf(samples: &[u64]) -> Result<Vec<CdfPoint>, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut points: Vec<CdfPoint> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(p) if p.value_ms == *v => p.fraction = fraction,
            _ => points.push(CdfPoint { value_ms: *v, fraction }),
        }
    }
    Ok(points)
}

/// Smallest value whose cumulative fraction reaches `p` (nearest rank).
pub fn percentile(points: &[CdfPoint], p: f64) -> Option<u64> {
    const EPS: f64 = 1e-12;
    points.iter().find(|c| c.fraction + EPS >= p).map(|c| c.value_ms)
}

/// Packets of `packet_type` sent onto `link`, both directions.
pub fn count_messages(report: &MetricsReport, link: &str, packet_type: PacketType) -> Result<u64, SimError> {
    Ok(count_messages_dir(report, link, LinkDir::Up, packet_type)?
        + count_messages_dir(report, link, LinkDir::Down, packet_type)?)
}

pub fn count_messages_dir(
    report: &MetricsReport,
    link: &str,
    dir: LinkDir,
    packet_type: PacketType,
) -> Result<u64, SimError> {
    report
        .messages
        .get(&(link.to_string(), dir, packet_type))
        .map(|c| c.sent)
        .ok_or_else(|| SimError::UnknownLink(link.to_string()))
}
