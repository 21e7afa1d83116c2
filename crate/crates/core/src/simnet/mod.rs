//! Deterministic discrete-event network.
//!
//! A run is a pure function of its [`Scenario`]: events are ordered by
//! `(time, sequence)`, every random draw comes from seeded generators, and
//! all bookkeeping uses ordered maps.

mod engine;
mod metrics;
mod topology;

use thiserror::Error;

use crate::scenario::ScenarioError;

pub use crate::scenario::{Scenario, TopologySpec};
pub use engine::run_scenario;
pub use metrics::{
    cdf, count_messages, count_messages_dir, percentile, ActuationRecord, CdfPoint, DelayClass, Delivery, Failures,
    LinkCounts, LinkDir, LinkRecord, MetricsReport, NotificationRecord, NotifyOutcome, Receipts,
};
pub use topology::{
    build_exhibition_topology, build_home_topology, fib_report, AppSpec, AreaLayout, LinkSpec, NodeSpec, Role, Topology,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown link {0}")]
    UnknownLink(String),

    #[error("no samples")]
    EmptySamples,

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
