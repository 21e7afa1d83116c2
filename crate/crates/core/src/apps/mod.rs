//! Application endpoints attached to node forwarders.
//!
//! Every endpoint is a deterministic state machine: it takes packets, timer
//! firings and the current time, and returns the packets it wants sent. The
//! simulator owns scheduling.

mod controller;
mod light;
mod luminosity;
mod occupancy;

use thiserror::Error;

use crate::names::{Name, NameComponent};

pub use controller::{
    decide_lights, AckHarvest, AckOutcome, AreaConfig, AreaState, Command, ControlMode, Controller, ControllerState,
    DecisionRecord, HarvestError, HarvestEvent, HarvestStatus, HarvestStep, Notification, NotificationOutcome,
    Thresholds,
};
pub use light::{Actuation, LightNode};
pub use luminosity::{luminosity_tick, lux_component, parse_lux, LuminosityConfig};
pub use occupancy::{
    omi_step, AckResult, Direction, Movement, OccupancyNotifier, OmiPattern, OmiState, Outstanding, Pending,
    TimeoutOutcome,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AppError {
    #[error("malformed notification {0}")]
    MalformedNotification(Name),

    #[error("unknown area {0}")]
    UnknownArea(NameComponent),

    #[error("unknown command {command} under {prefix}")]
    UnknownCommand { prefix: Name, command: NameComponent },

    #[error("unicast issue needs at least one light")]
    NoLights,

    #[error("invalid thresholds: min {min} must be below max {max}")]
    InvalidThresholds { min: u32, max: u32 },

    #[error("harvest command must set MustBeFresh")]
    HarvestNotFresh,
}
