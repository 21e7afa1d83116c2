//! Named-data smart-lighting stack.
//!
//! - [`names`]: hierarchical names, face-filter patterns, exclude filters.
//! - [`packets`]: Interest/Data, notification and command builders, wire sizes.
//! - [`forwarder`]: FIB/PIT/CS and the Interest and Data pipelines.
//! - [`apps`]: luminosity and occupancy detectors, light nodes, controller.
//! - [`simnet`]: deterministic discrete-event network, topologies, metrics.
//! - [`scenario`]: scenario file format and overrides.
//! - [`trace`]: run traces for replay checks.

pub mod apps;
pub mod forwarder;
pub mod names;
pub mod packets;
pub mod scenario;
pub mod simnet;
pub mod time;
pub mod trace;

pub use forwarder::{FaceId, Forwarder, ForwarderActions};
pub use names::{ExcludeFilter, Name, NameComponent, NameError, NamePattern};
pub use packets::{Data, Interest, NodeId, Packet, PacketType, WireSizeModel};
pub use time::VirtualTime;
