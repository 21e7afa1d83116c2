//! Interest and Data packets, notification and command name builders, and
//! the byte-size model used for overhead accounting.

use std::fmt;

use crate::names::{ExcludeFilter, Name, NameComponent};
use crate::time::VirtualTime;

/// Root of every name in the lighting namespace.
pub const ROOT: &str = "home";
/// Fixed component that marks an Interest as a pushed notification.
pub const PUBLISH: &str = "publish";
pub const SERVICE_LIGHT: &str = "light";
pub const SERVICE_LUMINOSITY: &str = "luminosity";
pub const SERVICE_OCCUPANCY: &str = "occupancy";
pub const SWITCH_ON: &str = "switchON";
pub const SWITCH_OFF: &str = "switchOFF";

/// Simulator-wide node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interest {
    pub name: Name,
    pub nonce: u32,
    /// Zero means no PIT entry is created anywhere along the path.
    pub lifetime_ms: u64,
    pub must_be_fresh: bool,
    pub exclude: ExcludeFilter,
    /// Nodes that forwarded this Interest. Simulator bookkeeping only; not
    /// counted by [`WireSizeModel`].
    pub hop_path: Vec<NodeId>,
}

impl Interest {
    pub fn new(name: Name, nonce: u32, lifetime_ms: u64) -> Self {
        Self {
            name,
            nonce,
            lifetime_ms,
            must_be_fresh: false,
            exclude: ExcludeFilter::new(),
            hop_path: Vec::new(),
        }
    }

    /// Same logical message with a new nonce and an empty hop path, as used
    /// for retransmissions.
    #[must_use]
    pub fn renewed(&self, nonce: u32) -> Self {
        Self {
            nonce,
            hop_path: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Data {
    pub name: Name,
    pub payload: Vec<u8>,
    pub freshness_period_ms: u64,
    /// Opaque and never validated.
    pub signature_placeholder: Vec<u8>,
}

impl Data {
    pub fn new(name: Name, payload: impl Into<Vec<u8>>, freshness_period_ms: u64) -> Self {
        Self {
            name,
            payload: payload.into(),
            freshness_period_ms,
            signature_placeholder: Vec::new(),
        }
    }

    /// Stale strictly after `inserted_at + freshness_period`.
    pub fn is_stale(&self, inserted_at: VirtualTime, now: VirtualTime) -> bool {
        now > inserted_at + self.freshness_period_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PacketType {
    Interest,
    Data,
}

impl PacketType {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketType::Interest => "interest",
            PacketType::Data => "data",
        }
    }
}

impl fmt::Display for PacketType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Packet {
    Interest(Interest),
    Data(Data),
}

impl Packet {
    pub fn name(&self) -> &Name {
        match self {
            Packet::Interest(i) => &i.name,
            Packet::Data(d) => &d.name,
        }
    }

    pub fn packet_type(&self) -> PacketType {
        match self {
            Packet::Interest(_) => PacketType::Interest,
            Packet::Data(_) => PacketType::Data,
        }
    }
}

impl From<Interest> for Packet {
    fn from(i: Interest) -> Self {
        Packet::Interest(i)
    }
}

impl From<Data> for Packet {
    fn from(d: Data) -> Self {
        Packet::Data(d)
    }
}

/// Byte accounting for packets. Only the exclude deltas are fixed; the
/// base sizes are arbitrary defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireSizeModel {
    pub interest_base: usize,
    pub per_component_overhead: usize,
    pub data_base: usize,
}

impl WireSizeModel {
    /// Controlling bytes added by a non-empty exclude field.
    pub const EXCLUDE_BASE: usize = 2;
    /// Bytes added per excluded light ID.
    pub const PER_EXCLUDED_ID: usize = 3;

    pub fn interest_size(&self, interest: &Interest) -> usize {
        let exclude = if interest.exclude.is_empty() {
            0
        } else {
            Self::EXCLUDE_BASE + Self::PER_EXCLUDED_ID * interest.exclude.len()
        };
        self.interest_base + self.name_size(&interest.name) + exclude
    }

    pub fn data_size(&self, data: &Data) -> usize {
        self.data_base + self.name_size(&data.name) + data.payload.len()
    }

    fn name_size(&self, name: &Name) -> usize {
        name.components()
            .iter()
            .map(|c| self.per_component_overhead + c.len())
            .sum()
    }
}

impl Default for WireSizeModel {
    fn default() -> Self {
        Self {
            interest_base: 40,
            per_component_overhead: 2,
            data_base: 60,
        }
    }
}

pub fn interest_wire_size(interest: &Interest, model: &WireSizeModel) -> usize {
    model.interest_size(interest)
}

fn component(s: &str) -> NameComponent {
    NameComponent::new(s).expect("static component")
}

/// `/home/<service>/publish`, the prefix a consumer registers to receive
/// notifications for `service`.
pub fn publish_prefix(service: &str) -> Name {
    Name::from_components(vec![component(ROOT), component(service), component(PUBLISH)])
}

/// Builds `/home/<service>/publish/<location..>/<payload..>/<timestamp>`.
///
/// The timestamp is rendered as decimal milliseconds, which makes names from
/// one sensor unique over time.
pub fn make_notification_interest(
    service: &NameComponent,
    location_path: &[NameComponent],
    payload_components: &[NameComponent],
    timestamp: VirtualTime,
    lifetime_ms: u64,
    nonce: u32,
) -> Interest {
    let name = publish_prefix(service.as_str())
        .join(location_path)
        .join(payload_components)
        .append(component(&timestamp.as_ms().to_string()));
    Interest::new(name, nonce, lifetime_ms)
}

/// Builds `<prefix>/<command>` with the given selectors.
pub fn make_command_interest(
    group_or_light_prefix: &Name,
    command: &NameComponent,
    must_be_fresh: bool,
    exclude: ExcludeFilter,
    lifetime_ms: u64,
    nonce: u32,
) -> Interest {
    Interest {
        name: group_or_light_prefix.append(command.clone()),
        nonce,
        lifetime_ms,
        must_be_fresh,
        exclude,
        hop_path: Vec::new(),
    }
}
