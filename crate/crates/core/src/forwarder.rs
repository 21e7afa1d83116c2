//! Per-node forwarding engine.
//!
//! A [`Forwarder`] owns three tables:
//!
//! - FIB: name prefix to next-hop faces, each optionally guarded by a
//!   [`NamePattern`] evaluated on the name components after the prefix.
//! - PIT: exact Interest name to the faces waiting for Data, the nonces
//!   already seen, and the exclude filter of the first Interest.
//! - CS: every Data that passed through, solicited or not. Staleness is
//!   evaluated lazily at lookup; nothing is evicted.
//!
//! The two pipelines take the current time explicitly and return every
//! side effect as a [`ForwarderActions`] value, so identical state and input
//! always produce identical output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::names::{ExcludeFilter, Name, NamePattern};
use crate::packets::{Data, Interest, NodeId, Packet};
use crate::time::VirtualTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceId(pub u32);

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForwarderError {
    #[error("unknown face {0}")]
    UnknownFace(FaceId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NextHop {
    pub face: FaceId,
    pub filter: Option<NamePattern>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibEntry {
    pub prefix: Name,
    /// Sorted by face, at most one record per face.
    pub nexthops: Vec<NextHop>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PitEntry {
    pub name: Name,
    pub in_faces: BTreeSet<FaceId>,
    pub seen_nonces: BTreeSet<u32>,
    pub exclude: ExcludeFilter,
    pub expiry: VirtualTime,
}

impl PitEntry {
    pub fn is_live(&self, now: VirtualTime) -> bool {
        now < self.expiry
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsEntry {
    pub data: Data,
    pub inserted_at: VirtualTime,
    pub unsolicited: bool,
}

impl CsEntry {
    pub fn is_stale(&self, now: VirtualTime) -> bool {
        self.data.is_stale(self.inserted_at, now)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    DuplicateNonce,
    NoRoute,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::DuplicateNonce => "duplicate-nonce",
            DropReason::NoRoute => "no-route",
        }
    }
}

/// Everything a pipeline pass wants done.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForwarderActions {
    pub sends: Vec<(FaceId, Packet)>,
    pub cache_inserts: Vec<CsEntry>,
    pub drops: Vec<(Packet, DropReason)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forwarder {
    node: NodeId,
    faces: BTreeSet<FaceId>,
    fib: BTreeMap<Name, FibEntry>,
    pit: BTreeMap<Name, PitEntry>,
    cs: BTreeMap<Name, CsEntry>,
}

impl Forwarder {
    pub fn new(node: NodeId) -> Self {
        Self {
            node,
            faces: BTreeSet::new(),
            fib: BTreeMap::new(),
            pit: BTreeMap::new(),
            cs: BTreeMap::new(),
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn add_face(&mut self, face: FaceId) {
        self.faces.insert(face);
    }

    pub fn faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        self.faces.iter().copied()
    }

    /// Adds a next hop for `prefix`. Registering an existing (prefix, face)
    /// pair replaces its filter.
    pub fn register_prefix(
        &mut self,
        prefix: Name,
        face: FaceId,
        filter: Option<NamePattern>,
    ) -> Result<(), ForwarderError> {
        if !self.faces.contains(&face) {
            return Err(ForwarderError::UnknownFace(face));
        }
        let entry = self.fib.entry(prefix.clone()).or_insert_with(|| FibEntry {
            prefix,
            nexthops: Vec::new(),
        });
        match entry.nexthops.binary_search_by_key(&face, |h| h.face) {
            Ok(i) => entry.nexthops[i].filter = filter,
            Err(i) => entry.nexthops.insert(i, NextHop { face, filter }),
        }
        Ok(())
    }

    /// Number of distinct prefixes in the FIB.
    pub fn fib_size(&self) -> usize {
        self.fib.len()
    }

    pub fn fib_entries(&self) -> impl Iterator<Item = &FibEntry> {
        self.fib.values()
    }

    /// Longest-prefix match by probing each prefix length of `name` from
    /// longest to shortest.
    pub fn fib_lookup(&self, name: &Name) -> Option<&FibEntry> {
        (0..=name.len()).rev().find_map(|k| self.fib.get(&name.prefix(k)))
    }

    pub fn pit_len(&self) -> usize {
        self.pit.len()
    }

    pub fn pit_entry(&self, name: &Name) -> Option<&PitEntry> {
        self.pit.get(name)
    }

    pub fn cs_len(&self) -> usize {
        self.cs.len()
    }

    pub fn cs_entry(&self, name: &Name) -> Option<&CsEntry> {
        self.cs.get(name)
    }

    /// One line per (prefix, next hop): `<prefix> -> face:<id>[ filter:<pattern>]`,
    /// sorted by prefix text.
    pub fn fib_dump(&self) -> String {
        let mut lines: Vec<(String, FaceId, String)> = Vec::new();
        for entry in self.fib.values() {
            let prefix = entry.prefix.to_string();
            for hop in &entry.nexthops {
                let mut line = format!("{prefix} -> face:{}", hop.face);
                if let Some(filter) = &hop.filter {
                    line.push_str(&format!(" filter:{filter}"));
                }
                lines.push((prefix.clone(), hop.face, line));
            }
        }
        lines.sort();
        let mut out = String::new();
        for (_, _, line) in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Removes PIT entries whose expiry is at or before `now`.
    pub fn expire(&mut self, now: VirtualTime) {
        self.pit.retain(|_, e| e.is_live(now));
    }

    /// Oldest usable cached Data under `name`: fresh when required and not
    /// excluded. Ties on insertion time go to the smaller name.
    pub fn cs_lookup(
        &self,
        name: &Name,
        exclude: &ExcludeFilter,
        must_be_fresh: bool,
        now: VirtualTime,
    ) -> Option<&Data> {
        self.cs
            .range(name.clone()..)
            .take_while(|(k, _)| name.is_prefix_of(k))
            .map(|(_, e)| e)
            .filter(|e| !exclude.is_excluded(name, &e.data.name).unwrap_or(true))
            .filter(|e| !must_be_fresh || !e.is_stale(now))
            .min_by(|a, b| {
                a.inserted_at
                    .cmp(&b.inserted_at)
                    .then_with(|| a.data.name.cmp(&b.data.name))
            })
            .map(|e| &e.data)
    }

    pub fn on_incoming_interest(&mut self, face: FaceId, interest: Interest, now: VirtualTime) -> ForwarderActions {
        let mut actions = ForwarderActions::default();

        let live = self.pit.get(&interest.name).filter(|e| e.is_live(now));
        if live.is_some_and(|e| e.seen_nonces.contains(&interest.nonce)) {
            actions
                .drops
                .push((Packet::Interest(interest), DropReason::DuplicateNonce));
            return actions;
        }

        if let Some(data) = self.cs_lookup(&interest.name, &interest.exclude, interest.must_be_fresh, now) {
            actions.sends.push((face, Packet::Data(data.clone())));
            return actions;
        }

        if let Some(entry) = self.pit.get_mut(&interest.name).filter(|e| e.is_live(now)) {
            entry.in_faces.insert(face);
            entry.seen_nonces.insert(interest.nonce);
            return actions;
        }

        let out_faces: Vec<FaceId> = match self.fib_lookup(&interest.name) {
            Some(entry) => {
                let rest = interest.name.suffix_after(entry.prefix.len());
                entry
                    .nexthops
                    .iter()
                    .filter(|h| h.face != face)
                    .filter(|h| h.filter.as_ref().is_none_or(|p| p.matches_components(rest)))
                    .map(|h| h.face)
                    .collect()
            }
            None => Vec::new(),
        };
        if out_faces.is_empty() {
            actions.drops.push((Packet::Interest(interest), DropReason::NoRoute));
            return actions;
        }

        if interest.lifetime_ms > 0 {
            self.pit.insert(
                interest.name.clone(),
                PitEntry {
                    name: interest.name.clone(),
                    in_faces: BTreeSet::from([face]),
                    seen_nonces: BTreeSet::from([interest.nonce]),
                    exclude: interest.exclude.clone(),
                    expiry: now + interest.lifetime_ms,
                },
            );
        }

        let mut forwarded = interest;
        forwarded.hop_path.push(self.node);
        for out in out_faces {
            actions.sends.push((out, Packet::Interest(forwarded.clone())));
        }
        actions
    }

    pub fn on_incoming_data(&mut self, face: FaceId, data: Data, now: VirtualTime) -> ForwarderActions {
        let mut actions = ForwarderActions::default();

        let matched: Vec<Name> = (0..=data.name.len())
            .map(|k| data.name.prefix(k))
            .filter(|p| {
                self.pit
                    .get(p)
                    .is_some_and(|e| e.is_live(now) && !e.exclude.is_excluded(p, &data.name).unwrap_or(true))
            })
            .collect();

        let mut out_faces = BTreeSet::new();
        for name in &matched {
            if let Some(entry) = self.pit.remove(name) {
                out_faces.extend(entry.in_faces);
            }
        }
        out_faces.remove(&face);
        for out in out_faces {
            actions.sends.push((out, Packet::Data(data.clone())));
        }

        let entry = CsEntry {
            data: data.clone(),
            inserted_at: now,
            unsolicited: matched.is_empty(),
        };
        self.cs.insert(data.name, entry.clone());
        actions.cache_inserts.push(entry);
        actions
    }

    /// Dispatches to the Interest or Data pipeline.
    pub fn on_incoming(&mut self, face: FaceId, packet: Packet, now: VirtualTime) -> ForwarderActions {
        match packet {
            Packet::Interest(i) => self.on_incoming_interest(face, i, now),
            Packet::Data(d) => self.on_incoming_data(face, d, now),
        }
    }
}
