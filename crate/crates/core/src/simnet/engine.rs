//! The event loop.
//!
//! A forwarder handles a packet at its arrival time; whatever it sends leaves
//! `processing_ms` later and reaches the far end of a link after the link
//! latency. Application faces have no latency, and applications respond in
//! the instant they are handed a packet.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apps::{
    luminosity_tick, AckOutcome, AckResult, AreaConfig, Controller, ControllerState, Direction, HarvestError,
    HarvestStatus, HarvestStep, LightNode, LuminosityConfig, Notification, OccupancyNotifier, OmiPattern, OmiState,
    TimeoutOutcome,
};
use crate::forwarder::{DropReason, FaceId, Forwarder};
use crate::names::Name;
use crate::packets::{Interest, Packet, PacketType};
use crate::scenario::{LinkParams, Scenario, TopologySpec};
use crate::time::VirtualTime;

use super::metrics::{
    ActuationRecord, DelayClass, Delivery, LinkCounts, LinkDir, LinkRecord, MetricsReport, NotificationRecord,
    NotifyOutcome,
};
use super::topology::{build_exhibition_topology, build_home_topology, AppSpec, Topology};
use super::SimError;

/// Sensor readings for one pass through the door frame, 200 ms apart.
const GAIT_STEP_MS: u64 = 200;
const GAIT_IN: [u8; 5] = [0b100, 0b110, 0b011, 0b001, 0b000];
const GAIT_OUT: [u8; 5] = [0b001, 0b011, 0b110, 0b100, 0b000];

#[derive(Debug)]
enum Ev {
    Arrive { node: usize, face: FaceId, packet: Packet },
    ToApp { app: usize, packet: Packet },
    LuxTick { app: usize },
    Omi { app: usize, pattern: OmiPattern },
    NotifyTimer { app: usize },
    HarvestTimer { command: Name, generation: u32 },
    Command { index: usize },
}

#[derive(Debug)]
struct Queued {
    at: VirtualTime,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

enum AppState {
    Controller(Box<Controller>),
    Luminosity(LuminosityConfig),
    Occupancy { omi: OmiState, notifier: OccupancyNotifier },
    Light(LightNode),
}

struct AppRt {
    node: usize,
    face: FaceId,
    label: String,
    state: AppState,
}

struct LinkRt {
    label: String,
    /// Child end, parent end.
    ends: [(usize, FaceId); 2],
    params: LinkParams,
    rng: [ChaCha8Rng; 2],
    seq: [u64; 2],
}

fn dir_index(dir: LinkDir) -> usize {
    match dir {
        LinkDir::Up => 0,
        LinkDir::Down => 1,
    }
}

struct Sim<'a> {
    scenario: &'a Scenario,
    labels: Vec<String>,
    forwarders: Vec<Forwarder>,
    apps: Vec<AppRt>,
    app_at: BTreeMap<(usize, FaceId), usize>,
    controller: usize,
    links: Vec<LinkRt>,
    face_link: BTreeMap<(usize, FaceId), (usize, LinkDir)>,
    queue: BinaryHeap<Queued>,
    seq: u64,
    rng: ChaCha8Rng,
    report: MetricsReport,
    /// Command name to (issue time, lights that already got it).
    issued: BTreeMap<Name, (VirtualTime, BTreeSet<String>)>,
    notification_index: BTreeMap<Name, usize>,
    seen_lux: BTreeSet<Name>,
}

/// Builds the scenario's topology.
pub(crate) fn topology_for(s: &Scenario) -> Result<Topology, SimError> {
    match s.topology {
        TopologySpec::Home { nodes } => build_home_topology(nodes),
        TopologySpec::Exhibition { m, n, filtering } => build_exhibition_topology(m, n, filtering),
    }
}

fn link_seed(seed: u64, link: usize, dir: usize) -> u64 {
    seed ^ ((link as u64) * 2 + dir as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs `s` to completion. Only events strictly before `duration_ms` are
/// processed.
pub fn run_scenario(s: &Scenario) -> Result<MetricsReport, SimError> {
    s.validate()?;
    let topology = topology_for(s)?;
    let mut sim = Sim::new(s, topology);
    sim.seed_events();
    sim.run();
    Ok(sim.finish())
}

impl<'a> Sim<'a> {
    fn new(s: &'a Scenario, topology: Topology) -> Self {
        let mut report = MetricsReport::default();
        let links: Vec<LinkRt> = topology
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| LinkRt {
                label: l.label.clone(),
                ends: [l.child, l.parent],
                params: s.links.params(&l.label),
                rng: [0, 1].map(|d| ChaCha8Rng::seed_from_u64(link_seed(s.seed, i, d))),
                seq: [0, 0],
            })
            .collect();
        let mut face_link = BTreeMap::new();
        for (i, l) in links.iter().enumerate() {
            face_link.insert(l.ends[0], (i, LinkDir::Up));
            face_link.insert(l.ends[1], (i, LinkDir::Down));
            for dir in [LinkDir::Up, LinkDir::Down] {
                for ty in [PacketType::Interest, PacketType::Data] {
                    report
                        .messages
                        .insert((l.label.clone(), dir, ty), LinkCounts::default());
                }
            }
        }

        let mut apps = Vec::new();
        let mut app_at = BTreeMap::new();
        let mut controller = 0;
        let mut labels = Vec::new();
        let mut forwarders = Vec::new();
        for (idx, node) in topology.nodes.into_iter().enumerate() {
            for (face, spec) in node.apps {
                let label = spec.label().to_string();
                let state = match spec {
                    AppSpec::Controller { areas } => {
                        let mut st = ControllerState::new(s.apps.ack_freshness_ms);
                        for a in areas {
                            st.add_area(
                                a.area,
                                AreaConfig {
                                    thresholds: s.thresholds,
                                    group_prefix: a.group_prefix,
                                    lights: a.lights,
                                },
                            );
                        }
                        controller = apps.len();
                        AppState::Controller(Box::new(Controller::new(
                            st,
                            s.apps.control,
                            s.apps.command_lifetime_ms,
                            s.apps.max_rebroadcasts,
                        )))
                    }
                    AppSpec::Luminosity { location, .. } => AppState::Luminosity(LuminosityConfig {
                        period_ms: s.apps.lux_period_ms,
                        lifetime_ms: s.apps.lux_lifetime_ms,
                        location_path: location,
                    }),
                    AppSpec::Occupancy { location, .. } => {
                        let mut notifier = OccupancyNotifier::new(location);
                        notifier.lifetime_ms = s.apps.notify_lifetime_ms;
                        notifier.max_retransmissions = s.apps.max_retransmissions;
                        AppState::Occupancy {
                            omi: OmiState::new(s.apps.omi_delay_ms),
                            notifier,
                        }
                    }
                    AppSpec::Light { id, prefixes, .. } => {
                        AppState::Light(LightNode::new(id, prefixes, s.apps.ack_freshness_ms))
                    }
                };
                app_at.insert((idx, face), apps.len());
                apps.push(AppRt {
                    node: idx,
                    face,
                    label,
                    state,
                });
            }
            labels.push(node.label);
            forwarders.push(node.forwarder);
        }

        Sim {
            scenario: s,
            labels,
            forwarders,
            apps,
            app_at,
            controller,
            links,
            face_link,
            queue: BinaryHeap::new(),
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(s.seed),
            report,
            issued: BTreeMap::new(),
            notification_index: BTreeMap::new(),
            seen_lux: BTreeSet::new(),
        }
    }

    fn push(&mut self, at: VirtualTime, ev: Ev) {
        self.queue.push(Queued { at, seq: self.seq, ev });
        self.seq += 1;
    }

    fn app_by_label(&self, label: &str) -> Option<usize> {
        self.apps.iter().position(|a| a.label == label)
    }

    fn seed_events(&mut self) {
        let s = self.scenario;
        if s.apps.luminosity {
            for app in 0..self.apps.len() {
                if matches!(self.apps[app].state, AppState::Luminosity(_)) {
                    self.push(VirtualTime::ZERO, Ev::LuxTick { app });
                }
            }
        }
        for m in &s.moves {
            let app = self.app_by_label(&m.detector).expect("validated detector");
            let gait = match m.direction {
                Direction::In => GAIT_IN,
                Direction::Out => GAIT_OUT,
            };
            for (k, bits) in gait.into_iter().enumerate() {
                let pattern = OmiPattern::from_bits(bits);
                self.push(m.at + GAIT_STEP_MS * k as u64, Ev::Omi { app, pattern });
            }
        }
        for (index, c) in s.commands.iter().enumerate() {
            self.push(c.at, Ev::Command { index });
        }
    }

    fn run(&mut self) {
        let end = VirtualTime(self.scenario.duration_ms);
        while self.queue.peek().is_some_and(|q| q.at < end) {
            let Queued { at, ev, .. } = self.queue.pop().expect("peeked");
            self.handle(at, ev);
        }
    }

    fn finish(mut self) -> MetricsReport {
        for (label, fw) in self.labels.iter().zip(&self.forwarders) {
            self.report.fib_sizes.insert(label.clone(), fw.fib_size());
        }
        self.report
    }

    fn log(&mut self, line: String) {
        self.report.events.push(line);
    }

    /// Hands `packet` from application `app` to its forwarder.
    fn emit(&mut self, app: usize, packet: Packet, now: VirtualTime) {
        let (node, face) = (self.apps[app].node, self.apps[app].face);
        self.push(now, Ev::Arrive { node, face, packet });
    }

    fn emit_all(&mut self, app: usize, packets: Vec<Packet>, now: VirtualTime) {
        for p in packets {
            self.emit(app, p, now);
        }
    }

    fn handle(&mut self, now: VirtualTime, ev: Ev) {
        match ev {
            Ev::Arrive { node, face, packet } => self.on_arrive(node, face, packet, now),
            Ev::ToApp { app, packet } => self.on_app_packet(app, packet, now),
            Ev::LuxTick { app } => self.on_lux_tick(app, now),
            Ev::Omi { app, pattern } => self.on_omi(app, pattern, now),
            Ev::NotifyTimer { app } => self.on_notify_timer(app, now),
            Ev::HarvestTimer { command, generation } => self.on_harvest_timer(command, generation, now),
            Ev::Command { index } => self.on_scheduled_command(index, now),
        }
    }

    fn on_arrive(&mut self, node: usize, face: FaceId, packet: Packet, now: VirtualTime) {
        self.log(format!(
            "{now} rx {} f{face} {} {}",
            self.labels[node],
            packet.packet_type(),
            packet.name()
        ));
        let fw = &mut self.forwarders[node];
        fw.expire(now);
        let actions = fw.on_incoming(face, packet, now);
        for (_, reason) in &actions.drops {
            match reason {
                DropReason::NoRoute => self.report.failures.dropped_no_route += 1,
                DropReason::DuplicateNonce => self.report.failures.dropped_duplicate_nonce += 1,
            }
        }
        let out_at = now + self.scenario.links.processing_ms;
        for (out, packet) in actions.sends {
            if let Some(&(link, dir)) = self.face_link.get(&(node, out)) {
                self.transmit(link, dir, packet, out_at);
            } else if let Some(&app) = self.app_at.get(&(node, out)) {
                self.push(out_at, Ev::ToApp { app, packet });
            }
        }
    }

    fn transmit(&mut self, link: usize, dir: LinkDir, packet: Packet, at: VirtualTime) {
        let l = &mut self.links[link];
        let d = dir_index(dir);
        let seq = l.seq[d];
        l.seq[d] += 1;
        let lost = l.params.loss_rate > 0.0 && {
            l.rng[d].set_word_pos(u128::from(seq) * 2);
            l.rng[d].random::<f64>() < l.params.loss_rate
        };
        let arrives_at = at + l.params.latency_ms;
        let far = l.ends[1 - d];
        let ty = packet.packet_type();
        let counts = self
            .report
            .messages
            .get_mut(&(l.label.clone(), dir, ty))
            .expect("pre-populated");
        counts.sent += 1;
        if lost {
            counts.lost += 1;
        } else {
            counts.delivered += 1;
        }
        self.report.link_log.push(LinkRecord {
            sent_at: at,
            link: l.label.clone(),
            dir,
            packet_type: ty,
            name: packet.name().clone(),
            arrives_at: (!lost).then_some(arrives_at),
        });
        if !lost {
            self.push(
                arrives_at,
                Ev::Arrive {
                    node: far.0,
                    face: far.1,
                    packet,
                },
            );
        }
    }

    fn on_app_packet(&mut self, app: usize, packet: Packet, now: VirtualTime) {
        let label = self.apps[app].label.clone();
        self.log(format!("{now} app {label} {} {}", packet.packet_type(), packet.name()));
        self.report.deliveries.push(Delivery {
            at: now,
            app: label.clone(),
            packet_type: packet.packet_type(),
            name: packet.name().clone(),
        });
        match (&mut self.apps[app].state, packet) {
            (AppState::Controller(_), Packet::Interest(i)) => self.controller_notification(app, i, now),
            (AppState::Controller(ctl), Packet::Data(d)) => {
                let outcome = ctl.on_ack(&d, now, &mut self.rng);
                match outcome {
                    AckOutcome::Step { command, step } => self.harvest_step(app, command, step, now),
                    AckOutcome::Rejected {
                        error: HarvestError::DuplicateAck(_),
                        ..
                    } => self.report.failures.duplicate_acks += 1,
                    AckOutcome::Rejected { .. } | AckOutcome::Unmatched => {}
                }
            }
            (AppState::Light(light), Packet::Interest(i)) => match light.on_command(&i) {
                Ok(Some((actuation, ack))) => {
                    self.report.actuations.push(ActuationRecord {
                        at: now,
                        light: label.clone(),
                        actuation,
                        command: i.name.clone(),
                    });
                    if let Some((t0, seen)) = self.issued.get_mut(&i.name) {
                        if seen.insert(label) {
                            let d = now.since(*t0);
                            self.report.delay_samples.entry(DelayClass::ShcLn).or_default().push(d);
                        }
                    }
                    self.emit(app, Packet::Data(ack), now);
                }
                Ok(None) => {}
                Err(_) => self.report.failures.app_errors += 1,
            },
            (AppState::Occupancy { notifier, .. }, Packet::Data(d)) => {
                if let AckResult::Acked { completed, next } = notifier.on_ack(&d, now, &mut self.rng) {
                    self.settle_notification(&completed.interest.name, completed.attempts, NotifyOutcome::Acked);
                    let rtt = now.since(completed.movement.at);
                    self.report
                        .delay_samples
                        .entry(DelayClass::OdAckRtt)
                        .or_default()
                        .push(rtt);
                    if let Some(i) = next {
                        self.send_notification(app, i, now);
                    }
                }
            }
            _ => {}
        }
    }

    fn controller_notification(&mut self, app: usize, interest: Interest, now: VirtualTime) {
        let AppState::Controller(ctl) = &mut self.apps[app].state else {
            unreachable!("checked by caller")
        };
        let out = match ctl.state.on_notification(&interest, now) {
            Ok(out) => out,
            Err(_) => {
                self.report.failures.app_errors += 1;
                return;
            }
        };
        let mut packets = Vec::new();
        let mut issued = Vec::new();
        if let Some((area, command)) = out.command() {
            match ctl.issue(&area, command, now, &mut self.rng) {
                Ok(sent) => issued = sent,
                Err(_) => self.report.failures.app_errors += 1,
            }
        }
        let budget = ctl.freshness_budget_ms();

        match out.notification {
            Notification::Luminosity { at, .. } => {
                if self.seen_lux.insert(interest.name.clone()) {
                    self.report
                        .delay_samples
                        .entry(DelayClass::LdShc)
                        .or_default()
                        .push(now.since(at));
                }
            }
            Notification::Occupancy { at, .. } => {
                let r = self
                    .report
                    .controller_receipts
                    .entry(interest.name.clone())
                    .or_default();
                r.total += 1;
                if out.duplicate {
                    self.report.failures.duplicate_notifications += 1;
                } else {
                    r.fresh += 1;
                    self.report
                        .delay_samples
                        .entry(DelayClass::OdShc)
                        .or_default()
                        .push(now.since(at));
                }
            }
        }
        if let Some(ack) = out.ack {
            packets.push(Packet::Data(ack));
        }
        if let Some(d) = out.decision {
            self.report.decisions.push(d);
        }
        for i in issued {
            self.track_issue(&i.name, budget, now);
            packets.push(Packet::Interest(i));
        }
        self.emit_all(app, packets, now);
    }

    fn track_issue(&mut self, command: &Name, budget: u64, now: VirtualTime) {
        self.issued.insert(command.clone(), (now, BTreeSet::new()));
        self.push(
            now + budget,
            Ev::HarvestTimer {
                command: command.clone(),
                generation: 0,
            },
        );
    }

    fn harvest_step(&mut self, app: usize, command: Name, step: HarvestStep, now: VirtualTime) {
        let AppState::Controller(ctl) = &self.apps[app].state else {
            unreachable!("controller app")
        };
        match step.status {
            HarvestStatus::Rebroadcast => {
                self.report.failures.harvest_rebroadcasts += 1;
                let generation = ctl.harvest(&command).map_or(0, |h| h.generation());
                let at = now + ctl.freshness_budget_ms();
                self.push(at, Ev::HarvestTimer { command, generation });
            }
            HarvestStatus::Abandoned => self.report.failures.harvest_abandoned += 1,
            HarvestStatus::Collecting | HarvestStatus::Done => {}
        }
        if let Some(i) = step.next {
            self.emit(app, Packet::Interest(i), now);
        }
    }

    fn on_harvest_timer(&mut self, command: Name, generation: u32, now: VirtualTime) {
        self.log(format!("{now} harvest-timer {command} g{generation}"));
        let app = self.controller;
        let AppState::Controller(ctl) = &mut self.apps[app].state else {
            unreachable!("controller app")
        };
        if let Some(step) = ctl.on_harvest_timeout(&command, generation, now, &mut self.rng) {
            self.harvest_step(app, command, step, now);
        }
    }

    fn on_scheduled_command(&mut self, index: usize, now: VirtualTime) {
        let c = &self.scenario.commands[index];
        self.log(format!("{now} command {} {} {}", c.prefix, c.command, c.expected));
        let app = self.controller;
        let AppState::Controller(ctl) = &mut self.apps[app].state else {
            unreachable!("controller app")
        };
        let budget = ctl.freshness_budget_ms();
        match ctl.issue_multicast(&c.prefix, c.command, c.expected, now, &mut self.rng) {
            Ok(i) => {
                self.track_issue(&i.name, budget, now);
                self.emit(app, Packet::Interest(i), now);
            }
            Err(_) => self.report.failures.app_errors += 1,
        }
    }

    fn on_lux_tick(&mut self, app: usize, now: VirtualTime) {
        let label = self.apps[app].label.clone();
        self.log(format!("{now} lux-tick {label}"));
        let lux = self.scenario.lux_at(&label, now);
        let AppState::Luminosity(cfg) = &self.apps[app].state else {
            unreachable!("luminosity app")
        };
        let period = cfg.period_ms;
        let interest = luminosity_tick(cfg, lux, now, self.rng.random());
        self.emit(app, Packet::Interest(interest), now);
        if now.as_ms() + period < self.scenario.duration_ms {
            self.push(now + period, Ev::LuxTick { app });
        }
    }

    fn on_omi(&mut self, app: usize, pattern: OmiPattern, now: VirtualTime) {
        self.log(format!("{now} omi {} {pattern}", self.apps[app].label));
        let detector = self.apps[app].label.clone();
        let AppState::Occupancy { omi, notifier } = &mut self.apps[app].state else {
            unreachable!("occupancy app")
        };
        let Some(movement) = omi.step(pattern, now) else {
            return;
        };
        let name = notifier.notification_name(&movement);
        let sent = notifier.notify(movement, now, &mut self.rng);
        self.notification_index
            .insert(name.clone(), self.report.notifications.len());
        self.report.notifications.push(NotificationRecord {
            detector,
            movement,
            name,
            attempts: 0,
            outcome: NotifyOutcome::Pending,
        });
        if let Some(i) = sent {
            self.send_notification(app, i, now);
        }
    }

    /// Emits a (re)transmission and arms the retry timer.
    fn send_notification(&mut self, app: usize, interest: Interest, now: VirtualTime) {
        let AppState::Occupancy { notifier, .. } = &self.apps[app].state else {
            unreachable!("occupancy app")
        };
        let out = notifier.outstanding().expect("just sent");
        let (attempts, retry_at) = (out.attempts, out.next_retry);
        if let Some(&idx) = self.notification_index.get(&interest.name) {
            self.report.notifications[idx].attempts = attempts;
        }
        self.push(retry_at, Ev::NotifyTimer { app });
        self.emit(app, Packet::Interest(interest), now);
    }

    fn settle_notification(&mut self, name: &Name, attempts: u32, outcome: NotifyOutcome) {
        if let Some(&idx) = self.notification_index.get(name) {
            let r = &mut self.report.notifications[idx];
            r.attempts = attempts;
            r.outcome = outcome;
        }
    }

    fn on_notify_timer(&mut self, app: usize, now: VirtualTime) {
        let AppState::Occupancy { notifier, .. } = &mut self.apps[app].state else {
            unreachable!("occupancy app")
        };
        match notifier.on_timeout(now, &mut self.rng) {
            TimeoutOutcome::NotDue => {}
            TimeoutOutcome::Retransmit(i) => {
                self.log(format!("{now} retransmit {}", i.name));
                self.report.failures.notify_retransmissions += 1;
                self.send_notification(app, i, now);
            }
            TimeoutOutcome::GaveUp { abandoned, next } => {
                self.log(format!("{now} give-up {}", abandoned.interest.name));
                self.report.failures.notify_give_ups += 1;
                self.settle_notification(&abandoned.interest.name, abandoned.attempts, NotifyOutcome::Abandoned);
                if let Some(i) = next {
                    self.send_notification(app, i, now);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::Command;
    use crate::names::name;
    use crate::scenario::{CommandEvent, MoveEvent};

    fn home(nodes: usize) -> Scenario {
        let mut s = Scenario::new(TopologySpec::Home { nodes });
        s.apps.luminosity = false;
        s.duration_ms = 10_000;
        s
    }

    #[test]
    fn zero_duration_is_empty() {
        let mut s = Scenario::reference_home();
        s.duration_ms = 0;
        let r = run_scenario(&s).unwrap();
        assert!(r.delay_samples.is_empty());
        assert!(r.link_log.is_empty());
        assert!(r.events.is_empty());
        assert!(r.messages.values().all(|c| c.sent == 0));
    }

    #[test]
    fn single_notification_timing() {
        let mut s = home(1);
        s.moves.push(MoveEvent {
            at: VirtualTime(1000),
            direction: Direction::In,
            detector: "od1".into(),
        });
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.samples(DelayClass::OdShc), [13]);
        assert_eq!(r.samples(DelayClass::OdAckRtt), [26]);
        assert_eq!(r.notifications[0].movement.at, VirtualTime(1400));
        assert_eq!(r.notifications[0].outcome, NotifyOutcome::Acked);
    }

    #[test]
    fn multicast_harvest_counts() {
        for n in [1, 3] {
            let mut s = home(n);
            s.commands.push(CommandEvent {
                at: VirtualTime(100),
                prefix: name("/home/light/floor1"),
                command: Command::SwitchOff,
                expected: n,
            });
            let r = run_scenario(&s).unwrap();
            let up = |ty| super::super::count_messages_dir(&r, "controller", LinkDir::Up, ty).unwrap();
            let down = |ty| super::super::count_messages_dir(&r, "controller", LinkDir::Down, ty).unwrap();
            assert_eq!(up(PacketType::Interest), n as u64);
            assert_eq!(down(PacketType::Data), n as u64);
            assert_eq!(r.actuations.len(), n);
            assert_eq!(r.failures.harvest_rebroadcasts, 0);
        }
    }
}
