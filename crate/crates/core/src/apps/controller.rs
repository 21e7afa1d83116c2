//! Smart home controller: notification intake, the light policy, and
//! command issuance with acknowledgement harvesting.
//!
//! A multicast command reaches N lights but only the first ACK can travel
//! back through each router: the PIT entry is consumed by it. The remaining
//! ACKs sit in router caches as unsolicited Data. The controller collects
//! them by re-sending the same command name with an exclude filter listing
//! the light IDs it already has, one round trip per missing ACK. If the
//! harvest outlives the ACK freshness period the command is rebroadcast.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::names::{ExcludeFilter, Name, NameComponent};
use crate::packets::{
    make_command_interest, Data, Interest, PUBLISH, ROOT, SERVICE_LUMINOSITY, SERVICE_OCCUPANCY, SWITCH_OFF, SWITCH_ON,
};
use crate::time::VirtualTime;

use super::luminosity::parse_lux;
use super::occupancy::Direction;
use super::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    min_lux: u32,
    max_lux: u32,
}

impl Thresholds {
    pub fn new(min_lux: u32, max_lux: u32) -> Result<Self, AppError> {
        if min_lux >= max_lux {
            return Err(AppError::InvalidThresholds {
                min: min_lux,
                max: max_lux,
            });
        }
        Ok(Self { min_lux, max_lux })
    }

    pub fn min_lux(&self) -> u32 {
        self.min_lux
    }

    pub fn max_lux(&self) -> u32 {
        self.max_lux
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    SwitchOn,
    SwitchOff,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::SwitchOn => SWITCH_ON,
            Command::SwitchOff => SWITCH_OFF,
        }
    }

    pub fn component(self) -> NameComponent {
        NameComponent::new(self.as_str()).expect("static")
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            SWITCH_ON => Ok(Command::SwitchOn),
            SWITCH_OFF => Ok(Command::SwitchOff),
            other => Err(format!("expected {SWITCH_ON} or {SWITCH_OFF}, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum ControlMode {
    #[default]
    Multicast,
    Unicast,
}

impl ControlMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlMode::Multicast => "multicast",
            ControlMode::Unicast => "unicast",
        }
    }
}

impl FromStr for ControlMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multicast" => Ok(ControlMode::Multicast),
            "unicast" => Ok(ControlMode::Unicast),
            other => Err(format!("expected multicast or unicast, got {other:?}")),
        }
    }
}

/// Static description of one functional area.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AreaConfig {
    pub thresholds: Thresholds,
    /// Prefix every light of the area registers, e.g. `/home/light/floor1`.
    pub group_prefix: Name,
    /// Per-light prefixes for unicast control.
    pub lights: Vec<Name>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AreaState {
    pub occupancy_count: u32,
    pub latest_lux: Option<(u32, VirtualTime)>,
    /// Last commanded state. Lights start switched off.
    pub desired: Command,
}

impl Default for AreaState {
    fn default() -> Self {
        Self {
            occupancy_count: 0,
            latest_lux: None,
            desired: Command::SwitchOff,
        }
    }
}

/// A parsed `/home/<service>/publish/<area>/<location..>/<payload>/<timestamp>` name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Notification {
    Luminosity {
        area: NameComponent,
        lux: u32,
        at: VirtualTime,
    },
    Occupancy {
        area: NameComponent,
        direction: Direction,
        at: VirtualTime,
    },
}

impl Notification {
    pub fn parse(name: &Name) -> Result<Self, AppError> {
        let malformed = || AppError::MalformedNotification(name.clone());
        let c = name.components();
        if c.len() < 6 || c[0].as_str() != ROOT || c[2].as_str() != PUBLISH {
            return Err(malformed());
        }
        let area = c[3].clone();
        let payload = &c[c.len() - 2];
        let at = c[c.len() - 1]
            .as_str()
            .parse::<u64>()
            .map(VirtualTime)
            .map_err(|_| malformed())?;
        match c[1].as_str() {
            SERVICE_LUMINOSITY => Ok(Notification::Luminosity {
                area,
                lux: parse_lux(payload).ok_or_else(malformed)?,
                at,
            }),
            SERVICE_OCCUPANCY => Ok(Notification::Occupancy {
                area,
                direction: payload.as_str().parse().map_err(|_| malformed())?,
                at,
            }),
            _ => Err(malformed()),
        }
    }

    pub fn area(&self) -> &NameComponent {
        match self {
            Notification::Luminosity { area, .. } | Notification::Occupancy { area, .. } => area,
        }
    }

    /// Producer timestamp carried in the name.
    pub fn at(&self) -> VirtualTime {
        match self {
            Notification::Luminosity { at, .. } | Notification::Occupancy { at, .. } => *at,
        }
    }
}

/// One evaluation of the light policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRecord {
    pub at: VirtualTime,
    pub area: NameComponent,
    pub occupancy_count: u32,
    pub lux: Option<u32>,
    pub action: Option<Command>,
}

impl DecisionRecord {
    pub const CSV_HEADER: &'static str = "time_ms,area,occupancy_count,lux,action";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.at,
            self.area,
            self.occupancy_count,
            self.lux.map(|l| l.to_string()).unwrap_or_default(),
            self.action.map_or("none", Command::as_str),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotificationOutcome {
    pub notification: Notification,
    /// Occupancy notifications are acknowledged, including duplicates.
    pub ack: Option<Data>,
    /// The name was seen before; state was not touched.
    pub duplicate: bool,
    /// Present whenever the policy ran. A command in it has already been
    /// committed as the area's desired state.
    pub decision: Option<DecisionRecord>,
}

impl NotificationOutcome {
    pub fn command(&self) -> Option<(NameComponent, Command)> {
        let d = self.decision.as_ref()?;
        Some((d.area.clone(), d.action?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerState {
    areas: BTreeMap<NameComponent, (AreaConfig, AreaState)>,
    seen_occupancy: BTreeSet<Name>,
    pub ack_freshness_ms: u64,
}

impl ControllerState {
    pub fn new(ack_freshness_ms: u64) -> Self {
        Self {
            areas: BTreeMap::new(),
            seen_occupancy: BTreeSet::new(),
            ack_freshness_ms,
        }
    }

    pub fn add_area(&mut self, area: NameComponent, config: AreaConfig) {
        self.areas.insert(area, (config, AreaState::default()));
    }

    pub fn area(&self, area: &NameComponent) -> Result<(&AreaConfig, &AreaState), AppError> {
        self.areas
            .get(area)
            .map(|(c, s)| (c, s))
            .ok_or_else(|| AppError::UnknownArea(area.clone()))
    }

    fn area_state_mut(&mut self, area: &NameComponent) -> Result<&mut AreaState, AppError> {
        self.areas
            .get_mut(area)
            .map(|(_, s)| s)
            .ok_or_else(|| AppError::UnknownArea(area.clone()))
    }

    pub fn areas(&self) -> impl Iterator<Item = (&NameComponent, &AreaConfig, &AreaState)> {
        self.areas.iter().map(|(k, (c, s))| (k, c, s))
    }

    /// Processes one notification Interest. Occupancy notifications are
    /// deduplicated by full name, so retransmissions only re-trigger the ACK.
    pub fn on_notification(&mut self, interest: &Interest, now: VirtualTime) -> Result<NotificationOutcome, AppError> {
        let notification = Notification::parse(&interest.name)?;
        let area = notification.area().clone();
        self.area(&area)?;

        let mut ack = None;
        let mut duplicate = false;
        match &notification {
            Notification::Luminosity { lux, at, .. } => {
                self.area_state_mut(&area)?.latest_lux = Some((*lux, *at));
            }
            Notification::Occupancy { direction, .. } => {
                ack = Some(Data::new(interest.name.clone(), Vec::new(), self.ack_freshness_ms));
                duplicate = !self.seen_occupancy.insert(interest.name.clone());
                if !duplicate {
                    let st = self.area_state_mut(&area)?;
                    st.occupancy_count = match direction {
                        Direction::In => st.occupancy_count + 1,
                        Direction::Out => st.occupancy_count.saturating_sub(1),
                    };
                }
            }
        }

        let decision = if duplicate {
            None
        } else {
            let action = decide_lights(self, &area)?;
            let st = self.area_state_mut(&area)?;
            if let Some(cmd) = action {
                st.desired = cmd;
            }
            Some(DecisionRecord {
                at: now,
                area,
                occupancy_count: st.occupancy_count,
                lux: st.latest_lux.map(|(l, _)| l),
                action,
            })
        };

        Ok(NotificationOutcome {
            notification,
            ack,
            duplicate,
            decision,
        })
    }
}

/// The light policy for one area.
///
/// Occupied and darker than `min` turns lights on; vacant, or brighter than
/// `max`, turns them off. Inside the band nothing changes, and no command is
/// repeated while the desired state already matches.
pub fn decide_lights(state: &ControllerState, area: &NameComponent) -> Result<Option<Command>, AppError> {
    let (cfg, st) = state.area(area)?;
    let occupied = st.occupancy_count > 0;
    let lux = st.latest_lux.map(|(l, _)| l);
    let action = if occupied && lux.is_some_and(|l| l < cfg.thresholds.min_lux) && st.desired != Command::SwitchOn {
        Some(Command::SwitchOn)
    } else if (!occupied || lux.is_some_and(|l| l > cfg.thresholds.max_lux)) && st.desired != Command::SwitchOff {
        Some(Command::SwitchOff)
    } else {
        None
    };
    Ok(action)
}

/// One Interest per light, each `<light prefix>/<command>`.
pub fn issue_unicast(
    lights: &[Name],
    command: Command,
    lifetime_ms: u64,
    rng: &mut impl Rng,
) -> Result<Vec<Interest>, AppError> {
    if lights.is_empty() {
        return Err(AppError::NoLights);
    }
    Ok(lights
        .iter()
        .map(|l| {
            make_command_interest(
                l,
                &command.component(),
                true,
                ExcludeFilter::new(),
                lifetime_ms,
                rng.random(),
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarvestStatus {
    Collecting,
    Done,
    /// The budget ran out; the original command was sent again and
    /// collection restarted from scratch.
    Rebroadcast,
    /// The budget ran out with no rebroadcasts left.
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarvestError {
    #[error("duplicate ACK from {0}")]
    DuplicateAck(NameComponent),

    #[error("{data} does not acknowledge {command}")]
    ForeignAck { command: Name, data: Name },
}

#[derive(Debug, Clone, Copy)]
pub enum HarvestEvent<'a> {
    Ack(&'a Data),
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarvestStep {
    pub status: HarvestStatus,
    pub next: Option<Interest>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AckHarvest {
    command: Interest,
    expected: usize,
    collected: BTreeSet<NameComponent>,
    started_at: VirtualTime,
    freshness_budget_ms: u64,
    rebroadcasts: u32,
    max_rebroadcasts: u32,
    interests_sent: u32,
    finished: Option<HarvestStatus>,
}

impl AckHarvest {
    /// Starts tracking `command`, which has just been sent once.
    pub fn new(
        command: Interest,
        expected: usize,
        now: VirtualTime,
        freshness_budget_ms: u64,
        max_rebroadcasts: u32,
    ) -> Result<Self, AppError> {
        if !command.must_be_fresh {
            return Err(AppError::HarvestNotFresh);
        }
        Ok(Self {
            command,
            expected,
            collected: BTreeSet::new(),
            started_at: now,
            freshness_budget_ms,
            rebroadcasts: 0,
            max_rebroadcasts,
            interests_sent: 1,
            finished: None,
        })
    }

    pub fn command(&self) -> &Interest {
        &self.command
    }

    pub fn expected(&self) -> usize {
        self.expected
    }

    pub fn collected(&self) -> &BTreeSet<NameComponent> {
        &self.collected
    }

    pub fn started_at(&self) -> VirtualTime {
        self.started_at
    }

    pub fn deadline(&self) -> VirtualTime {
        self.started_at + self.freshness_budget_ms
    }

    /// Bumped on every rebroadcast; lets stale timers be told apart.
    pub fn generation(&self) -> u32 {
        self.rebroadcasts
    }

    pub fn interests_sent(&self) -> u32 {
        self.interests_sent
    }

    pub fn finished(&self) -> Option<HarvestStatus> {
        self.finished
    }

    pub fn step(
        &mut self,
        event: HarvestEvent<'_>,
        now: VirtualTime,
        rng: &mut impl Rng,
    ) -> Result<HarvestStep, HarvestError> {
        if let Some(status) = self.finished {
            return Ok(HarvestStep { status, next: None });
        }
        if let HarvestEvent::Ack(data) = event {
            let cmd = &self.command.name;
            if data.name.len() != cmd.len() + 1 || !cmd.is_prefix_of(&data.name) {
                return Err(HarvestError::ForeignAck {
                    command: cmd.clone(),
                    data: data.name.clone(),
                });
            }
            let id = data.name.last().expect("non-empty").clone();
            if self.collected.contains(&id) {
                return Err(HarvestError::DuplicateAck(id));
            }
            self.collected.insert(id);
            if self.collected.len() >= self.expected {
                self.finished = Some(HarvestStatus::Done);
                return Ok(HarvestStep {
                    status: HarvestStatus::Done,
                    next: None,
                });
            }
        }

        if now.since(self.started_at) >= self.freshness_budget_ms {
            return Ok(self.rebroadcast(now, rng));
        }
        let next = match event {
            HarvestEvent::Ack(_) => {
                let mut i = self.command.renewed(rng.random());
                i.exclude = self.collected.iter().cloned().collect();
                self.interests_sent += 1;
                Some(i)
            }
            HarvestEvent::Timeout => None,
        };
        Ok(HarvestStep {
            status: HarvestStatus::Collecting,
            next,
        })
    }

    fn rebroadcast(&mut self, now: VirtualTime, rng: &mut impl Rng) -> HarvestStep {
        if self.rebroadcasts >= self.max_rebroadcasts {
            self.finished = Some(HarvestStatus::Abandoned);
            return HarvestStep {
                status: HarvestStatus::Abandoned,
                next: None,
            };
        }
        self.rebroadcasts += 1;
        self.collected.clear();
        self.started_at = now;
        self.interests_sent += 1;
        HarvestStep {
            status: HarvestStatus::Rebroadcast,
            next: Some(self.command.renewed(rng.random())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AckOutcome {
    /// No harvest is waiting for this name (late or foreign ACK).
    Unmatched,
    Step {
        command: Name,
        step: HarvestStep,
    },
    Rejected {
        command: Name,
        error: HarvestError,
    },
}

/// Controller application: policy state plus in-flight harvests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Controller {
    pub state: ControllerState,
    pub mode: ControlMode,
    pub command_lifetime_ms: u64,
    pub max_rebroadcasts: u32,
    harvests: BTreeMap<Name, AckHarvest>,
}

impl Controller {
    pub fn new(state: ControllerState, mode: ControlMode, command_lifetime_ms: u64, max_rebroadcasts: u32) -> Self {
        Self {
            state,
            mode,
            command_lifetime_ms,
            max_rebroadcasts,
            harvests: BTreeMap::new(),
        }
    }

    /// Harvests stay within the ACK freshness period.
    pub fn freshness_budget_ms(&self) -> u64 {
        self.state.ack_freshness_ms
    }

    pub fn harvest(&self, command: &Name) -> Option<&AckHarvest> {
        self.harvests.get(command)
    }

    pub fn active_harvests(&self) -> impl Iterator<Item = &AckHarvest> {
        self.harvests.values()
    }

    /// Sends `command` to every light of `area` using the configured mode.
    pub fn issue(
        &mut self,
        area: &NameComponent,
        command: Command,
        now: VirtualTime,
        rng: &mut impl Rng,
    ) -> Result<Vec<Interest>, AppError> {
        let (cfg, _) = self.state.area(area)?;
        match self.mode {
            ControlMode::Multicast => {
                let (group, n) = (cfg.group_prefix.clone(), cfg.lights.len());
                Ok(vec![self.issue_multicast(&group, command, n, now, rng)?])
            }
            ControlMode::Unicast => {
                let lights = cfg.lights.clone();
                let interests = issue_unicast(&lights, command, self.command_lifetime_ms, rng)?;
                for i in &interests {
                    self.track(i.clone(), 1, now)?;
                }
                Ok(interests)
            }
        }
    }

    /// One command Interest to a group prefix, harvesting `expected` ACKs.
    pub fn issue_multicast(
        &mut self,
        prefix: &Name,
        command: Command,
        expected: usize,
        now: VirtualTime,
        rng: &mut impl Rng,
    ) -> Result<Interest, AppError> {
        let interest = make_command_interest(
            prefix,
            &command.component(),
            true,
            ExcludeFilter::new(),
            self.command_lifetime_ms,
            rng.random(),
        );
        self.track(interest.clone(), expected, now)?;
        Ok(interest)
    }

    fn track(&mut self, interest: Interest, expected: usize, now: VirtualTime) -> Result<(), AppError> {
        let harvest = AckHarvest::new(
            interest.clone(),
            expected,
            now,
            self.freshness_budget_ms(),
            self.max_rebroadcasts,
        )?;
        self.harvests.insert(interest.name, harvest);
        Ok(())
    }

    pub fn on_ack(&mut self, data: &Data, now: VirtualTime, rng: &mut impl Rng) -> AckOutcome {
        if data.name.is_empty() {
            return AckOutcome::Unmatched;
        }
        let command = data.name.prefix(data.name.len() - 1);
        let Some(h) = self.harvests.get_mut(&command) else {
            return AckOutcome::Unmatched;
        };
        let outcome = match h.step(HarvestEvent::Ack(data), now, rng) {
            Ok(step) => AckOutcome::Step {
                command: command.clone(),
                step,
            },
            Err(error) => AckOutcome::Rejected {
                command: command.clone(),
                error,
            },
        };
        if h.finished().is_some() {
            self.harvests.remove(&command);
        }
        outcome
    }

    /// Budget timer for `command`. Ignored unless the harvest is still on
    /// the same generation.
    pub fn on_harvest_timeout(
        &mut self,
        command: &Name,
        generation: u32,
        now: VirtualTime,
        rng: &mut impl Rng,
    ) -> Option<HarvestStep> {
        let h = self.harvests.get_mut(command)?;
        if h.generation() != generation {
            return None;
        }
        let step = h.step(HarvestEvent::Timeout, now, rng).ok()?;
        if h.finished().is_some() {
            self.harvests.remove(command);
        }
        Some(step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::{comp, name};
    use crate::packets::make_notification_interest;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    fn state() -> ControllerState {
        let mut s = ControllerState::new(1000);
        s.add_area(
            comp("floor1"),
            AreaConfig {
                thresholds: Thresholds::new(300, 800).unwrap(),
                group_prefix: name("/home/light/floor1"),
                lights: vec![name("/home/light/floor1/r1/L1"), name("/home/light/floor1/r2/L2")],
            },
        );
        s
    }

    fn occ(dir: &str, t: u64) -> Interest {
        make_notification_interest(
            &comp("occupancy"),
            &[comp("floor1"), comp("r1")],
            &[comp(dir)],
            VirtualTime(t),
            4000,
            1,
        )
    }

    fn lum(lux: u32, t: u64) -> Interest {
        make_notification_interest(
            &comp("luminosity"),
            &[comp("floor1"), comp("r1")],
            &[crate::apps::lux_component(lux)],
            VirtualTime(t),
            2000,
            1,
        )
    }

    fn set(s: &mut ControllerState, count: u32, lux: Option<u32>, desired: Command) {
        let st = s.area_state_mut(&comp("floor1")).unwrap();
        st.occupancy_count = count;
        st.latest_lux = lux.map(|l| (l, VirtualTime(0)));
        st.desired = desired;
    }

    #[test]
    fn thresholds_validated() {
        assert!(Thresholds::new(300, 300).is_err());
        assert!(Thresholds::new(800, 300).is_err());
    }

    #[test]
    fn occupancy_in_counts_and_acks() {
        let mut s = state();
        let out = s.on_notification(&occ("IN", 60000), VirtualTime(60013)).unwrap();
        assert_eq!(s.area(&comp("floor1")).unwrap().1.occupancy_count, 1);
        let ack = out.ack.unwrap();
        assert_eq!(ack.name, occ("IN", 60000).name);
        assert!(ack.payload.is_empty());
        assert_eq!(ack.freshness_period_ms, 1000);
        assert!(!out.duplicate);
    }

    #[test]
    fn duplicate_in_is_idempotent() {
        let mut s = state();
        s.on_notification(&occ("IN", 60000), VirtualTime(60013)).unwrap();
        let again = s
            .on_notification(&occ("IN", 60000).renewed(99), VirtualTime(64013))
            .unwrap();
        assert!(again.duplicate);
        assert!(again.ack.is_some());
        assert!(again.decision.is_none());
        assert_eq!(s.area(&comp("floor1")).unwrap().1.occupancy_count, 1);
    }

    #[test]
    fn out_clamps_at_zero() {
        let mut s = state();
        s.on_notification(&occ("OUT", 1000), VirtualTime(1013)).unwrap();
        assert_eq!(s.area(&comp("floor1")).unwrap().1.occupancy_count, 0);
    }

    #[test]
    fn luminosity_updates_without_ack() {
        let mut s = state();
        let out = s.on_notification(&lum(430, 5000), VirtualTime(5013)).unwrap();
        assert!(out.ack.is_none());
        assert_eq!(
            s.area(&comp("floor1")).unwrap().1.latest_lux,
            Some((430, VirtualTime(5000)))
        );
        assert_eq!(out.decision.unwrap().action, None);
    }

    #[test]
    fn malformed_notifications() {
        let mut s = state();
        for bad in [
            "/home/occupancy/publish/IN/5",
            "/home/occupancy/publish/floor1/r1/SIDEWAYS/5",
            "/home/luminosity/publish/floor1/r1/lux=abc/5",
            "/home/occupancy/publish/floor1/r1/IN/notatime",
            "/home/light/publish/floor1/r1/IN/5",
            "/office/occupancy/publish/floor1/r1/IN/5",
        ] {
            let err = s
                .on_notification(&Interest::new(name(bad), 0, 0), VirtualTime(0))
                .unwrap_err();
            assert!(matches!(err, AppError::MalformedNotification(_)), "{bad}");
        }
        let err = s
            .on_notification(
                &Interest::new(name("/home/occupancy/publish/floor9/r1/IN/5"), 0, 0),
                VirtualTime(0),
            )
            .unwrap_err();
        assert_eq!(err, AppError::UnknownArea(comp("floor9")));
    }

    #[test]
    fn policy_examples() {
        let mut s = state();
        let a = comp("floor1");
        set(&mut s, 1, Some(100), Command::SwitchOff);
        assert_eq!(decide_lights(&s, &a), Ok(Some(Command::SwitchOn)));
        set(&mut s, 0, Some(100), Command::SwitchOn);
        assert_eq!(decide_lights(&s, &a), Ok(Some(Command::SwitchOff)));
        set(&mut s, 0, None, Command::SwitchOn);
        assert_eq!(decide_lights(&s, &a), Ok(Some(Command::SwitchOff)));
        set(&mut s, 1, Some(500), Command::SwitchOff);
        assert_eq!(decide_lights(&s, &a), Ok(None));
        set(&mut s, 1, Some(500), Command::SwitchOn);
        assert_eq!(decide_lights(&s, &a), Ok(None));
        set(&mut s, 1, Some(900), Command::SwitchOn);
        assert_eq!(decide_lights(&s, &a), Ok(Some(Command::SwitchOff)));
        // Daylight with lights already off: nothing to do.
        set(&mut s, 1, Some(900), Command::SwitchOff);
        assert_eq!(decide_lights(&s, &a), Ok(None));
        assert_eq!(
            decide_lights(&s, &comp("attic")),
            Err(AppError::UnknownArea(comp("attic")))
        );
    }

    /// Exhaustive truth table over the boundary values of each input.
    #[test]
    fn policy_truth_table() {
        let a = comp("floor1");
        for count in [0u32, 1, 2] {
            for lux in [None, Some(0), Some(299), Some(300), Some(800), Some(801)] {
                for desired in [Command::SwitchOn, Command::SwitchOff] {
                    let mut s = state();
                    set(&mut s, count, lux, desired);
                    let want_on = count > 0 && lux.is_some_and(|l| l < 300);
                    let want_off = count == 0 || lux.is_some_and(|l| l > 800);
                    let expected = if want_on && desired == Command::SwitchOff {
                        Some(Command::SwitchOn)
                    } else if !want_on && want_off && desired == Command::SwitchOn {
                        Some(Command::SwitchOff)
                    } else {
                        None
                    };
                    assert_eq!(decide_lights(&s, &a).unwrap(), expected, "{count} {lux:?} {desired:?}");
                }
            }
        }
    }

    #[test]
    fn no_command_storm() {
        let mut s = state();
        s.on_notification(&lum(100, 0), VirtualTime(10)).unwrap();
        let first = s.on_notification(&occ("IN", 1000), VirtualTime(1010)).unwrap();
        assert_eq!(first.command(), Some((comp("floor1"), Command::SwitchOn)));
        for t in 1..10 {
            let out = s
                .on_notification(&lum(100, t * 5000), VirtualTime(t * 5000 + 10))
                .unwrap();
            assert_eq!(out.command(), None);
        }
    }

    #[test]
    fn decision_csv_row() {
        let d = DecisionRecord {
            at: VirtualTime(1010),
            area: comp("floor1"),
            occupancy_count: 1,
            lux: Some(100),
            action: Some(Command::SwitchOn),
        };
        assert_eq!(d.csv_row(), "1010,floor1,1,100,switchON");
        let d = DecisionRecord {
            lux: None,
            action: None,
            ..d
        };
        assert_eq!(d.csv_row(), "1010,floor1,1,,none");
    }

    #[test]
    fn unicast_issue() {
        let lights: Vec<Name> = (1..=3)
            .map(|i| name(&format!("/home/light/floor1/r{i}/L{i}")))
            .collect();
        let is = issue_unicast(&lights, Command::SwitchOn, 4000, &mut rng()).unwrap();
        assert_eq!(is.len(), 3);
        assert_eq!(is[2].name, name("/home/light/floor1/r3/L3/switchON"));
        assert!(is.iter().all(|i| i.must_be_fresh));
        assert_eq!(
            issue_unicast(&[], Command::SwitchOn, 4000, &mut rng()),
            Err(AppError::NoLights)
        );

        let one = issue_unicast(&lights[..1], Command::SwitchOn, 4000, &mut rng()).unwrap();
        let group = make_command_interest(
            &lights[0],
            &Command::SwitchOn.component(),
            true,
            ExcludeFilter::new(),
            4000,
            one[0].nonce,
        );
        assert_eq!(one[0], group);
    }

    fn cmd() -> Interest {
        make_command_interest(
            &name("/home/light/floor1"),
            &comp("switchOFF"),
            true,
            ExcludeFilter::new(),
            4000,
            1,
        )
    }

    fn ack(id: &str) -> Data {
        Data::new(cmd().name.append(comp(id)), "ACK", 1000)
    }

    #[test]
    fn harvest_three_acks() {
        let mut r = rng();
        let mut h = AckHarvest::new(cmd(), 3, VirtualTime(0), 1000, 3).unwrap();
        let s1 = h.step(HarvestEvent::Ack(&ack("L1")), VirtualTime(10), &mut r).unwrap();
        assert_eq!(s1.status, HarvestStatus::Collecting);
        let n1 = s1.next.unwrap();
        assert_eq!(n1.name, cmd().name);
        assert_eq!(n1.exclude, [comp("L1")].into_iter().collect());
        assert_ne!(n1.nonce, cmd().nonce);

        let s2 = h.step(HarvestEvent::Ack(&ack("L2")), VirtualTime(20), &mut r).unwrap();
        assert_eq!(s2.next.unwrap().exclude, [comp("L1"), comp("L2")].into_iter().collect());

        let s3 = h.step(HarvestEvent::Ack(&ack("L3")), VirtualTime(30), &mut r).unwrap();
        assert_eq!(
            s3,
            HarvestStep {
                status: HarvestStatus::Done,
                next: None
            }
        );
        assert_eq!(h.interests_sent(), 3);
    }

    #[test]
    fn harvest_single_light() {
        let mut h = AckHarvest::new(cmd(), 1, VirtualTime(0), 1000, 3).unwrap();
        let s = h
            .step(HarvestEvent::Ack(&ack("L1")), VirtualTime(10), &mut rng())
            .unwrap();
        assert_eq!(s.status, HarvestStatus::Done);
        assert_eq!(h.interests_sent(), 1);
    }

    #[test]
    fn harvest_rebroadcasts_after_budget() {
        let mut r = rng();
        let mut h = AckHarvest::new(cmd(), 3, VirtualTime(0), 1000, 1).unwrap();
        h.step(HarvestEvent::Ack(&ack("L1")), VirtualTime(10), &mut r).unwrap();
        h.step(HarvestEvent::Ack(&ack("L2")), VirtualTime(20), &mut r).unwrap();
        let t = h.step(HarvestEvent::Timeout, VirtualTime(999), &mut r).unwrap();
        assert_eq!(
            t,
            HarvestStep {
                status: HarvestStatus::Collecting,
                next: None
            }
        );

        let t = h.step(HarvestEvent::Timeout, VirtualTime(1000), &mut r).unwrap();
        assert_eq!(t.status, HarvestStatus::Rebroadcast);
        let again = t.next.unwrap();
        assert!(again.exclude.is_empty());
        assert_eq!(again.name, cmd().name);
        assert!(h.collected().is_empty());
        assert_eq!(h.generation(), 1);

        let t = h.step(HarvestEvent::Timeout, VirtualTime(2000), &mut r).unwrap();
        assert_eq!(t.status, HarvestStatus::Abandoned);
        assert_eq!(h.finished(), Some(HarvestStatus::Abandoned));
    }

    #[test]
    fn harvest_errors() {
        let mut r = rng();
        let mut h = AckHarvest::new(cmd(), 3, VirtualTime(0), 1000, 3).unwrap();
        h.step(HarvestEvent::Ack(&ack("L1")), VirtualTime(10), &mut r).unwrap();
        assert_eq!(
            h.step(HarvestEvent::Ack(&ack("L1")), VirtualTime(11), &mut r),
            Err(HarvestError::DuplicateAck(comp("L1")))
        );
        let foreign = Data::new(name("/home/light/floor2/switchOFF/L1"), "ACK", 1000);
        assert!(matches!(
            h.step(HarvestEvent::Ack(&foreign), VirtualTime(12), &mut r),
            Err(HarvestError::ForeignAck { .. })
        ));
        let mut stale = cmd();
        stale.must_be_fresh = false;
        assert_eq!(
            AckHarvest::new(stale, 1, VirtualTime(0), 1000, 0),
            Err(AppError::HarvestNotFresh)
        );
    }

    #[test]
    fn controller_routes_acks_to_harvests() {
        let mut r = rng();
        let mut c = Controller::new(state(), ControlMode::Multicast, 4000, 3);
        let sent = c
            .issue(&comp("floor1"), Command::SwitchOff, VirtualTime(0), &mut r)
            .unwrap();
        assert_eq!(sent.len(), 1);
        assert_eq!(sent[0].name, name("/home/light/floor1/switchOFF"));
        assert!(matches!(
            c.on_ack(&ack("L1"), VirtualTime(10), &mut r),
            AckOutcome::Step { .. }
        ));
        match c.on_ack(&ack("L2"), VirtualTime(20), &mut r) {
            AckOutcome::Step { step, .. } => assert_eq!(step.status, HarvestStatus::Done),
            other => panic!("{other:?}"),
        }
        assert!(c.harvest(&cmd().name).is_none());
        assert_eq!(c.on_ack(&ack("L3"), VirtualTime(30), &mut r), AckOutcome::Unmatched);
    }

    #[test]
    fn controller_unicast_mode() {
        let mut r = rng();
        let mut c = Controller::new(state(), ControlMode::Unicast, 4000, 3);
        let sent = c
            .issue(&comp("floor1"), Command::SwitchOn, VirtualTime(0), &mut r)
            .unwrap();
        assert_eq!(sent.len(), 2);
        assert_eq!(c.active_harvests().count(), 2);
        let a = Data::new(sent[0].name.append(comp("L1")), "ACK", 1000);
        match c.on_ack(&a, VirtualTime(10), &mut r) {
            AckOutcome::Step { step, .. } => assert_eq!(step.status, HarvestStatus::Done),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.active_harvests().count(), 1);
    }

    #[test]
    fn stale_timer_generation_ignored() {
        let mut r = rng();
        let mut c = Controller::new(state(), ControlMode::Multicast, 4000, 3);
        c.issue(&comp("floor1"), Command::SwitchOff, VirtualTime(0), &mut r)
            .unwrap();
        let step = c.on_harvest_timeout(&cmd().name, 0, VirtualTime(1000), &mut r).unwrap();
        assert_eq!(step.status, HarvestStatus::Rebroadcast);
        assert!(c
            .on_harvest_timeout(&cmd().name, 0, VirtualTime(2000), &mut r)
            .is_none());
        assert_eq!(
            c.on_harvest_timeout(&cmd().name, 1, VirtualTime(2000), &mut r)
                .unwrap()
                .status,
            HarvestStatus::Rebroadcast
        );
    }
}
