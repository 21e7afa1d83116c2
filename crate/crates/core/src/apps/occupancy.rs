//! Occupancy detection and reliable notification.
//!
//! Three motion sensors sit outside (O), in the middle (M) and inside (I) of
//! a door frame. Their activations form a 3-bit pattern written `OMI`.
//! `110` followed by `011` within the delay period is an IN movement;
//! `011` followed by `110` is OUT.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::names::{Name, NameComponent};
use crate::packets::{make_notification_interest, Data, Interest, SERVICE_OCCUPANCY};
use crate::time::VirtualTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "IN",
            Direction::Out => "OUT",
        }
    }

    pub fn component(self) -> NameComponent {
        NameComponent::new(self.as_str()).expect("static")
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "IN" => Ok(Direction::In),
            "OUT" => Ok(Direction::Out),
            other => Err(format!("expected IN or OUT, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Movement {
    pub direction: Direction,
    pub at: VirtualTime,
}

/// Sensor activation vector; bit 2 is O, bit 1 is M, bit 0 is I.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OmiPattern(u8);

impl OmiPattern {
    pub const NONE: OmiPattern = OmiPattern(0b000);
    /// Outside and middle: someone at the outer half of the door.
    pub const OUTER: OmiPattern = OmiPattern(0b110);
    /// Middle and inside: someone at the inner half of the door.
    pub const INNER: OmiPattern = OmiPattern(0b011);

    /// Keeps the low three bits.
    pub fn from_bits(bits: u8) -> Self {
        Self(bits & 0b111)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = OmiPattern> {
        (0..8).map(OmiPattern)
    }
}

impl fmt::Display for OmiPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03b}", self.0)
    }
}

impl FromStr for OmiPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 3 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(format!("expected three binary digits, got {s:?}"));
        }
        u8::from_str_radix(s, 2).map(OmiPattern).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pending {
    None,
    AwaitingIn { since: VirtualTime },
    AwaitingOut { since: VirtualTime },
}

impl Pending {
    pub fn since(self) -> Option<VirtualTime> {
        match self {
            Pending::None => None,
            Pending::AwaitingIn { since } | Pending::AwaitingOut { since } => Some(since),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OmiState {
    pub last_pattern: OmiPattern,
    pub pending: Pending,
    pub delay_period_ms: u64,
}

impl OmiState {
    pub fn new(delay_period_ms: u64) -> Self {
        Self {
            last_pattern: OmiPattern::NONE,
            pending: Pending::None,
            delay_period_ms,
        }
    }

    /// Feeds one sensor reading. A pending half-movement older than the
    /// delay period is dropped before the reading is considered.
    pub fn step(&mut self, pattern: OmiPattern, now: VirtualTime) -> Option<Movement> {
        if let Some(since) = self.pending.since() {
            if now.since(since) > self.delay_period_ms {
                self.pending = Pending::None;
            }
        }
        self.last_pattern = pattern;

        let movement = |direction| Some(Movement { direction, at: now });
        match (pattern, self.pending) {
            (OmiPattern::INNER, Pending::AwaitingIn { .. }) => {
                self.pending = Pending::None;
                movement(Direction::In)
            }
            (OmiPattern::OUTER, Pending::AwaitingOut { .. }) => {
                self.pending = Pending::None;
                movement(Direction::Out)
            }
            (OmiPattern::OUTER, _) => {
                self.pending = Pending::AwaitingIn { since: now };
                None
            }
            (OmiPattern::INNER, _) => {
                self.pending = Pending::AwaitingOut { since: now };
                None
            }
            _ => None,
        }
    }
}

/// Value-style wrapper around [`OmiState::step`].
pub fn omi_step(state: OmiState, pattern: OmiPattern, now: VirtualTime) -> (OmiState, Option<Movement>) {
    let mut next = state;
    let movement = next.step(pattern, now);
    (next, movement)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outstanding {
    pub movement: Movement,
    pub interest: Interest,
    /// Transmissions so far, including the first.
    pub attempts: u32,
    pub next_retry: VirtualTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeoutOutcome {
    /// Nothing outstanding, or the retry time has not been reached.
    NotDue,
    Retransmit(Interest),
    GaveUp {
        abandoned: Outstanding,
        next: Option<Interest>,
    },
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AckResult {
    Ignored,
    Acked {
        completed: Outstanding,
        next: Option<Interest>,
    },
}

/// Sends one movement notification at a time and retransmits it on
/// timeout. Movements detected while one is in flight wait in FIFO order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyNotifier {
    pub location_path: Vec<NameComponent>,
    pub lifetime_ms: u64,
    pub max_retransmissions: u32,
    outstanding: Option<Outstanding>,
    queue: VecDeque<Movement>,
}

impl OccupancyNotifier {
    pub fn new(location_path: Vec<NameComponent>) -> Self {
        Self {
            location_path,
            lifetime_ms: 4000,
            max_retransmissions: 3,
            outstanding: None,
            queue: VecDeque::new(),
        }
    }

    pub fn outstanding(&self) -> Option<&Outstanding> {
        self.outstanding.as_ref()
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    pub fn notification_name(&self, movement: &Movement) -> Name {
        self.build(movement, 0).name
    }

    fn build(&self, movement: &Movement, nonce: u32) -> Interest {
        make_notification_interest(
            &NameComponent::new(SERVICE_OCCUPANCY).expect("static"),
            &self.location_path,
            &[movement.direction.component()],
            movement.at,
            self.lifetime_ms,
            nonce,
        )
    }

    fn send(&mut self, movement: Movement, now: VirtualTime, rng: &mut impl Rng) -> Interest {
        let interest = self.build(&movement, rng.random());
        self.outstanding = Some(Outstanding {
            movement,
            interest: interest.clone(),
            attempts: 1,
            next_retry: now + self.lifetime_ms,
        });
        interest
    }

    fn send_next_queued(&mut self, now: VirtualTime, rng: &mut impl Rng) -> Option<Interest> {
        let movement = self.queue.pop_front()?;
        Some(self.send(movement, now, rng))
    }

    /// Emits the notification for `movement`, or queues it behind the one
    /// in flight.
    pub fn notify(&mut self, movement: Movement, now: VirtualTime, rng: &mut impl Rng) -> Option<Interest> {
        if self.outstanding.is_some() {
            self.queue.push_back(movement);
            return None;
        }
        Some(self.send(movement, now, rng))
    }

    pub fn on_timeout(&mut self, now: VirtualTime, rng: &mut impl Rng) -> TimeoutOutcome {
        let Some(out) = self.outstanding.as_mut() else {
            return TimeoutOutcome::NotDue;
        };
        if now < out.next_retry {
            return TimeoutOutcome::NotDue;
        }
        if out.attempts > self.max_retransmissions {
            let abandoned = self.outstanding.take().expect("checked above");
            let next = self.send_next_queued(now, rng);
            return TimeoutOutcome::GaveUp { abandoned, next };
        }
        out.attempts += 1;
        out.next_retry = now + self.lifetime_ms;
        out.interest = out.interest.renewed(rng.random());
        TimeoutOutcome::Retransmit(out.interest.clone())
    }

    /// Clears the outstanding notification when `data` acknowledges it.
    pub fn on_ack(&mut self, data: &Data, now: VirtualTime, rng: &mut impl Rng) -> AckResult {
        match &self.outstanding {
            Some(out) if out.interest.name == data.name => {
                let completed = self.outstanding.take().expect("matched above");
                let next = self.send_next_queued(now, rng);
                AckResult::Acked { completed, next }
            }
            _ => AckResult::Ignored,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::comp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> OmiPattern {
        s.parse().unwrap()
    }

    fn run(seq: &[(&str, u64)], delay: u64) -> Vec<Movement> {
        let mut st = OmiState::new(delay);
        seq.iter().filter_map(|(s, t)| st.step(p(s), VirtualTime(*t))).collect()
    }

    #[test]
    fn pattern_text() {
        assert_eq!(p("110"), OmiPattern::OUTER);
        assert_eq!(OmiPattern::INNER.to_string(), "011");
        assert!("11".parse::<OmiPattern>().is_err());
        assert!("012".parse::<OmiPattern>().is_err());
    }

    #[test]
    fn in_movement() {
        let m = run(&[("110", 0), ("011", 500)], 2000);
        assert_eq!(
            m,
            vec![Movement {
                direction: Direction::In,
                at: VirtualTime(500)
            }]
        );
    }

    #[test]
    fn out_movement() {
        let m = run(&[("011", 0), ("110", 500)], 2000);
        assert_eq!(
            m,
            vec![Movement {
                direction: Direction::Out,
                at: VirtualTime(500)
            }]
        );
    }

    #[test]
    fn timeout_resets_then_rearms() {
        let mut st = OmiState::new(2000);
        assert_eq!(st.step(p("110"), VirtualTime(0)), None);
        assert_eq!(st.step(p("011"), VirtualTime(3000)), None);
        assert_eq!(
            st.pending,
            Pending::AwaitingOut {
                since: VirtualTime(3000)
            }
        );
    }

    #[test]
    fn delay_boundary_is_inclusive() {
        assert_eq!(run(&[("110", 0), ("011", 2000)], 2000).len(), 1);
        assert_eq!(run(&[("110", 0), ("011", 2001)], 2000).len(), 0);
    }

    #[test]
    fn intermediate_patterns_keep_pending() {
        let m = run(
            &[
                ("100", 0),
                ("110", 200),
                ("111", 300),
                ("011", 400),
                ("001", 600),
                ("000", 800),
            ],
            2000,
        );
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].direction, Direction::In);
    }

    #[test]
    fn value_style_step() {
        let s0 = OmiState::new(2000);
        let (s1, m) = omi_step(s0, OmiPattern::OUTER, VirtualTime(0));
        assert!(m.is_none());
        assert_eq!(s0.pending, Pending::None);
        assert_eq!(s1.pending.since(), Some(VirtualTime(0)));
        assert_eq!(s1.last_pattern, OmiPattern::OUTER);
    }

    fn notifier() -> OccupancyNotifier {
        OccupancyNotifier::new(vec![comp("floor1"), comp("r1")])
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn mv(direction: Direction, at: u64) -> Movement {
        Movement {
            direction,
            at: VirtualTime(at),
        }
    }

    #[test]
    fn notify_builds_name_and_arms_retry() {
        let mut n = notifier();
        let mut r = rng();
        let i = n.notify(mv(Direction::In, 60000), VirtualTime(60000), &mut r).unwrap();
        assert_eq!(i.name.to_string(), "/home/occupancy/publish/floor1/r1/IN/60000");
        assert_eq!(i.lifetime_ms, 4000);
        let out = n.outstanding().unwrap();
        assert_eq!(out.attempts, 1);
        assert_eq!(out.next_retry, VirtualTime(64000));
    }

    #[test]
    fn retransmits_then_gives_up() {
        let mut n = notifier();
        let mut r = rng();
        let first = n.notify(mv(Direction::In, 60000), VirtualTime(60000), &mut r).unwrap();
        assert_eq!(n.on_timeout(VirtualTime(63999), &mut r), TimeoutOutcome::NotDue);

        let mut nonces = vec![first.nonce];
        for (k, t) in [64000u64, 68000, 72000].into_iter().enumerate() {
            match n.on_timeout(VirtualTime(t), &mut r) {
                TimeoutOutcome::Retransmit(i) => {
                    assert_eq!(i.name, first.name);
                    nonces.push(i.nonce);
                }
                other => panic!("expected retransmit, got {other:?}"),
            }
            assert_eq!(n.outstanding().unwrap().attempts, k as u32 + 2);
        }
        nonces.sort_unstable();
        nonces.dedup();
        assert_eq!(nonces.len(), 4);

        match n.on_timeout(VirtualTime(76000), &mut r) {
            TimeoutOutcome::GaveUp { abandoned, next } => {
                assert_eq!(abandoned.attempts, 4);
                assert!(next.is_none());
            }
            other => panic!("expected give-up, got {other:?}"),
        }
        assert!(n.outstanding().is_none());
    }

    #[test]
    fn ack_clears_outstanding() {
        let mut n = notifier();
        let mut r = rng();
        let i = n.notify(mv(Direction::In, 1000), VirtualTime(1000), &mut r).unwrap();
        let ack = Data::new(i.name.clone(), "", 1000);
        assert!(matches!(
            n.on_ack(&ack, VirtualTime(1026), &mut r),
            AckResult::Acked { .. }
        ));
        assert!(n.outstanding().is_none());
        assert_eq!(n.on_ack(&ack, VirtualTime(1030), &mut r), AckResult::Ignored);
        assert_eq!(n.on_timeout(VirtualTime(5000), &mut r), TimeoutOutcome::NotDue);
    }

    #[test]
    fn ack_between_retransmissions() {
        let mut n = notifier();
        let mut r = rng();
        let i = n.notify(mv(Direction::Out, 0), VirtualTime(0), &mut r).unwrap();
        // first copy lost, retransmission delivered
        assert!(matches!(
            n.on_timeout(VirtualTime(4000), &mut r),
            TimeoutOutcome::Retransmit(_)
        ));
        let ack = Data::new(i.name, "", 1000);
        match n.on_ack(&ack, VirtualTime(4026), &mut r) {
            AckResult::Acked { completed, .. } => assert_eq!(completed.attempts, 2),
            AckResult::Ignored => panic!("ack ignored"),
        }
        assert_eq!(n.on_timeout(VirtualTime(8000), &mut r), TimeoutOutcome::NotDue);
    }

    #[test]
    fn movements_queue_in_order() {
        let mut n = notifier();
        let mut r = rng();
        let a = n.notify(mv(Direction::In, 0), VirtualTime(0), &mut r).unwrap();
        assert!(n.notify(mv(Direction::Out, 100), VirtualTime(100), &mut r).is_none());
        assert!(n.notify(mv(Direction::In, 200), VirtualTime(200), &mut r).is_none());
        assert_eq!(n.queued(), 2);
        let AckResult::Acked { next: Some(b), .. } = n.on_ack(&Data::new(a.name, "", 0), VirtualTime(300), &mut r)
        else {
            panic!("expected next notification");
        };
        assert_eq!(b.name.to_string(), "/home/occupancy/publish/floor1/r1/OUT/100");
        assert_eq!(n.queued(), 1);
    }

    #[test]
    fn unrelated_ack_ignored() {
        let mut n = notifier();
        let mut r = rng();
        n.notify(mv(Direction::In, 0), VirtualTime(0), &mut r).unwrap();
        let other = Data::new(crate::names::name("/home/occupancy/publish/floor1/r1/IN/1"), "", 0);
        assert_eq!(n.on_ack(&other, VirtualTime(5), &mut r), AckResult::Ignored);
        assert!(n.outstanding().is_some());
    }
}
