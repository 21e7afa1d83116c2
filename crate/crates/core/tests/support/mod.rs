//! Reference oracles shared by integration tests and the acceptance suite.
//! Each one restates a rule directly instead of reusing library logic.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lighthall_core::apps::{Command, ControlMode, Direction, OmiPattern};
use lighthall_core::names::Name;
use lighthall_core::packets::PacketType;
use lighthall_core::scenario::{CommandEvent, LuxEvent, MoveEvent, Scenario, TopologySpec};
use lighthall_core::simnet::{LinkDir, LinkRecord, MetricsReport};
use lighthall_core::VirtualTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Movements according to the door-frame rules, evaluated per step:
/// a trigger (110 or 011) completes a movement when the most recent earlier
/// trigger was the opposite pattern, did not itself complete a movement, and
/// lies at most `delay` ms back. 110 then 011 is IN; 011 then 110 is OUT.
pub fn omi_oracle(seq: &[(u8, u64)], delay: u64) -> Vec<(Direction, u64)> {
    let is_trigger = |b: u8| b == 0b110 || b == 0b011;
    let mut completed = vec![false; seq.len()];
    let mut out = Vec::new();
    for j in 0..seq.len() {
        let (pj, tj) = seq[j];
        if !is_trigger(pj) {
            continue;
        }
        let Some(i) = (0..j).rev().find(|&i| is_trigger(seq[i].0)) else {
            continue;
        };
        let (pi, ti) = seq[i];
        if pi != pj && !completed[i] && tj - ti <= delay {
            completed[j] = true;
            out.push((if pi == 0b110 { Direction::In } else { Direction::Out }, tj));
        }
    }
    out
}

pub fn pattern(bits: u8) -> OmiPattern {
    OmiPattern::from_bits(bits)
}

/// Self-regulation check over a link log: every Data sent in one direction
/// must be paid for by an earlier Interest delivered in the other direction
/// whose name is a prefix of the Data name. Credits are spent on the
/// longest matching prefix first. Returns the violating records.
pub fn self_regulation_violations(log: &[LinkRecord]) -> Vec<LinkRecord> {
    // (time, is_data, index): Interest arrivals before Data departures at equal times.
    let mut timeline: Vec<(VirtualTime, u8, usize)> = Vec::new();
    for (i, r) in log.iter().enumerate() {
        match r.packet_type {
            PacketType::Interest => {
                if let Some(at) = r.arrives_at {
                    timeline.push((at, 0, i));
                }
            }
            PacketType::Data => timeline.push((r.sent_at, 1, i)),
        }
    }
    timeline.sort();
    let mut credit: BTreeMap<(String, LinkDir, Name), u64> = BTreeMap::new();
    let mut violations = Vec::new();
    for (_, _, i) in timeline {
        let r = &log[i];
        match r.packet_type {
            PacketType::Interest => {
                *credit
                    .entry((r.link.clone(), r.dir.opposite(), r.name.clone()))
                    .or_default() += 1;
            }
            PacketType::Data => {
                let slot = (0..=r.name.len()).rev().find_map(|k| {
                    let key = (r.link.clone(), r.dir, r.name.prefix(k));
                    credit.get(&key).is_some_and(|c| *c > 0).then_some(key)
                });
                match slot {
                    Some(key) => *credit.get_mut(&key).expect("found") -= 1,
                    None => violations.push(r.clone()),
                }
            }
        }
    }
    violations
}

/// Light policy written out as a table lookup.
pub fn policy_oracle(count: u32, lux: Option<u32>, desired: Command, min: u32, max: u32) -> Option<Command> {
    let on = count > 0 && matches!(lux, Some(l) if l < min);
    let off = count == 0 || matches!(lux, Some(l) if l > max);
    match (on, off, desired) {
        (true, _, Command::SwitchOff) => Some(Command::SwitchOn),
        (false, true, Command::SwitchOn) => Some(Command::SwitchOff),
        _ => None,
    }
}

/// Checks every decision row against [`policy_oracle`], tracking the
/// commanded state from the rows themselves.
pub fn decisions_follow_policy(report: &MetricsReport, min: u32, max: u32) -> Result<(), String> {
    let mut desired = Command::SwitchOff;
    for (i, d) in report.decisions.iter().enumerate() {
        let want = policy_oracle(d.occupancy_count, d.lux, desired, min, max);
        if want != d.action {
            return Err(format!("row {i} ({}): expected {want:?}", d.csv_row()));
        }
        if let Some(c) = d.action {
            desired = c;
        }
    }
    Ok(())
}

/// Occupancy count after each state-changing notification at the
/// controller, recomputed from the raw delivery stream.
pub fn occupancy_counts_from_deliveries(report: &MetricsReport) -> Vec<u32> {
    let mut seen = BTreeSet::new();
    let mut count: u32 = 0;
    let mut out = Vec::new();
    for d in report
        .deliveries
        .iter()
        .filter(|d| d.app == "controller" && d.packet_type == PacketType::Interest)
    {
        let parts: Vec<&str> = d.name.components().iter().map(|c| c.as_str()).collect();
        match parts.get(1).copied() {
            Some("luminosity") => out.push(count),
            Some("occupancy") if seen.insert(d.name.clone()) => {
                match parts[parts.len() - 2] {
                    "IN" => count += 1,
                    _ => count = count.saturating_sub(1),
                }
                out.push(count);
            }
            _ => {}
        }
    }
    out
}

fn name(uri: &str) -> Name {
    Name::parse(uri).unwrap()
}

/// A random but valid scenario: home or exhibition, optional loss, random
/// movements, lux steps and commands.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exhibition = rng.random_bool(0.35);
    let topology = if exhibition {
        TopologySpec::Exhibition {
            m: rng.random_range(1..=4),
            n: rng.random_range(1..=3),
            filtering: rng.random_bool(0.5),
        }
    } else {
        TopologySpec::Home {
            nodes: rng.random_range(1..=4),
        }
    };
    let mut s = Scenario::new(topology);
    s.seed = rng.random();
    s.duration_ms = rng.random_range(20..=120) * 1000;
    if rng.random_bool(0.5) {
        s.links.loss_rate = rng.random_range(0..=30) as f64 / 100.0;
    }
    s.links.latency_ms = rng.random_range(1..=20);
    s.links.processing_ms = rng.random_range(0..=3);
    if rng.random_bool(0.3) {
        s.apps.control = ControlMode::Unicast;
    }

    let mut t = 0;
    let mut commands = Vec::new();
    match topology {
        TopologySpec::Home { nodes } => {
            let mut dir = Direction::In;
            loop {
                t += rng.random_range(1000..15_000);
                if t >= s.duration_ms {
                    break;
                }
                s.moves.push(MoveEvent {
                    at: VirtualTime(t),
                    direction: dir,
                    detector: format!("od{}", rng.random_range(1..=nodes)),
                });
                // Mostly alternate, sometimes repeat.
                if rng.random_bool(0.8) {
                    dir = if dir == Direction::In {
                        Direction::Out
                    } else {
                        Direction::In
                    };
                }
            }
            let mut lt = 0;
            for _ in 0..rng.random_range(0..5) {
                s.lux.push(LuxEvent {
                    at: VirtualTime(lt),
                    detector: None,
                    value: rng.random_range(0..1200),
                });
                lt += rng.random_range(1000..30_000);
            }
            let mut ct = 0;
            for _ in 0..rng.random_range(0..3) {
                ct += rng.random_range(500..20_000);
                let (prefix, expected) = if rng.random_bool(0.5) {
                    (name("/home/light/floor1"), nodes)
                } else {
                    let i = rng.random_range(1..=nodes);
                    (name(&format!("/home/light/floor1/r{i}/L{i}")), 1)
                };
                commands.push((ct, prefix, expected));
            }
        }
        TopologySpec::Exhibition { m, n, .. } => {
            s.apps.luminosity = false;
            let mut ct = 0;
            for _ in 0..rng.random_range(1..8) {
                ct += rng.random_range(200..10_000);
                let k = rng.random_range(1..=m);
                let j = rng.random_range(1..=n);
                commands.push((ct, name(&format!("/home/light/room-{k}/section-{j}")), 1));
            }
        }
    }
    for (at, prefix, expected) in commands {
        s.commands.push(CommandEvent {
            at: VirtualTime(at),
            prefix,
            command: if rng.random_bool(0.5) {
                Command::SwitchOn
            } else {
                Command::SwitchOff
            },
            expected,
        });
    }
    s.validate()
        .unwrap_or_else(|e| panic!("generator produced an invalid scenario: {e}"));
    s
}
