//! Runs the fuzz target properties over the checked-in corpus and over
//! generated input, so they are exercised without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use lighthall_core::apps::Notification;
use lighthall_core::names::{Name, NamePattern};
use lighthall_core::scenario::Scenario;
use lighthall_core::trace::Trace;
use proptest::prelude::*;

fn corpus(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus {target}");
    files.iter().map(|p| fs::read_to_string(p).unwrap()).collect()
}

fn name_target(s: &str) {
    if let Ok(name) = Name::parse(s) {
        assert_eq!(Name::parse(&name.to_string()).unwrap(), name);
        for k in 0..=name.len() {
            assert!(name.prefix(k).is_prefix_of(&name));
        }
    }
}

fn pattern_target(s: &str) {
    let (pattern, name) = s.split_once('\n').unwrap_or((s, "/"));
    if let Ok(p) = NamePattern::parse(pattern) {
        let again = NamePattern::parse(&p.to_string()).unwrap();
        assert_eq!(again, p);
        if let Ok(n) = Name::parse(name) {
            assert_eq!(p.matches(&n), again.matches(&n));
        }
    }
}

fn notification_target(s: &str) {
    if let Ok(name) = Name::parse(s) {
        let _ = Notification::parse(&name);
    }
}

fn scenario_target(s: &str) {
    let (text, overrides) = s.split_once('\0').unwrap_or((s, ""));
    let overrides: Vec<String> = overrides.lines().map(str::to_string).collect();
    if let Ok(scenario) = Scenario::parse_with_overrides(text, &overrides) {
        assert_eq!(Scenario::parse(&scenario.render()).unwrap(), scenario);
    }
}

fn trace_target(s: &str) {
    if let Ok(trace) = Trace::parse(s) {
        assert_eq!(Trace::parse(&trace.render()).unwrap(), trace);
    }
}

#[test]
fn corpus_seeds_hold() {
    for s in corpus("name_parse") {
        name_target(&s);
    }
    for s in corpus("pattern_parse") {
        pattern_target(&s);
    }
    for s in corpus("notification_parse") {
        notification_target(&s);
    }
    for s in corpus("scenario_parse") {
        scenario_target(&s);
    }
    for s in corpus("trace_parse") {
        trace_target(&s);
    }
}

#[test]
fn corpus_has_valid_and_invalid_inputs() {
    let names = corpus("name_parse");
    assert!(names.iter().any(|s| Name::parse(s).is_ok()));
    let scenarios = corpus("scenario_parse");
    assert!(scenarios.iter().any(|s| Scenario::parse(s).is_ok()));
    assert!(scenarios.iter().any(|s| Scenario::parse(s).is_err()));
    assert!(corpus("trace_parse").iter().any(|s| Trace::parse(s).is_ok()));
}

/// Corpus text with a few bytes replaced or removed.
fn mutated(target: &'static str) -> impl Strategy<Value = String> {
    let seeds = corpus(target);
    (
        0..seeds.len(),
        proptest::collection::vec((any::<prop::sample::Index>(), any::<char>(), any::<bool>()), 0..6),
    )
        .prop_map(move |(i, edits)| {
            let mut chars: Vec<char> = seeds[i].chars().collect();
            for (at, c, delete) in edits {
                if chars.is_empty() {
                    chars.push(c);
                    continue;
                }
                let k = at.index(chars.len());
                if delete {
                    chars.remove(k);
                } else {
                    chars[k] = c;
                }
            }
            chars.into_iter().collect()
        })
}

proptest! {
    #[test]
    fn names_from_noise(s in "[/a-z0-9%=.\\-]{0,40}") {
        name_target(&s);
        notification_target(&s);
    }

    #[test]
    fn patterns_from_noise(s in "[\\[\\]<>*|/a-z0-9\\-\n]{0,40}") {
        pattern_target(&s);
    }

    #[test]
    fn mutated_names(s in mutated("name_parse")) {
        name_target(&s);
    }

    #[test]
    fn mutated_patterns(s in mutated("pattern_parse")) {
        pattern_target(&s);
    }

    #[test]
    fn mutated_notifications(s in mutated("notification_parse")) {
        notification_target(&s);
    }

    #[test]
    fn mutated_scenarios(s in mutated("scenario_parse")) {
        scenario_target(&s);
    }

    #[test]
    fn mutated_traces(s in mutated("trace_parse")) {
        trace_target(&s);
    }
}
