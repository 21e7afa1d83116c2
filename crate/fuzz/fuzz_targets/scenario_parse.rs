#![no_main]
use libfuzzer_sys::fuzz_target;

use lighthall_core::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    // Trailing lines after a NUL are treated as `--set` overrides.
    let (text, overrides) = s.split_once('\0').unwrap_or((s, ""));
    let overrides: Vec<String> = overrides.lines().map(str::to_string).collect();
    if let Ok(scenario) = Scenario::parse_with_overrides(text, &overrides) {
        let again = Scenario::parse(&scenario.render()).expect("rendered scenario must parse");
        assert_eq!(again, scenario);
    }
});
