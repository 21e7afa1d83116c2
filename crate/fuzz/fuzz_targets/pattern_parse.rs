#![no_main]
use libfuzzer_sys::fuzz_target;

use lighthall_core::names::{Name, NamePattern};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let (pattern, name) = s.split_once('\n').unwrap_or((s, "/"));
    if let Ok(p) = NamePattern::parse(pattern) {
        let again = NamePattern::parse(&p.to_string()).expect("rendered pattern must parse");
        assert_eq!(again, p);
        if let Ok(n) = Name::parse(name) {
            assert_eq!(p.matches(&n), again.matches(&n));
        }
    }
});
