#![no_main]
use libfuzzer_sys::fuzz_target;

use lighthall_core::names::Name;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(name) = Name::parse(s) {
        let again = Name::parse(&name.to_string()).expect("rendered name must parse");
        assert_eq!(again, name);
        for k in 0..=name.len() {
            assert!(name.prefix(k).is_prefix_of(&name));
        }
    }
});
