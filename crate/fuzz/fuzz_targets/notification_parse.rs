#![no_main]
use libfuzzer_sys::fuzz_target;

use lighthall_core::apps::Notification;
use lighthall_core::names::Name;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(name) = Name::parse(s) {
        let _ = Notification::parse(&name);
    }
});
