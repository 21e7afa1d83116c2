#![no_main]
use libfuzzer_sys::fuzz_target;

use lighthall_core::trace::Trace;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    // Parsing only; replay would run the embedded scenario.
    if let Ok(trace) = Trace::parse(s) {
        let again = Trace::parse(&trace.render()).expect("rendered trace must parse");
        assert_eq!(again, trace);
    }
});
