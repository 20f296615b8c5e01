#![no_main]

use libfuzzer_sys::fuzz_target;
use std::sync::OnceLock;

fn fixture() -> &'static epiloc::Graph {
    static GRAPH: OnceLock<epiloc::Graph> = OnceLock::new();
    GRAPH.get_or_init(|| {
        epiloc::load_edge_list("0 1 1\n1 2 1\n2 3 1\n1 3 1\n3 10 2").expect("fixture graph")
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Trace parsing against a fixed graph must never panic; accepted traces
    // must round-trip.
    if let Ok(trace) = epiloc::EpidemicTrace::from_csv(text, fixture()) {
        let again = epiloc::EpidemicTrace::from_csv(&trace.to_csv(fixture()), fixture())
            .expect("own output");
        assert_eq!(again.times(), trace.times());
    }
});
