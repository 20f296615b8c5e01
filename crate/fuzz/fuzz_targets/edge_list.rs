#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // The parser must reject malformed input without panicking.
    let Ok(graph) = epiloc::load_edge_list(text) else {
        return;
    };
    // Exercise the downstream consumers on small accepted graphs.
    if graph.node_count() <= 64 && graph.is_connected() {
        let matrix = epiloc::all_pairs_shortest_paths(&graph).expect("connected graph");
        let _ = epiloc::is_drs(&matrix, &[0]);
        let round_trip = epiloc::load_edge_list(&graph.to_edge_list()).expect("own output");
        assert_eq!(round_trip.edge_count(), graph.edge_count());
    }
});
