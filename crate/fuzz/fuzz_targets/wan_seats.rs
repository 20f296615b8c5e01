#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(records) = epiloc::graph::parse_seat_list(text) else {
        return;
    };
    for record in records {
        // Accepted seat counts must convert without panicking; when they
        // convert, the weight is a positive integer.
        if let Ok(weight) = epiloc::wan_edge_weight(record.seats, 0.7, 0.05) {
            assert!(weight >= 1);
        }
    }
});
