#![no_main]
use enclosure::forward::BoundaryRecord;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(r) = BoundaryRecord::from_csv(s) {
            let back = BoundaryRecord::from_csv(&r.to_csv()).expect("written record parses");
            assert_eq!(back.to_csv(), r.to_csv());
        }
    }
});
