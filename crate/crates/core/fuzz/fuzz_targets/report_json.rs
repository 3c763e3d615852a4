#![no_main]
use enclosure::extract::ReconstructionReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(r) = ReconstructionReport::from_json(s) {
            let _ = r.to_json();
        }
    }
});
