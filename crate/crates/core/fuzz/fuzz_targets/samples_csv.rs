#![no_main]
use enclosure::indicator::IndicatorSamples;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(r) = IndicatorSamples::from_csv(s) {
            let back = IndicatorSamples::from_csv(&r.to_csv()).expect("written samples parse");
            assert_eq!(back.to_csv(), r.to_csv());
        }
    }
});
