#![no_main]
use enclosure::pipeline::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = PipelineConfig::from_json(s) {
            let text = c.to_json().expect("valid config serialises");
            let _ = PipelineConfig::from_json(&text).expect("written config parses");
        }
    }
});
