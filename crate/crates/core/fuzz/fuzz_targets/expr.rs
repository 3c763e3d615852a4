#![no_main]
use enclosure::expr::Expr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(e) = Expr::parse(s, "x") {
            let _ = e.eval(0.5);
            let _ = e.eval_jet(0.5);
        }
    }
});
