use enclosure::expr::Expr;
use enclosure::extract::ReconstructionReport;
use enclosure::forward::BoundaryRecord;
use enclosure::indicator::IndicatorSamples;
use enclosure::medium::MediumSpec;
use enclosure::pipeline::PipelineConfig;
use std::fs;
use std::path::Path;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn expression_seeds_parse() {
    for (name, s) in seeds("expr") {
        let e = Expr::parse(&s, "x").unwrap_or_else(|err| panic!("{name}: {err}"));
        assert!(e.eval(0.5).is_finite(), "{name}");
    }
}

#[test]
fn medium_seeds_parse() {
    for (name, s) in seeds("medium_json") {
        MediumSpec::from_json(&s).unwrap_or_else(|err| panic!("{name}: {err}"));
    }
}

#[test]
fn record_seeds_round_trip() {
    for (name, s) in seeds("record_csv") {
        let r = BoundaryRecord::from_csv(&s).unwrap_or_else(|err| panic!("{name}: {err}"));
        assert_eq!(BoundaryRecord::from_csv(&r.to_csv()).unwrap(), r, "{name}");
    }
}

#[test]
fn sample_seeds_round_trip() {
    for (name, s) in seeds("samples_csv") {
        let r = IndicatorSamples::from_csv(&s).unwrap_or_else(|err| panic!("{name}: {err}"));
        assert_eq!(r.to_csv(), s, "{name}");
    }
}

#[test]
fn config_seeds_round_trip() {
    for (name, s) in seeds("config_json") {
        let c = PipelineConfig::from_json(&s).unwrap_or_else(|err| panic!("{name}: {err}"));
        let text = c.to_json().unwrap();
        assert_eq!(PipelineConfig::from_json(&text).unwrap().to_json().unwrap(), text, "{name}");
    }
}

#[test]
fn report_seeds_round_trip() {
    for (name, s) in seeds("report_json") {
        let r = ReconstructionReport::from_json(&s).unwrap_or_else(|err| panic!("{name}: {err}"));
        assert_eq!(r.to_json().unwrap(), s.trim_end(), "{name}");
    }
}
