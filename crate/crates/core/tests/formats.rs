use enclosure::extract::{extract, FitOptions, ReconstructionReport, Target};
use enclosure::forward::BoundaryRecord;
use enclosure::indicator::{IndicatorEntry, IndicatorSamples, ProblemKind, SampleFlag, SampleMetadata};
use enclosure::pipeline::{indicate_oracle, run_pipeline, simulate, PipelineConfig};
use enclosure::probe::{make_probe, ProbeMode};
use enclosure::Complex64;
use proptest::prelude::*;

fn record_strategy() -> impl Strategy<Value = BoundaryRecord> {
    (3usize..60, 0.1..3.0f64, any::<bool>()).prop_flat_map(|(n, horizon, right)| {
        let col = prop::collection::vec(-1e3..1e3f64, n);
        (col.clone(), col.clone(), col).prop_map(move |(mut u, f, r)| {
            u[0] = 0.0;
            let times =
                (0..n).map(|i| if i + 1 == n { horizon } else { horizon * i as f64 / (n - 1) as f64 }).collect();
            BoundaryRecord { horizon, times, temp_left: u, flux_left: f, flux_right: right.then_some(r) }
        })
    })
}

fn flag_strategy() -> impl Strategy<Value = SampleFlag> {
    prop_oneof![Just(SampleFlag::Ok), Just(SampleFlag::Underflow), Just(SampleFlag::Noisy), Just(SampleFlag::Error)]
}

fn samples_strategy() -> impl Strategy<Value = IndicatorSamples> {
    let entry = (-300.0..0.0f64, -3.0..3.0f64, flag_strategy(), prop::option::of((-1.0..1.0f64, -1.0..1.0f64)));
    (
        prop::collection::vec(entry, 1..30),
        prop_oneof![Just(ProbeMode::Oscillatory), Just(ProbeMode::RealRay)],
        0.1..2.0f64,
        "[a-f0-9]{16}",
    )
        .prop_map(|(raw, mode, c, hash)| {
            let entries = raw
                .into_iter()
                .enumerate()
                .map(|(i, (log, arg, flag, w))| {
                    let tau = 1.0 / (c * c) + 1.0 + i as f64 * 0.75;
                    let z = make_probe(c, tau, mode).unwrap().z;
                    let value = Complex64::from_polar(log.exp(), arg);
                    let mut e = IndicatorEntry::from_value(tau, z, value, w.map(|(re, im)| Complex64::new(re, im)));
                    e.flag = flag;
                    e
                })
                .collect();
            let metadata =
                SampleMetadata { problem: ProblemKind::B, mode, c, medium_hash: hash, provenance: "pde".into() };
            IndicatorSamples::new(metadata, entries).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_record_csv_round_trip(rec in record_strategy()) {
        let back = BoundaryRecord::from_csv(&rec.to_csv()).unwrap();
        prop_assert_eq!(back, rec);
    }

    #[test]
    fn indicator_csv_round_trip(s in samples_strategy()) {
        let text = s.to_csv();
        let back = IndicatorSamples::from_csv(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_csv(), text);
    }
}

const TWO_LAYER: &str = r#"{
    "problem": "A",
    "known": {"breakpoints": [0], "conductivities": [1]},
    "truth": {"medium": {"breakpoints": [0, 0.5, 2], "conductivities": [1, 4]}},
    "depth_bound": 1,
    "probe": {"c": 0.25, "mode": "oscillatory"},
    "horizon": 1.2
}"#;

#[test]
fn report_json_round_trip() {
    let cfg = PipelineConfig::from_json(TWO_LAYER).unwrap();
    let samples = indicate_oracle(&cfg).unwrap();
    let report = extract(&samples, &Target::Interface { gamma1: 1.0 }, &FitOptions::default()).unwrap();
    let text = report.to_json().unwrap();
    let back = ReconstructionReport::from_json(&text).unwrap();
    assert_eq!(back.to_json().unwrap(), text);
    assert_eq!(back.recovered, report.recovered);
}

#[test]
fn report_with_missing_admissibility_values_round_trips() {
    let cfg = PipelineConfig::from_json(TWO_LAYER).unwrap();
    let mut report = run_pipeline(&cfg, true).unwrap().report;
    report.admissibility = Some(enclosure::indicator::FluxAdmissibility {
        mu_hat: f64::NAN,
        c_hat: 0.0,
        tau0: f64::NAN,
        pass: false,
        window: (16.5, 200.0),
        residual: f64::NAN,
    });
    let text = report.to_json().unwrap();
    assert!(text.contains("\"mu_hat\": null"));
    let back = ReconstructionReport::from_json(&text).unwrap();
    assert!(back.admissibility.unwrap().mu_hat.is_nan());
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn config_json_round_trip() {
    let cfg = PipelineConfig::from_json(TWO_LAYER).unwrap();
    let text = cfg.to_json().unwrap();
    assert_eq!(PipelineConfig::from_json(&text).unwrap().to_json().unwrap(), text);
}

#[test]
fn oracle_pipeline_is_deterministic() {
    let cfg = PipelineConfig::from_json(TWO_LAYER).unwrap();
    let a = run_pipeline(&cfg, true).unwrap();
    let b = run_pipeline(&cfg, true).unwrap();
    assert_eq!(a.samples.to_csv(), b.samples.to_csv());
    assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
    assert_eq!(a.slope_curve, b.slope_curve);
}

#[test]
fn simulation_is_deterministic() {
    let text = TWO_LAYER.replace("\"horizon\": 1.2", "\"horizon\": 1.2, \"solver\": {\"nx\": 200, \"nt\": 240}");
    let cfg = PipelineConfig::from_json(&text).unwrap();
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a.record.to_csv(), b.record.to_csv());
    assert_eq!(a.companion.unwrap().to_csv(), b.companion.unwrap().to_csv());
}

#[test]
fn malformed_inputs_are_parse_errors() {
    assert!(BoundaryRecord::from_csv("t,u_left,flux_left,flux_right\n0,0,1,\n").is_err());
    assert!(BoundaryRecord::from_csv("").is_err());
    assert!(IndicatorSamples::from_csv("# problem=Q\n").is_err());
    assert!(ReconstructionReport::from_json("{").is_err());
    assert!(PipelineConfig::from_json("{\"problem\": \"A\"}").is_err());
}
