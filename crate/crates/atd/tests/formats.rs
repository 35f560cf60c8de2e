use std::path::Path;

use atd::io;
use atd::report::Report;
use atd::Error;
use atd_core::atd::{detect_all, DetectConfig};
use atd_core::ptm::{self, DocMix, TrainOpts};
use atd_core::significance::BootstrapConfig;
use atd_core::{synth, PtmModel, Topic};

fn p() -> &'static Path {
    Path::new("mem")
}

fn small(seed: u64) -> synth::SynthData {
    synth::generate(&synth::SynthSpec {
        vocab_size: 200,
        normal_topics: 3,
        anomalous_topics: 1,
        salient_per_topic: 15,
        train_docs_per_topic: 30,
        validation_docs_per_topic: 10,
        test_docs_per_topic: 8,
        anomalous_docs_per_topic: 6,
        doc_length: 60,
        salient_boost: 60.0,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn model_round_trip_is_byte_identical() {
    for seed in 0..3 {
        let d = small(seed);
        let model = ptm::train(&d.train, 3, seed, TrainOpts::default()).unwrap().model;
        let text = io::format_model(&model);
        let back = io::parse_model(&text, p()).unwrap();
        assert_eq!(io::format_model(&back), text);
        assert_eq!(back.topics(), model.topics());
        assert_eq!(back.doc_mixes(), model.doc_mixes());
        assert_eq!(back.shared(), model.shared());
    }
}

#[test]
fn awkward_numbers_survive() {
    let beta0 = vec![0.1, 0.2, 0.7];
    let t = Topic::from_specific(&beta0, &[(0, 1e-300), (1, 0.3 - 1e-300)]).unwrap();
    let mixes = vec![DocMix::from_pairs(2, &[(0, 1.0 / 3.0), (1, 2.0 / 3.0)]).unwrap(), DocMix::from_pairs(2, &[(1, 1.0)]).unwrap()];
    let model = PtmModel::from_parts(beta0.clone(), vec![t, Topic::shared(&beta0)], mixes).unwrap();
    let text = io::format_model(&model);
    assert_eq!(io::format_model(&io::parse_model(&text, p()).unwrap()), text);
    assert!(text.starts_with("PTM v1 2 3\n"));
}

#[test]
fn model_parse_errors() {
    let good = "PTM v1 1 2\nbeta0: 0.5 0.5\ntopic 0 1 0:0.5\ndoc 0 1 0:1.0\n";
    io::parse_model(good, p()).unwrap();
    let line_of = |text: &str| match io::parse_model(text, p()) {
        Err(Error::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    };
    assert_eq!(line_of("PTM v2 1 2\n"), 1);
    assert_eq!(line_of("PTM v1 1 2\nbeta0: 0.5\n"), 2);
    assert_eq!(line_of("PTM v1 1 2\nbeta0: 0.5 0.5\ntopic 0 1 0:0.4\n"), 3);
    assert_eq!(line_of("PTM v1 1 2\nbeta0: 0.5 0.5\ntopic 0 0\ndoc 0 1 0:0.9\n"), 4);
    assert_eq!(line_of("PTM v1 1 2\nbeta0: 0.5 0.5\ntopic 0 0\ndoc 3 1 0:1.0\n"), 4);
}

#[test]
fn corpus_round_trip_is_byte_identical() {
    let d = small(5);
    for c in [&d.train, &d.validation, &d.test] {
        let text = io::format_corpus(c);
        let back = io::parse_corpus(&text, 200, p()).unwrap();
        assert_eq!(&back, c);
        assert_eq!(io::format_corpus(&back), text);
    }
    let text = "2 3:1 0:2\n1 1:4";
    let c = io::parse_corpus(text, 4, p()).unwrap();
    let once = io::format_corpus(&c);
    assert_eq!(io::format_corpus(&io::parse_corpus(&once, 4, p()).unwrap()), once);
    assert_eq!(c.docs()[0].len(), 3);
}

#[test]
fn corpus_errors_name_the_line() {
    let line_of = |text: &str| match io::parse_corpus(text, 5, p()) {
        Err(Error::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    };
    assert_eq!(line_of("1 0:1\n1 5:2\n"), 2);
    assert_eq!(line_of("1 0:0\n"), 1);
    assert_eq!(line_of("1 0:-3\n"), 1);
    assert_eq!(line_of("2 0:1\n"), 1);
    assert_eq!(line_of("1 0:1\n1 x\n"), 2);
    assert_eq!(line_of("1 0:1\n\n"), 2);
}

#[test]
fn vocabulary_errors() {
    match io::parse_vocabulary("alpha\nalpha\n", p()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    assert!(io::parse_vocabulary("", p()).is_err());
    let v = io::parse_vocabulary("a\nb\nc", p()).unwrap();
    assert_eq!(v.len(), 3);
    assert_eq!(io::format_vocabulary(&v), "a\nb\nc\n");
}

#[test]
fn labels_and_truth_round_trip() {
    let labels = vec!["1".to_string(), "11".into(), "3".into()];
    assert_eq!(io::parse_labels(&io::format_labels(&labels), p()).unwrap(), labels);
    assert!(io::parse_labels("a b\n", p()).is_err());
    let d = small(6);
    let text = io::format_truth(&d.truth, |k| format!("{}", k + 1));
    let back = io::parse_truth(&text, p()).unwrap();
    assert_eq!(back.len(), 4);
    assert_eq!(back[3].0, "4");
    assert_eq!(back[3].1, d.truth.salient[3]);
}

#[test]
fn report_json_round_trip_and_scores() {
    let d = small(7);
    let model = ptm::train(&d.train, 3, 1, TrainOpts::default()).unwrap().model;
    let cfg = DetectConfig {
        bootstrap: BootstrapConfig { b1: 39, b2: 19, seed: 2, ..Default::default() },
        max_clusters: Some(2),
        ..Default::default()
    };
    let det = detect_all(&model, &d.test, &d.validation, cfg).unwrap();
    let report = Report::new(&det, &d.test, None);
    let json = report.to_json();
    let back = Report::from_json(&json, p()).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json(), json);
    assert_eq!(back.null.len(), d.test.len());
    for c in &back.clusters {
        assert!((c.score - c.recomputed_score()).abs() < 1e-8 * c.score.abs().max(1.0));
    }
    assert!(report.to_text(5).starts_with("cluster 1 "));
}
