mod common;

use atd_core::atd;
use atd_core::ptm::{self, DocMix, InferOpts, TrainOpts};
use atd_core::significance::{
    cluster_significance, cosine_theta, empirical_proportion, gen_bootstrap_doc, p_value, t_statistic, BootstrapPool,
};
use atd_core::{synth, Corpus, Document, Topic};
use common::rng;
use proptest::prelude::*;
use rand::seq::index::sample;

fn corpus(docs: Vec<Document>, n: usize) -> Corpus {
    Corpus::new(docs, n).unwrap()
}

#[test]
fn cosine_cases() {
    assert!((cosine_theta(&[1.0, 1.0], &[2.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(cosine_theta(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 0.0);
    assert!(cosine_theta(&[1.0], &[1.0, 0.0]).is_err());
    assert!(cosine_theta(&[0.0, 0.0], &[0.0, 0.0]).is_err());
}

#[test]
fn bootstrap_draws_follow_source_frequencies() {
    let val = corpus(vec![Document::new(0, [(0, 3), (1, 1)]).unwrap()], 2);
    let pool = BootstrapPool::new(&val, &[DocMix::uniform(1)]).unwrap();
    let target = Document::new(5, [(1, 10_000)]).unwrap();
    let b = gen_bootstrap_doc(&target, &[1.0], &pool, &mut rng(1)).unwrap();
    assert_eq!(b.doc.len(), 10_000);
    assert_eq!(b.source, 0);
    assert_eq!(b.doc.id(), 5);
    let share = b.doc.count(0) as f64 / 10_000.0;
    let sigma = (0.75f64 * 0.25 / 10_000.0).sqrt();
    assert!((share - 0.75).abs() < 3.0 * sigma, "{share}");
}

#[test]
fn bootstrap_single_word_source() {
    let val = corpus(vec![Document::new(0, [(2, 4)]).unwrap()], 3);
    let pool = BootstrapPool::new(&val, &[DocMix::uniform(2)]).unwrap();
    let target = Document::new(0, [(0, 3), (1, 4)]).unwrap();
    let b = gen_bootstrap_doc(&target, &[0.3, 0.7], &pool, &mut rng(2)).unwrap();
    assert_eq!(b.doc.terms(), &[(2, 7)]);
}

#[test]
fn bootstrap_uses_closest_validation_document() {
    let val = corpus(
        vec![Document::new(0, [(0, 5)]).unwrap(), Document::new(1, [(1, 5)]).unwrap(), Document::new(2, [(2, 5)]).unwrap()],
        3,
    );
    let mixes = vec![
        DocMix::from_pairs(2, &[(0, 0.9), (1, 0.1)]).unwrap(),
        DocMix::from_pairs(2, &[(0, 0.1), (1, 0.9)]).unwrap(),
        DocMix::from_pairs(2, &[(0, 0.5), (1, 0.5)]).unwrap(),
    ];
    let pool = BootstrapPool::new(&val, &mixes).unwrap();
    assert_eq!(pool.best_matches(&[0.2, 0.8]).unwrap(), vec![1]);
    assert_eq!(pool.best_matches(&[1.0, 1.0]).unwrap(), vec![2]);
    let target = Document::new(9, [(0, 6)]).unwrap();
    for seed in 0..20 {
        let b = gen_bootstrap_doc(&target, &[0.95, 0.05], &pool, &mut rng(seed)).unwrap();
        assert_eq!(b.source, 0);
        assert_eq!(b.doc.terms(), &[(0, 6)]);
    }
    assert!(BootstrapPool::new(&val, &mixes[..2]).is_err());
    assert!(BootstrapPool::new(&corpus(vec![], 3), &[]).is_err());
}

#[test]
fn empirical_proportion_matches_token_argmax() {
    let beta0 = [0.25; 4];
    let a = Topic::from_specific(&beta0, &[(0, 0.4), (1, 0.1)]).unwrap();
    let b = Topic::from_specific(&beta0, &[(0, 0.1), (1, 0.4)]).unwrap();
    let topics = [&a, &b];
    let doc = Document::new(0, [(0, 2), (1, 3), (2, 5)]).unwrap();
    let mix = DocMix::from_pairs(2, &[(0, 0.5), (1, 0.5)]).unwrap();
    // word 2 ties and goes to topic 0
    assert_eq!(empirical_proportion(&topics, &mix, &doc, 1), 0.3);
    assert_eq!(empirical_proportion(&topics, &mix, &doc, 0), 0.7);
    let only = DocMix::from_pairs(2, &[(0, 1.0)]).unwrap();
    assert_eq!(empirical_proportion(&topics, &only, &doc, 1), 0.0);
    let zero = DocMix::from_pairs(2, &[(0, 1.0), (1, 0.0)]).unwrap();
    assert_eq!(empirical_proportion(&topics, &zero, &doc, 1), 0.0);
}

proptest! {
    #[test]
    fn counting_statistics_oracle(observed in -5.0f64..5.0, reps in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let b = reps.len();
        let t = t_statistic(observed, &reps);
        let p = p_value(observed, &reps);
        let lo = 1.0 / (b + 1) as f64;
        prop_assert!((lo..=1.0).contains(&t) && (lo..=1.0).contains(&p));
        let below = reps.iter().filter(|&&x| x < observed).count();
        let above = reps.iter().filter(|&&x| x > observed).count();
        prop_assert_eq!(t, (below + 1) as f64 / (b + 1) as f64);
        prop_assert_eq!(p, (above + 1) as f64 / (b + 1) as f64);
    }
}

#[test]
fn cluster_test_is_calibrated_on_normal_documents() {
    let spec = synth::SynthSpec {
        vocab_size: 200,
        normal_topics: 3,
        anomalous_topics: 0,
        salient_per_topic: 15,
        train_docs_per_topic: 40,
        validation_docs_per_topic: 20,
        test_docs_per_topic: 20,
        anomalous_docs_per_topic: 0,
        doc_length: 60,
        salient_boost: 40.0,
        seed: 12,
        ..Default::default()
    };
    let data = synth::generate(&spec).unwrap();
    let model = ptm::train(&data.train, 3, 1, TrainOpts::default()).unwrap().model;
    let opts = InferOpts::default();
    let val = ptm::infer(&model, &data.validation, opts).unwrap();
    let pool = BootstrapPool::new(&data.validation, &val.mixes).unwrap();
    let test = ptm::infer(&model, &data.test, opts).unwrap();

    let trials = 50;
    let mut r = rng(3);
    let mut rejected = 0;
    for trial in 0..trials {
        let picks = sample(&mut r, data.test.len(), 4).into_vec();
        let docs: Vec<&Document> = picks.iter().map(|&i| &data.test.docs()[i]).collect();
        let null: Vec<DocMix> = picks.iter().map(|&i| test.mixes[i].clone()).collect();
        let alt = atd::fit_alternative(&model, &docs, &null, opts).unwrap();
        let score: f64 = picks.iter().zip(&alt.loglik).map(|(&i, l1)| l1 - test.loglik[i]).sum();
        let thetas: Vec<&[f64]> = null.iter().map(|m| m.theta()).collect();
        let res = cluster_significance(&model, &docs, &thetas, score, &pool, 39, trial * 100, 5, opts).unwrap();
        rejected += usize::from(res.p_value < 0.05);
    }
    assert!(rejected * 10 <= trials as usize, "{rejected} of {trials} null clusters rejected");
}
