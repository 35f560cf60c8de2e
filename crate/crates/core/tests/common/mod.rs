#![allow(clippy::needless_range_loop, dead_code)]

use atd_core::ptm::{self, DocMix};
use atd_core::{Corpus, Document, PtmModel, Topic, WordId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random model together with the raw numbers it was built from, so
/// oracles never have to read parameters back through the code under test.
pub struct Instance {
    pub corpus: Corpus,
    pub model: PtmModel,
    pub beta0: Vec<f64>,
    /// `[topic][word]` effective word probabilities.
    pub beta: Vec<Vec<f64>>,
    pub specific: Vec<Vec<bool>>,
    /// `[doc][topic]`, zero when absent.
    pub theta: Vec<Vec<f64>>,
    pub present: Vec<Vec<bool>>,
}

pub struct Shape {
    pub max_topics: usize,
    pub max_words: usize,
    pub max_docs: usize,
    pub max_len: usize,
}

pub const SMALL: Shape = Shape { max_topics: 5, max_words: 30, max_docs: 6, max_len: 20 };

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_corpus<R: Rng>(rng: &mut R, n: usize, d: usize, max_len: usize) -> Corpus {
    let docs = (0..d)
        .map(|i| {
            let len = rng.random_range(1..=max_len);
            let toks: Vec<WordId> = (0..len).map(|_| rng.random_range(0..n) as WordId).collect();
            Document::from_tokens(i, &toks).unwrap()
        })
        .collect();
    Corpus::new(docs, n).unwrap()
}

pub fn instance(seed: u64, shape: &Shape) -> Instance {
    let mut rng = rng(seed);
    let m = rng.random_range(1..=shape.max_topics);
    let n = rng.random_range(3..=shape.max_words);
    let d = rng.random_range(1..=shape.max_docs);
    let corpus = random_corpus(&mut rng, n, d, shape.max_len);
    instance_on(&mut rng, corpus, m)
}

pub fn instance_on<R: Rng>(rng: &mut R, corpus: Corpus, m: usize) -> Instance {
    let n = corpus.vocab_size();
    let d = corpus.len();
    let beta0 = ptm::shared_model(&corpus, 0.1).unwrap();

    let mut specific = vec![vec![false; n]; m];
    let mut beta = vec![beta0.clone(); m];
    for j in 0..m {
        for w in 0..n {
            specific[j][w] = rng.random_bool(0.4);
        }
        let mass: f64 = (0..n).filter(|&w| specific[j][w]).map(|w| beta0[w]).sum();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = (0..n).filter(|&w| specific[j][w]).map(|w| weights[w]).sum();
        for w in 0..n {
            if specific[j][w] {
                beta[j][w] = weights[w] / total * mass;
            }
        }
    }

    let mut present = vec![vec![false; m]; d];
    for p in present.iter_mut() {
        for x in p.iter_mut() {
            *x = rng.random_bool(0.6);
        }
        if !p.contains(&true) {
            let j = rng.random_range(0..m);
            p[j] = true;
        }
    }
    // a topic with specific words must cover some text
    for j in 0..m {
        if specific[j].contains(&true) && !present.iter().any(|p| p[j]) {
            present[0][j] = true;
        }
    }
    let theta: Vec<Vec<f64>> = present
        .iter()
        .map(|p| {
            let raw: Vec<f64> = p.iter().map(|&x| if x { rng.random_range(0.05..1.0) } else { 0.0 }).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|r| r / s).collect()
        })
        .collect();

    let topics = (0..m)
        .map(|j| {
            let words: Vec<(WordId, f64)> =
                (0..n).filter(|&w| specific[j][w]).map(|w| (w as WordId, beta[j][w])).collect();
            Topic::from_specific(&beta0, &words).unwrap()
        })
        .collect();
    let docs = theta
        .iter()
        .map(|t| {
            let pairs: Vec<(usize, f64)> = (0..m).filter(|&j| t[j] > 0.0).map(|j| (j, t[j])).collect();
            DocMix::from_pairs(m, &pairs).unwrap()
        })
        .collect();
    let model = PtmModel::from_parts(beta0.clone(), topics, docs).unwrap();
    Instance { corpus, model, beta0, beta, specific, theta, present }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

pub fn tokens(doc: &Document) -> Vec<WordId> {
    doc.terms().iter().flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize)).collect()
}

/// `ln n!` as a plain sum of logs.
pub fn ln_fact(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

pub fn ln_choose(n: usize, k: usize) -> f64 {
    ln_fact(n) - ln_fact(k) - ln_fact(n - k)
}

/// Entropy of a Bernoulli(p) in bits.
pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}
