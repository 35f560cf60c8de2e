//! Synthetic benchmark: LDA-style documents from planted topics, with a few
//! anomalous topics that only appear in the test batch.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::corpus::{Corpus, Document, WordId};
use crate::error::{Error, Result};
use crate::rng::{self, domain};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub vocab_size: usize,
    pub normal_topics: usize,
    pub anomalous_topics: usize,
    pub salient_per_topic: usize,
    pub train_docs_per_topic: usize,
    pub validation_docs_per_topic: usize,
    pub test_docs_per_topic: usize,
    pub anomalous_docs_per_topic: usize,
    pub doc_length: usize,
    /// Proportion of a document's dominant topic.
    pub dominant_prop: f64,
    /// Probability ratio of a salient word to any other word in a topic.
    pub salient_boost: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            vocab_size: 3000,
            normal_topics: 10,
            anomalous_topics: 2,
            salient_per_topic: 30,
            train_docs_per_topic: 300,
            validation_docs_per_topic: 300,
            test_docs_per_topic: 200,
            anomalous_docs_per_topic: 30,
            doc_length: 150,
            dominant_prop: 0.85,
            salient_boost: 20.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.vocab_size == 0 || self.normal_topics == 0 || self.salient_per_topic == 0 || self.doc_length == 0 {
            return bad("vocabulary size, normal topics, salient words and document length must be positive");
        }
        if self.salient_per_topic > self.vocab_size {
            return bad("more salient words per topic than vocabulary words");
        }
        if !(self.dominant_prop > 0.0 && self.dominant_prop < 1.0) {
            return bad("dominant proportion must lie in (0, 1)");
        }
        if !(self.salient_boost > 0.0) || !self.salient_boost.is_finite() {
            return bad("salient boost must be positive");
        }
        if self.train_docs_per_topic == 0 || self.validation_docs_per_topic == 0 {
            return bad("training and validation sets must be non-empty");
        }
        Ok(())
    }

    pub fn total_topics(&self) -> usize {
        self.normal_topics + self.anomalous_topics
    }

    /// Label of topic `k` (0-based): `"1"`, `"2"`, ...; anomalous topics come last.
    pub fn label(&self, k: usize) -> String {
        format!("{}", k + 1)
    }

    pub fn anomalous_labels(&self) -> Vec<String> {
        (self.normal_topics..self.total_topics()).map(|k| self.label(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Salient words per topic, ascending; normal topics first.
    pub salient: Vec<Vec<WordId>>,
    /// Generating topic (0-based) of each document, by position.
    pub train_topics: Vec<usize>,
    pub validation_topics: Vec<usize>,
    pub test_topics: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
    pub truth: GroundTruth,
    /// Word distribution of every topic.
    pub topics: Vec<Vec<f64>>,
}

const SPLIT_TRAIN: u64 = 0;
const SPLIT_VALIDATION: u64 = 1;
const SPLIT_TEST: u64 = 2;
const SPLIT_EXTRA: u64 = 3;

/// Salient sets and word distributions of every topic.
fn topic_distributions(spec: &SynthSpec) -> (Vec<Vec<WordId>>, Vec<Vec<f64>>) {
    let n = spec.vocab_size;
    let mut salient = Vec::with_capacity(spec.total_topics());
    let mut topics = Vec::with_capacity(spec.total_topics());
    for k in 0..spec.total_topics() {
        let mut rng = rng::stream(spec.seed, domain::SYNTH_TOPICS, k as u64);
        let mut words: Vec<WordId> =
            index::sample(&mut rng, n, spec.salient_per_topic).into_iter().map(|w| w as WordId).collect();
        words.sort_unstable();
        let mut pmf = vec![1.0; n];
        for &w in &words {
            pmf[w as usize] = spec.salient_boost;
        }
        let total: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|p| *p /= total);
        salient.push(words);
        topics.push(pmf);
    }
    (salient, topics)
}

fn samplers(topics: &[Vec<f64>]) -> Vec<WeightedIndex<f64>> {
    topics.iter().map(|p| WeightedIndex::new(p).expect("positive weights")).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let (salient, topics) = topic_distributions(spec);
    let samplers = samplers(&topics);
    let g = Generator { spec, samplers: &samplers };

    let normal: Vec<usize> = (0..spec.normal_topics).collect();
    let plan = |per: usize| -> Vec<usize> { normal.iter().flat_map(|&k| core::iter::repeat_n(k, per)).collect() };
    let train_topics = plan(spec.train_docs_per_topic);
    let validation_topics = plan(spec.validation_docs_per_topic);
    let mut test_topics = plan(spec.test_docs_per_topic);
    for a in spec.normal_topics..spec.total_topics() {
        test_topics.extend(core::iter::repeat_n(a, spec.anomalous_docs_per_topic));
    }
    test_topics.shuffle(&mut rng::stream(spec.seed, domain::SYNTH_SHUFFLE, 0));

    let train = g.corpus(SPLIT_TRAIN, &train_topics)?;
    let validation = g.corpus(SPLIT_VALIDATION, &validation_topics)?;
    let test = g.corpus(SPLIT_TEST, &test_topics)?;
    Ok(SynthData {
        train,
        validation,
        test,
        truth: GroundTruth { salient, train_topics, validation_topics, test_topics },
        topics,
    })
}

/// A further batch from the topics of `generate(spec)`, one document per
/// entry of `labels` (0-based topic indices). Each `batch` index gives an
/// independent draw that never repeats the training, validation or test
/// documents.
pub fn extra_batch(spec: &SynthSpec, labels: &[usize], batch: u64) -> Result<Corpus> {
    spec.validate()?;
    if let Some(&k) = labels.iter().find(|&&k| k >= spec.total_topics()) {
        return Err(Error::IndexOutOfRange { what: "topic label", index: k, limit: spec.total_topics() });
    }
    let (_, topics) = topic_distributions(spec);
    let samplers = samplers(&topics);
    Generator { spec, samplers: &samplers }.corpus(SPLIT_EXTRA + batch, labels)
}

struct Generator<'a> {
    spec: &'a SynthSpec,
    samplers: &'a [WeightedIndex<f64>],
}

impl Generator<'_> {
    fn corpus(&self, split: u64, labels: &[usize]) -> Result<Corpus> {
        let docs = labels
            .iter()
            .enumerate()
            .map(|(i, &k)| self.document(split, i, k))
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(docs, self.spec.vocab_size)
    }

    /// Topic proportions of a document generated from topic `k`. Normal
    /// documents put `dominant_prop` on `k` and split the rest evenly over
    /// the other normal topics. Anomalous documents split `dominant_prop`
    /// evenly between `k` and one random normal topic.
    fn proportions<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<f64> {
        let s = self.spec;
        let mut theta = vec![0.0; s.total_topics()];
        let (main, partner) = if k < s.normal_topics { (k, None) } else { (k, Some(rng.random_range(0..s.normal_topics))) };
        let others: Vec<usize> = (0..s.normal_topics).filter(|&j| j != main && Some(j) != partner).collect();
        match partner {
            None => theta[main] = s.dominant_prop,
            Some(p) => {
                theta[main] = s.dominant_prop / 2.0;
                theta[p] = s.dominant_prop / 2.0;
            }
        }
        for &j in &others {
            theta[j] = (1.0 - s.dominant_prop) / others.len() as f64;
        }
        let total: f64 = theta.iter().sum();
        theta.iter_mut().for_each(|t| *t /= total);
        theta
    }

    fn document(&self, split: u64, i: usize, k: usize) -> Result<Document> {
        let mut rng = rng::stream(self.spec.seed, domain::SYNTH_DOCS, (split << 40) | i as u64);
        let theta = self.proportions(k, &mut rng);
        let pick = WeightedIndex::new(&theta).expect("positive proportions");
        let tokens: Vec<WordId> =
            (0..self.spec.doc_length).map(|_| self.samplers[pick.sample(&mut rng)].sample(&mut rng) as WordId).collect();
        Document::from_tokens(i, &tokens)
    }
}
