use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::math::{half_ln_sample, ln, sqrt};
use crate::ptm::fit::{FreeTopic, MixtureFit, Switches};
use crate::ptm::model::{DocMix, PtmModel, Topic};
use crate::ptm::objective::Penalty;
use crate::ptm::{shared_model, SHARED_SMOOTHING};
use crate::rng::{self, domain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOpts {
    /// Stop when `|ΔBIC| / |BIC|` falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Documents per initialization shard.
    pub shard_size: usize,
}

impl Default for TrainOpts {
    fn default() -> Self {
        Self { tol: 1e-5, max_iters: 200, shard_size: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PtmModel,
    pub converged: bool,
    /// BIC after initialization and after every GEM iteration.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStep {
    pub topics: usize,
    pub bic: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct OrderSearch {
    /// The model with the lowest BIC.
    pub model: PtmModel,
    /// One entry per model order, from the largest down to one.
    pub steps: Vec<OrderStep>,
}

impl OrderSearch {
    pub fn all_converged(&self) -> bool {
        self.steps.iter().all(|s| s.converged)
    }
}

/// Trains an `m`-topic model from scratch.
pub fn train(corpus: &Corpus, m: usize, seed: u64, opts: TrainOpts) -> Result<TrainOutcome> {
    corpus.ensure_nonempty()?;
    check_opts(m, &opts)?;
    let beta0 = shared_model(corpus, SHARED_SMOOTHING)?;
    let model = initial_model(corpus, beta0, m, seed, opts)?;
    refine(model, corpus, opts)
}

/// Top-down order search: train at `m_max`, then repeatedly remove the topic
/// with the least mass, renormalize the affected proportions and retrain
/// from there. Returns the order with minimum BIC.
pub fn select_order(corpus: &Corpus, m_max: usize, seed: u64, opts: TrainOpts) -> Result<OrderSearch> {
    let first = train(corpus, m_max, seed, opts)?;
    let lengths: Vec<usize> = corpus.docs().iter().map(Document::len).collect();
    let mut steps = Vec::with_capacity(m_max);
    let mut current = first.model;
    steps.push(OrderStep { topics: m_max, bic: bic_of(&current), converged: first.converged });
    let mut best = current.clone();
    while current.n_topics() > 1 {
        let mass = current.topic_mass(&lengths);
        let j = (0..mass.len()).fold(0, |b, k| if mass[k] < mass[b] { k } else { b });
        current.topics.remove(j);
        for d in current.docs.iter_mut() {
            d.drop_topic(j);
        }
        let out = refine(current, corpus, opts)?;
        current = out.model;
        steps.push(OrderStep { topics: current.n_topics(), bic: bic_of(&current), converged: out.converged });
        if bic_of(&current) < bic_of(&best) {
            best = current.clone();
        }
    }
    Ok(OrderSearch { model: best, steps })
}

fn bic_of(model: &PtmModel) -> f64 {
    model.bic.unwrap_or(f64::INFINITY)
}

fn check_opts(m: usize, opts: &TrainOpts) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidConfig("number of topics must be at least 1".into()));
    }
    if !(opts.tol >= 0.0) || opts.shard_size == 0 {
        return Err(Error::InvalidConfig("invalid training options".into()));
    }
    Ok(())
}

/// Runs GEM starting from the given model's parameters and structure.
/// Parameters are first fitted with the structure held fixed; switch
/// sweeps on near-uniform proportions would strip every topic-specific word
/// before the topics have separated.
fn refine(model: PtmModel, corpus: &Corpus, opts: TrainOpts) -> Result<TrainOutcome> {
    let x = vec![vec![0.0; model.vocab_size()]; model.n_topics()];
    let mut fit = training_fit(&model, corpus, x)?;
    let warm = fit.run(None, opts.tol, opts.max_iters);
    let summary = fit.run(Some(Switches::Both), opts.tol, opts.max_iters);
    fit.refresh();
    let model = finish(model.shared.clone(), fit);
    let mut trace = warm.trace;
    trace.extend_from_slice(&summary.trace[1..]);
    Ok(TrainOutcome { model, converged: summary.converged, trace })
}

pub(crate) fn training_fit<'a>(model: &'a PtmModel, corpus: &'a Corpus, x: Vec<Vec<f64>>) -> Result<MixtureFit<'a>> {
    crate::ptm::objective::check_dims(model, corpus)?;
    let free =
        model.topics.iter().zip(x).map(|(t, xj)| FreeTopic::new(t.clone(), xj, &model.shared)).collect();
    MixtureFit::new(
        corpus.docs().iter().collect(),
        &model.shared,
        Vec::new(),
        free,
        model.docs.clone(),
        None,
        Penalty::training(model.n_topics(), model.vocab_size(), corpus.len()),
    )
}

pub(crate) fn finish(shared: Vec<f64>, fit: MixtureFit<'_>) -> PtmModel {
    let (docs, free, bic) = fit.into_parts();
    PtmModel { shared, topics: free.into_iter().map(|f| f.topic).collect(), docs, bic: Some(bic) }
}

/// Starting point for GEM.
///
/// Topics are first fitted as unrestricted multinomials (every word
/// specific), seeded from document shards: `m` seed documents chosen by
/// k-means++ under cosine distance, each grouped with its nearest
/// neighbours. A word then stays specific to a topic when freeing it gains
/// more log-likelihood than its BIC parameter cost, using the Poisson
/// deviance of the topic's expected count against the shared model.
fn initial_model(corpus: &Corpus, beta0: Vec<f64>, m: usize, seed: u64, opts: TrainOpts) -> Result<PtmModel> {
    let topics = shard_topics(corpus, &beta0, m, seed, opts.shard_size);
    let model = PtmModel { docs: vec![DocMix::uniform(m); corpus.len()], shared: beta0, topics, bic: None };
    let x = vec![vec![0.0; model.vocab_size()]; m];
    let mut fit = training_fit(&model, corpus, x)?;
    fit.run(None, opts.tol, opts.max_iters);
    let (docs, free, _) = fit.into_parts();
    let threshold = half_ln_sample(corpus.total_tokens() as f64);
    let shared = model.shared;
    let topics = free
        .into_iter()
        .map(|f| {
            let total: f64 = f.x.iter().sum();
            let specific = f.x.iter().zip(&shared).map(|(&x, &b)| deviance(x, total * b) > threshold).collect();
            Topic::from_counts(&shared, specific, &f.x)
        })
        .collect();
    Ok(PtmModel { shared, topics, docs, bic: None })
}

/// Poisson deviance contribution `x ln(x/e) − (x − e)`.
fn deviance(x: f64, e: f64) -> f64 {
    if x > 0.0 {
        x * ln(x / e) - (x - e)
    } else {
        e
    }
}

/// One all-specific topic per shard: half the shard's word frequencies,
/// half the shared model.
fn shard_topics(corpus: &Corpus, beta0: &[f64], m: usize, seed: u64, shard_size: usize) -> Vec<Topic> {
    let docs = corpus.docs();
    let n = corpus.vocab_size();
    let norms: Vec<f64> = docs.iter().map(norm).collect();
    let seeds = kmeans_pp(docs, &norms, m, seed);
    seeds
        .iter()
        .map(|&s| {
            let mut sims: Vec<(f64, usize)> =
                (0..docs.len()).filter(|&i| i != s).map(|i| (cos(docs, &norms, s, i), i)).collect();
            sims.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut counts = vec![0.0; n];
            let shard = core::iter::once(s).chain(sims.iter().take(shard_size - 1).map(|&(_, i)| i));
            for i in shard {
                for &(w, c) in docs[i].terms() {
                    counts[w as usize] += c as f64;
                }
            }
            let total: f64 = counts.iter().sum();
            let prob = counts.iter().zip(beta0).map(|(&c, &b)| 0.5 * c / total + 0.5 * b).collect();
            Topic { specific: vec![true; n], prob, n_specific: n }
        })
        .collect()
}

fn norm(d: &Document) -> f64 {
    sqrt(d.terms().iter().map(|&(_, c)| (c as f64) * (c as f64)).sum())
}

fn cos(docs: &[Document], norms: &[f64], a: usize, b: usize) -> f64 {
    let (x, y) = (docs[a].terms(), docs[b].terms());
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                dot += x[i].1 as f64 * y[j].1 as f64;
                i += 1;
                j += 1;
            }
        }
    }
    dot / (norms[a] * norms[b])
}

/// k-means++ seeding with `1 − cosine` as the distance. Once every document
/// coincides with a seed, further seeds are drawn uniformly.
fn kmeans_pp(docs: &[Document], norms: &[f64], m: usize, seed: u64) -> Vec<usize> {
    let d = docs.len();
    let mut rng = rng::stream(seed, domain::TRAIN_INIT, 0);
    let mut seeds = vec![rng.random_range(0..d)];
    let mut dist: Vec<f64> = (0..d).map(|i| 1.0 - cos(docs, norms, seeds[0], i)).collect();
    while seeds.len() < m {
        let weights: Vec<f64> = dist.iter().map(|&x| x.max(0.0) * x.max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = d - 1;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            while weights[pick] <= 0.0 {
                pick -= 1;
            }
            pick
        } else {
            rng.random_range(0..d)
        };
        seeds.push(next);
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(1.0 - cos(docs, norms, next, i));
        }
    }
    seeds
}
