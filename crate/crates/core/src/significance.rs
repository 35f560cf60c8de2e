//! Nonparametric bootstrap tests.
//!
//! Bootstrap documents are resampled from the validation document whose null
//! topic proportions are closest (cosine) to the target's, with the target's
//! length. They drive two tests: whether the candidate topic matters in one
//! document (`t` statistic) and whether a whole cluster is anomalous
//! (empirical p-value of its score).

use alloc::vec::Vec;

use rand::Rng;

use crate::atd::{self, AltModel};
use crate::corpus::{Corpus, Document, WordId};
use crate::error::{Error, Result};
use crate::math::cosine;
use crate::par;
use crate::ptm::{fit_document, DocMix, InferOpts, PtmModel, Switches, Topic};
use crate::rng::{self, domain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    /// Replicates for the per-document test.
    pub b1: usize,
    /// Replicates for the cluster test.
    pub b2: usize,
    /// A candidate joins the cluster when its `t` statistic is at least this.
    pub tau: f64,
    /// A cluster is significant when its p-value is below this; `1.0`
    /// accepts every cluster.
    pub alpha: f64,
    /// Candidates whose empirical new-topic proportion reaches this join
    /// without a test.
    pub theta_gate: f64,
    /// Clusters smaller than this grow without testing.
    pub min_cluster: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { b1: 99, b2: 999, tau: 0.05, alpha: 0.05, theta_gate: 0.2, min_cluster: 4, seed: 0 }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if self.b1 == 0 || self.b2 == 0 {
            return Err(Error::InvalidConfig("bootstrap replicate counts must be positive".into()));
        }
        if !open(self.tau) || !open(self.theta_gate) || !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig("thresholds must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn is_significant(&self, p_value: f64) -> bool {
        self.alpha >= 1.0 || p_value < self.alpha
    }
}

/// `aᵀb / (‖a‖‖b‖)`.
pub fn cosine_theta(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { what: "proportion vector", expected: a.len(), found: b.len() });
    }
    cosine(a, b).ok_or(Error::ZeroVector)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapDoc {
    pub doc: Document,
    /// Id of the validation document it was resampled from.
    pub source: usize,
}

/// Validation documents with their null proportions.
#[derive(Debug, Clone)]
pub struct BootstrapPool<'a> {
    docs: &'a [Document],
    thetas: Vec<Vec<f64>>,
}

impl<'a> BootstrapPool<'a> {
    pub fn new(validation: &'a Corpus, mixes: &[DocMix]) -> Result<Self> {
        if validation.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if mixes.len() != validation.len() {
            return Err(Error::DimensionMismatch {
                what: "validation proportions",
                expected: validation.len(),
                found: mixes.len(),
            });
        }
        Ok(Self { docs: validation.docs(), thetas: mixes.iter().map(|m| m.theta().to_vec()).collect() })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Positions of the validation documents with maximal cosine similarity
    /// to `theta`, compared after rounding to 12 decimals.
    pub fn best_matches(&self, theta: &[f64]) -> Result<Vec<usize>> {
        let mut best = f64::NEG_INFINITY;
        let mut out = Vec::new();
        for (i, t) in self.thetas.iter().enumerate() {
            let rho = libm::round(cosine_theta(t, theta)? * 1e12) / 1e12;
            if rho > best {
                best = rho;
                out.clear();
            }
            if rho == best {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Picks one of `matches` uniformly and draws `len` tokens from it with
    /// replacement.
    pub fn draw<R: Rng>(&self, matches: &[usize], len: usize, id: usize, rng: &mut R) -> BootstrapDoc {
        let source = &self.docs[matches[rng.random_range(0..matches.len())]];
        let mut tokens: Vec<WordId> = Vec::with_capacity(len);
        for _ in 0..len {
            let mut k = rng.random_range(0..source.len());
            for &(w, c) in source.terms() {
                if k < c as usize {
                    tokens.push(w);
                    break;
                }
                k -= c as usize;
            }
        }
        let doc = Document::from_tokens(id, &tokens).expect("bootstrap length is positive");
        BootstrapDoc { doc, source: source.id() }
    }
}

/// One bootstrap document for `target` with null proportions `theta`.
pub fn gen_bootstrap_doc<R: Rng>(
    target: &Document,
    theta: &[f64],
    pool: &BootstrapPool<'_>,
    rng: &mut R,
) -> Result<BootstrapDoc> {
    let matches = pool.best_matches(theta)?;
    Ok(pool.draw(&matches, target.len(), target.id(), rng))
}

/// Fraction of the document's tokens whose most probable topic is `new`.
/// Ties go to the lower topic index.
pub fn empirical_proportion(topics: &[&Topic], mix: &DocMix, doc: &Document, new: usize) -> f64 {
    let mut hits = 0usize;
    for &(w, c) in doc.terms() {
        let mut best = 0.0;
        let mut arg = usize::MAX;
        for (j, t) in topics.iter().enumerate() {
            if mix.is_present(j) {
                let p = mix.theta()[j] * t.word_prob(w as usize);
                if arg == usize::MAX || p > best {
                    best = p;
                    arg = j;
                }
            }
        }
        if arg == new {
            hits += c as usize;
        }
    }
    hits as f64 / doc.len() as f64
}

/// `(#{b : θ̂_b < θ̂*} + 1) / (B + 1)`.
pub fn t_statistic(observed: f64, replicates: &[f64]) -> f64 {
    let below = replicates.iter().filter(|&&x| x < observed).count();
    (below + 1) as f64 / (replicates.len() + 1) as f64
}

/// `(#{b : score_b > score} + 1) / (B + 1)`.
pub fn p_value(observed: f64, replicates: &[f64]) -> f64 {
    let above = replicates.iter().filter(|&&x| x > observed).count();
    (above + 1) as f64 / (replicates.len() + 1) as f64
}

/// Outcome of the per-document test.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTest {
    pub theta_hat: f64,
    pub replicates: Vec<f64>,
    pub t: f64,
}

/// Tests whether the alternative's new topic is significant in a document
/// with empirical proportion `theta_hat` and null proportions `null_theta`.
/// Each bootstrap document gets its null proportions by inference, then its
/// proportions under the alternative, exactly like the candidate.
#[allow(clippy::too_many_arguments)]
pub fn doc_significance(
    model: &PtmModel,
    alt_topic: &Topic,
    target: &Document,
    theta_hat: f64,
    null_theta: &[f64],
    pool: &BootstrapPool<'_>,
    b1: usize,
    rng_index: u64,
    seed: u64,
    opts: InferOpts,
) -> Result<DocTest> {
    let matches = pool.best_matches(null_theta)?;
    let mut rng = rng::stream(seed, domain::DOC_TEST, rng_index);
    let docs: Vec<BootstrapDoc> = (0..b1).map(|b| pool.draw(&matches, target.len(), b, &mut rng)).collect();
    let topics: Vec<&Topic> = model.topics().iter().collect();
    let m = topics.len();
    let replicates = par::map(b1, |b| -> Result<f64> {
        let doc = &docs[b].doc;
        let null = fit_document(model.shared(), &topics, doc, DocMix::uniform(m), None, Some(Switches::V), opts)?;
        let fit = atd::alt_proportions(model, alt_topic, doc, &null.mix, opts)?;
        Ok(fit.theta_hat)
    });
    let replicates = replicates.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(DocTest { theta_hat, t: t_statistic(theta_hat, &replicates), replicates })
}

/// Outcome of the cluster test.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTest {
    pub replicates: Vec<f64>,
    pub p_value: f64,
}

/// Builds `b2` bootstrap clusters, one resampled document per member, fits
/// the null and the alternative on each and compares scores.
#[allow(clippy::too_many_arguments)]
pub fn cluster_significance(
    model: &PtmModel,
    members: &[&Document],
    null_thetas: &[&[f64]],
    score: f64,
    pool: &BootstrapPool<'_>,
    b2: usize,
    stream_base: u64,
    seed: u64,
    opts: InferOpts,
) -> Result<ClusterTest> {
    let matches = null_thetas.iter().map(|t| pool.best_matches(t)).collect::<Result<Vec<_>>>()?;
    let topics: Vec<&Topic> = model.topics().iter().collect();
    let m = topics.len();
    let replicates = par::map(b2, |b| -> Result<f64> {
        let mut rng = rng::stream(seed, domain::CLUSTER_TEST, stream_base + b as u64);
        let docs: Vec<Document> =
            members.iter().zip(&matches).enumerate().map(|(i, (d, mt))| pool.draw(mt, d.len(), i, &mut rng).doc).collect();
        let mut null_mixes = Vec::with_capacity(docs.len());
        let mut l0 = 0.0;
        for d in &docs {
            let f = fit_document(model.shared(), &topics, d, DocMix::uniform(m), None, Some(Switches::V), opts)?;
            l0 += f.loglik;
            null_mixes.push(f.mix);
        }
        let refs: Vec<&Document> = docs.iter().collect();
        let alt: AltModel = atd::fit_alternative(model, &refs, &null_mixes, opts)?;
        Ok(alt.loglik.iter().sum::<f64>() - l0)
    });
    let replicates = replicates.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(ClusterTest { p_value: p_value(score, &replicates), replicates })
}
