//! Anomalous topic discovery on a test batch.
//!
//! The trained topics form the null model. Each round seeds a cluster with
//! the document the null explains worst (per token), then repeatedly fits an
//! alternative model with one extra topic on the cluster and adds the
//! remaining document whose log-likelihood improves most under it. Growth
//! stops after two consecutive candidates fail the per-document bootstrap
//! test; the finished cluster is then tested as a whole. Rounds continue
//! until a cluster is not significant.

mod alt;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Document, WordId};
use crate::error::{Error, Result};
use crate::math::abs;
use crate::par;
use crate::ptm::{infer, DocMix, InferOpts, PtmModel, Topic};
use crate::significance::{self, BootstrapConfig, BootstrapPool};

pub use alt::{alt_proportions, candidate_loglik, fit_alternative, fit_alternative_frozen, fit_alternative_from, AltFit, AltModel};

/// Null-model fit of a batch: per-document proportions, switches and
/// log-likelihoods, by position in the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct NullFit {
    pub mixes: Vec<DocMix>,
    pub loglik: Vec<f64>,
    pub unconverged: usize,
}

impl NullFit {
    pub fn len(&self) -> usize {
        self.loglik.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loglik.is_empty()
    }
}

/// Infers null proportions for every document of `docs`.
pub fn fit_null(model: &PtmModel, docs: &Corpus, opts: InferOpts) -> Result<NullFit> {
    let inf = infer(model, docs, opts)?;
    Ok(NullFit { mixes: inf.mixes, loglik: inf.loglik, unconverged: inf.unconverged })
}

/// Position (among `remaining`) of the document with the lowest null
/// log-likelihood per token; ties go to the lower document id.
pub fn seed_document(nf: &NullFit, batch: &Corpus, remaining: &[usize]) -> Option<usize> {
    let docs = batch.docs();
    remaining.iter().copied().min_by(|&a, &b| {
        let ka = nf.loglik[a] / docs[a].len() as f64;
        let kb = nf.loglik[b] / docs[b].len() as f64;
        ka.total_cmp(&kb).then(docs[a].id().cmp(&docs[b].id()))
    })
}

/// `(l₁ − l₀) / |l₀|`.
pub fn relative_gain(l0: f64, l1: f64) -> f64 {
    (l1 - l0) / abs(l0)
}

/// Index into `candidates` of the largest `gains` entry; ties go to the
/// lower document id.
pub fn best_candidate(gains: &[f64], ids: &[usize]) -> Option<usize> {
    (0..gains.len()).reduce(|b, k| match gains[k].total_cmp(&gains[b]) {
        core::cmp::Ordering::Greater => k,
        core::cmp::Ordering::Equal if ids[k] < ids[b] => k,
        _ => b,
    })
}

/// Salient word of a cluster's topic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalientWord {
    pub word: WordId,
    pub beta: f64,
    /// Whether the word appears in at least one cluster document.
    pub occurring: bool,
}

/// The new topic's specific words, by decreasing probability (ties by id).
pub fn salient_words(topic: &Topic, members: &[&Document]) -> Vec<SalientWord> {
    let mut out: Vec<SalientWord> = topic
        .specific_words()
        .map(|(w, beta)| SalientWord { word: w, beta, occurring: members.iter().any(|d| d.count(w) > 0) })
        .collect();
    out.sort_by(|a, b| b.beta.total_cmp(&a.beta).then(a.word.cmp(&b.word)));
    out
}

/// One cluster member, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub doc: usize,
    /// Null log-likelihood.
    pub l0: f64,
    /// Log-likelihood under the final alternative fitted on the cluster.
    pub l1: f64,
    /// Relative gain when the member was picked; `None` for the seed.
    pub delta_l: Option<f64>,
    /// Empirical new-topic proportion, when it was computed.
    pub theta_hat: Option<f64>,
    /// Per-document `t` statistic, when the test ran.
    pub t: Option<f64>,
}

/// A candidate turned away during growth.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub doc: usize,
    pub delta_l: f64,
    pub theta_hat: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub index: usize,
    pub members: Vec<Member>,
    pub rejected: Vec<Rejection>,
    /// `Σ (l₁ − l₀)` over members.
    pub score: f64,
    pub p_value: f64,
    pub significant: bool,
    pub salient: Vec<SalientWord>,
}

impl ClusterReport {
    pub fn member_ids(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.doc).collect()
    }

    /// Score recomputed from the per-member log-likelihoods.
    pub fn recomputed_score(&self) -> f64 {
        self.members.iter().map(|m| m.l1 - m.l0).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub bootstrap: BootstrapConfig,
    /// Per-document fits (null, candidate and bootstrap inference).
    pub infer: InferOpts,
    /// GEM settings for the alternative model.
    pub alt: InferOpts,
    /// Stop after this many clusters even if the last was significant.
    pub max_clusters: Option<usize>,
    /// While the cluster has fewer members than this, growth ranks and tests
    /// candidates with the new topic's word switches frozen at the cluster's
    /// support. On a handful of documents the switch sweep usually prunes
    /// the topic down to nothing and growth loses the seed's signal.
    pub frozen_below: usize,
    /// Stop growing a cluster once it has this many members.
    pub max_cluster_size: Option<usize>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            bootstrap: BootstrapConfig::default(),
            infer: InferOpts::default(),
            alt: InferOpts { tol: 1e-6, max_iters: 200 },
            max_clusters: None,
            frozen_below: 16,
            max_cluster_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub clusters: Vec<ClusterReport>,
    pub null: NullFit,
}

impl Detection {
    /// Clusters declared anomalous.
    pub fn detected(&self) -> impl Iterator<Item = &ClusterReport> {
        self.clusters.iter().filter(|c| c.significant)
    }
}

struct Context<'a> {
    model: &'a PtmModel,
    batch: &'a Corpus,
    null: &'a NullFit,
    pool: BootstrapPool<'a>,
    cfg: DetectConfig,
}

/// Runs detection rounds until a cluster is insignificant, the batch is
/// exhausted or `max_clusters` is reached.
pub fn detect_all(model: &PtmModel, test: &Corpus, validation: &Corpus, cfg: DetectConfig) -> Result<Detection> {
    cfg.bootstrap.validate()?;
    for c in [test, validation] {
        if c.vocab_size() != model.vocab_size() {
            return Err(Error::DimensionMismatch {
                what: "vocabulary size",
                expected: model.vocab_size(),
                found: c.vocab_size(),
            });
        }
    }
    if test.is_empty() {
        return Ok(Detection { clusters: Vec::new(), null: NullFit { mixes: Vec::new(), loglik: Vec::new(), unconverged: 0 } });
    }
    let null = fit_null(model, test, cfg.infer)?;
    let vnull = fit_null(model, validation, cfg.infer)?;
    let pool = BootstrapPool::new(validation, &vnull.mixes)?;
    let ctx = Context { model, batch: test, null: &null, pool, cfg };

    let mut remaining: Vec<usize> = (0..test.len()).collect();
    let mut clusters = Vec::new();
    while !remaining.is_empty() {
        if cfg.max_clusters.is_some_and(|m| clusters.len() >= m) {
            break;
        }
        let report = ctx.round(clusters.len(), &remaining)?;
        let taken: BTreeSet<usize> = report.members.iter().map(|m| m.doc).collect();
        remaining.retain(|&p| !taken.contains(&test.docs()[p].id()));
        let significant = report.significant;
        clusters.push(report);
        if !significant {
            break;
        }
    }
    Ok(Detection { clusters, null })
}

struct Growth {
    members: Vec<usize>,
    delta_l: Vec<Option<f64>>,
    theta_hat: Vec<Option<f64>>,
    t: Vec<Option<f64>>,
    rejected: Vec<Rejection>,
    alt: AltModel,
}

impl Context<'_> {
    fn docs(&self, positions: &[usize]) -> Vec<&Document> {
        positions.iter().map(|&p| &self.batch.docs()[p]).collect()
    }

    fn null_mixes(&self, positions: &[usize]) -> Vec<DocMix> {
        positions.iter().map(|&p| self.null.mixes[p].clone()).collect()
    }

    fn fit_alt(&self, positions: &[usize]) -> Result<AltModel> {
        fit_alternative(self.model, &self.docs(positions), &self.null_mixes(positions), self.cfg.alt)
    }

    fn fit_growing(&self, positions: &[usize]) -> Result<AltModel> {
        if positions.len() < self.cfg.frozen_below {
            fit_alternative_frozen(self.model, &self.docs(positions), &self.null_mixes(positions), self.cfg.alt)
        } else {
            self.fit_alt(positions)
        }
    }

    fn round(&self, index: usize, remaining: &[usize]) -> Result<ClusterReport> {
        let mut g = self.grow(index, remaining)?;
        if g.members.len() < self.cfg.frozen_below {
            g.alt = self.fit_alt(&g.members)?;
        }
        let docs = self.docs(&g.members);
        let members: Vec<Member> = g
            .members
            .iter()
            .enumerate()
            .map(|(k, &p)| Member {
                doc: self.batch.docs()[p].id(),
                l0: self.null.loglik[p],
                l1: g.alt.loglik[k],
                delta_l: g.delta_l[k],
                theta_hat: g.theta_hat[k],
                t: g.t[k],
            })
            .collect();
        let score: f64 = members.iter().map(|m| m.l1 - m.l0).sum();
        let thetas: Vec<&[f64]> = g.members.iter().map(|&p| self.null.mixes[p].theta()).collect();
        let boot = &self.cfg.bootstrap;
        let test = significance::cluster_significance(
            self.model,
            &docs,
            &thetas,
            score,
            &self.pool,
            boot.b2,
            (index as u64) << 32,
            boot.seed,
            self.cfg.alt,
        )?;
        Ok(ClusterReport {
            index,
            salient: salient_words(&g.alt.topic, &docs),
            members,
            rejected: g.rejected,
            score,
            p_value: test.p_value,
            significant: boot.is_significant(test.p_value),
        })
    }

    fn grow(&self, index: usize, remaining: &[usize]) -> Result<Growth> {
        let boot = self.cfg.bootstrap;
        let seed = seed_document(self.null, self.batch, remaining).ok_or(Error::EmptyCorpus)?;
        let mut g = Growth {
            members: alloc::vec![seed],
            delta_l: alloc::vec![None],
            theta_hat: alloc::vec![None],
            t: alloc::vec![None],
            rejected: Vec::new(),
            alt: self.fit_growing(&[seed])?,
        };
        let mut excluded: BTreeSet<usize> = BTreeSet::new();
        excluded.insert(seed);
        let mut failures = 0;
        let mut tests = 0u64;
        loop {
            if self.cfg.max_cluster_size.is_some_and(|m| g.members.len() >= m) {
                break;
            }
            let candidates: Vec<usize> = remaining.iter().copied().filter(|p| !excluded.contains(p)).collect();
            if candidates.is_empty() {
                break;
            }
            let topic = &g.alt.topic;
            let gains = par::map(candidates.len(), |k| -> Result<f64> {
                let p = candidates[k];
                let l1 = candidate_loglik(self.model, topic, &self.batch.docs()[p], &self.null.mixes[p], self.cfg.infer)?;
                Ok(relative_gain(self.null.loglik[p], l1))
            });
            let gains = gains.into_iter().collect::<Result<Vec<f64>>>()?;
            let ids: Vec<usize> = candidates.iter().map(|&p| self.batch.docs()[p].id()).collect();
            let k = best_candidate(&gains, &ids).expect("non-empty candidates");
            let pick = candidates[k];
            excluded.insert(pick);

            let (theta_hat, t) = if g.members.len() < boot.min_cluster {
                (None, None)
            } else {
                let doc = &self.batch.docs()[pick];
                let fit = alt_proportions(self.model, topic, doc, &self.null.mixes[pick], self.cfg.infer)?;
                if fit.theta_hat >= boot.theta_gate {
                    (Some(fit.theta_hat), None)
                } else {
                    let test = significance::doc_significance(
                        self.model,
                        topic,
                        doc,
                        fit.theta_hat,
                        self.null.mixes[pick].theta(),
                        &self.pool,
                        boot.b1,
                        ((index as u64) << 32) | tests,
                        boot.seed,
                        self.cfg.infer,
                    )?;
                    tests += 1;
                    (Some(fit.theta_hat), Some(test.t))
                }
            };
            if let Some(tv) = t.filter(|&tv| tv < boot.tau) {
                g.rejected.push(Rejection {
                    doc: ids[k],
                    delta_l: gains[k],
                    theta_hat: theta_hat.unwrap_or(0.0),
                    t: tv,
                });
                failures += 1;
                if failures >= 2 {
                    break;
                }
                continue;
            }
            failures = 0;
            g.members.push(pick);
            g.delta_l.push(Some(gains[k]));
            g.theta_hat.push(theta_hat);
            g.t.push(t);
            g.alt = self.fit_growing(&g.members)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_gain_arithmetic() {
        assert_eq!(relative_gain(-100.0, -80.0), 0.2);
        assert_eq!(relative_gain(-50.0, -50.0), 0.0);
    }

    #[test]
    fn best_candidate_breaks_ties_by_id() {
        assert_eq!(best_candidate(&[0.1, 0.3, 0.3], &[5, 9, 2]), Some(2));
        assert_eq!(best_candidate(&[], &[]), None);
    }

    #[test]
    fn seed_prefers_low_per_token_likelihood() {
        let docs = alloc::vec![
            Document::new(0, [(0, 2)]).unwrap(),
            Document::new(1, [(1, 1)]).unwrap(),
            Document::new(2, [(0, 1)]).unwrap(),
        ];
        let batch = Corpus::new(docs, 2).unwrap();
        let nf = NullFit { mixes: Vec::new(), loglik: alloc::vec![-6.0, -5.0, -5.0], unconverged: 0 };
        assert_eq!(seed_document(&nf, &batch, &[0, 1, 2]), Some(1));
        assert_eq!(seed_document(&nf, &batch, &[0]), Some(0));
        assert_eq!(seed_document(&nf, &batch, &[]), None);
    }
}
