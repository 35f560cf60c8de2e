use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::ptm::{fit_document, DocMix, FreeTopic, InferOpts, MixtureFit, Penalty, PtmModel, Switches, Topic};
use crate::significance::empirical_proportion;

/// Share of the new topic when an alternative fit starts.
const NEW_TOPIC_INIT: f64 = 0.9;
/// Share of the new topic when a single document is refitted under a
/// finished alternative.
const NEW_TOPIC_WARM: f64 = 0.1;

/// Null topics plus one extra topic fitted on a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct AltModel {
    /// The new topic; index `M` in every member's proportions.
    pub topic: Topic,
    /// Members' proportions over `M + 1` topics.
    pub mixes: Vec<DocMix>,
    /// `l₁(d)` per member.
    pub loglik: Vec<f64>,
    pub bic: f64,
    pub converged: bool,
}

/// Proportions in `M + 1` topics: normal topics keep the null switches, the
/// new topic is present with weight `share`, null proportions are scaled to
/// `1 − share`.
fn extend(null: &DocMix, share: f64, uniform: bool) -> DocMix {
    let m = null.n_topics();
    let mut present = null.present().to_vec();
    present.push(true);
    let k = null.n_present() as f64;
    let mut theta: Vec<f64> = (0..m)
        .map(|j| {
            if !null.is_present(j) {
                0.0
            } else if uniform {
                (1.0 - share) / k
            } else {
                (1.0 - share) * null.theta()[j]
            }
        })
        .collect();
    theta.push(share);
    DocMix { present, theta }
}

/// Fits the alternative on a cluster from scratch: every word occurring in
/// the cluster starts topic-specific with probabilities from the cluster's
/// counts, and the new topic starts dominant in every member.
pub fn fit_alternative(model: &PtmModel, docs: &[&Document], null: &[DocMix], opts: InferOpts) -> Result<AltModel> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if null.len() != docs.len() {
        return Err(Error::DimensionMismatch { what: "null proportions", expected: docs.len(), found: null.len() });
    }
    let mut counts = vec![0.0; model.vocab_size()];
    for d in docs {
        for &(w, c) in d.terms() {
            counts[w as usize] += c as f64;
        }
    }
    let specific: Vec<bool> = counts.iter().map(|&c| c > 0.0).collect();
    fit_alternative_from(model, docs, null, specific, opts)
}

/// [`fit_alternative`] starting from the given new-topic switches.
pub fn fit_alternative_from(
    model: &PtmModel,
    docs: &[&Document],
    null: &[DocMix],
    specific: Vec<bool>,
    opts: InferOpts,
) -> Result<AltModel> {
    fit_alt(model, docs, null, specific, opts, Switches::Both)
}

/// [`fit_alternative`] with the new topic's word switches frozen at their
/// initial support; only parameters and presence switches are fitted.
pub fn fit_alternative_frozen(model: &PtmModel, docs: &[&Document], null: &[DocMix], opts: InferOpts) -> Result<AltModel> {
    let mut specific = vec![false; model.vocab_size()];
    for d in docs {
        for &(w, _) in d.terms() {
            specific[w as usize] = true;
        }
    }
    fit_alt(model, docs, null, specific, opts, Switches::V)
}

fn fit_alt(
    model: &PtmModel,
    docs: &[&Document],
    null: &[DocMix],
    specific: Vec<bool>,
    opts: InferOpts,
    which: Switches,
) -> Result<AltModel> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if null.len() != docs.len() {
        return Err(Error::DimensionMismatch { what: "null proportions", expected: docs.len(), found: null.len() });
    }
    let n = model.vocab_size();
    let m = model.n_topics();
    if specific.len() != n {
        return Err(Error::DimensionMismatch { what: "switches", expected: n, found: specific.len() });
    }
    let mut counts = vec![0.0; n];
    for d in docs {
        for &(w, c) in d.terms() {
            counts[w as usize] += c as f64;
        }
    }
    let topic = Topic::from_counts(model.shared(), specific, &counts);
    let free = vec![FreeTopic::new(topic, counts, model.shared())];
    let weights = null.iter().map(|v| extend(v, NEW_TOPIC_INIT, true)).collect();
    let mut fit = MixtureFit::new(
        docs.to_vec(),
        model.shared(),
        model.topics().iter().collect(),
        free,
        weights,
        Some(m),
        Penalty::alternative(m, n),
    )?;
    fit.run(None, opts.tol, opts.max_iters);
    let summary = fit.run(Some(which), opts.tol, opts.max_iters);
    fit.refresh();
    let loglik = (0..docs.len()).map(|i| fit.doc_log_likelihood(i)).collect();
    let (mixes, mut free, bic) = fit.into_parts();
    Ok(AltModel { topic: free.pop().expect("one free topic").topic, mixes, loglik, bic, converged: summary.converged })
}

fn with_new<'a>(model: &'a PtmModel, topic: &'a Topic) -> Vec<&'a Topic> {
    let mut topics: Vec<&Topic> = model.topics().iter().collect();
    topics.push(topic);
    topics
}

/// `l₁(d)` of a document outside the cluster: proportions refitted under the
/// alternative with the null switches kept and the new topic present.
pub fn candidate_loglik(model: &PtmModel, topic: &Topic, doc: &Document, null: &DocMix, opts: InferOpts) -> Result<f64> {
    let topics = with_new(model, topic);
    let init = extend(null, NEW_TOPIC_WARM, false);
    let fit = fit_document(model.shared(), &topics, doc, init, Some(topics.len() - 1), None, opts)?;
    Ok(fit.loglik)
}

/// A single document fitted under a finished alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct AltFit {
    pub mix: DocMix,
    pub loglik: f64,
    /// Empirical proportion of the new topic.
    pub theta_hat: f64,
}

/// Proportions and normal-topic switches of a document under the
/// alternative, starting from its null fit, with the new topic kept present.
pub fn alt_proportions(model: &PtmModel, topic: &Topic, doc: &Document, null: &DocMix, opts: InferOpts) -> Result<AltFit> {
    let topics = with_new(model, topic);
    let new = topics.len() - 1;
    let init = extend(null, NEW_TOPIC_WARM, false);
    let fit = fit_document(model.shared(), &topics, doc, init, Some(new), Some(Switches::V), opts)?;
    let theta_hat = empirical_proportion(&topics, &fit.mix, doc, new);
    Ok(AltFit { mix: fit.mix, loglik: fit.loglik, theta_hat })
}
