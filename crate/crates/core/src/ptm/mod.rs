//! Parsimonious topic models.
//!
//! A topic either owns a word (`u_jn = 1`, probability `β_jn`) or defers to
//! the shared distribution `β_0`. Documents mix a subset of topics selected
//! by presence switches `v_jd`. Parameters and switches are fitted jointly by
//! minimizing BIC with a generalized EM algorithm.

mod fit;
mod infer;
mod model;
mod objective;
mod train;

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::math::ln;

pub use fit::Switches;
pub use infer::{infer, InferOpts, Inference};
pub use model::{DocMix, PtmModel, Topic, PMF_TOL};
pub use objective::cost;
pub use train::{select_order, train, OrderSearch, OrderStep, TrainOpts, TrainOutcome};

pub(crate) use fit::{FreeTopic, MixtureFit};
pub(crate) use infer::fit_document;
pub(crate) use objective::Penalty;

/// Pseudo-count added to every word when estimating the shared distribution.
pub const SHARED_SMOOTHING: f64 = 0.1;

/// `β_0n = (count_n + ε) / (Σ_d L_d + N·ε)`.
pub fn shared_model(corpus: &Corpus, smoothing: f64) -> Result<Vec<f64>> {
    corpus.ensure_nonempty()?;
    if !(smoothing >= 0.0) {
        return Err(Error::InvalidConfig("smoothing must be non-negative".into()));
    }
    let n = corpus.vocab_size();
    let mut counts = vec![smoothing; n];
    for d in corpus.docs() {
        for &(w, c) in d.terms() {
            counts[w as usize] += c as f64;
        }
    }
    let total = corpus.total_tokens() as f64 + n as f64 * smoothing;
    counts.iter_mut().for_each(|c| *c /= total);
    Ok(counts)
}

/// `Σ_d Σ_n c_dn · ln Σ_j v_jd θ_jd β_jn`.
pub fn log_likelihood(model: &PtmModel, corpus: &Corpus) -> Result<f64> {
    if corpus.vocab_size() != model.vocab_size() {
        return Err(Error::DimensionMismatch {
            what: "vocabulary size",
            expected: model.vocab_size(),
            found: corpus.vocab_size(),
        });
    }
    if corpus.len() != model.docs.len() {
        return Err(Error::DimensionMismatch { what: "document count", expected: model.docs.len(), found: corpus.len() });
    }
    Ok(model.docs.iter().zip(corpus.docs()).map(|(mix, d)| doc_log_likelihood(&model.topics, mix, d)).sum())
}

pub(crate) fn doc_log_likelihood(topics: &[Topic], mix: &DocMix, doc: &crate::Document) -> f64 {
    doc.terms()
        .iter()
        .map(|&(w, c)| {
            let p: f64 = topics
                .iter()
                .enumerate()
                .filter(|(j, _)| mix.present[*j])
                .map(|(j, t)| mix.theta[j] * t.prob[w as usize])
                .sum();
            c as f64 * ln(p)
        })
        .sum()
}

/// `Cost − log-likelihood`, in nats.
pub fn bic(model: &PtmModel, corpus: &Corpus) -> Result<f64> {
    Ok(cost(model, corpus)? - log_likelihood(model, corpus)?)
}

/// Posterior topic assignments for every distinct word of every document.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    rows: Vec<Vec<Vec<f64>>>,
}

impl Responsibilities {
    /// Posterior over topics for the `e`-th distinct word of document `d`
    /// (position in the corpus). Absent topics get zero.
    pub fn get(&self, d: usize, e: usize) -> &[f64] {
        &self.rows[d][e]
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }
}

/// `P(z = j | w) ∝ v_jd θ_jd β_jw`, normalized per word.
pub fn e_step(model: &PtmModel, corpus: &Corpus) -> Result<Responsibilities> {
    objective::check_dims(model, corpus)?;
    let m = model.n_topics();
    let mut rows = Vec::with_capacity(corpus.len());
    for (mix, doc) in model.docs.iter().zip(corpus.docs()) {
        let mut doc_rows = Vec::with_capacity(doc.distinct());
        for &(w, _) in doc.terms() {
            let mut r = vec![0.0; m];
            let mut total = 0.0;
            for j in 0..m {
                if mix.present[j] {
                    r[j] = mix.theta[j] * model.topics[j].prob[w as usize];
                    total += r[j];
                }
            }
            if !(total > 0.0) {
                return Err(Error::ZeroProbability { doc: doc.id(), word: w });
            }
            r.iter_mut().for_each(|x| *x /= total);
            doc_rows.push(r);
        }
        rows.push(doc_rows);
    }
    Ok(Responsibilities { rows })
}

/// `θ_jd = v_jd Σ_i r_ij / Σ_l v_ld Σ_i r_il`, with word occurrences weighted
/// by their counts.
pub fn m_step_theta(resp: &Responsibilities, model: &PtmModel, corpus: &Corpus) -> Result<Vec<DocMix>> {
    objective::check_dims(model, corpus)?;
    let m = model.n_topics();
    let mut out = Vec::with_capacity(corpus.len());
    for (d, (mix, doc)) in model.docs.iter().zip(corpus.docs()).enumerate() {
        let mut acc = vec![0.0; m];
        for (e, &(_, c)) in doc.terms().iter().enumerate() {
            for j in 0..m {
                if mix.present[j] {
                    acc[j] += c as f64 * resp.rows[d][e][j];
                }
            }
        }
        let total: f64 = acc.iter().sum();
        acc.iter_mut().for_each(|a| *a /= total);
        out.push(DocMix { present: mix.present.clone(), theta: acc });
    }
    Ok(out)
}

/// Expected counts `x_jn = Σ_d c_dn P(z = j | n, d)`.
pub fn word_stats(resp: &Responsibilities, corpus: &Corpus, topics: usize) -> Vec<Vec<f64>> {
    let mut x = vec![vec![0.0; corpus.vocab_size()]; topics];
    for (d, doc) in corpus.docs().iter().enumerate() {
        for (e, &(w, c)) in doc.terms().iter().enumerate() {
            for (j, xj) in x.iter_mut().enumerate() {
                xj[w as usize] += c as f64 * resp.rows[d][e][j];
            }
        }
    }
    x
}

/// Closed-form `β` update for each topic given its switches and expected
/// counts. Topics with specific words but no expected counts on them lose
/// all their specific words.
pub fn m_step_beta(model: &PtmModel, x: &[Vec<f64>]) -> Vec<Topic> {
    model
        .topics
        .iter()
        .zip(x)
        .map(|(t, xj)| Topic::from_counts(&model.shared, t.specific.clone(), xj))
        .collect()
}

/// Runs the switch coordinate descent on a trained model. Each pass uses the
/// expected counts of the current parameters for words that become
/// topic-specific; passes repeat until one starting from fresh counts
/// accepts no flip, so the result is a fixed point of [`flip_delta`].
/// Parameters other than those touched by flip repairs are left unchanged.
pub fn sweep_switches(model: &PtmModel, corpus: &Corpus, which: Switches) -> Result<PtmModel> {
    let mut model = model.clone();
    loop {
        let resp = e_step(&model, corpus)?;
        let x = word_stats(&resp, corpus, model.n_topics());
        let mut fit = train::training_fit(&model, corpus, x)?;
        if fit.sweep(which) == 0 {
            return Ok(model);
        }
        fit.refresh();
        model = train::finish(model.shared.clone(), fit);
    }
}

/// A single switch change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flip {
    /// Toggle `u` of `word` in `topic`.
    Word { topic: usize, word: usize },
    /// Toggle `v` of `topic` in the document at position `doc`.
    Presence { doc: usize, topic: usize },
}

fn check_flip(model: &PtmModel, corpus: &Corpus, flip: Flip) -> Result<()> {
    let (what, index, limit) = match flip {
        Flip::Word { topic, .. } if topic >= model.n_topics() => ("topic", topic, model.n_topics()),
        Flip::Word { word, .. } => ("word", word, model.vocab_size()),
        Flip::Presence { topic, .. } if topic >= model.n_topics() => ("topic", topic, model.n_topics()),
        Flip::Presence { doc, .. } => ("document", doc, corpus.len()),
    };
    if index >= limit {
        return Err(Error::IndexOutOfRange { what, index, limit });
    }
    Ok(())
}

/// BIC change of one switch flip under the repair rules used by the sweep.
/// `None` when the flip is infeasible (it would empty a document, or give an
/// observed word zero probability).
pub fn flip_delta(model: &PtmModel, corpus: &Corpus, flip: Flip) -> Result<Option<f64>> {
    check_flip(model, corpus, flip)?;
    let resp = e_step(model, corpus)?;
    let x = word_stats(&resp, corpus, model.n_topics());
    let fit = train::training_fit(model, corpus, x)?;
    Ok(match flip {
        Flip::Word { topic, word } => fit.delta_u(topic, word),
        Flip::Presence { doc, topic } => fit.delta_v(doc, topic),
    })
}

/// The model after one switch flip, with the repaired parameters.
pub fn apply_flip(model: &PtmModel, corpus: &Corpus, flip: Flip) -> Result<Option<PtmModel>> {
    check_flip(model, corpus, flip)?;
    let resp = e_step(model, corpus)?;
    let x = word_stats(&resp, corpus, model.n_topics());
    let mut fit = train::training_fit(model, corpus, x)?;
    let done = match flip {
        Flip::Word { topic, word } => fit.force_u(topic, word),
        Flip::Presence { doc, topic } => fit.force_v(doc, topic),
    };
    if !done {
        return Ok(None);
    }
    fit.refresh();
    Ok(Some(train::finish(model.shared.clone(), fit)))
}
