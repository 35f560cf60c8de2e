//! BIC cost terms.

use alloc::vec::Vec;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::math::{bernoulli_entropy_bits, half_ln_sample, ln, ln_choose, ln_choose_row, LN_2};
use crate::ptm::model::PtmModel;

/// Structural cost of a trained model on its training corpus:
///
/// `D·ln M + Σ_d ln C(M, M_d) + M·N·H(N̄/N)·ln 2 − ½ ln(M·N)
///  + ½ Σ_d (M_d − 1) ln(L_d / 2π) + ½ Σ_j N_j ln(L̄_j / 2π)`
pub fn cost(model: &PtmModel, corpus: &Corpus) -> Result<f64> {
    check_dims(model, corpus)?;
    let m = model.n_topics();
    let n = model.vocab_size();
    let d = corpus.len();

    let mut coverage = alloc::vec![0.0f64; m];
    let mut doc_terms = 0.0;
    for (mix, doc) in model.docs.iter().zip(corpus.docs()) {
        let m_d = mix.n_present();
        if m_d == 0 {
            return Err(Error::NoPresentTopic { doc: doc.id() });
        }
        doc_terms += ln_choose(m, m_d) + (m_d as f64 - 1.0) * half_ln_sample(doc.len() as f64);
        for j in 0..m {
            if mix.present[j] {
                coverage[j] += doc.len() as f64;
            }
        }
    }

    let total_specific: usize = model.topics.iter().map(|t| t.n_specific).sum();
    let mut topic_terms = 0.0;
    for (t, &cov) in model.topics.iter().zip(&coverage) {
        if t.n_specific > 0 {
            if cov <= 0.0 {
                return Err(Error::InvalidStructure("topic with specific words is absent from every document"));
            }
            topic_terms += t.n_specific as f64 * half_ln_sample(cov);
        }
    }
    let cells = (m * n) as f64;
    Ok(d as f64 * ln(m as f64)
        + doc_terms
        + cells * bernoulli_entropy_bits(total_specific as f64 / cells) * LN_2
        - 0.5 * ln(cells)
        + topic_terms)
}

pub(crate) fn check_dims(model: &PtmModel, corpus: &Corpus) -> Result<()> {
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
    Ok(())
}

/// Generic form of the three BIC cost functions used in the pipeline
/// (training, inference on fixed topics, and the one-extra-topic alternative):
///
/// `constant + Σ_d [ln C(K, M_d) + ½(M_d − 1) ln(L_d/2π)]
///  + E·H(T/E)·ln 2 + ½ Σ_{free j} N_j ln(L̄_j/2π)`
///
/// where `T` is the number of specific words over the free topics and `E`
/// is the number of free switch cells.
#[derive(Debug, Clone)]
pub(crate) struct Penalty {
    pub topics: usize,
    pub constant: f64,
    pub entropy_cells: f64,
    ln_choose: Vec<f64>,
}

impl Penalty {
    /// Full training objective with `m` topics over `n` words and `d` documents.
    pub fn training(m: usize, n: usize, d: usize) -> Self {
        let cells = (m * n) as f64;
        Self {
            topics: m,
            constant: d as f64 * ln(m as f64) - 0.5 * ln(cells),
            entropy_cells: cells,
            ln_choose: ln_choose_row(m),
        }
    }

    /// Alternative model: `m` fixed topics plus one new topic over `n` words.
    pub fn alternative(m: usize, n: usize) -> Self {
        Self { topics: m + 1, constant: 0.0, entropy_cells: n as f64, ln_choose: ln_choose_row(m + 1) }
    }

    /// Proportion/presence inference with `k` fixed topics.
    pub fn inference(k: usize) -> Self {
        Self { topics: k, constant: 0.0, entropy_cells: 0.0, ln_choose: ln_choose_row(k) }
    }

    #[inline]
    pub fn doc_term(&self, m_d: usize, len: usize) -> f64 {
        self.ln_choose[m_d] + (m_d as f64 - 1.0) * half_ln_sample(len as f64)
    }

    #[inline]
    pub fn entropy_term(&self, total_specific: usize) -> f64 {
        if self.entropy_cells <= 0.0 {
            return 0.0;
        }
        self.entropy_cells * bernoulli_entropy_bits(total_specific as f64 / self.entropy_cells) * LN_2
    }

    /// `½ N_j ln(L̄_j/2π)`; `None` when a topic with specific words covers no text.
    #[inline]
    pub fn topic_term(&self, n_specific: usize, coverage: f64) -> Option<f64> {
        if n_specific == 0 {
            Some(0.0)
        } else if coverage <= 0.0 {
            None
        } else {
            Some(n_specific as f64 * half_ln_sample(coverage))
        }
    }
}
