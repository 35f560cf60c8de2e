use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::WordId;
use crate::error::{Error, Result};
use crate::math::abs;

/// Tolerance used when validating probability constraints.
pub const PMF_TOL: f64 = 1e-8;

/// A topic: per-word switches and the resulting word distribution.
///
/// `prob[n]` is `β_jn` when word `n` is topic-specific and `β_0n` otherwise,
/// so it is always the full effective distribution of the topic.
#[derive(Debug, Clone, PartialEq)]
pub struct Topic {
    pub(crate) specific: Vec<bool>,
    pub(crate) prob: Vec<f64>,
    pub(crate) n_specific: usize,
}

impl Topic {
    /// A topic with every word shared.
    pub fn shared(beta0: &[f64]) -> Self {
        Self { specific: vec![false; beta0.len()], prob: beta0.to_vec(), n_specific: 0 }
    }

    /// Closed-form update `β_jn = x_jn / μ_j` for specific words, with
    /// `μ_j = x̄_j / Σ_{u_jn=1} β_0n`. A topic with specific words but no
    /// expected counts on them is demoted to all-shared.
    pub fn from_counts(beta0: &[f64], mut specific: Vec<bool>, x: &[f64]) -> Self {
        let (mut xbar, mut mass, mut n_specific) = (0.0, 0.0, 0usize);
        for n in 0..beta0.len() {
            if specific[n] {
                xbar += x[n];
                mass += beta0[n];
                n_specific += 1;
            }
        }
        if n_specific == 0 || xbar <= 0.0 {
            specific.iter_mut().for_each(|u| *u = false);
            return Self { specific, prob: beta0.to_vec(), n_specific: 0 };
        }
        let scale = mass / xbar;
        let prob = (0..beta0.len())
            .map(|n| if specific[n] { x[n] * scale } else { beta0[n] })
            .collect();
        Self { specific, prob, n_specific }
    }

    /// Builds a topic from its specific words and their probabilities, checking
    /// that the resulting distribution sums to one.
    pub fn from_specific(beta0: &[f64], words: &[(WordId, f64)]) -> Result<Self> {
        let mut t = Self::shared(beta0);
        for &(w, b) in words {
            let n = w as usize;
            if n >= beta0.len() {
                return Err(Error::IndexOutOfRange { what: "word", index: n, limit: beta0.len() });
            }
            if t.specific[n] {
                return Err(Error::InvalidStructure("word listed twice in a topic"));
            }
            if !(b >= 0.0) {
                return Err(Error::InvalidStructure("negative word probability"));
            }
            t.specific[n] = true;
            t.prob[n] = b;
            t.n_specific += 1;
        }
        let total: f64 = t.prob.iter().sum();
        if abs(total - 1.0) > PMF_TOL {
            return Err(Error::InvalidStructure("topic distribution does not sum to one"));
        }
        Ok(t)
    }

    pub fn vocab_size(&self) -> usize {
        self.prob.len()
    }

    /// `β_jn^{u_jn} β_0n^{1-u_jn}`.
    #[inline]
    pub fn word_prob(&self, n: usize) -> f64 {
        self.prob[n]
    }

    pub fn is_specific(&self, n: usize) -> bool {
        self.specific[n]
    }

    /// Number of topic-specific words `N_j`.
    pub fn n_specific(&self) -> usize {
        self.n_specific
    }

    pub fn switches(&self) -> &[bool] {
        &self.specific
    }

    /// Effective word distribution.
    pub fn pmf(&self) -> &[f64] {
        &self.prob
    }

    /// `(word, β)` for every topic-specific word, ascending word id.
    pub fn specific_words(&self) -> impl Iterator<Item = (WordId, f64)> + '_ {
        self.specific
            .iter()
            .enumerate()
            .filter(|(_, &u)| u)
            .map(|(n, _)| (n as WordId, self.prob[n]))
    }
}

/// Topic proportions and presence switches of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocMix {
    pub(crate) present: Vec<bool>,
    pub(crate) theta: Vec<f64>,
}

impl DocMix {
    /// Every topic present with equal weight.
    pub fn uniform(topics: usize) -> Self {
        Self { present: vec![true; topics], theta: vec![1.0 / topics as f64; topics] }
    }

    /// Builds proportions from `(topic, θ)` pairs; unlisted topics are absent.
    pub fn from_pairs(topics: usize, pairs: &[(usize, f64)]) -> Result<Self> {
        let mut m = Self { present: vec![false; topics], theta: vec![0.0; topics] };
        for &(j, t) in pairs {
            if j >= topics {
                return Err(Error::IndexOutOfRange { what: "topic", index: j, limit: topics });
            }
            if m.present[j] {
                return Err(Error::InvalidStructure("topic listed twice in a document"));
            }
            m.present[j] = true;
            m.theta[j] = t;
        }
        m.check()?;
        Ok(m)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.n_present() == 0 {
            return Err(Error::InvalidStructure("document without a present topic"));
        }
        let mut total = 0.0;
        for (j, &t) in self.theta.iter().enumerate() {
            if !(t >= 0.0) || (!self.present[j] && t != 0.0) {
                return Err(Error::InvalidStructure("invalid topic proportion"));
            }
            total += t;
        }
        if abs(total - 1.0) > PMF_TOL {
            return Err(Error::InvalidStructure("topic proportions do not sum to one"));
        }
        Ok(())
    }

    pub fn n_topics(&self) -> usize {
        self.theta.len()
    }

    /// `M_d`, the number of present topics.
    pub fn n_present(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    pub fn is_present(&self, j: usize) -> bool {
        self.present[j]
    }

    pub(crate) fn present_topics(&self) -> Vec<usize> {
        (0..self.present.len()).filter(|&j| self.present[j]).collect()
    }

    /// Removes topic `j` and renormalizes. A document left without topics
    /// gets every remaining topic with equal weight.
    pub(crate) fn drop_topic(&mut self, j: usize) {
        self.present.remove(j);
        self.theta.remove(j);
        let total: f64 = self.theta.iter().sum();
        if self.n_present() == 0 || total <= 0.0 {
            *self = Self::uniform(self.theta.len());
        } else {
            self.theta.iter_mut().for_each(|t| *t /= total);
        }
    }
}

/// A trained parsimonious topic model.
#[derive(Debug, Clone, PartialEq)]
pub struct PtmModel {
    pub(crate) shared: Vec<f64>,
    pub(crate) topics: Vec<Topic>,
    pub(crate) docs: Vec<DocMix>,
    pub(crate) bic: Option<f64>,
}

impl PtmModel {
    /// Assembles a model, validating every probability constraint.
    pub fn from_parts(shared: Vec<f64>, topics: Vec<Topic>, docs: Vec<DocMix>) -> Result<Self> {
        let model = Self { shared, topics, docs, bic: None };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.shared.len();
        if n == 0 || self.topics.is_empty() {
            return Err(Error::InvalidStructure("model without words or topics"));
        }
        if abs(self.shared.iter().sum::<f64>() - 1.0) > PMF_TOL || self.shared.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::InvalidStructure("shared distribution is not a positive pmf"));
        }
        for t in &self.topics {
            if t.vocab_size() != n {
                return Err(Error::DimensionMismatch { what: "topic length", expected: n, found: t.vocab_size() });
            }
            if abs(t.prob.iter().sum::<f64>() - 1.0) > PMF_TOL || t.prob.iter().any(|&b| !(b >= 0.0)) {
                return Err(Error::InvalidStructure("topic is not a pmf"));
            }
            for w in 0..n {
                if !t.specific[w] && t.prob[w] != self.shared[w] {
                    return Err(Error::InvalidStructure("shared word differs from shared model"));
                }
            }
        }
        for d in &self.docs {
            if d.n_topics() != self.topics.len() {
                return Err(Error::DimensionMismatch {
                    what: "document proportions",
                    expected: self.topics.len(),
                    found: d.n_topics(),
                });
            }
            d.check()?;
        }
        Ok(())
    }

    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.shared.len()
    }

    pub fn shared(&self) -> &[f64] {
        &self.shared
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn topic(&self, j: usize) -> Option<&Topic> {
        self.topics.get(j)
    }

    /// Proportions of the training documents.
    pub fn doc_mixes(&self) -> &[DocMix] {
        &self.docs
    }

    /// Cached BIC in nats, when known.
    pub fn bic(&self) -> Option<f64> {
        self.bic
    }

    /// Probability of word `n` under topic `j`.
    pub fn word_prob(&self, j: usize, n: usize) -> Result<f64> {
        let t = self
            .topics
            .get(j)
            .ok_or(Error::IndexOutOfRange { what: "topic", index: j, limit: self.topics.len() })?;
        if n >= self.shared.len() {
            return Err(Error::IndexOutOfRange { what: "word", index: n, limit: self.shared.len() });
        }
        Ok(t.word_prob(n))
    }

    /// Overall mass of each topic: `Σ_d v_jd θ_jd L_d`.
    pub fn topic_mass(&self, lengths: &[usize]) -> Vec<f64> {
        let mut mass = vec![0.0; self.topics.len()];
        for (d, len) in self.docs.iter().zip(lengths) {
            for (j, &t) in d.theta.iter().enumerate() {
                if d.present[j] {
                    mass[j] += t * *len as f64;
                }
            }
        }
        mass
    }
}
