//! Shared GEM engine for every PTM-style objective in the crate.
//!
//! A [`MixtureFit`] holds a set of documents, some frozen topics (borrowed),
//! some free topics (owned, with switchable `u` and re-estimated `β`), and
//! per-document proportions with presence switches. Training, test-set
//! inference, the alternative model and per-candidate scoring are all
//! instances with different topic sets and [`Penalty`] settings.
//!
//! Switch moves are evaluated exactly. A `u` flip keeps the specific words'
//! total mass equal to their shared mass: a word turning specific gets its
//! closed-form value from the expected counts `x` of the last E-step, and
//! every other specific word of the topic is rescaled by a common ratio `r`. The log-likelihood change over those words is
//! `Σ c·ln(1 + s·(r − 1))` with `s ∈ [0, 1]` the responsibility share of the
//! topic; it is bracketed by `G·ln r` and first/second-order expansions in
//! `r − 1` (with `G = Σ c·s`, `H = Σ c·s²`). The exact sum is only evaluated
//! when the bracket straddles the acceptance threshold.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::math::{abs, ln, ln_1p};
use crate::par;
use crate::ptm::model::{DocMix, Topic};
use crate::ptm::objective::Penalty;

/// A flip is accepted when it lowers BIC by more than this many nats.
pub(crate) const ACCEPT_EPS: f64 = 1e-10;
const MAX_CYCLES: usize = 500;
const CHUNK: usize = 64;

/// Which switch families a sweep visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Switches {
    /// Word switches `u` only.
    U,
    /// Topic-presence switches `v` only.
    V,
    Both,
}

impl Switches {
    fn u(self) -> bool {
        matches!(self, Switches::U | Switches::Both)
    }
    fn v(self) -> bool {
        matches!(self, Switches::V | Switches::Both)
    }
}

/// A topic whose switches and probabilities are being estimated, together
/// with the expected counts `x_jn` from the latest E-step.
#[derive(Debug, Clone)]
pub(crate) struct FreeTopic {
    pub topic: Topic,
    pub x: Vec<f64>,
    xbar: f64,
    mass: f64,
}

impl FreeTopic {
    pub fn new(topic: Topic, x: Vec<f64>, beta0: &[f64]) -> Self {
        let mut f = Self { topic, x, xbar: 0.0, mass: 0.0 };
        f.resum(beta0);
        f
    }

    /// Recomputes `x̄` and the shared mass of the specific words.
    fn resum(&mut self, beta0: &[f64]) {
        let (mut xbar, mut mass) = (0.0, 0.0);
        for (n, &u) in self.topic.specific.iter().enumerate() {
            if u {
                xbar += self.x[n];
                mass += beta0[n];
            }
        }
        self.xbar = xbar;
        self.mass = mass;
    }

    fn refit(&mut self, beta0: &[f64]) {
        let specific = core::mem::take(&mut self.topic.specific);
        self.topic = Topic::from_counts(beta0, specific, &self.x);
        self.resum(beta0);
    }
}

struct UTrial {
    to_specific: bool,
    new_p: f64,
    ratio: f64,
    d_cost: f64,
    word_dl: f64,
    g_word: f64,
    h_word: f64,
}

struct VTrial {
    theta: Vec<f64>,
    mix: Vec<f64>,
    n_present: usize,
    d_cost: f64,
    d_loglik: f64,
    d_coverage: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct RunSummary {
    pub trace: Vec<f64>,
    pub converged: bool,
}

pub(crate) struct MixtureFit<'a> {
    docs: Vec<&'a Document>,
    shared: &'a [f64],
    frozen: Vec<&'a Topic>,
    free: Vec<FreeTopic>,
    pinned: Option<usize>,
    weights: Vec<DocMix>,
    mix: Vec<Vec<f64>>,
    coverage: Vec<f64>,
    inverted: Vec<Vec<(u32, u32)>>,
    penalty: Penalty,
    total_specific: usize,
    bic: f64,
}

impl<'a> MixtureFit<'a> {
    pub fn new(
        docs: Vec<&'a Document>,
        shared: &'a [f64],
        frozen: Vec<&'a Topic>,
        free: Vec<FreeTopic>,
        weights: Vec<DocMix>,
        pinned: Option<usize>,
        penalty: Penalty,
    ) -> Result<Self> {
        let k = frozen.len() + free.len();
        if penalty.topics != k {
            return Err(Error::DimensionMismatch { what: "penalty topics", expected: k, found: penalty.topics });
        }
        if weights.len() != docs.len() {
            return Err(Error::DimensionMismatch { what: "document weights", expected: docs.len(), found: weights.len() });
        }
        for (w, d) in weights.iter().zip(&docs) {
            if w.n_topics() != k {
                return Err(Error::DimensionMismatch { what: "document proportions", expected: k, found: w.n_topics() });
            }
            if w.n_present() == 0 {
                return Err(Error::NoPresentTopic { doc: d.id() });
            }
        }
        let n = shared.len();
        let mut inverted = Vec::new();
        if !free.is_empty() {
            inverted = vec![Vec::new(); n];
            for (i, d) in docs.iter().enumerate() {
                for (e, &(m, _)) in d.terms().iter().enumerate() {
                    inverted[m as usize].push((i as u32, e as u32));
                }
            }
        }
        let total_specific = free.iter().map(|f| f.topic.n_specific).sum();
        let mut fit = Self {
            docs,
            shared,
            frozen,
            free,
            pinned,
            weights,
            mix: Vec::new(),
            coverage: Vec::new(),
            inverted,
            penalty,
            total_specific,
            bic: 0.0,
        };
        fit.refresh();
        for (i, row) in fit.mix.iter().enumerate() {
            if let Some(e) = row.iter().position(|&p| !(p > 0.0)) {
                return Err(Error::ZeroProbability { doc: fit.docs[i].id(), word: fit.docs[i].terms()[e].0 });
            }
        }
        Ok(fit)
    }

    pub fn n_topics(&self) -> usize {
        self.frozen.len() + self.free.len()
    }

    #[inline]
    fn pmf(&self, j: usize) -> &[f64] {
        let f0 = self.frozen.len();
        if j < f0 {
            self.frozen[j].pmf()
        } else {
            self.free[j - f0].topic.pmf()
        }
    }

    #[cfg(test)]
    pub fn bic(&self) -> f64 {
        self.bic
    }

    fn doc_mix(&self, i: usize) -> Vec<f64> {
        let w = &self.weights[i];
        let present = w.present_topics();
        self.docs[i]
            .terms()
            .iter()
            .map(|&(m, _)| present.iter().map(|&l| w.theta[l] * self.pmf(l)[m as usize]).sum())
            .collect()
    }

    /// Recomputes cached mixtures, coverage and BIC from scratch.
    pub fn refresh(&mut self) {
        let this = &*self;
        let mix = par::map(self.docs.len(), |i| this.doc_mix(i));
        self.mix = mix;
        let f0 = self.frozen.len();
        self.coverage = (0..self.free.len())
            .map(|f| {
                self.weights
                    .iter()
                    .zip(&self.docs)
                    .filter(|(w, _)| w.present[f0 + f])
                    .map(|(_, d)| d.len() as f64)
                    .sum()
            })
            .collect();
        self.total_specific = self.free.iter().map(|f| f.topic.n_specific).sum();
        self.bic = self.cost() - self.log_likelihood();
    }

    pub fn doc_log_likelihood(&self, i: usize) -> f64 {
        self.docs[i].terms().iter().zip(&self.mix[i]).map(|(&(_, c), &p)| c as f64 * ln(p)).sum()
    }

    pub fn log_likelihood(&self) -> f64 {
        (0..self.docs.len()).map(|i| self.doc_log_likelihood(i)).sum()
    }

    pub fn cost(&self) -> f64 {
        let mut c = self.penalty.constant;
        for (w, d) in self.weights.iter().zip(&self.docs) {
            c += self.penalty.doc_term(w.n_present(), d.len());
        }
        c += self.penalty.entropy_term(self.total_specific);
        for (f, ft) in self.free.iter().enumerate() {
            c += self.penalty.topic_term(ft.topic.n_specific, self.coverage[f]).unwrap_or(f64::INFINITY);
        }
        c
    }

    /// BIC recomputed from the current parameters without using caches.
    #[cfg(test)]
    pub fn bic_from_scratch(&self) -> f64 {
        let ll: f64 = (0..self.docs.len())
            .map(|i| {
                self.docs[i].terms().iter().zip(self.doc_mix(i)).map(|(&(_, c), p)| c as f64 * ln(p)).sum::<f64>()
            })
            .sum();
        self.cost() - ll
    }

    fn em_chunk(&self, chunk: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let k = self.n_topics();
        let f0 = self.frozen.len();
        let nw = self.shared.len();
        let lo = chunk * CHUNK;
        let hi = (lo + CHUNK).min(self.docs.len());
        let mut partial = vec![vec![0.0; nw]; self.free.len()];
        let mut thetas = Vec::with_capacity(hi - lo);
        let mut tmp = vec![0.0; k];
        for i in lo..hi {
            let w = &self.weights[i];
            let present = w.present_topics();
            let mut acc = vec![0.0; k];
            for &(m, c) in self.docs[i].terms() {
                let m = m as usize;
                let mut total = 0.0;
                for &l in &present {
                    let v = w.theta[l] * self.pmf(l)[m];
                    tmp[l] = v;
                    total += v;
                }
                if !(total > 0.0) {
                    continue;
                }
                let scale = c as f64 / total;
                for &l in &present {
                    let r = tmp[l] * scale;
                    acc[l] += r;
                    if l >= f0 {
                        partial[l - f0][m] += r;
                    }
                }
            }
            let sum: f64 = acc.iter().sum();
            acc.iter_mut().for_each(|a| *a /= sum);
            thetas.push(acc);
        }
        (thetas, partial)
    }

    /// One E-step followed by the closed-form parameter M-step: proportions
    /// for every document, word probabilities for every free topic.
    pub fn em_step(&mut self) {
        let n_chunks = self.docs.len().div_ceil(CHUNK);
        let this = &*self;
        let parts = par::map(n_chunks, |c| this.em_chunk(c));
        let nw = self.shared.len();
        let mut x = vec![vec![0.0; nw]; self.free.len()];
        for (c, (thetas, partial)) in parts.into_iter().enumerate() {
            for (o, theta) in thetas.into_iter().enumerate() {
                self.weights[c * CHUNK + o].theta = theta;
            }
            for (acc, p) in x.iter_mut().zip(partial) {
                for (a, v) in acc.iter_mut().zip(p) {
                    *a += v;
                }
            }
        }
        for (ft, xf) in self.free.iter_mut().zip(x) {
            ft.x = xf;
            ft.refit(self.shared);
        }
        self.refresh();
    }

    /// Cycles over the requested switches until a full cycle changes nothing.
    /// Returns the number of accepted flips.
    pub fn sweep(&mut self, which: Switches) -> usize {
        let mut total = 0;
        for _ in 0..MAX_CYCLES {
            let mut changed = 0;
            if which.u() {
                for f in 0..self.free.len() {
                    changed += self.sweep_topic_words(f);
                }
            }
            if which.v() {
                changed += self.sweep_presence();
            }
            total += changed;
            if changed == 0 {
                break;
            }
        }
        total
    }

    /// Alternates GEM iterations (E-step, parameter M-step, switch sweep)
    /// until the relative BIC change drops below `tol`.
    pub fn run(&mut self, which: Option<Switches>, tol: f64, max_iters: usize) -> RunSummary {
        let mut trace = vec![self.bic];
        let mut converged = false;
        for _ in 0..max_iters {
            let prev = self.bic;
            self.em_step();
            if let Some(s) = which {
                self.sweep(s);
            }
            trace.push(self.bic);
            if abs(prev - self.bic) <= tol * abs(self.bic) {
                converged = true;
                break;
            }
        }
        RunSummary { trace, converged }
    }

    fn docs_with_topic(&self, j: usize) -> Vec<usize> {
        (0..self.docs.len()).filter(|&i| self.weights[i].present[j] && self.weights[i].theta[j] > 0.0).collect()
    }

    /// `G = Σ c·s` and `H = Σ c·s²` over specific-word entries of the topic,
    /// with `s = θ·β/mixture`.
    fn specific_moments(&self, f: usize, docs_j: &[usize]) -> (f64, f64) {
        let j = self.frozen.len() + f;
        let topic = &self.free[f].topic;
        let (mut g, mut h) = (0.0, 0.0);
        for &i in docs_j {
            let th = self.weights[i].theta[j];
            for (e, &(m, c)) in self.docs[i].terms().iter().enumerate() {
                if topic.specific[m as usize] {
                    let s = th * topic.prob[m as usize] / self.mix[i][e];
                    g += c as f64 * s;
                    h += c as f64 * s * s;
                }
            }
        }
        (g, h)
    }

    fn u_trial(&self, f: usize, n: usize) -> Option<UTrial> {
        let ft = &self.free[f];
        let j = self.frozen.len() + f;
        let b0 = self.shared[n];
        let spec = ft.topic.specific[n];
        let nj = ft.topic.n_specific;
        let old_p = ft.topic.prob[n];
        let (new_p, ratio, nj_new) = if spec {
            let ratio = if nj == 1 {
                1.0
            } else {
                let mut rest = ft.mass - old_p;
                if rest < 1e-6 * ft.mass {
                    // the difference cancels; sum the other words directly
                    rest = (0..self.shared.len()).filter(|&m| m != n && ft.topic.specific[m]).map(|m| ft.topic.prob[m]).sum();
                }
                if !(rest > 0.0) {
                    return None;
                }
                (ft.mass - b0) / rest
            };
            (b0, ratio, nj - 1)
        } else {
            let xbar = ft.xbar + ft.x[n];
            if !(xbar > 0.0) {
                return None;
            }
            let new_p = ft.x[n] * (ft.mass + b0) / xbar;
            let ratio = if nj == 0 { 1.0 } else { (ft.mass + b0 - new_p) / ft.mass };
            (new_p, ratio, nj + 1)
        };
        if !(ratio > 0.0) || !ratio.is_finite() {
            return None;
        }

        let total_new = if spec { self.total_specific - 1 } else { self.total_specific + 1 };
        let cov = self.coverage[f];
        let d_cost = self.penalty.entropy_term(total_new) - self.penalty.entropy_term(self.total_specific)
            + self.penalty.topic_term(nj_new, cov)?
            - self.penalty.topic_term(nj, cov)?;

        let (mut word_dl, mut g_word, mut h_word) = (0.0, 0.0, 0.0);
        for &(i, e) in &self.inverted[n] {
            let (i, e) = (i as usize, e as usize);
            let th = self.weights[i].theta[j];
            if th == 0.0 {
                continue;
            }
            let c = self.docs[i].terms()[e].1 as f64;
            let p = self.mix[i][e];
            let delta = th * (new_p - old_p);
            if !(p + delta > 0.0) {
                return None;
            }
            word_dl += c * ln_1p(delta / p);
            if spec {
                let s = th * old_p / p;
                g_word += c * s;
                h_word += c * s * s;
            }
        }
        Some(UTrial { to_specific: !spec, new_p, ratio, d_cost, word_dl, g_word, h_word })
    }

    /// Exact log-likelihood change on the specific words other than `n`
    /// when they are all rescaled by `ratio`.
    fn rescale_dl(&self, f: usize, n: usize, ratio: f64, docs_j: &[usize]) -> f64 {
        let j = self.frozen.len() + f;
        let topic = &self.free[f].topic;
        let delta = ratio - 1.0;
        let mut dl = 0.0;
        for &i in docs_j {
            let th = self.weights[i].theta[j];
            for (e, &(m, c)) in self.docs[i].terms().iter().enumerate() {
                let m = m as usize;
                if m != n && topic.specific[m] {
                    dl += c as f64 * ln_1p(th * topic.prob[m] * delta / self.mix[i][e]);
                }
            }
        }
        dl
    }

    /// Exact BIC change of flipping `u` for word `n` of free topic `f`;
    /// `None` if the flip is infeasible.
    pub fn delta_u(&self, f: usize, n: usize) -> Option<f64> {
        let t = self.u_trial(f, n)?;
        let docs_j = self.docs_with_topic(self.frozen.len() + f);
        Some(t.d_cost - t.word_dl - self.rescale_dl(f, n, t.ratio, &docs_j))
    }

    fn sweep_topic_words(&mut self, f: usize) -> usize {
        let docs_j = self.docs_with_topic(self.frozen.len() + f);
        let (mut g, mut h) = self.specific_moments(f, &docs_j);
        let mut accepted = 0;
        for n in 0..self.shared.len() {
            let Some(t) = self.u_trial(f, n) else { continue };
            let g_rest = (g - t.g_word).max(0.0);
            let h_rest = (h - t.h_word).max(0.0);
            let (lo, hi) = rescale_bounds(t.ratio - 1.0, g_rest, h_rest);
            let best = t.d_cost - t.word_dl - hi;
            let worst = t.d_cost - t.word_dl - lo;
            let margin = 1e-9 * (1.0 + abs(t.d_cost) + abs(t.word_dl) + abs(hi) + abs(lo));
            let accept = if best > -ACCEPT_EPS + margin {
                false
            } else if worst < -ACCEPT_EPS - margin {
                true
            } else {
                t.d_cost - t.word_dl - self.rescale_dl(f, n, t.ratio, &docs_j) < -ACCEPT_EPS
            };
            if accept {
                let (gg, hh) = self.apply_u(f, n, &t, &docs_j);
                g = gg;
                h = hh;
                accepted += 1;
            }
        }
        accepted
    }

    fn apply_u(&mut self, f: usize, n: usize, t: &UTrial, docs_j: &[usize]) -> (f64, f64) {
        let j = self.frozen.len() + f;
        let shared = self.shared;
        let ft = &mut self.free[f];
        let old = ft.topic.clone();
        for m in 0..shared.len() {
            if ft.topic.specific[m] && m != n {
                ft.topic.prob[m] *= t.ratio;
            }
        }
        ft.topic.specific[n] = t.to_specific;
        ft.topic.prob[n] = t.new_p;
        if t.to_specific {
            ft.topic.n_specific += 1;
            self.total_specific += 1;
        } else {
            ft.topic.n_specific -= 1;
            self.total_specific -= 1;
        }
        ft.resum(shared);
        if ft.topic.n_specific == 0 {
            ft.topic.prob.copy_from_slice(shared);
        }
        let topic = &ft.topic;

        let (mut dl, mut g, mut h) = (0.0, 0.0, 0.0);
        for &i in docs_j {
            let th = self.weights[i].theta[j];
            let row = &mut self.mix[i];
            for (e, &(m, c)) in self.docs[i].terms().iter().enumerate() {
                let m = m as usize;
                if !(old.specific[m] || topic.specific[m]) {
                    continue;
                }
                let delta = th * (topic.prob[m] - old.prob[m]);
                let p = row[e];
                let c = c as f64;
                dl += c * ln_1p(delta / p);
                row[e] = p + delta;
                if topic.specific[m] {
                    let s = th * topic.prob[m] / row[e];
                    g += c * s;
                    h += c * s * s;
                }
            }
        }
        self.bic += t.d_cost - dl;
        (g, h)
    }

    fn sweep_presence(&mut self) -> usize {
        let k = self.n_topics();
        let mut accepted = 0;
        for i in 0..self.docs.len() {
            for j in 0..k {
                if self.pinned == Some(j) {
                    continue;
                }
                if let Some(t) = self.v_trial(i, j) {
                    if t.d_cost - t.d_loglik < -ACCEPT_EPS {
                        self.apply_v(i, j, t);
                        accepted += 1;
                    }
                }
            }
        }
        accepted
    }

    fn v_trial(&self, i: usize, j: usize) -> Option<VTrial> {
        let w = &self.weights[i];
        let doc = self.docs[i];
        let m_d = w.n_present();
        let mut theta = w.theta.clone();
        let mut present = w.present.clone();
        let keep = m_d as f64 / (m_d + 1) as f64;
        let new_md;
        if w.present[j] {
            if m_d == 1 {
                return None;
            }
            let rest: f64 = (0..theta.len()).filter(|&l| l != j && present[l]).map(|l| theta[l]).sum();
            if !(rest > 0.0) {
                return None;
            }
            theta[j] = 0.0;
            present[j] = false;
            theta.iter_mut().for_each(|t| *t /= rest);
            new_md = m_d - 1;
        } else {
            theta.iter_mut().for_each(|t| *t *= keep);
            theta[j] = 1.0 / (m_d + 1) as f64;
            present[j] = true;
            new_md = m_d + 1;
        }
        let pj = self.pmf(j);
        let old_mix = &self.mix[i];
        let mut mix = Vec::with_capacity(doc.distinct());
        let mut d_loglik = 0.0;
        for (e, &(m, c)) in doc.terms().iter().enumerate() {
            let m = m as usize;
            let old = old_mix[e];
            // removal recomputes the mixture; subtracting topic j's share
            // from the cached one cancels when j dominates the word
            let p = if w.present[j] {
                (0..theta.len()).filter(|&l| present[l]).map(|l| theta[l] * self.pmf(l)[m]).sum()
            } else {
                keep * old + theta[j] * pj[m]
            };
            if !(p > 0.0) {
                return None;
            }
            d_loglik += c as f64 * ln(p / old);
            mix.push(p);
        }
        let len = doc.len();
        let mut d_cost = self.penalty.doc_term(new_md, len) - self.penalty.doc_term(m_d, len);
        let f0 = self.frozen.len();
        let d_coverage = if w.present[j] { -(len as f64) } else { len as f64 };
        if j >= f0 {
            let f = j - f0;
            let nj = self.free[f].topic.n_specific;
            let cov = self.coverage[f];
            d_cost += self.penalty.topic_term(nj, cov + d_coverage)? - self.penalty.topic_term(nj, cov)?;
        }
        Some(VTrial { theta, mix, n_present: new_md, d_cost, d_loglik, d_coverage })
    }

    /// Exact BIC change of flipping presence of topic `j` in document `i`.
    pub fn delta_v(&self, i: usize, j: usize) -> Option<f64> {
        if self.pinned == Some(j) {
            return None;
        }
        self.v_trial(i, j).map(|t| t.d_cost - t.d_loglik)
    }

    fn apply_v(&mut self, i: usize, j: usize, t: VTrial) {
        let w = &mut self.weights[i];
        w.present[j] = !w.present[j];
        w.theta = t.theta;
        debug_assert_eq!(w.n_present(), t.n_present);
        self.mix[i] = t.mix;
        let f0 = self.frozen.len();
        if j >= f0 {
            self.coverage[j - f0] += t.d_coverage;
        }
        self.bic += t.d_cost - t.d_loglik;
    }

    /// Applies the flip `(f, n)` regardless of its BIC change; false if it
    /// is infeasible.
    pub fn force_u(&mut self, f: usize, n: usize) -> bool {
        let Some(t) = self.u_trial(f, n) else { return false };
        let docs_j = self.docs_with_topic(self.frozen.len() + f);
        self.apply_u(f, n, &t, &docs_j);
        true
    }

    pub fn force_v(&mut self, i: usize, j: usize) -> bool {
        let Some(t) = self.v_trial(i, j) else { return false };
        self.apply_v(i, j, t);
        true
    }

    pub fn into_parts(self) -> (Vec<DocMix>, Vec<FreeTopic>, f64) {
        (self.weights, self.free, self.bic)
    }
}

/// Lower and upper bounds on `Σ c·ln(1 + s·δ)` given `G = Σ c·s`,
/// `H = Σ c·s²` and `s ∈ [0, 1]`.
fn rescale_bounds(delta: f64, g: f64, h: f64) -> (f64, f64) {
    if g <= 0.0 || delta == 0.0 {
        return (0.0, 0.0);
    }
    let concave = g * ln_1p(delta);
    let quad = delta * g - 0.5 * delta * delta * h;
    if delta > 0.0 {
        (concave.max(quad), delta * g)
    } else {
        (concave, quad)
    }
}
