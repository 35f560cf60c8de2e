//! Detection metrics and individual-document baselines.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::par;

/// `2rp / (r + p)`, zero when both are zero.
pub fn f1(recall: f64, precision: f64) -> f64 {
    if recall + precision > 0.0 {
        2.0 * recall * precision / (recall + precision)
    } else {
        0.0
    }
}

/// Trapezoidal area under a recall–precision trace. The curve starts at
/// recall 0 with the first point's precision.
pub fn trace_auc(trace: &[(f64, f64)]) -> f64 {
    let Some(&(_, p1)) = trace.first() else { return 0.0 };
    let (mut r0, mut p0, mut area) = (0.0, p1, 0.0);
    for &(r, p) in trace {
        area += (r - r0) * (p + p0) / 2.0;
        r0 = r;
        p0 = p;
    }
    area
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEval<L> {
    /// Most frequent anomalous label among members (ties: smallest label).
    pub majority: Option<L>,
    pub hits: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub auc: f64,
}

fn label_of<L>(labels: &[L], id: usize) -> Result<&L> {
    labels.get(id).ok_or(Error::IndexOutOfRange { what: "document label", index: id, limit: labels.len() })
}

/// Scores a cluster (members as document ids, in insertion order) against
/// the majority anomalous class among its members.
pub fn eval_cluster<L: Ord + Clone>(members: &[usize], labels: &[L], anomalous: &BTreeSet<L>) -> Result<ClusterEval<L>> {
    let mut tally: BTreeMap<&L, usize> = BTreeMap::new();
    for &id in members {
        let l = label_of(labels, id)?;
        if anomalous.contains(l) {
            *tally.entry(l).or_insert(0) += 1;
        }
    }
    let majority = tally.iter().fold(None, |best: Option<(&L, usize)>, (&l, &c)| match best {
        Some((_, bc)) if bc >= c => best,
        _ => Some((l, c)),
    });
    let Some((class, _)) = majority else {
        return Ok(ClusterEval { majority: None, hits: 0, recall: 0.0, precision: 0.0, f1: 0.0, auc: 0.0 });
    };
    let total = labels.iter().filter(|l| *l == class).count();
    let flags: Vec<bool> = members.iter().map(|&id| labels[id] == *class).collect();
    let (hits, recall, precision, auc) = ranked_metrics(&flags, total);
    Ok(ClusterEval { majority: Some(class.clone()), hits, recall, precision, f1: f1(recall, precision), auc })
}

/// Hits, recall, precision and trace AUC of a ranked selection.
fn ranked_metrics(flags: &[bool], total: usize) -> (usize, f64, f64, f64) {
    if flags.is_empty() || total == 0 {
        return (0, 0.0, 0.0, 0.0);
    }
    let mut hits = 0;
    let mut trace = Vec::with_capacity(flags.len());
    for (k, &f) in flags.iter().enumerate() {
        hits += usize::from(f);
        trace.push((hits as f64 / total as f64, hits as f64 / (k + 1) as f64));
    }
    let (r, p) = *trace.last().expect("non-empty");
    (hits, r, p, trace_auc(&trace))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointEval {
    pub hits: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub auc: f64,
}

/// Scores a ranked list of documents flagged as individual anomalies;
/// any anomalous label counts as a hit.
pub fn eval_points<L: Ord>(ranked: &[usize], labels: &[L], anomalous: &BTreeSet<L>) -> Result<PointEval> {
    let flags = ranked.iter().map(|&id| Ok(anomalous.contains(label_of(labels, id)?))).collect::<Result<Vec<_>>>()?;
    let total = labels.iter().filter(|l| anomalous.contains(*l)).count();
    let (hits, recall, precision, auc) = ranked_metrics(&flags, total);
    Ok(PointEval { hits, recall, precision, f1: f1(recall, precision), auc })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointScore {
    pub doc: usize,
    /// Higher means more anomalous.
    pub score: f64,
    /// 1-based position after sorting by score (ties by document id).
    pub rank: usize,
}

fn ranked(docs: &[Document], scores: Vec<f64>) -> Vec<PointScore> {
    let mut out: Vec<PointScore> =
        docs.iter().zip(scores).map(|(d, score)| PointScore { doc: d.id(), score, rank: 0 }).collect();
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by(|&a, &b| out[b].score.total_cmp(&out[a].score).then(out[a].doc.cmp(&out[b].doc)));
    for (r, &i) in order.iter().enumerate() {
        out[i].rank = r + 1;
    }
    out
}

/// Likelihood baseline: `−l₀(d) / L_d`.
pub fn lb_scores(loglik: &[f64], test: &Corpus) -> Result<Vec<PointScore>> {
    if loglik.len() != test.len() {
        return Err(Error::DimensionMismatch { what: "log-likelihoods", expected: test.len(), found: loglik.len() });
    }
    let scores = loglik.iter().zip(test.docs()).map(|(l, d)| -l / d.len() as f64).collect();
    Ok(ranked(test.docs(), scores))
}

/// Cosine similarities of `doc` to every document of `index`.
struct CosineIndex {
    postings: Vec<Vec<(u32, f64)>>,
    len: usize,
}

impl CosineIndex {
    fn new(docs: &[Document], n: usize) -> Self {
        let mut postings = vec![Vec::new(); n];
        for (i, d) in docs.iter().enumerate() {
            let norm = norm(d);
            for &(w, c) in d.terms() {
                postings[w as usize].push((i as u32, c as f64 / norm));
            }
        }
        Self { postings, len: docs.len() }
    }

    fn similarities(&self, doc: &Document) -> Vec<f64> {
        let norm = norm(doc);
        let mut sims = vec![0.0; self.len];
        for &(w, c) in doc.terms() {
            let x = c as f64 / norm;
            for &(i, y) in self.postings.get(w as usize).map(Vec::as_slice).unwrap_or(&[]) {
                sims[i as usize] += x * y;
            }
        }
        sims
    }
}

fn norm(d: &Document) -> f64 {
    sqrt(d.terms().iter().map(|&(_, c)| (c as f64) * (c as f64)).sum())
}

/// `K`-th smallest of `1 − sims`, optionally skipping one position.
fn kth_distance(sims: &[f64], k: usize, skip: Option<usize>) -> f64 {
    let mut d: Vec<f64> =
        sims.iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(_, s)| (1.0 - s).max(0.0)).collect();
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    *kth
}

/// Nearest-neighbour baseline p-values: `#{d ∈ train : R_K(t) < R_K(d)} / D`,
/// where `R_K` is the distance (`1 − cosine`) to the `K`-th nearest training
/// document. Lower is more anomalous.
pub fn nn_pvalues(train: &Corpus, test: &Corpus, k: usize) -> Result<Vec<f64>> {
    let d = train.len();
    if k == 0 || k >= d {
        return Err(Error::InvalidConfig("neighbour count must satisfy 1 <= K < training size".into()));
    }
    let index = CosineIndex::new(train.docs(), train.vocab_size().max(test.vocab_size()));
    let mut radii = par::map(d, |i| kth_distance(&index.similarities(&train.docs()[i]), k, Some(i)));
    radii.sort_by(|a, b| a.total_cmp(b));
    Ok(par::map(test.len(), |t| {
        let r = kth_distance(&index.similarities(&test.docs()[t]), k, None);
        let above = radii.len() - radii.partition_point(|&x| x <= r);
        above as f64 / d as f64
    }))
}

/// Nearest-neighbour baseline as point scores, `1 − p`.
pub fn nn_scores(train: &Corpus, test: &Corpus, k: usize) -> Result<Vec<PointScore>> {
    let p = nn_pvalues(train, test, k)?;
    Ok(ranked(test.docs(), p.into_iter().map(|p| 1.0 - p).collect()))
}

/// Ids of the `n0` highest-scoring documents, best first.
pub fn topk_pointset(scores: &[PointScore], n0: usize) -> Vec<usize> {
    let mut order: Vec<&PointScore> = scores.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc)));
    order.into_iter().take(n0).map(|s| s.doc).collect()
}
