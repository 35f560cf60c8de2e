//! Detection reports: JSON for machines, aligned text for people.

use std::fmt::Write as _;
use std::path::Path;

use atd_core::atd::{ClusterReport, Detection};
use atd_core::{Corpus, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub clusters: Vec<ClusterRecord>,
    /// Null fit of every test document, in file order.
    pub null: Vec<NullRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullRecord {
    pub doc: usize,
    pub len: usize,
    pub l0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub index: usize,
    pub significant: bool,
    pub p_value: f64,
    pub score: f64,
    pub members: Vec<MemberRecord>,
    pub rejected: Vec<RejectionRecord>,
    pub salient: Vec<SalientRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub doc: usize,
    pub l0: f64,
    pub l1: f64,
    pub delta_l: Option<f64>,
    pub theta_hat: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub doc: usize,
    pub delta_l: f64,
    pub theta_hat: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalientRecord {
    pub word: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
    pub beta: f64,
    pub occurring: bool,
}

impl ClusterRecord {
    fn new(c: &ClusterReport, vocab: Option<&Vocabulary>) -> Self {
        Self {
            index: c.index,
            significant: c.significant,
            p_value: c.p_value,
            score: c.score,
            members: c
                .members
                .iter()
                .map(|m| MemberRecord { doc: m.doc, l0: m.l0, l1: m.l1, delta_l: m.delta_l, theta_hat: m.theta_hat, t: m.t })
                .collect(),
            rejected: c
                .rejected
                .iter()
                .map(|r| RejectionRecord { doc: r.doc, delta_l: r.delta_l, theta_hat: r.theta_hat, t: r.t })
                .collect(),
            salient: c
                .salient
                .iter()
                .map(|s| SalientRecord {
                    word: s.word,
                    term: vocab.and_then(|v| v.term(s.word)).map(str::to_string),
                    beta: s.beta,
                    occurring: s.occurring,
                })
                .collect(),
        }
    }

    pub fn member_ids(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.doc).collect()
    }

    /// `Σ (l₁ − l₀)` over members.
    pub fn recomputed_score(&self) -> f64 {
        self.members.iter().map(|m| m.l1 - m.l0).sum()
    }
}

impl Report {
    pub fn new(detection: &Detection, test: &Corpus, vocab: Option<&Vocabulary>) -> Self {
        Self {
            clusters: detection.clusters.iter().map(|c| ClusterRecord::new(c, vocab)).collect(),
            null: test
                .docs()
                .iter()
                .zip(&detection.null.loglik)
                .map(|(d, &l0)| NullRecord { doc: d.id(), len: d.len(), l0 })
                .collect(),
        }
    }

    pub fn detected(&self) -> impl Iterator<Item = &ClusterRecord> {
        self.clusters.iter().filter(|c| c.significant)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json { path: path.into(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&io::read_text(path)?, path)
    }

    /// Human-readable summary with the `top` most probable salient words of
    /// each cluster.
    pub fn to_text(&self, top: usize) -> String {
        let mut s = String::new();
        if self.clusters.is_empty() {
            s.push_str("no candidate clusters\n");
        }
        for c in &self.clusters {
            let verdict = if c.significant { "significant" } else { "not significant" };
            writeln!(
                s,
                "cluster {} size={} score={:.4} p={:.4} {verdict}",
                c.index + 1,
                c.members.len(),
                c.score,
                c.p_value
            )
            .unwrap();
            let ids: Vec<String> = c.members.iter().map(|m| m.doc.to_string()).collect();
            writeln!(s, "  members: {}", ids.join(" ")).unwrap();
            if !c.rejected.is_empty() {
                let ids: Vec<String> = c.rejected.iter().map(|r| r.doc.to_string()).collect();
                writeln!(s, "  rejected: {}", ids.join(" ")).unwrap();
            }
            let words: Vec<String> = c
                .salient
                .iter()
                .take(top)
                .map(|w| match &w.term {
                    Some(t) => format!("{t}({:.4})", w.beta),
                    None => format!("{}({:.4})", w.word, w.beta),
                })
                .collect();
            writeln!(s, "  salient: {}", words.join(" ")).unwrap();
        }
        s
    }
}
