use alloc::vec::Vec;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::par;
use crate::ptm::fit::{MixtureFit, Switches};
use crate::ptm::model::{DocMix, PtmModel, Topic};
use crate::ptm::objective::Penalty;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferOpts {
    /// Per-document relative BIC tolerance.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for InferOpts {
    fn default() -> Self {
        Self { tol: 1e-6, max_iters: 200 }
    }
}

/// Proportions, presence switches and log-likelihoods of held-out documents
/// under frozen topics.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub mixes: Vec<DocMix>,
    /// `ln p(d | fitted model)` per document, nats.
    pub loglik: Vec<f64>,
    /// Documents whose fit hit the iteration limit.
    pub unconverged: usize,
}

/// Fits `θ` and `v` of each document independently, keeping every topic
/// frozen, by minimizing the inference BIC.
pub fn infer(model: &PtmModel, docs: &Corpus, opts: InferOpts) -> Result<Inference> {
    if docs.vocab_size() != model.vocab_size() {
        return Err(Error::DimensionMismatch {
            what: "vocabulary size",
            expected: model.vocab_size(),
            found: docs.vocab_size(),
        });
    }
    let topics: Vec<&Topic> = model.topics.iter().collect();
    let m = topics.len();
    let fits = par::map(docs.len(), |i| {
        let doc = &docs.docs()[i];
        fit_document(&model.shared, &topics, doc, DocMix::uniform(m), None, Some(Switches::V), opts)
    });
    let mut out = Inference { mixes: Vec::with_capacity(docs.len()), loglik: Vec::with_capacity(docs.len()), unconverged: 0 };
    for f in fits {
        let f = f?;
        out.mixes.push(f.mix);
        out.loglik.push(f.loglik);
        out.unconverged += usize::from(!f.converged);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub(crate) struct DocFit {
    pub mix: DocMix,
    pub loglik: f64,
    pub converged: bool,
}

/// Fits one document's proportions (and optionally presence switches) under
/// frozen topics, starting from `init`.
pub(crate) fn fit_document(
    shared: &[f64],
    topics: &[&Topic],
    doc: &Document,
    init: DocMix,
    pinned: Option<usize>,
    switches: Option<Switches>,
    opts: InferOpts,
) -> Result<DocFit> {
    let mut fit = MixtureFit::new(
        alloc::vec![doc],
        shared,
        topics.to_vec(),
        Vec::new(),
        alloc::vec![init],
        pinned,
        Penalty::inference(topics.len()),
    )?;
    let summary = fit.run(switches, opts.tol, opts.max_iters);
    fit.refresh();
    let loglik = fit.doc_log_likelihood(0);
    let (mut mixes, _, _) = fit.into_parts();
    Ok(DocFit { mix: mixes.pop().expect("one document"), loglik, converged: summary.converged })
}
