//! Text formats: vocabularies, sparse bag-of-words corpora, models, labels
//! and ground truth.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use atd_core::ptm::DocMix;
use atd_core::synth::GroundTruth;
use atd_core::{Corpus, Document, PtmModel, Topic, Vocabulary, WordId};

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Lines of a LF-terminated file; a missing final LF is tolerated.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.strip_suffix('\n').unwrap_or(text).split('\n').enumerate().map(|(i, l)| (i + 1, l)).filter(move |_| !text.is_empty())
}

pub fn parse_vocabulary(text: &str, path: &Path) -> Result<Vocabulary> {
    let terms: Vec<&str> = lines(text).map(|(_, l)| l.strip_suffix('\r').unwrap_or(l)).collect();
    if let Some((i, _)) = terms.iter().enumerate().find(|(_, t)| t.is_empty()) {
        return Err(Error::parse(path, i + 1, "empty term"));
    }
    Vocabulary::from_terms(terms).map_err(|e| match e {
        atd_core::Error::DuplicateTerm { line, term } => Error::parse(path, line, format!("duplicate term {term:?}")),
        atd_core::Error::EmptyVocabulary => Error::parse(path, 1, "vocabulary is empty"),
        e => e.into(),
    })
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    parse_vocabulary(&read_text(path)?, path)
}

pub fn format_vocabulary(vocab: &Vocabulary) -> String {
    vocab.terms().iter().fold(String::new(), |mut s, t| {
        s.push_str(t);
        s.push('\n');
        s
    })
}

fn parse_pair<A: std::str::FromStr, B: std::str::FromStr>(tok: &str) -> Option<(A, B)> {
    let (a, b) = tok.split_once(':')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

/// One document per line, `K id:count ...`. Document ids are line positions.
pub fn parse_corpus(text: &str, vocab_size: usize, path: &Path) -> Result<Corpus> {
    let mut docs = Vec::new();
    for (line, l) in lines(text) {
        let err = |msg: String| Error::parse(path, line, msg);
        let mut toks = l.split(' ');
        let k: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err("missing term count".into()))?;
        let mut counts = Vec::with_capacity(k);
        for tok in toks {
            let (w, c): (u64, i64) = parse_pair(tok).ok_or_else(|| err(format!("malformed pair {tok:?}")))?;
            if w >= vocab_size as u64 {
                return Err(err(format!("word id {w} out of range for {vocab_size} words")));
            }
            if c <= 0 || c > u32::MAX as i64 {
                return Err(err(format!("count {c} for word {w} is not a positive 32-bit integer")));
            }
            counts.push((w as WordId, c as u32));
        }
        if counts.len() != k {
            return Err(err(format!("declared {k} terms, found {}", counts.len())));
        }
        let doc = Document::new(docs.len(), counts).map_err(|e| err(e.to_string()))?;
        docs.push(doc);
    }
    Ok(Corpus::new(docs, vocab_size)?)
}

pub fn load_corpus(path: &Path, vocab_size: usize) -> Result<Corpus> {
    parse_corpus(&read_text(path)?, vocab_size, path)
}

pub fn format_corpus(corpus: &Corpus) -> String {
    let mut s = String::new();
    for d in corpus.docs() {
        write!(s, "{}", d.distinct()).unwrap();
        for &(w, c) in d.terms() {
            write!(s, " {w}:{c}").unwrap();
        }
        s.push('\n');
    }
    s
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// ```text
/// PTM v1 M N
/// beta0: β₀₁ … β₀N
/// topic j N_j n:β …
/// doc d M_d j:θ …
/// ```
pub fn format_model(model: &PtmModel) -> String {
    let mut s = String::new();
    writeln!(s, "PTM v1 {} {}", model.n_topics(), model.vocab_size()).unwrap();
    s.push_str("beta0:");
    for &b in model.shared() {
        write!(s, " {}", num(b)).unwrap();
    }
    s.push('\n');
    for (j, t) in model.topics().iter().enumerate() {
        write!(s, "topic {j} {}", t.n_specific()).unwrap();
        for (n, b) in t.specific_words() {
            write!(s, " {n}:{}", num(b)).unwrap();
        }
        s.push('\n');
    }
    for (d, mix) in model.doc_mixes().iter().enumerate() {
        write!(s, "doc {d} {}", mix.n_present()).unwrap();
        for (j, &t) in mix.theta().iter().enumerate() {
            if mix.is_present(j) {
                write!(s, " {j}:{}", num(t)).unwrap();
            }
        }
        s.push('\n');
    }
    s
}

pub fn parse_model(text: &str, path: &Path) -> Result<PtmModel> {
    let mut it = lines(text);
    let mut next = |what: &str| it.next().ok_or_else(|| Error::parse(path, 0, format!("unexpected end of file, expected {what}")));

    let (line, header) = next("header")?;
    let h: Vec<&str> = header.split(' ').collect();
    let (m, n) = match h.as_slice() {
        ["PTM", "v1", m, n] => match (m.parse::<usize>(), n.parse::<usize>()) {
            (Ok(m), Ok(n)) => (m, n),
            _ => return Err(Error::parse(path, line, "malformed header")),
        },
        _ => return Err(Error::parse(path, line, "expected header `PTM v1 M N`")),
    };

    let (line, l) = next("shared distribution")?;
    let rest = l.strip_prefix("beta0:").ok_or_else(|| Error::parse(path, line, "expected `beta0:`"))?;
    let shared = rest
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::parse(path, line, format!("malformed probability {t:?}"))))
        .collect::<Result<Vec<f64>>>()?;
    if shared.len() != n {
        return Err(Error::parse(path, line, format!("expected {n} shared probabilities, found {}", shared.len())));
    }

    let record = |line: usize, l: &str, tag: &str, index: usize| -> Result<Vec<(usize, f64)>> {
        let err = |msg: String| Error::parse(path, line, msg);
        let mut toks = l.split(' ');
        if toks.next() != Some(tag) {
            return Err(err(format!("expected `{tag} {index} ...`")));
        }
        if toks.next().and_then(|t| t.parse::<usize>().ok()) != Some(index) {
            return Err(err(format!("expected {tag} index {index}")));
        }
        let k: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err("missing pair count".into()))?;
        let pairs = toks
            .map(|t| parse_pair::<usize, f64>(t).ok_or_else(|| err(format!("malformed pair {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if pairs.len() != k {
            return Err(err(format!("declared {k} pairs, found {}", pairs.len())));
        }
        Ok(pairs)
    };

    let mut topics = Vec::with_capacity(m);
    for j in 0..m {
        let (line, l) = next("topic")?;
        let pairs = record(line, l, "topic", j)?;
        let words: Vec<(WordId, f64)> = pairs.into_iter().map(|(w, b)| (w as WordId, b)).collect();
        topics.push(Topic::from_specific(&shared, &words).map_err(|e| Error::parse(path, line, e.to_string()))?);
    }
    let mut docs = Vec::new();
    for (line, l) in it {
        let pairs = record(line, l, "doc", docs.len())?;
        docs.push(DocMix::from_pairs(m, &pairs).map_err(|e| Error::parse(path, line, e.to_string()))?);
    }
    Ok(PtmModel::from_parts(shared, topics, docs)?)
}

pub fn load_model(path: &Path) -> Result<PtmModel> {
    parse_model(&read_text(path)?, path)
}

/// One label token per line.
pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<String>> {
    lines(text)
        .map(|(line, l)| {
            let l = l.trim();
            if l.is_empty() || l.contains(char::is_whitespace) {
                Err(Error::parse(path, line, "expected one label token"))
            } else {
                Ok(l.to_string())
            }
        })
        .collect()
}

pub fn load_labels(path: &Path) -> Result<Vec<String>> {
    parse_labels(&read_text(path)?, path)
}

pub fn format_labels<S: AsRef<str>>(labels: &[S]) -> String {
    labels.iter().fold(String::new(), |mut s, l| {
        s.push_str(l.as_ref());
        s.push('\n');
        s
    })
}

/// Per topic: `label w₁ w₂ …` with the topic's salient word ids.
pub fn format_truth(truth: &GroundTruth, label: impl Fn(usize) -> String) -> String {
    let mut s = String::new();
    for (k, words) in truth.salient.iter().enumerate() {
        s.push_str(&label(k));
        for w in words {
            write!(s, " {w}").unwrap();
        }
        s.push('\n');
    }
    s
}

/// Inverse of [`format_truth`]: `(label, salient words)` per line.
pub fn parse_truth(text: &str, path: &Path) -> Result<Vec<(String, Vec<WordId>)>> {
    lines(text)
        .map(|(line, l)| {
            let mut toks = l.split(' ');
            let label = toks.next().filter(|t| !t.is_empty()).ok_or_else(|| Error::parse(path, line, "missing label"))?;
            let words = toks
                .map(|t| t.parse().map_err(|_| Error::parse(path, line, format!("malformed word id {t:?}"))))
                .collect::<Result<Vec<WordId>>>()?;
            Ok((label.to_string(), words))
        })
        .collect()
}
