//! Vocabularies and sparse bag-of-words corpora.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub type WordId = u32;

/// Ordered list of unique terms; a term's id is its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: BTreeMap<String, WordId>,
}

impl Vocabulary {
    /// Builds a vocabulary from terms in file order. Duplicates are reported
    /// with their 1-based line number.
    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list = Vec::new();
        let mut index = BTreeMap::new();
        for (i, term) in terms.into_iter().enumerate() {
            let term = term.into();
            if index.contains_key(&term) {
                return Err(Error::DuplicateTerm { line: i + 1, term });
            }
            index.insert(term.clone(), i as WordId);
            list.push(term);
        }
        if list.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        Ok(Self { terms: list, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<WordId> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: WordId) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// A document as sorted `(word, count)` pairs with positive counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: usize,
    terms: Vec<(WordId, u32)>,
    len: usize,
}

impl Document {
    /// Builds a document from `(word, count)` pairs in any order.
    pub fn new<I>(id: usize, counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (WordId, u32)>,
    {
        let mut terms: Vec<(WordId, u32)> = counts.into_iter().collect();
        terms.sort_unstable_by_key(|&(w, _)| w);
        let mut len = 0usize;
        for (i, &(w, c)) in terms.iter().enumerate() {
            if c == 0 {
                return Err(Error::ZeroCount { doc: id, word: w });
            }
            if i > 0 && terms[i - 1].0 == w {
                return Err(Error::RepeatedWord { doc: id, word: w });
            }
            len += c as usize;
        }
        if len == 0 {
            return Err(Error::EmptyDocument { doc: id });
        }
        Ok(Self { id, terms, len })
    }

    /// Builds a document from a token sequence.
    pub fn from_tokens(id: usize, tokens: &[WordId]) -> Result<Self> {
        let mut counts: BTreeMap<WordId, u32> = BTreeMap::new();
        for &w in tokens {
            *counts.entry(w).or_insert(0) += 1;
        }
        Self::new(id, counts)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    /// Sorted `(word, count)` pairs.
    pub fn terms(&self) -> &[(WordId, u32)] {
        &self.terms
    }

    /// Total token count `L_d`.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: empty documents are rejected at construction.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn distinct(&self) -> usize {
        self.terms.len()
    }

    pub fn count(&self, word: WordId) -> u32 {
        self.terms
            .binary_search_by_key(&word, |&(w, _)| w)
            .map(|i| self.terms[i].1)
            .unwrap_or(0)
    }

    pub fn with_id(&self, id: usize) -> Self {
        Self { id, ..self.clone() }
    }
}

/// Documents over a vocabulary of `vocab_size` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Document>,
    vocab_size: usize,
}

impl Corpus {
    /// Validates word ranges and id uniqueness. An empty document list is
    /// allowed here; training entry points reject it.
    pub fn new(docs: Vec<Document>, vocab_size: usize) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for d in &docs {
            if !seen.insert(d.id) {
                return Err(Error::DuplicateDocId(d.id));
            }
            if let Some(&(w, _)) = d.terms.last() {
                if w as usize >= vocab_size {
                    return Err(Error::WordOutOfRange { doc: d.id, word: w as u64, vocab_size });
                }
            }
        }
        Ok(Self { docs, vocab_size })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Document::len).sum()
    }

    /// Position of the document with the given id.
    pub fn position(&self, id: usize) -> Option<usize> {
        self.docs.iter().position(|d| d.id == id)
    }

    /// Documents at the given positions, ids preserved.
    pub fn subset(&self, positions: &[usize]) -> Self {
        Self {
            docs: positions.iter().map(|&p| self.docs[p].clone()).collect(),
            vocab_size: self.vocab_size,
        }
    }

    pub fn into_docs(self) -> Vec<Document> {
        self.docs
    }

    pub(crate) fn ensure_nonempty(&self) -> Result<()> {
        if self.docs.is_empty() {
            Err(Error::EmptyCorpus)
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_assigns_ids_in_order() {
        let v = Vocabulary::from_terms(["apple", "ball"]).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.id("apple"), Some(0));
        assert_eq!(v.id("ball"), Some(1));
    }

    #[test]
    fn vocabulary_rejects_duplicates_and_empty() {
        let err = Vocabulary::from_terms(["apple", "apple"]).unwrap_err();
        assert_eq!(err, Error::DuplicateTerm { line: 2, term: "apple".into() });
        assert_eq!(Vocabulary::from_terms(Vec::<String>::new()).unwrap_err(), Error::EmptyVocabulary);
    }

    #[test]
    fn document_length_is_count_sum() {
        let d = Document::new(0, [(1, 3), (0, 1)]).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.terms(), &[(0, 1), (1, 3)]);
        assert_eq!(d.count(1), 3);
        assert_eq!(d.count(2), 0);
    }

    #[test]
    fn document_rejects_bad_counts() {
        assert!(matches!(Document::new(0, [(0, 0)]), Err(Error::ZeroCount { .. })));
        assert!(matches!(Document::new(0, [(2, 1), (2, 1)]), Err(Error::RepeatedWord { .. })));
        assert!(matches!(Document::new(0, []), Err(Error::EmptyDocument { .. })));
    }

    #[test]
    fn corpus_checks_range_and_ids() {
        let d = Document::new(0, [(5, 2)]).unwrap();
        assert!(matches!(Corpus::new(vec![d], 3), Err(Error::WordOutOfRange { .. })));
        let a = Document::new(1, [(0, 1)]).unwrap();
        assert_eq!(Corpus::new(vec![a.clone(), a], 3).unwrap_err(), Error::DuplicateDocId(1));
    }
}
