use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;

use super::{CorpusError, Pipeline, RawDocument, Result};
use crate::sparse::{CscMatrix, SparseColumn, SparseVector};

/// Bijection between processed terms and row indices `0..m`.
///
/// Indices follow lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    terms: Vec<String>,
}

impl Vocabulary {
    pub fn from_terms(terms: impl IntoIterator<Item = String>) -> Self {
        let terms: Vec<String> = terms.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { index, terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Counts in-vocabulary tokens; returns the sparse counts and the number
    /// of out-of-vocabulary tokens skipped.
    pub fn count<S: AsRef<str>>(&self, tokens: &[S]) -> (SparseVector<u32>, usize) {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        let mut dropped = 0;
        for tok in tokens {
            match self.index_of(tok.as_ref()) {
                Some(j) => *counts.entry(j).or_default() += 1,
                None => dropped += 1,
            }
        }
        let (indices, values) = counts.into_iter().unzip();
        (SparseVector::from_sorted(self.len(), indices, values), dropped)
    }
}

/// Raw term frequencies, terms × documents. Stored entries are all positive.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    counts: CscMatrix<u32>,
    doc_ids: Vec<u32>,
    dropped: Vec<u32>,
}

impl TermDocMatrix {
    /// Builds from per-document count columns. Every column must have a positive entry.
    ///
    /// # Panics
    /// If lengths disagree or a column is empty.
    pub fn from_columns(nterms: usize, doc_ids: Vec<u32>, columns: Vec<SparseVector<u32>>) -> Self {
        assert_eq!(doc_ids.len(), columns.len());
        assert!(
            columns.iter().all(|c| c.values().iter().any(|&v| v > 0) && c.values().iter().all(|&v| v > 0)),
            "term-document columns must be non-empty with positive entries"
        );
        Self { counts: CscMatrix::from_columns(nterms, columns), doc_ids, dropped: Vec::new() }
    }

    /// Dense constructor for small instances: `rows[j][i]` is the count of term j in document i.
    /// Documents get ids `1..=n`.
    pub fn from_dense_rows(rows: &[&[u32]]) -> Self {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        let columns =
            (0..n).map(|i| SparseVector::from_dense(&rows.iter().map(|r| r[i]).collect::<Vec<_>>())).collect();
        Self::from_columns(m, (1..=n as u32).collect(), columns)
    }

    pub fn nterms(&self) -> usize {
        self.counts.nrows()
    }

    pub fn ndocs(&self) -> usize {
        self.counts.ncols()
    }

    pub fn counts(&self) -> &CscMatrix<u32> {
        &self.counts
    }

    pub fn column(&self, i: usize) -> SparseColumn<'_, u32> {
        self.counts.column(i)
    }

    /// Original collection id of column `i`.
    pub fn doc_id(&self, i: usize) -> u32 {
        self.doc_ids[i]
    }

    pub fn doc_ids(&self) -> &[u32] {
        &self.doc_ids
    }

    /// Ids of documents left out because preprocessing emptied them.
    pub fn dropped(&self) -> &[u32] {
        &self.dropped
    }

    pub fn to_f64(&self) -> CscMatrix<f64> {
        self.counts.map_columns(|c| c.values.iter().map(|&v| f64::from(v)).collect())
    }
}

/// Indexes `docs` with `pipeline`. Documents with no surviving tokens are
/// dropped (logged, and listed in [`TermDocMatrix::dropped`]).
pub fn build_matrix(docs: &[RawDocument], pipeline: &Pipeline) -> Result<(Vocabulary, TermDocMatrix)> {
    if docs.is_empty() {
        return Err(CorpusError::NoDocuments);
    }
    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for doc in docs {
        if !seen.insert(doc.id) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        let tokens = pipeline.tokens(doc);
        if tokens.is_empty() {
            dropped.push(doc.id);
        } else {
            kept.push((doc.id, tokens));
        }
    }
    if kept.is_empty() {
        return Err(CorpusError::AllDocumentsEmpty);
    }
    if !dropped.is_empty() {
        warn!("dropped {} empty document(s): {:?}", dropped.len(), dropped);
    }
    let vocab = Vocabulary::from_terms(kept.iter().flat_map(|(_, t)| t.iter().cloned()));
    let (doc_ids, columns) = kept.iter().map(|(id, tokens)| (*id, vocab.count(tokens).0)).unzip();
    let mut matrix = TermDocMatrix::from_columns(vocab.len(), doc_ids, columns);
    matrix.dropped = dropped;
    Ok((vocab, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_smart_file, StopWords};

    fn plain() -> Pipeline {
        Pipeline { stopwords: StopWords::default(), stem: false, sections: vec![".W".into()] }
    }

    #[test]
    fn counts_by_inspection() {
        let docs = parse_smart_file(".I 1\n.W\ncat cat dog\n.I 2\n.W\ndog\n").unwrap();
        let (vocab, td) = build_matrix(&docs, &plain()).unwrap();
        assert_eq!(vocab.terms(), ["cat", "dog"]);
        assert_eq!((td.nterms(), td.ndocs()), (2, 2));
        assert_eq!(td.to_f64().to_dense(), nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]));
    }

    #[test]
    fn empty_documents_are_dropped() {
        let docs = parse_smart_file(".I 1\n.W\nthe\n.I 2\n.W\nheart\n.I 3\n.T\nonly title\n").unwrap();
        let p = Pipeline { sections: vec![".W".into()], ..Pipeline::default() };
        let (_, td) = build_matrix(&docs, &p).unwrap();
        assert_eq!(td.doc_ids(), [2]);
        assert_eq!(td.dropped(), [1, 3]);
    }

    #[test]
    fn all_empty_fails() {
        let docs = parse_smart_file(".I 1\n.W\nthe of\n").unwrap();
        assert!(matches!(build_matrix(&docs, &Pipeline::default()), Err(CorpusError::AllDocumentsEmpty)));
        assert!(matches!(build_matrix(&[], &Pipeline::default()), Err(CorpusError::NoDocuments)));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let docs = parse_smart_file(".I 1\n.W\na b\n.I 1\n.W\nc\n").unwrap();
        assert!(matches!(build_matrix(&docs, &plain()), Err(CorpusError::DuplicateId(1))));
    }

    #[test]
    fn query_counting_drops_unknown_terms() {
        let vocab = Vocabulary::from_terms(["b".to_string(), "a".to_string()]);
        let (counts, dropped) = vocab.count(&["a", "z", "a", "b"]);
        assert_eq!(counts.indices(), [0, 1]);
        assert_eq!(counts.values(), [2, 1]);
        assert_eq!(dropped, 1);
    }
}
