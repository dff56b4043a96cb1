//! Query folding and ranking: cosine over raw tf vectors, and cosine inside
//! an LSA or QLSA latent space.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::DVector;

use crate::corpus::{TermDocMatrix, Vocabulary};
use crate::sparse::{SparseColumn, SparseVector};
use crate::topics::{doc_view, LatentSpace, Method, TopicError};

/// A query as term counts over the document vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector {
    pub id: u32,
    pub counts: SparseVector<u32>,
    /// Query tokens not in the vocabulary.
    pub dropped_terms: usize,
}

impl QueryVector {
    pub fn from_tokens<S: AsRef<str>>(id: u32, vocab: &Vocabulary, tokens: &[S]) -> Self {
        let (counts, dropped_terms) = vocab.count(tokens);
        Self { id, counts, dropped_terms }
    }

    pub fn scaled(&self, factor: u32) -> Self {
        Self { counts: self.counts.map(|c| c * factor), ..self.clone() }
    }
}

/// Documents for one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: u32,
    /// `(doc id, score)`; scores non-increasing, ties by ascending column index.
    pub entries: Vec<(u32, f64)>,
}

impl RankedList {
    pub fn doc_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}

/// Ranked lists for a set of queries under one method.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedRun {
    pub tag: String,
    pub lists: BTreeMap<u32, RankedList>,
}

impl RankedRun {
    pub fn new(tag: impl Into<String>) -> Self {
        Self { tag: tag.into(), lists: BTreeMap::new() }
    }

    pub fn insert(&mut self, list: RankedList) {
        self.lists.insert(list.query_id, list);
    }

    /// One line per ranked document: `query_id doc_id rank score method_tag`,
    /// rank starting at 1.
    pub fn write_trec<W: Write>(&self, mut w: W) -> io::Result<()> {
        for list in self.lists.values() {
            for (rank, (doc, score)) in list.entries.iter().enumerate() {
                writeln!(w, "{} {} {} {:.6} {}", list.query_id, doc, rank + 1, score, self.tag)?;
            }
        }
        Ok(())
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Counts divided by their greatest common divisor. Cosine scores do not
/// change, and integer multiples of one vector become bit-identical.
fn reduced(counts: SparseColumn<'_, u32>) -> SparseVector<u32> {
    let g = counts.values.iter().fold(0, |g, &c| gcd(g, c)).max(1);
    SparseVector::from_sorted(counts.dim, counts.indices.to_vec(), counts.values.iter().map(|c| c / g).collect())
}

fn ranked(query_id: u32, doc_ids: &[u32], scores: Vec<f64>) -> RankedList {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    RankedList { query_id, entries: order.into_iter().map(|i| (doc_ids[i], scores[i])).collect() }
}

/// Cosine between raw tf vectors. Zero-norm cases score 0.
pub fn rank_cosine(td: &TermDocMatrix, q: &QueryVector) -> RankedList {
    let mut dense = vec![0.0; td.nterms()];
    for (j, c) in reduced(q.counts.view()).view().iter() {
        dense[j] = f64::from(c);
    }
    let qnorm = dense.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scores = td
        .counts()
        .columns()
        .map(|col| {
            let (dot, sq) = col.iter().fold((0.0, 0.0), |(d, s), (j, c)| {
                let c = f64::from(c);
                (d + c * dense[j], s + c * c)
            });
            let denom = qnorm * sq.sqrt();
            if denom > 0.0 {
                dot / denom
            } else {
                0.0
            }
        })
        .collect();
    ranked(q.id, td.doc_ids(), scores)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FoldOptions {
    /// LSA only: divide latent coordinates of queries and documents by the
    /// singular values.
    pub lsa_sigma_weighting: bool,
}

/// A latent space together with the coordinates of every document in it.
#[derive(Debug, Clone)]
pub struct LatentIndex {
    space: LatentSpace,
    /// `None` for documents with no projection; they always score 0.
    docs: Vec<Option<(DVector<f64>, f64)>>,
    doc_ids: Vec<u32>,
    options: FoldOptions,
}

impl LatentIndex {
    pub fn build(space: LatentSpace, td: &TermDocMatrix, options: FoldOptions) -> Result<Self, TopicError> {
        let mut docs = Vec::with_capacity(td.ndocs());
        for i in 0..td.ndocs() {
            docs.push(fold(&space, td.column(i), options)?);
        }
        Ok(Self { space, docs, doc_ids: td.doc_ids().to_vec(), options })
    }

    pub fn space(&self) -> &LatentSpace {
        &self.space
    }

    /// Ids of documents with zero projection on the space.
    pub fn flagged(&self) -> Vec<u32> {
        self.docs.iter().zip(&self.doc_ids).filter(|(d, _)| d.is_none()).map(|(_, &id)| id).collect()
    }
}

/// Latent coordinates and their norm, or `None` when the projection is zero.
fn fold(
    space: &LatentSpace,
    counts: SparseColumn<'_, u32>,
    options: FoldOptions,
) -> Result<Option<(DVector<f64>, f64)>, TopicError> {
    if counts.nnz() == 0 {
        return Ok(None);
    }
    let counts = reduced(counts);
    let mut coords = match doc_view(space, counts.view()) {
        Ok(view) => view.coords,
        Err(TopicError::Unrepresentable) => return Ok(None),
        Err(e) => return Err(e),
    };
    if options.lsa_sigma_weighting && space.method() == Method::Lsa {
        coords.component_div_assign(space.singular_values());
    }
    let norm = coords.norm();
    Ok(Some((coords, norm)))
}

/// Cosine between the folded query and every document inside the space.
///
/// QLSA folds the query's wave function, LSA its raw counts. A query with no
/// in-vocabulary term, or no projection, scores every document 0.
pub fn rank_latent(index: &LatentIndex, q: &QueryVector) -> Result<RankedList, TopicError> {
    let folded = fold(&index.space, q.counts.view(), index.options)?;
    let scores = index
        .docs
        .iter()
        .map(|doc| match (&folded, doc) {
            (Some((qc, qn)), Some((dc, dn))) => qc.dot(dc) / (qn * dn),
            _ => 0.0,
        })
        .collect();
    Ok(ranked(q.id, &index.doc_ids, scores))
}

pub fn run_cosine(td: &TermDocMatrix, queries: &[QueryVector]) -> RankedRun {
    let mut run = RankedRun::new("cosine");
    for q in queries {
        run.insert(rank_cosine(td, q));
    }
    run
}

pub fn run_latent(index: &LatentIndex, queries: &[QueryVector]) -> Result<RankedRun, TopicError> {
    let mut run = RankedRun::new(index.space.method().to_string());
    for q in queries {
        run.insert(rank_latent(index, q)?);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowrank::SvdOptions;
    use crate::topics::fit;

    fn toy() -> TermDocMatrix {
        // terms × docs
        TermDocMatrix::from_dense_rows(&[&[1, 0, 2], &[1, 1, 0], &[0, 3, 1]])
    }

    fn query(counts: &[u32]) -> QueryVector {
        QueryVector { id: 1, counts: SparseVector::from_dense(counts), dropped_terms: 0 }
    }

    #[test]
    fn cosine_hand_computed() {
        let td = toy();
        let list = rank_cosine(&td, &query(&[1, 1, 0]));
        // doc1 (1,1,0): 1; doc2 (0,1,3): 1/(√2·√10); doc3 (2,0,1): 2/(√2·√5)
        let expect = [(1, 1.0), (3, 2.0 / 10f64.sqrt()), (2, 1.0 / 20f64.sqrt())];
        for ((d, s), (ed, es)) in list.entries.iter().zip(expect) {
            assert_eq!(*d, ed);
            assert!((s - es).abs() < 1e-15);
        }
    }

    #[test]
    fn self_similarity_ranks_first() {
        let td = toy();
        let list = rank_cosine(&td, &query(&[0, 1, 3]));
        assert_eq!(list.entries[0].0, 2);
        assert!((list.entries[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_query_scores_zero_in_id_order() {
        let td = toy();
        let list = rank_cosine(&td, &query(&[0, 0, 0]));
        assert_eq!(list.doc_ids().collect::<Vec<_>>(), [1, 2, 3]);
        assert!(list.entries.iter().all(|e| e.1 == 0.0));
        for method in [Method::Qlsa, Method::Lsa] {
            let idx =
                LatentIndex::build(fit(method, &td, 2, &SvdOptions::default()).unwrap(), &td, FoldOptions::default())
                    .unwrap();
            let list = rank_latent(&idx, &query(&[0, 0, 0])).unwrap();
            assert_eq!(list.doc_ids().collect::<Vec<_>>(), [1, 2, 3]);
        }
    }

    #[test]
    fn document_text_as_query_ranks_itself_first() {
        let td = toy();
        for method in [Method::Qlsa, Method::Lsa] {
            let space = fit(method, &td, 3, &SvdOptions::default()).unwrap();
            let idx = LatentIndex::build(space, &td, FoldOptions::default()).unwrap();
            for (i, counts) in [[1u32, 1, 0], [0, 1, 3], [2, 0, 1]].iter().enumerate() {
                let list = rank_latent(&idx, &query(counts)).unwrap();
                assert_eq!(list.entries[0].0, i as u32 + 1, "{method}");
                assert!((list.entries[0].1 - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sigma_weighting_changes_lsa_only() {
        let td = toy();
        let q = query(&[1, 0, 1]);
        let lsa = fit(Method::Lsa, &td, 2, &SvdOptions::default()).unwrap();
        let plain = rank_latent(&LatentIndex::build(lsa.clone(), &td, FoldOptions::default()).unwrap(), &q).unwrap();
        let weighted =
            rank_latent(&LatentIndex::build(lsa, &td, FoldOptions { lsa_sigma_weighting: true }).unwrap(), &q).unwrap();
        assert_ne!(plain, weighted);
        let qlsa = fit(Method::Qlsa, &td, 2, &SvdOptions::default()).unwrap();
        let a = rank_latent(&LatentIndex::build(qlsa.clone(), &td, FoldOptions::default()).unwrap(), &q).unwrap();
        let b = rank_latent(&LatentIndex::build(qlsa, &td, FoldOptions { lsa_sigma_weighting: true }).unwrap(), &q)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gcd_reduction() {
        let v = SparseVector::from_dense(&[0, 6, 9, 0, 3]);
        assert_eq!(reduced(v.view()).values(), [2, 3, 1]);
        assert_eq!(reduced(SparseVector::from_dense(&[0u32, 0]).view()).values(), [] as [u32; 0]);
    }

    #[test]
    fn trec_lines() {
        let td = toy();
        let run = run_cosine(&td, &[query(&[1, 1, 0])]);
        let mut out = Vec::new();
        run.write_trec(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, "1 1 1 1.000000 cosine");
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn query_vector_reports_dropped_terms() {
        let vocab = Vocabulary::from_terms(["heart".to_string(), "lung".to_string()]);
        let q = QueryVector::from_tokens(4, &vocab, &["lung", "liver", "lung"]);
        assert_eq!(q.dropped_terms, 1);
        assert_eq!(q.counts.values(), [2]);
    }
}
