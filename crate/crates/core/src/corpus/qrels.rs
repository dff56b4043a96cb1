use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use super::{CorpusError, Result};

/// Which whitespace-separated columns of a qrels file carry what.
///
/// MED (`1 0 13 1`), CRAN (`1 184 2`) and CACM (`01 1410 0 0`) all differ, so
/// the layout is configured per collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QrelsColumns {
    pub query: usize,
    pub doc: usize,
    /// Relevance column and the minimum value counted as relevant.
    pub relevance: Option<(usize, i64)>,
}

impl QrelsColumns {
    fn width(&self) -> usize {
        let mut w = self.query.max(self.doc);
        if let Some((c, _)) = self.relevance {
            w = w.max(c);
        }
        w + 1
    }
}

/// Parses `query=0 doc=2 rel=3 min_rel=1`; `rel`/`min_rel` are optional.
impl FromStr for QrelsColumns {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CorpusError::BadQrelsSpec(s.to_owned());
        let (mut query, mut doc, mut rel, mut min_rel) = (None, None, None, 1i64);
        for part in s.split_whitespace() {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            match key {
                "query" => query = Some(value.parse().map_err(|_| bad())?),
                "doc" => doc = Some(value.parse().map_err(|_| bad())?),
                "rel" => rel = Some(value.parse().map_err(|_| bad())?),
                "min_rel" => min_rel = value.parse().map_err(|_| bad())?,
                _ => return Err(bad()),
            }
        }
        Ok(Self { query: query.ok_or_else(bad)?, doc: doc.ok_or_else(bad)?, relevance: rel.map(|c| (c, min_rel)) })
    }
}

/// Judged-relevant documents per query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    relevant: BTreeMap<u32, BTreeSet<u32>>,
}

/// Outcome of checking qrels against the parsed collection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrelsReport {
    /// `(query, doc)` pairs whose document id is not in the collection.
    pub unknown_docs: Vec<(u32, u32)>,
    /// Queries in the query file with no judged-relevant document.
    pub unjudged_queries: Vec<u32>,
}

impl Qrels {
    pub fn insert(&mut self, query: u32, doc: u32) {
        self.relevant.entry(query).or_default().insert(doc);
    }

    pub fn relevant(&self, query: u32) -> Option<&BTreeSet<u32>> {
        self.relevant.get(&query)
    }

    pub fn queries(&self) -> impl Iterator<Item = u32> + '_ {
        self.relevant.keys().copied()
    }

    pub fn num_queries(&self) -> usize {
        self.relevant.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.relevant.values().map(BTreeSet::len).sum()
    }

    /// Fails if a judged query is missing from `query_ids`; unknown document
    /// ids and unjudged queries are returned for reporting.
    pub fn validate(&self, query_ids: &BTreeSet<u32>, doc_ids: &BTreeSet<u32>) -> Result<QrelsReport> {
        let missing: Vec<u32> = self.queries().filter(|q| !query_ids.contains(q)).collect();
        if !missing.is_empty() {
            return Err(CorpusError::UnknownQueries(missing));
        }
        let unknown_docs = self
            .relevant
            .iter()
            .flat_map(|(&q, docs)| docs.iter().filter(|d| !doc_ids.contains(d)).map(move |&d| (q, d)))
            .collect();
        let unjudged_queries = query_ids.iter().copied().filter(|q| !self.relevant.contains_key(q)).collect();
        Ok(QrelsReport { unknown_docs, unjudged_queries })
    }
}

/// Parses whitespace-separated relevance judgments. Blank lines are skipped.
pub fn parse_qrels(text: &str, columns: &QrelsColumns) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    let width = columns.width();
    for (n, line) in text.lines().enumerate() {
        let row = n + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < width {
            return Err(CorpusError::ShortQrelsRow { row, needed: width, found: fields.len() });
        }
        let int = |column: usize| {
            fields[column].parse::<i64>().map_err(|_| CorpusError::BadQrelsField {
                row,
                column,
                text: fields[column].to_owned(),
            })
        };
        if let Some((column, min)) = columns.relevance {
            if int(column)? < min {
                continue;
            }
        }
        let to_id = |column: usize| {
            let v = int(column)?;
            u32::try_from(v).map_err(|_| CorpusError::BadQrelsField { row, column, text: fields[column].to_owned() })
        };
        qrels.insert(to_id(columns.query)?, to_id(columns.doc)?);
    }
    Ok(qrels)
}
