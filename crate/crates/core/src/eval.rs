//! Average precision, MAP and 11-point interpolated recall-precision.
//!
//! AP divides by the number of judged-relevant documents, so relevant
//! documents missing from the ranking contribute zero. Queries without any
//! judged-relevant document are left out of MAP and listed separately.

use std::collections::BTreeSet;
use std::io::{self, Write};

use thiserror::Error;

use crate::corpus::Qrels;
use crate::retrieval::{RankedList, RankedRun};

/// Recall levels 0.0, 0.1, ..., 1.0.
pub const RECALL_POINTS: usize = 11;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("ranking is empty")]
    EmptyRanking,
    #[error("query has no relevant documents")]
    NoRelevant,
    #[error("no query in the run has relevance judgments")]
    NothingToEvaluate,
}

fn check(run: &RankedList, relevant: &BTreeSet<u32>) -> Result<(), EvalError> {
    if run.entries.is_empty() {
        return Err(EvalError::EmptyRanking);
    }
    if relevant.is_empty() {
        return Err(EvalError::NoRelevant);
    }
    Ok(())
}

pub fn average_precision(run: &RankedList, relevant: &BTreeSet<u32>) -> Result<f64, EvalError> {
    check(run, relevant)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, doc) in run.doc_ids().enumerate() {
        if relevant.contains(&doc) {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

/// `P(ρ) = max{precision at any rank whose recall ≥ ρ}`, or 0 if recall ρ is never reached.
pub fn interpolated_pr(run: &RankedList, relevant: &BTreeSet<u32>) -> Result<[f64; RECALL_POINTS], EvalError> {
    check(run, relevant)?;
    let total = relevant.len() as f64;
    let mut points = Vec::with_capacity(run.entries.len());
    let mut hits = 0usize;
    for (rank, doc) in run.doc_ids().enumerate() {
        if relevant.contains(&doc) {
            hits += 1;
        }
        points.push((hits as f64 / total, hits as f64 / (rank + 1) as f64));
    }
    // running max of precision from the bottom of the ranking up
    let mut best_from = vec![0.0f64; points.len() + 1];
    for i in (0..points.len()).rev() {
        best_from[i] = best_from[i + 1].max(points[i].1);
    }
    let mut curve = [0.0; RECALL_POINTS];
    for (level, value) in curve.iter_mut().enumerate() {
        let rho = level as f64 / 10.0;
        // first rank whose recall reaches rho; recall is non-decreasing
        let first = points.partition_point(|&(recall, _)| recall < rho - 1e-12);
        *value = best_from[first];
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryEvaluation {
    pub query_id: u32,
    pub average_precision: f64,
    pub interpolated_precision: [f64; RECALL_POINTS],
    pub num_relevant: usize,
}

/// Per-query results plus aggregates, queries in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEvaluation {
    pub queries: Vec<QueryEvaluation>,
    /// Queries in the run without judgments.
    pub excluded: Vec<u32>,
    pub map: f64,
    pub mean_curve: [f64; RECALL_POINTS],
}

pub fn evaluate_run(run: &RankedRun, qrels: &Qrels) -> Result<RunEvaluation, EvalError> {
    let mut queries = Vec::new();
    let mut excluded = Vec::new();
    for (&qid, list) in &run.lists {
        match qrels.relevant(qid) {
            Some(rel) if !rel.is_empty() => queries.push(QueryEvaluation {
                query_id: qid,
                average_precision: average_precision(list, rel)?,
                interpolated_precision: interpolated_pr(list, rel)?,
                num_relevant: rel.len(),
            }),
            _ => excluded.push(qid),
        }
    }
    if queries.is_empty() {
        return Err(EvalError::NothingToEvaluate);
    }
    let n = queries.len() as f64;
    let map = queries.iter().map(|q| q.average_precision).sum::<f64>() / n;
    let mut mean_curve = [0.0; RECALL_POINTS];
    for q in &queries {
        for (m, p) in mean_curve.iter_mut().zip(q.interpolated_precision) {
            *m += p;
        }
    }
    mean_curve.iter_mut().for_each(|m| *m /= n);
    Ok(RunEvaluation { queries, excluded, map, mean_curve })
}

/// Mean AP over the queries of `run` that have judgments.
pub fn map(run: &RankedRun, qrels: &Qrels) -> Result<f64, EvalError> {
    evaluate_run(run, qrels).map(|e| e.map)
}

/// `100 · (method − baseline) / baseline`.
pub fn improvement_pct(method_map: f64, baseline_map: f64) -> f64 {
    100.0 * (method_map - baseline_map) / baseline_map
}

/// Writes `method,r,query_id,AP` rows followed by a `MAP` aggregate row.
/// `r` is empty for methods without a latent dimension.
pub fn write_metrics_csv<W: Write>(mut w: W, rows: &[(String, Option<usize>, &RunEvaluation)]) -> io::Result<()> {
    writeln!(w, "method,r,query_id,AP")?;
    for (method, r, eval) in rows {
        let r = r.map(|r| r.to_string()).unwrap_or_default();
        for q in &eval.queries {
            writeln!(w, "{method},{r},{},{:.6}", q.query_id, q.average_precision)?;
        }
        writeln!(w, "{method},{r},MAP,{:.6}", eval.map)?;
    }
    Ok(())
}

/// Writes `method,r,recall,precision` rows of the mean interpolated curves.
pub fn write_curves_csv<W: Write>(mut w: W, rows: &[(String, Option<usize>, &RunEvaluation)]) -> io::Result<()> {
    writeln!(w, "method,r,recall,precision")?;
    for (method, r, eval) in rows {
        let r = r.map(|r| r.to_string()).unwrap_or_default();
        for (level, p) in eval.mean_curve.iter().enumerate() {
            writeln!(w, "{method},{r},{:.1},{:.6}", level as f64 / 10.0, p)?;
        }
    }
    Ok(())
}
