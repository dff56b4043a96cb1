//! Test-collection ingestion: SMART files, relevance judgments,
//! preprocessing and the raw term-frequency matrix.

mod matrix;
pub mod porter;
mod qrels;
mod smart;
mod text;

pub use matrix::{build_matrix, TermDocMatrix, Vocabulary};
pub use qrels::{parse_qrels, Qrels, QrelsColumns, QrelsReport};
pub use smart::{parse_smart_file, serialize_smart, RawDocument};
pub use text::{preprocess, smart_stopwords, Pipeline, StopWords};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record header {text:?}")]
    BadRecordId { line: usize, text: String },
    #[error("line {line}: text before the first .I record")]
    OrphanText { line: usize },
    #[error("qrels row {row}: expected at least {needed} columns, found {found}")]
    ShortQrelsRow { row: usize, needed: usize, found: usize },
    #[error("qrels row {row}: column {column} is not an integer: {text:?}")]
    BadQrelsField { row: usize, column: usize, text: String },
    #[error("bad qrels column spec {0:?}")]
    BadQrelsSpec(String),
    #[error("no documents to index")]
    NoDocuments,
    #[error("every document is empty after preprocessing")]
    AllDocumentsEmpty,
    #[error("duplicate document id {0}")]
    DuplicateId(u32),
    #[error("qrels reference unknown query ids {0:?}")]
    UnknownQueries(Vec<u32>),
    #[error("pipeline config line {line}: {message}")]
    BadPipeline { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;
