//! Painting records, their six-dimension annotations, and the record store.

mod annotation;
mod model;
mod store;

use std::path::Path;

pub use annotation::{annotation_to_value, validate_annotation};
pub use model::{AnnotationSet, PaintingRecord, PaintingType, Tag, TagDimension};
pub use store::{
    parse_record_line, record_to_line, CorpusSnapshot, CorpusStats, CorpusStore, IngestReport,
    LineError,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("zero valid records ({errors} lines rejected)")]
    NoValidRecords { errors: usize },
    #[error("unknown record `{0}`")]
    UnknownRecord(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> CorpusError {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
