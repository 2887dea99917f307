//! Gongbi/Xieyi classification head over externally extracted image features.

mod features;
mod head;
mod split;

pub use features::{parse_labels, FeatureSet, FeatureVector};
pub use head::{
    classify, softmax, train_head, ClassifierModel, Dense, Gradients, HeadConfig, LabeledFeature,
    TrainingMeta, CLASSES,
};
pub use split::{is_partition, split_dataset};

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("feature file: {0}")]
    Format(String),
    #[error("record `{record}` has {got} features, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize, record: String },
    #[error("record `{0}` has non-finite feature values")]
    NonFinite(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("record `{0}` must be labeled gongbi or xieyi")]
    InvalidLabel(String),
    #[error("training split needs at least two examples per class, got {per_class:?}")]
    SingleClass { per_class: [usize; 2] },
}
