//! Core library for a Chinese-painting ideation workbench.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`corpus`] holds painting records, their six-dimension annotations and the
//!   single-file record store.
//! * [`classifier`] trains the Gongbi/Xieyi head over precomputed image features.
//! * [`annotator`] builds annotation prompts and parses model responses.
//! * [`design_space`] normalizes, embeds and clusters concepts into a catalog.
//! * [`search`] is the in-process inverted index over tags and descriptions.
//! * [`ideation`] runs symbol suggestion and the tag → intention → image → poem chain.
//! * [`stats`] has the paired tests and agreement coefficients used on rating sheets.
//!
//! External model endpoints are reached through the traits in [`client`]; every
//! call goes through a [`client::TranscriptLog`] so runs can be replayed offline.

pub mod annotator;
pub mod classifier;
pub mod client;
pub mod corpus;
pub mod design_space;
pub mod ideation;
pub mod search;
pub mod stats;

pub mod fsutil;

pub use corpus::{AnnotationSet, PaintingRecord, PaintingType, Tag, TagDimension};
