//! Pure building blocks for extracting segment disclosures from annual
//! reports and comparing them across years and firms.
//!
//! Everything here runs on `alloc` alone: answer-shape validation, decimal
//! money arithmetic, the bundle/segment model and its invariants, the
//! lexical chunk index, change detection, regional aggregation, coverage
//! gaps and evaluation arithmetic. IO, HTML decoding and model access live
//! in the `segforge` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod answer;
pub mod changes;
pub mod digest;
pub mod document;
pub mod eval;
pub mod filing;
pub mod gaps;
pub mod geo;
pub mod money;
pub mod retrieval;
pub mod segment;
pub mod signals;
pub mod text;

pub use answer::{AnswerShape, ValidationError};
pub use digest::ContentHash;
pub use filing::{FilingRef, ItemId, MediaKind, Part};
pub use money::{Decimal, MonetaryValue, Scale};
pub use segment::{
    Axis, ExtractionBundle, FirmYear, MeasureKind, SegmentRecord, SegmentationClass,
    SegmentationKind,
};
