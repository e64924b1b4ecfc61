//! Deterministic machinery for tampered text detection with multimodal
//! models trained by group-relative policy optimization.
//!
//! - [`parser`]: `<think>`/`<answer>` completion parsing and rendering
//! - [`rewards`]: the five rewards, composite score and group advantages
//! - [`rectify`]: OCR-based refinement of predicted tampered-text boxes
//! - [`eval`]: Cls. / OCR / Loc. / Res. benchmark metrics per subset
//! - [`mask`], [`grounding`]: annotation encodings for pre-training targets
//! - [`text_metrics`], [`geometry`]: the underlying primitives
//!
//! Everything here is a pure function over immutable values and can be
//! called from any number of threads.

pub mod eval;
pub mod fixtures;
pub mod geometry;
pub mod grounding;
pub mod io;
pub mod mask;
pub mod model;
pub mod parser;
pub mod rectify;
pub mod rewards;
pub mod text_metrics;

pub use model::{
    BBox, ForgeryMethod, GroundTruthRecord, ImageVerdict, OcrInstance, OcrLayout, PredictionRecord,
    SchemaError, Subset,
};
