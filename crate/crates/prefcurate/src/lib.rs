//! Agreement-aware curation of pairwise preference data for reward modeling.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`corpus`]: data model and ingestion for comparisons, posts, references
//!   and quality-annotated summaries
//! - [`agreement`]: per-comparison and corpus-level agreement statistics
//! - [`sampler`]: the MAX / MIN / DIST / RAND training curations and the
//!   held-out test split
//! - [`synth`]: synthetic corpora with a known quality oracle and a
//!   noisy-annotator model
//! - [`reward`]: hashed n-gram featurization and Bradley-Terry reward-model
//!   training
//! - [`eval`]: Kendall tau-b correlations and ROUGE-1/2/L
//! - [`rlhf`]: extractive summarization environment with a clipped
//!   policy-gradient optimizer
//! - [`experiment`]: the end-to-end strategy matrix and its report bundle
//! - [`plot`]: self-contained SVG charts for the report CSVs

pub mod agreement;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod plot;
pub mod provenance;
pub mod reward;
pub mod rlhf;
pub mod sampler;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
