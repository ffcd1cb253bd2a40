//! Coarse-grained temporal video grounding toolkit.
//!
//! The core idea: instead of predicting exact timestamps, a grounder answers a
//! four-way multiple-choice question — is the target at the *beginning*,
//! *middle*, or *end* of the current window, or does it span the window
//! *throughout*? Repeating the question on a narrowed window localizes the
//! target like a binary search over video time.
//!
//! The crate provides:
//! - interval arithmetic, the four-way categorization rule, IoU, and metric
//!   aggregation ([`span`], [`metrics`]);
//! - the recursive grounding driver, the exhaustive choice-sequence upperbound,
//!   a random baseline, and answer parsers/renderers ([`engine`]);
//! - pluggable choice oracles: truthful, noisy, scripted, and a remote HTTP
//!   client ([`oracle`]);
//! - dataset mining over precomputed scene embeddings: scene merging, caption
//!   filtering, negative-span mining ([`miner`]);
//! - training-sample generation by random cropping with category balancing,
//!   plus the prompt template bank ([`sampler`]);
//! - a deterministic, parallel batch harness behind the `groundkit` CLI
//!   ([`harness`]).

pub mod engine;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod miner;
pub mod oracle;
pub mod record;
pub mod sampler;
pub mod seed;
pub mod span;
pub mod synth;

pub use error::{Error, Result};
pub use record::GroundingRecord;
pub use span::{categorize, iou, CoarseCategory, TimeSpan};
