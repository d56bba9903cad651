//! Hybrid uncertainty quantification for black-box LLM misinformation
//! classifiers.
//!
//! The pipeline scores a statement classifier without logit access: draw k
//! stochastic truthfulness scores per statement, derive a consistency-based
//! confidence, elicit a verbalized certainty, fuse the two with a
//! cross-validated convex weight, and evaluate calibration (quantile-binned
//! ECE, Brier, AUC, K-S) against the statement labels.
//!
//! Modules follow the pipeline stages:
//!
//! - [`dataset`]: LIAR-format ingestion and truthfulness-scale mappings
//! - [`elicitation`]: prompt templates and reply parsers
//! - [`client`]: chat-completion backends (HTTP + seeded simulator) with a
//!   JSON-Lines response cache
//! - [`consistency`]: the six sample-based consistency estimators
//! - [`metrics`]: calibration and classification metrics
//! - [`hybrid`]: confidence fusion and the cross-validated alpha search
//! - [`experiments`]: end-to-end experiment runners behind the CLI
//!
//! Each major capability has a runnable example under `examples/`.

pub mod client;
pub mod consistency;
pub mod dataset;
pub mod elicitation;
pub mod error;
pub mod experiments;
pub mod hybrid;
pub mod metrics;

pub use consistency::{ConfidenceScore, Method};
pub use error::{Error, Result};
