//! Weakly supervised hierarchical multi-label patent classification.
//!
//! The pipeline runs in stages, one module each:
//!
//! - [`taxonomy`]: the class tree, label-vector order and ancestor closure.
//! - [`query`]: the keyword query language used to weakly label documents.
//! - [`corpus`]: JSON Lines patent reader, language filter and tokenizer.
//! - [`weaklabel`]: document labeling, negative sampling and dataset splits.
//! - [`neural`]: encoder, flat and hierarchy-wired classifier heads, weighted
//!   BCE, Adam and the training loop.
//! - [`metrics`]: hierarchical precision/recall/F1, AUPRC, accuracy and
//!   threshold sweeps.
//! - [`attribution`]: integrated-gradients token attribution and rendering.

pub mod attribution;
pub mod config;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod neural;
pub mod query;
pub mod synthetic;
pub mod taxonomy;
pub mod weaklabel;

pub use error::{Error, ErrorCategory, Result};
pub use taxonomy::{LabelVector, Taxonomy};
