//! Multi-view software dependency graphs and a bidirectional gated graph
//! neural network for file-level defect prediction.
//!
//! The crate builds three directed weighted graph views over the files of a
//! project version — a code dependency graph (CDG) from data/call
//! dependencies, a developer dependency graph (DDG) from shared code
//! ownership, and their edge-wise sum (MSDG) — and trains a BiGGNN classifier
//! on top of them, with graph-aware SMOTE oversampling of the minority class
//! and a full within-project / cross-project evaluation harness (AUC, Recall,
//! Brier, PF, F1, Wilcoxon signed-rank, Cliff's delta).
//!
//! Everything here is pure computation over in-memory values: no files, no
//! clocks, no global RNG. All randomness flows through explicitly seeded
//! [`rng`] streams, so every experiment is reproducible from its seed. The
//! crate is `no_std` (with `alloc`); file formats and the CLI live in the
//! companion `mvsdg-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
mod math;
pub mod model;
pub mod nn;
pub mod rng;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
