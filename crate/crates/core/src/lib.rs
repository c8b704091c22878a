//! Alignment lattices and from-scratch full-sum training for CTC and
//! HMM label topologies.
//!
//! The crate builds alignment FSAs from transcripts, runs log-semiring
//! forward-backward and Viterbi over them, and trains a small framewise
//! acoustic model with sequence-level cross-entropy under four model
//! variants (CTC, P-HMM, P-HMM-S, H-HMM). Convergence remedies —
//! subsampling, minimum label duration, and prior-knowledge probability
//! approximation — plus an n-gram prefix-tree decoder and alignment
//! metrics round out the toolkit.

pub mod batch;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod lattice;
pub mod logmath;
pub mod models;
pub mod topology;
pub mod trainer;

pub use error::{Error, Result};
