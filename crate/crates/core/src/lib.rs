//! Change-vector hidden Markov models.
//!
//! Multichannel panels are standardized and differenced into change vectors,
//! clustered into change-states with k-means, and turned into a Gaussian HMM
//! whose Viterbi path replaces the per-vector cluster labels. Decoded
//! sequences can then be aligned to a block design or compared across groups.

mod error;

pub mod align;
pub mod config;
pub mod decode;
pub mod hmm;
pub mod ingest;
pub mod pipeline;
pub mod preprocess;
pub mod states;
pub mod stats;
pub mod synth;

pub use error::{CvError, Result};
