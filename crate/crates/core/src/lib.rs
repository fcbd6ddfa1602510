//! Topic-aware detection of multi-topic social spammers.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithmic stage of
//! the pipeline: corpus cleansing, tokenization and TF-IDF, the newsgroup
//! topic classifier with taxonomy agreement, reply sentiment, the eighteen
//! user features, six binary classifiers with cross-validation and random
//! search, ranking metrics with the baseline rankers, and a deterministic
//! synthetic population generator.
//!
//! File formats, HTTP adapters and the command line live in the `spamlens`
//! companion crate.
//!
//! Enable the `parallel` feature to spread per-tweet, per-user, per-tree and
//! per-fold work over a rayon pool. Results are identical to serial runs.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(all(test, not(feature = "std")))]
extern crate std;

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod math;
pub mod models;
mod par;
pub mod sentiment;
pub mod synthgen;
pub mod text;
pub mod topics;

pub use crate::error::{Error, Result};

/// Re-exported so downstream crates name timestamps with the same type.
pub use chrono;
