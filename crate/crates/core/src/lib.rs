//! Parsimonious topic models (PTM) and anomalous topic discovery (ATD).
//!
//! The crate is `no_std` + `alloc`. It contains every numerical piece of the
//! pipeline: corpus types, PTM training with BIC-driven structure search,
//! null/alternative model fitting on test batches, bootstrap significance
//! tests, the synthetic benchmark generator and evaluation metrics. File
//! formats and the command-line tool live in the `atd` crate.
//!
//! With the `parallel` feature, document-level work runs on the current rayon
//! pool. Results do not depend on the number of worker threads.

#![cfg_attr(not(any(test, feature = "parallel")), no_std)]
// `!(x > 0.0)` is how NaN is rejected throughout; index loops mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod atd;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod math;
mod par;
pub mod ptm;
pub mod rng;
pub mod significance;
pub mod synth;

pub use corpus::{Corpus, Document, Vocabulary, WordId};
pub use error::{Error, Result};
pub use ptm::{PtmModel, Topic};
