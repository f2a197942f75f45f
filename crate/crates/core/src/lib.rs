//! Core algorithms for end-to-end information status classification.
//!
//! The pipeline has two learned stages that share one input contract:
//!
//! 1. [`mention_model`] classifies every token span of a sentence as mention or
//!    non-mention. A span is presented to the encoder by inserting an opening and
//!    a closing marker around it ([`spangen::insert_markers`]); the span
//!    representation is the concatenation of the encoder's final hidden states at
//!    the two marker positions ([`encoder::span_representation`]).
//! 2. [`is_model`] assigns one of eight [`ISCategory`] values to each mention,
//!    using the same boundary representation over an input that additionally
//!    carries a flag telling whether the mention's surface string was seen
//!    earlier in the document ([`spangen::build_is_input`]).
//!
//! [`eval`] scores both stages with exact-match precision/recall/F, and
//! [`bridging`] turns IS predictions into bridging-anaphor predictions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, corpus adapters
//! and the command-line front end live in the `infostat` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bridging;
pub mod corpus;
pub mod encoder;
mod error;
pub mod eval;
pub mod is_model;
pub mod mention_model;
pub mod nn;
pub mod spangen;
mod types;

pub use error::{Error, Result};
pub use types::{Corpus, Document, ISCategory, Mention, MentionKey, Sentence, Token};
