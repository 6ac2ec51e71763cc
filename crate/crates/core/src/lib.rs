//! Notebook mining core: slices notebooks into executable EDA sequences,
//! extracts canonical API tokens, trains topic and embedding models, and
//! answers code-search and next-API queries over the resulting index.
//!
//! The crate is `no_std` (with `alloc`); file and network IO live in the
//! `edascope` companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analyzer;
pub mod api;
pub mod assignment;
pub mod builtins;
pub mod codec;
pub mod defuse;
pub mod dna;
pub mod embedding;
pub mod index;
pub mod math;
pub mod notebook;
pub mod planted;
pub mod python;
pub mod recommend;
pub mod sequence;
pub mod slicer;
pub mod tfidf;
pub mod topic;
pub mod vocab;
