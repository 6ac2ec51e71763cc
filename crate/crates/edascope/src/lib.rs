//! Filesystem, CLI and HTTP layer around `edascope-core`.

pub mod corpus;
pub mod error;
pub mod files;
pub mod ipynb;
pub mod manifest;
pub mod pipeline;
pub mod synthetic;
pub mod service;
