//! Anonymity classification of social-media profiles, and discovery of
//! sensitive accounts from the anonymity of their followers.
//!
//! The pipeline: [`ingest`] profiles, detect names with [`namekb`], build
//! [`features`], classify with the dual forests in [`anonclf`], score targets
//! with [`sensitivity`], and validate group separation with [`ldaval`].
//! [`synth`] produces labeled fixtures for every stage and [`pipeline`]
//! strings the stages together for the command line.

pub mod anonclf;
pub mod error;
pub mod features;
pub mod ingest;
pub mod ldaval;
pub mod metrics;
pub mod namekb;
pub mod pipeline;
pub mod seeds;
pub mod sensitivity;
pub mod synth;

pub use error::{Error, Result};
