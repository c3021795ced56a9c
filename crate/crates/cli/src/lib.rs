//! Batch front-end for `qst-core`: synthetic experiment generation,
//! reconstruction runs and timing campaigns.

pub mod bench;
pub mod experiment;
pub mod run;
pub mod selftest;
