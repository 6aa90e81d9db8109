//! Learning statement-level corrective patches from version-control history.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod generator;
pub mod miner;
pub mod nmt;
pub mod pipeline;
pub mod selftest;
pub mod statement;
pub mod synth;
