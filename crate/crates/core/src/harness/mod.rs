//! Reproduction surface: experiment configs, the end-to-end pipeline,
//! CSV metrics, image rendering, seeding and the command line.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod metrics;
pub mod render;
pub mod seeds;
