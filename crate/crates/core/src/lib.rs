//! Deterministic state-machine harness for benchmarking network
//! configuration agents.

pub mod agent;
pub mod behavior;
pub mod controller;
pub mod eval;
pub mod infra;
pub mod sut;
pub mod task;
