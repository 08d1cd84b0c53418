//! Experiment drivers behind the `bandit-bench` binary: synthetic targets,
//! misidentification sweeps, threshold-table emission, and a paired
//! exact-versus-subsampled demo.

pub mod demo;
pub mod sweep;
pub mod synth;
pub mod table;
