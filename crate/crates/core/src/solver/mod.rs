//! Per-block subproblem solvers of the alternating design loop.

pub mod beamformer;
pub mod filter;
pub mod reflection;
