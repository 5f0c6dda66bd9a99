//! Experiment harness around the [`arisac`] solver.
//!
//! An [`ExperimentSpec`] is read from a TOML document with powers in dBm and
//! SINR targets in dB. [`run::run`] solves every (mode, sweep value, seed)
//! point and [`run::write_csv`] emits one row per point;
//! [`validate::validate`] checks a spec without running it and
//! [`checks::oracle_suite`] compares a solved point against the oracle module.

pub mod checks;
pub mod run;
pub mod spec;
pub mod validate;

pub use run::{run, write_csv, PointResult, Status};
pub use spec::{ExperimentSpec, SpecError, SweepParam};
