//! Joint design of the transmit beamformer, the active-RIS reflection
//! coefficients and the radar receive filter of an active-RIS-assisted
//! integrated sensing and communication (ISAC) system.
//!
//! The radar output SNR is maximized subject to per-user SINR targets, a BS
//! transmit power budget, an RIS reflection power budget and a per-element
//! amplification cap. The solver alternates three blocks:
//!
//! - [`solver::filter`]: closed-form generalized Rayleigh quotient update of `u`;
//! - [`solver::beamformer`]: first-order majorization–minimization on `W`,
//!   one second-order cone program per step;
//! - [`solver::reflection`]: Dinkelbach iterations on `φ` with a two-stage
//!   second-order majorizer of the quartic terms.
//!
//! [`bcd::optimize`] drives the loop. The [`oracle`] module holds independent
//! Monte-Carlo and brute-force checks of every closed form used here.

pub mod bcd;
pub mod channels;
pub mod conic;
pub mod error;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod solver;

pub use bcd::{optimize, run_baseline, BcdOptions, Mode};
pub use channels::{synth_channels, Geometry};
pub use error::{Error, Result};
pub use model::{
    dbm_to_watt, ChannelSet, DesignSolution, FeasibilityReport, RadarCascade, SystemConfig,
    TraceEntry,
};

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;
