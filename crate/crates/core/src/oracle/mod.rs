//! Independent checks of the closed forms and of the optimizer output.
//!
//! - [`mc`]: Monte-Carlo estimators that simulate the received signals symbol
//!   by symbol and compare power ratios against the closed forms in
//!   [`crate::model`];
//! - [`grid`]: exhaustive reflection search for tiny RIS sizes;
//! - [`certificate`]: random-perturbation test of local optimality.

pub mod certificate;
pub mod grid;
pub mod mc;

pub use certificate::{local_opt_certificate, CertificateReport};
pub use grid::{grid_best_phi, GridResult, GridSpec};
pub use mc::{mc_radar_snr, mc_ris_power, mc_user_sinr, McConfig, McEstimate};
