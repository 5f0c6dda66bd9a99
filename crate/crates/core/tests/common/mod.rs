#![allow(dead_code)]

use arisac::bcd::initialize;
use arisac::model::db_to_linear;
use arisac::solver::filter::{build_filter_matrices, update_filter};
use arisac::{dbm_to_watt, synth_channels, CMat, CVec, ChannelSet, Geometry, SystemConfig, C64};
use rand::Rng;

pub fn cn(rng: &mut impl Rng) -> C64 {
    C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

pub fn in_box(rng: &mut impl Rng, m: usize, a_max: f64) -> CVec {
    CVec::from_fn(m, |_, _| {
        C64::from_polar(
            a_max * rng.gen::<f64>().sqrt(),
            rng.gen::<f64>() * std::f64::consts::TAU,
        )
    })
}

/// Default link budget: P_RIS 20 dBm, all noises −80 dBm, a_max 8, ς² = 1.
pub fn scenario_cfg(n: usize, k: usize, m: usize, p_bs_dbm: f64, gamma_db: f64) -> SystemConfig {
    SystemConfig::uniform(
        n,
        k,
        m,
        dbm_to_watt(p_bs_dbm),
        dbm_to_watt(20.0),
        dbm_to_watt(-80.0),
        db_to_linear(gamma_db),
        8.0,
        1.0,
    )
}

pub fn scenario(
    n: usize,
    k: usize,
    m: usize,
    p_bs_dbm: f64,
    gamma_db: f64,
    seed: u64,
) -> (SystemConfig, ChannelSet) {
    let cfg = scenario_cfg(n, k, m, p_bs_dbm, gamma_db);
    let ch = synth_channels(&cfg, &Geometry::default_scenario(k, seed)).unwrap();
    (cfg, ch)
}

/// Feasible starting point of the alternating updates with its optimal filter.
pub fn started(cfg: &SystemConfig, ch: &ChannelSet, seed: u64) -> (CMat, CVec, CVec) {
    let (w, phi) = initialize(cfg, ch, seed).unwrap();
    let u = update_filter(
        &build_filter_matrices(cfg, ch, &w, &phi).unwrap(),
        cfg.rcs_var,
    )
    .unwrap()
    .u;
    (w, phi, u)
}
