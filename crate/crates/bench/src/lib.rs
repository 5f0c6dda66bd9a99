//! Shared instances for the benchmarks in `benches/`.

use arisac::bcd::initialize;
use arisac::model::db_to_linear;
use arisac::solver::filter::{build_filter_matrices, update_filter};
use arisac::{dbm_to_watt, synth_channels, CMat, CVec, ChannelSet, Geometry, SystemConfig};

/// A started point on the default geometry: P_BS 40 dBm, Γ 12 dB, P_RIS 20 dBm.
pub struct Instance {
    pub cfg: SystemConfig,
    pub ch: ChannelSet,
    pub w: CMat,
    pub phi: CVec,
    pub u: CVec,
}

pub fn instance(n: usize, k: usize, m: usize, seed: u64) -> Instance {
    let cfg = SystemConfig::uniform(
        n,
        k,
        m,
        dbm_to_watt(40.0),
        dbm_to_watt(20.0),
        dbm_to_watt(-80.0),
        db_to_linear(12.0),
        8.0,
        1.0,
    );
    let ch = synth_channels(&cfg, &Geometry::default_scenario(k, seed)).expect("default geometry");
    let (w, phi) = initialize(&cfg, &ch, seed).expect("feasible start");
    let u = update_filter(
        &build_filter_matrices(&cfg, &ch, &w, &phi).expect("shapes"),
        cfg.rcs_var,
    )
    .expect("filter")
    .u;
    Instance { cfg, ch, w, phi, u }
}
