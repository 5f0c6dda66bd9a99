//! Statistical checks of the channel generator.

use arisac::channels::{pathloss, ula_steering, Geometry};
use arisac::{dbm_to_watt, synth_channels, SystemConfig};
use proptest::prelude::*;

fn cfg() -> SystemConfig {
    SystemConfig::uniform(
        4,
        2,
        8,
        1.0,
        dbm_to_watt(20.0),
        dbm_to_watt(-80.0),
        1.0,
        8.0,
        1.0,
    )
}

/// Fixed user positions so only the small-scale fading varies with the seed.
fn geometry(seed: u64) -> Geometry {
    let mut g = Geometry::default_scenario(2, 0);
    g.seed = seed;
    g
}

#[test]
fn direct_link_variance_matches_pathloss() {
    let cfg = cfg();
    let g0 = geometry(0);
    let p = g0.user_positions[0];
    let d = (p[0] - g0.bs_pos[0]).hypot(p[1] - g0.bs_pos[1]);
    let expect = pathloss(d, g0.exponents.bs_user, g0.pathloss_ref_db)
        .unwrap()
        .powi(2);
    let n = 10_000;
    let mut acc = 0.0;
    for seed in 0..n {
        let ch = synth_channels(&cfg, &geometry(seed)).unwrap();
        acc += ch.h_d.row(0).iter().map(|h| h.norm_sqr()).sum::<f64>() / cfg.n_bs as f64;
    }
    let var = acc / n as f64;
    assert!((var / expect - 1.0).abs() <= 0.05, "{var:e} vs {expect:e}");
}

#[test]
fn distinct_seeds_are_uncorrelated() {
    let cfg = cfg();
    let draws: Vec<_> = (0..1000)
        .map(|s| synth_channels(&cfg, &geometry(s)).unwrap().h_d[(0, 0)])
        .collect();
    let next: Vec<_> = (1000..2000)
        .map(|s| synth_channels(&cfg, &geometry(s)).unwrap().h_d[(0, 0)])
        .collect();
    let num: f64 = draws
        .iter()
        .zip(&next)
        .map(|(a, b)| (a * b.conj()).re)
        .sum();
    let den = (draws.iter().map(|a| a.norm_sqr()).sum::<f64>()
        * next.iter().map(|b| b.norm_sqr()).sum::<f64>())
    .sqrt();
    assert!((num / den).abs() < 0.05, "correlation {}", num / den);
}

#[test]
fn channels_are_finite_and_nonzero() {
    let cfg = cfg();
    for seed in 0..200 {
        let ch = synth_channels(&cfg, &geometry(seed)).unwrap();
        for x in ch
            .h_d
            .iter()
            .chain(ch.g_mat.iter())
            .chain(ch.h_r.iter())
            .chain(ch.h_rt.iter())
        {
            assert!(x.is_finite() && x.norm() > 0.0);
        }
    }
}

proptest! {
    #[test]
    fn steering_vectors_have_unit_modulus(m in 1usize..64, angle in -3.2f64..3.2, spacing in 0.1f64..1.0) {
        let a = ula_steering(m, angle, spacing);
        prop_assert!((a.norm_squared() - m as f64).abs() <= 1e-9 * m as f64);
        for x in a.iter() {
            prop_assert!((x.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn doubling_distance_quarters_power(d in 0.5f64..500.0) {
        let near = pathloss(d, 2.0, -30.0).unwrap();
        let far = pathloss(2.0 * d, 2.0, -30.0).unwrap();
        prop_assert!(((near / far).powi(2) - 4.0).abs() <= 1e-9);
    }
}
