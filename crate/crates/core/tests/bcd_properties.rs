//! End-to-end behavior of the alternating optimizer on the default geometry.

mod common;

use arisac::model::validate_solution;
use arisac::oracle::local_opt_certificate;
use arisac::{optimize, BcdOptions, Mode};
use common::scenario;

#[test]
fn monotone_ascent_and_feasible_output() {
    let mut converged = 0;
    let cases = 8;
    for seed in 0..cases {
        let (n, k, m) = (
            [4, 8][seed as usize % 2],
            2,
            [8, 16][(seed as usize / 2) % 2],
        );
        let (cfg, ch) = scenario(n, k, m, 36.0, 10.0, seed);
        let sol = optimize(
            &cfg,
            &ch,
            &BcdOptions {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        for pair in sol.trace.windows(2) {
            let (a, b) = (pair[0].radar_snr, pair[1].radar_snr);
            assert!(
                b >= a * (1.0 - 1e-6),
                "seed {seed}: γ_r fell from {a} to {b}"
            );
        }
        assert!(
            validate_solution(&cfg, &ch, &sol, 1e-6).unwrap().feasible,
            "seed {seed}"
        );
        converged += sol.converged as usize;
    }
    assert!(
        converged as f64 >= 0.9 * cases as f64,
        "{converged}/{cases} converged"
    );
}

#[test]
fn modes_order_as_expected() {
    let (cfg, ch) = scenario(4, 2, 8, 38.0, 10.0, 3);
    let run = |mode| {
        optimize(
            &cfg,
            &ch,
            &BcdOptions {
                mode,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap()
        .radar_snr
    };
    let active = run(Mode::ActiveIsac);
    assert!(active > 10.0 * run(Mode::PassiveIsac));
    assert!(run(Mode::RadarOnlyActive) >= active * (1.0 - 1e-6));
}

#[test]
fn converged_point_resists_perturbation() {
    let (cfg, ch) = scenario(4, 2, 8, 36.0, 10.0, 7);
    let sol = optimize(
        &cfg,
        &ch,
        &BcdOptions {
            seed: 7,
            ..Default::default()
        },
    )
    .unwrap();
    let one_round = optimize(
        &cfg,
        &ch,
        &BcdOptions {
            seed: 7,
            max_outer: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let cert = local_opt_certificate(&cfg, &ch, &sol, 1000, 1e-3, 1).unwrap();
    let early = local_opt_certificate(&cfg, &ch, &one_round, 1000, 1e-3, 1).unwrap();
    assert!(cert.improving_fraction <= 0.01, "{cert:?}");
    assert!(
        early.improving_fraction > cert.improving_fraction,
        "{early:?} vs {cert:?}"
    );
}
