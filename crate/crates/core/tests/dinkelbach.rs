//! Reflection update on the default scenario: ratio ascent, termination and
//! the returned ratio.

mod common;

use arisac::model::{check_feasibility, radar_snr};
use arisac::solver::reflection::{
    build_phi_data, build_surrogates, solve_phi_subproblem, update_phi, PhiOptions,
};
use common::{scenario, started};

/// Caps high enough that every instance stops on the gap or the safeguard;
/// slow instances need up to a few dozen rounds.
fn to_convergence() -> PhiOptions {
    PhiOptions {
        max_outer: 200,
        ..Default::default()
    }
}

#[test]
fn ratio_sequence_and_termination() {
    for seed in 0..20u64 {
        let m = if seed % 2 == 0 { 8 } else { 16 };
        let (cfg, ch) = scenario(4, 2, m, 30.0 + (seed % 4) as f64 * 4.0, 10.0, seed);
        let (w, phi0, u) = started(&cfg, &ch, seed);
        let up = update_phi(&cfg, &ch, &w, &u, &phi0, &to_convergence()).unwrap();
        assert!(up.outer_iters < 200, "seed {seed}: hit the round cap");
        for pair in up.varpi_trace.windows(2) {
            assert!(pair[1] >= pair[0], "seed {seed}: ϖ decreased {pair:?}");
        }
        assert!(up.final_gap <= 1e-6, "seed {seed}: gap {}", up.final_gap);
        let snr = radar_snr(&cfg, &ch, &w, &up.phi, &u).unwrap();
        assert!(
            (up.ratio() - snr).abs() <= 1e-8 * snr,
            "seed {seed}: ϖ {} vs γ_r {snr}",
            up.ratio()
        );
        assert!(
            check_feasibility(&cfg, &ch, &w, &up.phi, 1e-6)
                .unwrap()
                .feasible
        );
    }
}

#[test]
fn accepted_subproblem_points_meet_true_constraints() {
    for seed in 0..10u64 {
        let (cfg, ch) = scenario(4, 2, 8, 40.0, 12.0, 100 + seed);
        let (w, phi, u) = started(&cfg, &ch, seed);
        let data = build_phi_data(&cfg, &ch, &w, &u).unwrap();
        let varpi = data.f_val(&phi) / data.g_val(&phi);
        let sur = build_surrogates(&data, varpi, &phi, &cfg).unwrap();
        let (cand, _) =
            solve_phi_subproblem(&sur, &data, &cfg, &phi, &PhiOptions::default()).unwrap();
        let rep = check_feasibility(&cfg, &ch, &w, &cand, 1e-6).unwrap();
        assert!(rep.feasible, "seed {seed}: {rep:?}");
    }
}
