//! `oracle`: solves one point of a spec and checks it against the oracle
//! module (Monte-Carlo closed forms, local-optimality certificate and, for
//! surfaces of at most three elements, the reflection grid search).

use std::fmt::Write;

use arisac::model::{radar_snr, ris_reflect_power, user_sinr};
use arisac::oracle::{
    grid::MAX_GRID_ELEMENTS, grid_best_phi, local_opt_certificate, mc_radar_snr, mc_ris_power,
    mc_user_sinr, GridSpec, McConfig,
};
use arisac::{optimize, synth_channels, BcdOptions};

use crate::spec::{ExperimentSpec, SpecError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub mc: McConfig,
    pub n_perturb: usize,
    pub radius: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            mc: McConfig::default(),
            n_perturb: 1000,
            radius: 1e-3,
        }
    }
}

/// Standard errors allowed between a closed form and its estimate.
const MAX_Z: f64 = 3.0;
/// Largest improving fraction accepted from the certificate.
const MAX_IMPROVING: f64 = 0.01;
/// Fraction of the grid optimum the reflection update must reach.
const GRID_RATIO: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub text: String,
    pub passed: bool,
}

/// Runs the oracle checks on the first mode and first sweep value of `spec`,
/// for every seed.
pub fn oracle_suite(
    spec: &ExperimentSpec,
    opts: &OracleOptions,
) -> Result<OracleReport, SpecError> {
    spec.check()?;
    let mode = spec.modes[0];
    let value = spec.sweep.values[0];
    let mut text = String::new();
    let mut passed = true;
    let mut verdict = |text: &mut String, ok: bool, line: String| {
        passed &= ok;
        writeln!(text, "{} {line}", if ok { "ok  " } else { "FAIL" }).unwrap();
    };
    for seed in spec.seeds() {
        let cfg = mode.apply(&spec.config_at(value)?)?;
        let ch = synth_channels(&cfg, &spec.geometry.build(cfg.n_users, seed))?;
        let sol = optimize(
            &cfg,
            &ch,
            &BcdOptions {
                seed,
                mode,
                ..Default::default()
            },
        )?;
        writeln!(
            text,
            "# {} {}={} seed {}: radar SNR {:.6e}",
            mode.name(),
            spec.sweep.parameter.name(),
            value,
            seed,
            sol.radar_snr
        )
        .unwrap();
        let mc = McConfig { seed, ..opts.mc };
        for k in 0..cfg.n_users {
            let est = mc_user_sinr(&cfg, &ch, &sol.w_mat, &sol.phi, k, &mc)?;
            let exact = user_sinr(&cfg, &ch, &sol.w_mat, &sol.phi, k)?;
            verdict(
                &mut text,
                est.z_score(exact) <= MAX_Z,
                format!(
                    "user {k} SINR closed form {exact:.6e}, estimate {:.6e} ± {:.2e}",
                    est.value, est.std_err
                ),
            );
        }
        let est = mc_radar_snr(&cfg, &ch, &sol.w_mat, &sol.phi, &sol.u, &mc)?;
        let exact = radar_snr(&cfg, &ch, &sol.w_mat, &sol.phi, &sol.u)?;
        verdict(
            &mut text,
            est.z_score(exact) <= MAX_Z,
            format!(
                "radar SNR closed form {exact:.6e}, estimate {:.6e} ± {:.2e}",
                est.value, est.std_err
            ),
        );
        let est = mc_ris_power(&cfg, &ch, &sol.w_mat, &sol.phi, &mc)?;
        let exact = ris_reflect_power(&cfg, &ch, &sol.w_mat, &sol.phi)?;
        verdict(
            &mut text,
            est.z_score(exact) <= MAX_Z,
            format!(
                "RIS power closed form {exact:.6e}, estimate {:.6e} ± {:.2e}",
                est.value, est.std_err
            ),
        );
        let cert = local_opt_certificate(&cfg, &ch, &sol, opts.n_perturb, opts.radius, seed)?;
        verdict(
            &mut text,
            cert.improving_fraction <= MAX_IMPROVING,
            format!(
                "certificate: {}/{} feasible perturbations improve (best relative gain {:.3e})",
                cert.n_improving, cert.n_feasible, cert.best_relative_gain
            ),
        );
        if cfg.n_ris <= MAX_GRID_ELEMENTS {
            let grid = grid_best_phi(&cfg, &ch, &sol.w_mat, &sol.u, &GridSpec::default())?;
            verdict(
                &mut text,
                sol.radar_snr >= GRID_RATIO * grid.radar_snr,
                format!(
                    "grid optimum for the returned (W, u): {:.6e}",
                    grid.radar_snr
                ),
            );
        }
    }
    Ok(OracleReport { text, passed })
}
