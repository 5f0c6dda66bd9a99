//! Empirical local-optimality check: does any small feasible perturbation of
//! `(W, φ)` raise the radar SNR once `u` is re-optimized?

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{ris_reflect_power, user_sinrs, ChannelSet, DesignSolution, SystemConfig};
use crate::solver::filter::{build_filter_matrices, update_filter};
use crate::{CMat, CVec, C64};

/// Relative radar-SNR gain that counts as an improvement.
pub const IMPROVEMENT_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Radar SNR of the base point with the optimal filter.
    pub base_snr: f64,
    pub n_draws: usize,
    pub n_feasible: usize,
    pub n_improving: usize,
    /// `n_improving / n_feasible`, zero when nothing was feasible.
    pub improving_fraction: f64,
    pub best_relative_gain: f64,
}

fn unit_direction<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let d = CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let n = d.norm();
    if n > 0.0 {
        d / C64::from(n)
    } else {
        d
    }
}

fn optimal_snr(cfg: &SystemConfig, ch: &ChannelSet, w: &CMat, phi: &CVec) -> Result<f64> {
    Ok(update_filter(&build_filter_matrices(cfg, ch, w, phi)?, cfg.rcs_var)?.value)
}

/// Draws `n_perturb` perturbations `W + r‖W‖_F D`, `φ + r‖φ‖ d` with unit
/// Frobenius-norm random directions. The BS budget and amplitude cap are
/// restored by scaling `W` and clipping `φ`; draws that then violate the RIS
/// budget or an SINR target count as infeasible. Each feasible draw is scored
/// with its optimal filter.
pub fn local_opt_certificate(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    sol: &DesignSolution,
    n_perturb: usize,
    radius: f64,
    seed: u64,
) -> Result<CertificateReport> {
    let base_snr = optimal_snr(cfg, ch, &sol.w_mat, &sol.phi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let w_scale = radius * sol.w_mat.norm();
    let phi_scale = radius
        * if sol.phi.norm() > 0.0 {
            sol.phi.norm()
        } else {
            cfg.a_max * (cfg.n_ris as f64).sqrt()
        };
    let (mut n_feasible, mut n_improving, mut best_gain) = (0, 0, f64::NEG_INFINITY);
    for _ in 0..n_perturb {
        let mut w =
            &sol.w_mat + unit_direction(&mut rng, cfg.n_bs, cfg.n_streams()) * C64::from(w_scale);
        let d = unit_direction(&mut rng, cfg.n_ris, 1);
        let phi = CVec::from_fn(cfg.n_ris, |m, _| {
            let p = sol.phi[m] + d[m] * phi_scale;
            if p.norm() > cfg.a_max {
                p * (cfg.a_max / p.norm())
            } else {
                p
            }
        });
        let pw = w.norm_squared();
        if pw > cfg.p_bs {
            w *= C64::from((cfg.p_bs / pw).sqrt());
        }
        if cfg.ris_power_limited() && ris_reflect_power(cfg, ch, &w, &phi)? > cfg.p_ris {
            continue;
        }
        if user_sinrs(cfg, ch, &w, &phi)?
            .iter()
            .zip(&cfg.gamma_targets)
            .any(|(s, g)| s < g)
        {
            continue;
        }
        n_feasible += 1;
        let gain = optimal_snr(cfg, ch, &w, &phi)? / base_snr - 1.0;
        best_gain = best_gain.max(gain);
        if gain > IMPROVEMENT_THRESHOLD {
            n_improving += 1;
        }
    }
    Ok(CertificateReport {
        base_snr,
        n_draws: n_perturb,
        n_feasible,
        n_improving,
        improving_fraction: if n_feasible > 0 {
            n_improving as f64 / n_feasible as f64
        } else {
            0.0
        },
        best_relative_gain: if n_feasible > 0 { best_gain } else { 0.0 },
    })
}
