//! Block coordinate ascent over `(u, W, φ)` and the baseline variants.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_feasibility, composite_channel, radar_snr, ris_reflect_power, target_response,
    user_sinrs, ChannelSet, DesignSolution, SystemConfig, TraceEntry,
};
use crate::numerics::herm_max_eigpair;
use crate::solver::beamformer::{
    build_w_data, mm_update_w, restore_feasibility, w_feasible, MmOptions,
};
use crate::solver::filter::{build_filter_matrices, update_filter};
use crate::solver::reflection::{update_phi, PhiOptions};
use crate::{CMat, CVec, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Active RIS with SINR targets.
    ActiveIsac,
    /// Passive RIS (`|φ_m| ≤ 1`, no amplifier noise) with the combined power
    /// budget `P_BS + P_RIS` at the BS.
    PassiveIsac,
    /// Active RIS without communication constraints.
    RadarOnlyActive,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::ActiveIsac, Mode::PassiveIsac, Mode::RadarOnlyActive];

    pub fn name(&self) -> &'static str {
        match self {
            Mode::ActiveIsac => "active_isac",
            Mode::PassiveIsac => "passive_isac",
            Mode::RadarOnlyActive => "radar_only_active",
        }
    }

    /// The scenario actually solved in this mode.
    pub fn apply(&self, cfg: &SystemConfig) -> Result<SystemConfig> {
        let mut out = cfg.clone();
        match self {
            Mode::ActiveIsac => {}
            Mode::PassiveIsac => {
                if !cfg.p_ris.is_finite() {
                    return Err(Error::InvalidConfig {
                        field: "p_ris",
                        reason: "must be finite to form the passive power budget".into(),
                    });
                }
                out.a_max = 1.0;
                out.sigma2_z = 0.0;
                out.p_bs = cfg.p_bs + cfg.p_ris;
                out.p_ris = f64::INFINITY;
            }
            Mode::RadarOnlyActive => out.gamma_targets.iter_mut().for_each(|g| *g = 0.0),
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Filter,
    Beamformer,
    Reflection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcdOptions {
    pub max_outer: usize,
    /// Stop when the relative change of `γ_r` over a round falls below this.
    pub rel_tol: f64,
    pub seed: u64,
    pub mode: Mode,
    pub order: [Block; 3],
    pub w_opts: MmOptions,
    pub phi_opts: PhiOptions,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self {
            max_outer: 50,
            rel_tol: 1e-4,
            seed: 0,
            mode: Mode::ActiveIsac,
            order: [Block::Filter, Block::Beamformer, Block::Reflection],
            w_opts: MmOptions::default(),
            phi_opts: PhiOptions::default(),
        }
    }
}

/// Regularized zero-forcing toward the users plus a matched-filter radar
/// beam toward the cascaded target response, scaled to `‖W‖_F² = P_BS`.
fn initial_beamformer(cfg: &SystemConfig, ch: &ChannelSet, phi: &CVec) -> Result<CMat> {
    let (n, k) = (cfg.n_bs, cfg.n_users);
    let mut h = CMat::zeros(k, n);
    for i in 0..k {
        h.row_mut(i)
            .copy_from(&composite_channel(ch, phi, i)?.transpose());
    }
    let noise = cfg.sigma2_user.iter().sum::<f64>() / k as f64;
    let reg = k as f64 * noise / cfg.p_bs.max(f64::MIN_POSITIVE);
    let gram = &h * h.adjoint() + CMat::identity(k, k) * C64::from(reg);
    let inv = gram.try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let w_c = h.adjoint() * inv;
    let mut w = CMat::zeros(n, cfg.n_streams());
    for i in 0..k {
        let col = w_c.column(i);
        let nrm = col.norm();
        if nrm > 0.0 {
            w.column_mut(i).copy_from(&(col / C64::from(nrm)));
        }
    }
    let target = target_response(ch, phi).conjugate();
    let tn = target.norm();
    if tn > 0.0 {
        w.column_mut(k).copy_from(&(target / C64::from(tn)));
    } else {
        w[(0, k)] = C64::new(1.0, 0.0);
    }
    let total = w.norm_squared();
    Ok(w * C64::from((cfg.p_bs / total).sqrt()))
}

/// Completes a candidate start: restores SINR feasibility if needed and
/// scores it by the radar SNR under the optimal filter.
fn finish_start(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    mut w: CMat,
    phi: CVec,
) -> Result<(CMat, CVec, f64)> {
    let u = CVec::from_element(cfg.n_bs, C64::new(1.0, 0.0));
    let data = build_w_data(cfg, ch, &phi, &u)?;
    if !w_feasible(&data, cfg, &w, 1e-9) {
        w = restore_feasibility(&data, cfg, &MmOptions::default())?;
    }
    let report = check_feasibility(cfg, ch, &w, &phi, 1e-6)?;
    if !report.feasible {
        return Err(Error::Infeasible(format!(
            "initial point violates constraints: {report:?}"
        )));
    }
    let score = update_filter(&build_filter_matrices(cfg, ch, &w, &phi)?, cfg.rcs_var)?.value;
    Ok((w, phi, score))
}

/// Largest `x ∈ [0, hi]` with `f(x) ≤ target` for `f` increasing from below
/// `target` at zero.
fn bisect(hi: f64, target: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

/// Unit-modulus phases that maximize `‖Gᵀ diag(h_{r,t}) φ‖` up to the
/// unit-modulus projection: the principal eigenvector of the target gain with
/// its amplitudes discarded.
fn target_aligned_phases(ch: &ChannelSet) -> Result<CVec> {
    let mut a = ch.g_mat.transpose();
    for (mut col, h) in a.column_iter_mut().zip(ch.h_rt.iter()) {
        col *= *h;
    }
    let (_, v) = herm_max_eigpair(&(a.adjoint() * &a))?;
    Ok(v.map(|x| {
        if x.norm() > 0.0 {
            x / x.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    }))
}

/// Best feasible start for one phase pattern, scored by the radar SNR under
/// the optimal filter.
fn start_for_phases(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    phases: &CVec,
) -> Result<(CMat, CVec, f64)> {
    let at = |amp: f64, p_bs: f64| -> Result<(CMat, CVec, f64)> {
        let phi = phases * C64::from(amp);
        let w = if p_bs > 0.0 {
            let scaled = SystemConfig {
                p_bs,
                ..cfg.clone()
            };
            initial_beamformer(&scaled, ch, &phi)?
        } else {
            CMat::zeros(cfg.n_bs, cfg.n_streams())
        };
        let p = ris_reflect_power(cfg, ch, &w, &phi)?;
        Ok((w, phi, p))
    };
    let (w, phi, p_top) = at(cfg.a_max, cfg.p_bs)?;
    let target = 0.9 * cfg.p_ris;
    if !cfg.ris_power_limited() || p_top <= target {
        return finish_start(cfg, ch, w, phi);
    }
    let amp = bisect(cfg.a_max, target, |a| Ok(at(a, cfg.p_bs)?.2))?;
    let (w1, phi1, _) = at(amp, cfg.p_bs)?;
    let first = finish_start(cfg, ch, w1, phi1);
    let p_bs = bisect(cfg.p_bs, target, |p| Ok(at(cfg.a_max, p)?.2))?;
    let (w2, phi2, _) = at(cfg.a_max, p_bs)?;
    best_of(first, finish_start(cfg, ch, w2, phi2))
}

fn best_of(
    a: Result<(CMat, CVec, f64)>,
    b: Result<(CMat, CVec, f64)>,
) -> Result<(CMat, CVec, f64)> {
    match (a, b) {
        (Ok(a), Ok(b)) => Ok(if b.2 > a.2 { b } else { a }),
        (Ok(a), Err(_)) | (Err(_), Ok(a)) => Ok(a),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Starting point for the alternating updates.
///
/// Two phase patterns are tried: uniform random phases and the phases that
/// co-phase the BS–RIS–target path. Each gets a common amplitude. When the
/// RIS budget binds, each pattern yields two starts: the full-power
/// beamformer with the amplitude lowered until the RIS draws `0.9·P_RIS`, and
/// the amplitude at `a_max` with the beamformer power lowered instead. Every
/// start is made SINR feasible by the beamformer pre-phase and the one with
/// the largest radar SNR is returned.
pub fn initialize(cfg: &SystemConfig, ch: &ChannelSet, seed: u64) -> Result<(CMat, CVec)> {
    cfg.validate()?;
    ch.check(cfg)?;
    let gamma_active = cfg.gamma_targets.iter().any(|&g| g > 0.0);
    if cfg.p_bs <= 0.0 && gamma_active {
        return Err(Error::Infeasible(
            "no BS power available for positive SINR targets".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let random = CVec::from_fn(cfg.n_ris, |_, _| {
        C64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)
    });
    let aligned = target_aligned_phases(ch)?;
    let (w, phi, _) = best_of(
        start_for_phases(cfg, ch, &random),
        start_for_phases(cfg, ch, &aligned),
    )?;
    Ok((w, phi))
}

fn round_entry(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    iter: usize,
    w: &CMat,
    phi: &CVec,
    u: &CVec,
) -> Result<TraceEntry> {
    Ok(TraceEntry {
        iter,
        radar_snr: radar_snr(cfg, ch, w, phi, u)?,
        max_violation: check_feasibility(cfg, ch, w, phi, 0.0)?.max_relative_violation(cfg),
    })
}

/// Alternates the filter, beamformer and reflection updates until the radar
/// SNR stalls. Every update is safeguarded so the recorded SNR never drops.
pub fn optimize(cfg: &SystemConfig, ch: &ChannelSet, opts: &BcdOptions) -> Result<DesignSolution> {
    if opts.max_outer == 0 {
        return Err(Error::Invalid("max_outer must be at least 1".into()));
    }
    let cfg = opts.mode.apply(cfg)?;
    let cfg = &cfg;
    let (mut w, mut phi) = initialize(cfg, ch, opts.seed)?;
    let mut u = update_filter(&build_filter_matrices(cfg, ch, &w, &phi)?, cfg.rcs_var)?.u;
    let mut trace = vec![round_entry(cfg, ch, 0, &w, &phi, &u)?];
    let mut converged = false;

    for round in 1..=opts.max_outer {
        for block in opts.order {
            let t0 = Instant::now();
            match block {
                Block::Filter => {
                    u = update_filter(&build_filter_matrices(cfg, ch, &w, &phi)?, cfg.rcs_var)?.u;
                }
                Block::Beamformer => {
                    let data = build_w_data(cfg, ch, &phi, &u)?;
                    w = mm_update_w(&data, cfg, &w, &opts.w_opts)?.w_mat;
                }
                Block::Reflection => {
                    phi = update_phi(cfg, ch, &w, &u, &phi, &opts.phi_opts)?.phi;
                }
            }
            log::debug!("round {round} {block:?}: {:?}", t0.elapsed());
        }
        let entry = round_entry(cfg, ch, round, &w, &phi, &u)?;
        let prev = trace.last().map(|e| e.radar_snr).unwrap_or(0.0);
        let change = (entry.radar_snr - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
        log::debug!("round {round}: radar SNR {:.6e}", entry.radar_snr);
        trace.push(entry);
        if change < opts.rel_tol {
            converged = true;
            break;
        }
    }
    let refreshed = update_filter(&build_filter_matrices(cfg, ch, &w, &phi)?, cfg.rcs_var)?.u;
    if radar_snr(cfg, ch, &w, &phi, &refreshed)? >= radar_snr(cfg, ch, &w, &phi, &u)? {
        u = refreshed;
    }
    Ok(DesignSolution {
        radar_snr: radar_snr(cfg, ch, &w, &phi, &u)?,
        user_sinrs: user_sinrs(cfg, ch, &w, &phi)?,
        w_mat: w,
        phi,
        u,
        trace,
        converged,
    })
}

/// [`optimize`] in the given mode.
pub fn run_baseline(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    mode: Mode,
    opts: &BcdOptions,
) -> Result<DesignSolution> {
    optimize(
        cfg,
        ch,
        &BcdOptions {
            mode,
            ..opts.clone()
        },
    )
}
