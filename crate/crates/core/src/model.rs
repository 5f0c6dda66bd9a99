//! Signal model: scenario parameters, channels, and the closed-form
//! communication/radar/power quantities of the active-RIS ISAC link.
//!
//! Conventions: `W = [W_c W_r]` is `N×(K+N)`, column `i` is the precoder of
//! stream `i` (the first `K` streams carry user symbols). `φ` is the vector of
//! RIS reflection coefficients and `Φ = diag(φ)`. All closed forms here are
//! evaluated with linear algebra; symbol-level sampling lives in [`crate::oracle`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CMat, CVec, C64};

/// Converts a power in dBm to watts.
pub fn dbm_to_watt(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(p: f64) -> f64 {
    10.0 * p.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Scalar scenario parameters. Powers and noise variances are in watts.
///
/// `p_ris = f64::INFINITY` drops the RIS power constraint and `sigma2_z = 0`
/// models a noiseless (passive) surface; both are used by the passive baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_bs: usize,
    pub n_users: usize,
    pub n_ris: usize,
    pub p_bs: f64,
    pub p_ris: f64,
    pub sigma2_z: f64,
    pub sigma2_r: f64,
    pub sigma2_user: Vec<f64>,
    pub gamma_targets: Vec<f64>,
    pub a_max: f64,
    pub rcs_var: f64,
}

impl SystemConfig {
    /// Scenario used throughout the simulations: every user shares the same
    /// SINR target and all noise powers are equal.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        n_bs: usize,
        n_users: usize,
        n_ris: usize,
        p_bs: f64,
        p_ris: f64,
        noise: f64,
        gamma: f64,
        a_max: f64,
        rcs_var: f64,
    ) -> Self {
        Self {
            n_bs,
            n_users,
            n_ris,
            p_bs,
            p_ris,
            sigma2_z: noise,
            sigma2_r: noise,
            sigma2_user: vec![noise; n_users],
            gamma_targets: vec![gamma; n_users],
            a_max,
            rcs_var,
        }
    }

    /// Number of transmit streams `K + N`.
    pub fn n_streams(&self) -> usize {
        self.n_users + self.n_bs
    }

    pub fn ris_power_limited(&self) -> bool {
        self.p_ris.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Error {
            Error::InvalidConfig {
                field,
                reason: reason.into(),
            }
        }
        if self.n_bs == 0 {
            return Err(bad("n_bs", "must be at least 1"));
        }
        if self.n_users == 0 {
            return Err(bad("n_users", "must be at least 1"));
        }
        if self.n_ris == 0 {
            return Err(bad("n_ris", "must be at least 1"));
        }
        if !(self.p_bs.is_finite() && self.p_bs >= 0.0) {
            return Err(bad(
                "p_bs",
                format!("must be non-negative and finite, got {}", self.p_bs),
            ));
        }
        if self.p_ris.is_nan() || self.p_ris <= 0.0 {
            return Err(bad(
                "p_ris",
                format!("must be positive, got {}", self.p_ris),
            ));
        }
        if !(self.sigma2_z.is_finite() && self.sigma2_z >= 0.0) {
            return Err(bad(
                "sigma2_z",
                format!("must be non-negative, got {}", self.sigma2_z),
            ));
        }
        if !(self.sigma2_r.is_finite() && self.sigma2_r > 0.0) {
            return Err(bad(
                "sigma2_r",
                format!("must be positive, got {}", self.sigma2_r),
            ));
        }
        if self.sigma2_user.len() != self.n_users {
            return Err(bad(
                "sigma2_user",
                format!(
                    "has {} entries, expected {}",
                    self.sigma2_user.len(),
                    self.n_users
                ),
            ));
        }
        if let Some(s) = self
            .sigma2_user
            .iter()
            .find(|s| !(s.is_finite() && **s > 0.0))
        {
            return Err(bad(
                "sigma2_user",
                format!("entries must be positive, got {s}"),
            ));
        }
        if self.gamma_targets.len() != self.n_users {
            return Err(bad(
                "gamma_targets",
                format!(
                    "has {} entries, expected {}",
                    self.gamma_targets.len(),
                    self.n_users
                ),
            ));
        }
        if let Some(g) = self
            .gamma_targets
            .iter()
            .find(|g| !(g.is_finite() && **g >= 0.0))
        {
            return Err(bad(
                "gamma_targets",
                format!("entries must be non-negative, got {g}"),
            ));
        }
        if !(self.a_max.is_finite() && self.a_max > 0.0) {
            return Err(bad(
                "a_max",
                format!("must be positive, got {}", self.a_max),
            ));
        }
        if !(self.rcs_var.is_finite() && self.rcs_var >= 0.0) {
            return Err(bad(
                "rcs_var",
                format!("must be non-negative, got {}", self.rcs_var),
            ));
        }
        Ok(())
    }
}

/// The four channel blocks: direct BS–user links (row `k` is `h_{d,k}ᵀ`),
/// BS–RIS `G` (`M×N`), RIS–user links (row `k` is `h_{r,k}ᵀ`) and the
/// line-of-sight RIS–target link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_d: CMat,
    pub g_mat: CMat,
    pub h_r: CMat,
    pub h_rt: CVec,
}

impl ChannelSet {
    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        let (k, n, m) = (cfg.n_users, cfg.n_bs, cfg.n_ris);
        let shape = |name: &str, got: (usize, usize), want: (usize, usize)| {
            if got != want {
                Err(Error::Dimension(format!(
                    "{name} is {got:?}, expected {want:?}"
                )))
            } else {
                Ok(())
            }
        };
        shape("h_d", self.h_d.shape(), (k, n))?;
        shape("g_mat", self.g_mat.shape(), (m, n))?;
        shape("h_r", self.h_r.shape(), (k, m))?;
        shape("h_rt", (self.h_rt.len(), 1), (m, 1))?;
        let finite = |x: &C64| x.re.is_finite() && x.im.is_finite();
        if !(self.h_d.iter().all(finite)
            && self.g_mat.iter().all(finite)
            && self.h_r.iter().all(finite)
            && self.h_rt.iter().all(finite))
        {
            return Err(Error::Invalid("channel entries must be finite".into()));
        }
        Ok(())
    }
}

/// Constraint residuals for a candidate design (BS power, RIS power, user
/// SINR, element amplitude). Positive values are violations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// `‖W‖_F² − P_BS`.
    pub bs_power: f64,
    /// `P(W, φ) − P_RIS`; `-inf` when the RIS budget is unconstrained.
    pub ris_power: f64,
    /// `Γ_k − γ_k` per user.
    pub sinr: Vec<f64>,
    /// `|φ_m| − a_max` per element.
    pub amplitude: Vec<f64>,
    pub feasible: bool,
}

impl FeasibilityReport {
    /// Largest residual scaled by the matching budget, clamped at zero.
    pub fn max_relative_violation(&self, cfg: &SystemConfig) -> f64 {
        let mut worst = (self.bs_power / cfg.p_bs.max(f64::MIN_POSITIVE)).max(0.0);
        if cfg.ris_power_limited() {
            worst = worst.max(self.ris_power / cfg.p_ris);
        }
        for (r, g) in self.sinr.iter().zip(&cfg.gamma_targets) {
            if *g > 0.0 {
                worst = worst.max(r / g);
            }
        }
        for r in &self.amplitude {
            worst = worst.max(r / cfg.a_max);
        }
        worst.max(0.0)
    }
}

/// One outer round of the alternating optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub radar_snr: f64,
    pub max_violation: f64,
}

/// Optimized design `(W, φ, u)` with its achieved metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSolution {
    pub w_mat: CMat,
    pub phi: CVec,
    pub u: CVec,
    pub radar_snr: f64,
    pub user_sinrs: Vec<f64>,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
}

impl DesignSolution {
    /// Number of completed outer rounds.
    pub fn outer_iters(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }
}

/// Radar cascade matrices `H_t = GᵀΦh_{r,t}h_{r,t}ᵀΦG`,
/// `H_{z,0} = GᵀΦh_{r,t}h_{r,t}ᵀΦ` and `H_{z,1} = GᵀΦ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarCascade {
    pub h_t: CMat,
    pub h_z0: CMat,
    pub h_z1: CMat,
}

fn check_phi(ch: &ChannelSet, phi: &CVec) -> Result<()> {
    if phi.len() != ch.g_mat.nrows() {
        return Err(Error::Dimension(format!(
            "phi has {} entries, the RIS has {} elements",
            phi.len(),
            ch.g_mat.nrows()
        )));
    }
    Ok(())
}

fn check_w(cfg: &SystemConfig, w_mat: &CMat) -> Result<()> {
    let want = (cfg.n_bs, cfg.n_streams());
    if w_mat.shape() != want {
        return Err(Error::Dimension(format!(
            "W is {:?}, expected {want:?}",
            w_mat.shape()
        )));
    }
    Ok(())
}

/// Composite BS→user-`k` channel `h_k = h_{d,k} + GᵀΦh_{r,k}`.
pub fn composite_channel(ch: &ChannelSet, phi: &CVec, k: usize) -> Result<CVec> {
    check_phi(ch, phi)?;
    if k >= ch.h_d.nrows() {
        return Err(Error::Dimension(format!("user index {k} out of range")));
    }
    let reflected = phi.component_mul(&ch.h_r.row(k).transpose());
    Ok(ch.h_d.row(k).transpose() + ch.g_mat.tr_mul(&reflected))
}

/// SINR of user `k`.
pub fn user_sinr(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
    k: usize,
) -> Result<f64> {
    check_w(cfg, w_mat)?;
    let h = composite_channel(ch, phi, k)?;
    let gains = w_mat.tr_mul(&h);
    let desired = gains[k].norm_sqr();
    let interference: f64 = gains
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, g)| g.norm_sqr())
        .sum();
    let ris_noise: f64 = ch
        .h_r
        .row(k)
        .iter()
        .zip(phi.iter())
        .map(|(h, p)| (h * p).norm_sqr())
        .sum::<f64>()
        * cfg.sigma2_z;
    Ok(desired / (interference + ris_noise + cfg.sigma2_user[k]))
}

pub fn user_sinrs(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
) -> Result<Vec<f64>> {
    (0..cfg.n_users)
        .map(|k| user_sinr(cfg, ch, w_mat, phi, k))
        .collect()
}

/// Cascaded target response `a = GᵀΦh_{r,t}`; `H_t = a aᵀ`.
pub(crate) fn target_response(ch: &ChannelSet, phi: &CVec) -> CVec {
    ch.g_mat.tr_mul(&phi.component_mul(&ch.h_rt))
}

pub fn radar_cascade(ch: &ChannelSet, phi: &CVec) -> Result<RadarCascade> {
    check_phi(ch, phi)?;
    let b = phi.component_mul(&ch.h_rt);
    let a = ch.g_mat.tr_mul(&b);
    let mut h_z1 = ch.g_mat.transpose();
    for (mut col, p) in h_z1.column_iter_mut().zip(phi.iter()) {
        col *= *p;
    }
    Ok(RadarCascade {
        h_t: &a * a.transpose(),
        h_z0: &a * b.transpose(),
        h_z1,
    })
}

/// Radar output SNR after the receive filter `u`.
pub fn radar_snr(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
    u: &CVec,
) -> Result<f64> {
    check_w(cfg, w_mat)?;
    if u.len() != cfg.n_bs {
        return Err(Error::Dimension(format!(
            "u has {} entries, expected {}",
            u.len(),
            cfg.n_bs
        )));
    }
    if u.norm_squared() == 0.0 {
        return Err(Error::ZeroFilter);
    }
    let cas = radar_cascade(ch, phi)?;
    let num = cfg.rcs_var * (w_mat.adjoint() * cas.h_t.adjoint() * u).norm_squared();
    let den = cfg.rcs_var * cfg.sigma2_z * (cas.h_z0.adjoint() * u).norm_squared()
        + cfg.sigma2_z * (cas.h_z1.adjoint() * u).norm_squared()
        + cfg.sigma2_r * u.norm_squared();
    Ok(num / den)
}

/// Power drawn by the active RIS across the forward and echo reflections.
pub fn ris_reflect_power(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
) -> Result<f64> {
    check_w(cfg, w_mat)?;
    check_phi(ch, phi)?;
    let gw = &ch.g_mat * w_mat;
    let forward: f64 = gw
        .row_iter()
        .zip(phi.iter())
        .map(|(row, p)| p.norm_sqr() * row.norm_squared())
        .sum();
    let b = phi.component_mul(&ch.h_rt);
    let b2 = b.norm_squared();
    let a = ch.g_mat.tr_mul(&b);
    let echo = cfg.rcs_var * b2 * w_mat.tr_mul(&a).norm_squared();
    let echo_noise = cfg.rcs_var * cfg.sigma2_z * b2 * b2;
    let dyn_noise = 2.0 * cfg.sigma2_z * phi.norm_squared();
    Ok(forward + echo + echo_noise + dyn_noise)
}

/// Per-constraint residuals for `(W, φ)`; `tol` is relative to each budget
/// (SINR residuals relative to `Γ_k`).
pub fn check_feasibility(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
    tol: f64,
) -> Result<FeasibilityReport> {
    let bs_power = w_mat.norm_squared() - cfg.p_bs;
    let ris_power = if cfg.ris_power_limited() {
        ris_reflect_power(cfg, ch, w_mat, phi)? - cfg.p_ris
    } else {
        f64::NEG_INFINITY
    };
    let sinrs = user_sinrs(cfg, ch, w_mat, phi)?;
    let sinr: Vec<f64> = cfg
        .gamma_targets
        .iter()
        .zip(&sinrs)
        .map(|(g, s)| g - s)
        .collect();
    let amplitude: Vec<f64> = phi.iter().map(|p| p.norm() - cfg.a_max).collect();

    let feasible = bs_power <= tol * cfg.p_bs
        && ris_power <= tol * cfg.p_ris
        && sinr
            .iter()
            .zip(&cfg.gamma_targets)
            .all(|(r, g)| *r <= tol * g)
        && amplitude.iter().all(|r| *r <= tol * cfg.a_max);
    Ok(FeasibilityReport {
        bs_power,
        ris_power,
        sinr,
        amplitude,
        feasible,
    })
}

/// Constraint residuals for a solved design.
pub fn validate_solution(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    sol: &DesignSolution,
    tol: f64,
) -> Result<FeasibilityReport> {
    check_feasibility(cfg, ch, &sol.w_mat, &sol.phi, tol)
}
