//! Monte-Carlo estimators built from the signal model itself.
//!
//! Each draw samples unit-power symbols `s = [s_c; s_r]`, the RIS dynamic
//! noise of both reflection passes, the receiver noises and, for the radar
//! echo, the target reflectivity `β ~ CN(0, ς²)`. Ratios are estimated as
//! the quotient of two sample means; the standard error uses the delta
//! method. Samples are drawn in fixed-size batches, each from its own
//! ChaCha8 stream, and batch sums are combined in batch order, so results do
//! not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ChannelSet, SystemConfig};
use crate::{CMat, CVec, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            seed: 0,
            batch_size: 1 << 14,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1000 {
            return Err(Error::InvalidConfig {
                field: "n_samples",
                reason: format!("must be at least 1000, got {}", self.n_samples),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig {
                field: "batch_size",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

impl McEstimate {
    /// `|value − x|` in units of the standard error.
    pub fn z_score(&self, x: f64) -> f64 {
        let d = (self.value - x).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_err
        }
    }
}

/// Running sums of two per-sample quantities `a` and `b`.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    a: f64,
    b: f64,
    aa: f64,
    bb: f64,
    ab: f64,
}

impl Moments {
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1.0;
        self.a += a;
        self.b += b;
        self.aa += a * a;
        self.bb += b * b;
        self.ab += a * b;
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.a += o.a;
        self.b += o.b;
        self.aa += o.aa;
        self.bb += o.bb;
        self.ab += o.ab;
        self
    }

    /// Mean of `a` and its standard error.
    fn mean_a(&self) -> (f64, f64) {
        let m = self.a / self.n;
        let var = (self.aa / self.n - m * m).max(0.0) * self.n / (self.n - 1.0);
        (m, (var / self.n).sqrt())
    }

    /// `mean(a)/mean(b)` and its delta-method standard error.
    fn ratio(&self) -> (f64, f64) {
        let n = self.n;
        let (ma, mb) = (self.a / n, self.b / n);
        if ma == 0.0 {
            return (0.0, 0.0);
        }
        let r = ma / mb;
        let va = self.aa / n - ma * ma;
        let vb = self.bb / n - mb * mb;
        let cab = self.ab / n - ma * mb;
        let var = ((va - 2.0 * r * cab + r * r * vb) / (mb * mb)).max(0.0) / (n - 1.0);
        (r, var.sqrt())
    }
}

/// Draws from `CN(0, var)`.
fn cn(rng: &mut ChaCha8Rng, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

fn cn_vec(rng: &mut ChaCha8Rng, n: usize, var: f64) -> CVec {
    CVec::from_fn(n, |_, _| cn(rng, var))
}

/// Runs `draw` on every sample, batch by batch, and folds the moments in
/// batch order.
fn sample<F>(mc: &McConfig, tag: u64, draw: F) -> Result<Moments>
where
    F: Fn(&mut ChaCha8Rng) -> (f64, f64) + Sync,
{
    mc.validate()?;
    let n_batches = mc.n_samples.div_ceil(mc.batch_size);
    let batches: Vec<Moments> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream((tag << 40) | b as u64);
            let len = mc.batch_size.min(mc.n_samples - b * mc.batch_size);
            let mut m = Moments::default();
            for _ in 0..len {
                let (a, b) = draw(&mut rng);
                m.push(a, b);
            }
            m
        })
        .collect();
    Ok(batches.into_iter().fold(Moments::default(), Moments::merge))
}

fn check_dims(cfg: &SystemConfig, ch: &ChannelSet, w_mat: &CMat, phi: &CVec) -> Result<()> {
    ch.check(cfg)?;
    if w_mat.shape() != (cfg.n_bs, cfg.n_streams()) {
        return Err(Error::Dimension(format!(
            "W is {:?}, expected ({}, {})",
            w_mat.shape(),
            cfg.n_bs,
            cfg.n_streams()
        )));
    }
    if phi.len() != cfg.n_ris {
        return Err(Error::Dimension(format!(
            "φ has length {}, expected {}",
            phi.len(),
            cfg.n_ris
        )));
    }
    Ok(())
}

/// Outputs of one transmit slot propagated through both RIS passes.
struct Slot {
    /// Reflected signal of the forward pass, `Φ(Gx + z₀)`.
    forward: CVec,
    /// Reflected signal of the echo pass, `Φ(h_{r,t}·β h_{r,t}ᵀ forward + z₁)`.
    echo: CVec,
    /// Part of `echo` carried by `x` alone, `Φh_{r,t}·β h_{r,t}ᵀΦGx`.
    echo_signal: CVec,
}

fn propagate(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    phi: &CVec,
    x: &CVec,
    rng: &mut ChaCha8Rng,
) -> Slot {
    let gx = &ch.g_mat * x;
    let z0 = cn_vec(rng, cfg.n_ris, cfg.sigma2_z);
    let z1 = cn_vec(rng, cfg.n_ris, cfg.sigma2_z);
    let beta = cn(rng, cfg.rcs_var);
    let forward = phi.component_mul(&(&gx + &z0));
    let at_target = beta * ch.h_rt.dot(&forward);
    let echo = phi.component_mul(&(&ch.h_rt * at_target + z1));
    let sig_target = beta * ch.h_rt.dot(&phi.component_mul(&gx));
    let echo_signal = phi.component_mul(&(&ch.h_rt * sig_target));
    Slot {
        forward,
        echo,
        echo_signal,
    }
}

/// Estimate of user `k`'s SINR: power of `h_kᵀw_k s_k` over the power of the
/// rest of `y_k`.
pub fn mc_user_sinr(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
    k: usize,
    mc: &McConfig,
) -> Result<McEstimate> {
    check_dims(cfg, ch, w_mat, phi)?;
    if k >= cfg.n_users {
        return Err(Error::Dimension(format!("user index {k} out of range")));
    }
    let h_d = ch.h_d.row(k).transpose();
    let h_r = ch.h_r.row(k).transpose();
    let w_k = w_mat.column(k).into_owned();
    let sigma2 = cfg.sigma2_user[k];
    let m = sample(mc, 1 + k as u64, |rng| {
        let s = cn_vec(rng, cfg.n_streams(), 1.0);
        let x = w_mat * &s;
        let z0 = cn_vec(rng, cfg.n_ris, cfg.sigma2_z);
        let at_ris = phi.component_mul(&(&ch.g_mat * &x + &z0));
        let y = h_d.dot(&x) + h_r.dot(&at_ris) + cn(rng, sigma2);
        let desired_tx = &w_k * s[k];
        let desired =
            h_d.dot(&desired_tx) + h_r.dot(&phi.component_mul(&(&ch.g_mat * &desired_tx)));
        (desired.norm_sqr(), (y - desired).norm_sqr())
    })?;
    let (value, std_err) = m.ratio();
    Ok(McEstimate {
        value,
        std_err,
        n_samples: mc.n_samples,
    })
}

/// Estimate of the radar output SNR after the filter `u`: power of the
/// target echo of `x` over the power of everything else in `uᴴy_r`.
pub fn mc_radar_snr(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
    u: &CVec,
    mc: &McConfig,
) -> Result<McEstimate> {
    check_dims(cfg, ch, w_mat, phi)?;
    if u.len() != cfg.n_bs {
        return Err(Error::Dimension(format!(
            "u has length {}, expected {}",
            u.len(),
            cfg.n_bs
        )));
    }
    if u.norm() == 0.0 {
        return Err(Error::ZeroFilter);
    }
    let gt = ch.g_mat.transpose();
    let m = sample(mc, 64, |rng| {
        let x = w_mat * cn_vec(rng, cfg.n_streams(), 1.0);
        let slot = propagate(cfg, ch, phi, &x, rng);
        let y = &gt * &slot.echo + cn_vec(rng, cfg.n_bs, cfg.sigma2_r);
        let out = u.dotc(&y);
        let signal = u.dotc(&(&gt * &slot.echo_signal));
        (signal.norm_sqr(), (out - signal).norm_sqr())
    })?;
    let (value, std_err) = m.ratio();
    Ok(McEstimate {
        value,
        std_err,
        n_samples: mc.n_samples,
    })
}

/// Estimate of the mean power radiated by the RIS over both reflection passes.
pub fn mc_ris_power(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
    mc: &McConfig,
) -> Result<McEstimate> {
    check_dims(cfg, ch, w_mat, phi)?;
    let m = sample(mc, 65, |rng| {
        let x = w_mat * cn_vec(rng, cfg.n_streams(), 1.0);
        let slot = propagate(cfg, ch, phi, &x, rng);
        (slot.forward.norm_squared() + slot.echo.norm_squared(), 0.0)
    })?;
    let (value, std_err) = m.mean_a();
    Ok(McEstimate {
        value,
        std_err,
        n_samples: mc.n_samples,
    })
}
