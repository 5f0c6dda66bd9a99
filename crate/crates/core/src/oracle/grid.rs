//! Exhaustive search over reflection vectors for tiny RIS sizes, with the
//! beamformer and the receive filter held fixed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{radar_snr, ris_reflect_power, user_sinr, ChannelSet, SystemConfig};
use crate::{CMat, CVec, C64};

/// Largest RIS the grid search accepts.
pub const MAX_GRID_ELEMENTS: usize = 3;

/// Per-element grid: amplitudes `a_max·i/n_amplitudes` for `i = 1..=n_amplitudes`
/// and phases `2πj/n_phases`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n_phases: usize,
    pub n_amplitudes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_phases: 64,
            n_amplitudes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub phi: CVec,
    pub radar_snr: f64,
    pub n_points: usize,
    pub n_feasible: usize,
}

fn grid_point(spec: &GridSpec, a_max: f64, m: usize, mut idx: usize) -> CVec {
    let per = spec.n_phases * spec.n_amplitudes;
    let mut phi = CVec::zeros(m);
    for e in phi.iter_mut() {
        let local = idx % per;
        idx /= per;
        let amp = a_max * (local / spec.n_phases + 1) as f64 / spec.n_amplitudes as f64;
        let phase = std::f64::consts::TAU * (local % spec.n_phases) as f64 / spec.n_phases as f64;
        *e = C64::from_polar(amp, phase);
    }
    phi
}

/// Best grid point for the radar SNR at fixed `(W, u)` among those meeting
/// the RIS power budget and the SINR targets exactly. Ties go to the lowest
/// grid index.
pub fn grid_best_phi(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    u: &CVec,
    spec: &GridSpec,
) -> Result<GridResult> {
    cfg.validate()?;
    ch.check(cfg)?;
    let m = cfg.n_ris;
    if m > MAX_GRID_ELEMENTS {
        return Err(Error::Invalid(format!(
            "grid search supports at most {MAX_GRID_ELEMENTS} elements, got {m}"
        )));
    }
    if spec.n_phases == 0 || spec.n_amplitudes == 0 {
        return Err(Error::Invalid(
            "grid needs at least one phase and one amplitude".into(),
        ));
    }
    let n_points = (spec.n_phases * spec.n_amplitudes).pow(m as u32);
    let evaluate = |idx: usize| -> Result<Option<f64>> {
        let phi = grid_point(spec, cfg.a_max, m, idx);
        if ris_reflect_power(cfg, ch, w_mat, &phi)? > cfg.p_ris {
            return Ok(None);
        }
        for k in 0..cfg.n_users {
            if user_sinr(cfg, ch, w_mat, &phi, k)? < cfg.gamma_targets[k] {
                return Ok(None);
            }
        }
        Ok(Some(radar_snr(cfg, ch, w_mat, &phi, u)?))
    };
    let scored: Vec<Option<f64>> = (0..n_points)
        .into_par_iter()
        .map(evaluate)
        .collect::<Result<_>>()?;
    let n_feasible = scored.iter().flatten().count();
    let best = scored
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|v| (i, v)))
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((i, v)),
        });
    let (idx, value) =
        best.ok_or_else(|| Error::Infeasible("no grid point satisfies the constraints".into()))?;
    Ok(GridResult {
        phi: grid_point(spec, cfg.a_max, m, idx),
        radar_snr: value,
        n_points,
        n_feasible,
    })
}
