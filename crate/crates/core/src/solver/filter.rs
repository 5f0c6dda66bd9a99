//! Receive-filter update: maximize `ς²uᴴAu / uᴴBu` over `u`.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::model::{radar_cascade, ChannelSet, SystemConfig};
use crate::numerics::{gen_rayleigh_max, hermitian_part};
use crate::{CMat, CVec, C64};

/// Numerator and denominator matrices of the radar SNR as a quotient in `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterMatrices {
    /// `A = H_t W Wᴴ H_tᴴ`.
    pub a_mat: CMat,
    /// `B = ς²σ_z² H_{z,0}H_{z,0}ᴴ + σ_z² H_{z,1}H_{z,1}ᴴ + σ_r² I`.
    pub b_mat: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterUpdate {
    /// Unit-norm filter.
    pub u: CVec,
    /// Attained `ς²uᴴAu / uᴴBu`.
    pub value: f64,
    /// Set when `A = 0`, in which case every filter gives zero SNR.
    pub zero_snr: bool,
}

pub fn build_filter_matrices(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
) -> Result<FilterMatrices> {
    if w_mat.nrows() != cfg.n_bs {
        return Err(Error::Dimension(format!(
            "W has {} rows, expected {}",
            w_mat.nrows(),
            cfg.n_bs
        )));
    }
    let cas = radar_cascade(ch, phi)?;
    let htw = &cas.h_t * w_mat;
    let a_mat = hermitian_part(&(&htw * htw.adjoint()));
    let z0 = &cas.h_z0 * cas.h_z0.adjoint() * C64::from(cfg.rcs_var * cfg.sigma2_z);
    let z1 = &cas.h_z1 * cas.h_z1.adjoint() * C64::from(cfg.sigma2_z);
    let b_mat =
        hermitian_part(&(z0 + z1 + CMat::identity(cfg.n_bs, cfg.n_bs) * C64::from(cfg.sigma2_r)));
    Ok(FilterMatrices { a_mat, b_mat })
}

/// `f` with `A = ffᴴ` when `A` is rank one (to `1e−10` relative), else `None`.
fn rank_one_factor(a: &CMat) -> Option<CVec> {
    let (j, ajj) = a
        .diagonal()
        .iter()
        .enumerate()
        .map(|(j, d)| (j, d.re))
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
    if !(ajj > 0.0) {
        return None;
    }
    let f = a.column(j) / C64::from(ajj.sqrt());
    let resid = (&f * f.adjoint() - a).norm();
    (resid <= 1e-10 * a.norm()).then_some(f)
}

/// Globally optimal filter. For the rank-one numerator of the radar SNR the
/// maximizer is `u ∝ B⁻¹f` with value `ς²fᴴB⁻¹f`; other numerators go
/// through the generalized eigensolver.
pub fn update_filter(fm: &FilterMatrices, rcs_var: f64) -> Result<FilterUpdate> {
    let n = fm.b_mat.nrows();
    if fm.a_mat.shape() != (n, n) {
        return Err(Error::Dimension("A and B must have the same shape".into()));
    }
    if fm.a_mat.norm() == 0.0 || rcs_var == 0.0 {
        let mut u = CVec::zeros(n);
        u[0] = C64::new(1.0, 0.0);
        return Ok(FilterUpdate {
            u,
            value: 0.0,
            zero_snr: true,
        });
    }
    match rank_one_factor(&fm.a_mat) {
        Some(f) => {
            let chol = Cholesky::new(fm.b_mat.clone()).ok_or(Error::NotPositiveDefinite)?;
            let u = chol.solve(&f);
            let value = rcs_var * f.dotc(&u).re;
            let norm = u.norm();
            Ok(FilterUpdate {
                u: u / C64::from(norm),
                value,
                zero_snr: false,
            })
        }
        None => update_filter_generic(fm, rcs_var),
    }
}

/// Verification path: generalized eigensolve regardless of rank.
pub fn update_filter_generic(fm: &FilterMatrices, rcs_var: f64) -> Result<FilterUpdate> {
    let (lambda, u) = gen_rayleigh_max(&fm.a_mat, &fm.b_mat)?;
    Ok(FilterUpdate {
        u,
        value: rcs_var * lambda,
        zero_snr: lambda <= 0.0,
    })
}

/// `ς²uᴴAu / uᴴBu`.
pub fn filter_quotient(fm: &FilterMatrices, rcs_var: f64, u: &CVec) -> f64 {
    rcs_var * u.dotc(&(&fm.a_mat * u)).re / u.dotc(&(&fm.b_mat * u)).re
}
