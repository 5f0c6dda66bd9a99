//! Transmit-beamformer update: maximize `wᴴYw` by minorize-maximize steps,
//! each a second-order-cone program over the real embedding of `w = vec(W)`.
//!
//! Real variables are interleaved: complex entry `p` of `vec(W)` occupies
//! positions `2p` (real part) and `2p + 1` (imaginary part).

use crate::conic::{Backend, ConicOptions, ConicProblem, ConicStatus, SocConstraint};
use crate::error::{Error, Result};
use crate::model::{composite_channel, radar_cascade, ChannelSet, SystemConfig};
use crate::numerics::{hermitian_part, psd_factor};
use crate::{CMat, CVec, RMat, RVec, C64};

/// Relative margin by which conic budgets are tightened so that solver
/// round-off cannot push an accepted iterate over a true budget.
const BUDGET_MARGIN: f64 = 1e-7;

/// Data of the beamformer subproblem for fixed `(φ, u)`.
///
/// `Y = I ⊗ yyᴴ` and `Z = I ⊗ Z_blk` are kept as their `N×N` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct WProblemData {
    pub n_bs: usize,
    pub n_streams: usize,
    /// `y = H_tᴴu`.
    pub y_vec: CVec,
    /// `GᴴΦᴴΦG + ς²Z̃ᴴZ̃` with `Z̃ = Φh_{r,t}h_{r,t}ᵀΦG`.
    pub z_blk: CMat,
    /// `R` with `RᴴR = Z_blk`.
    pub z_factor: CMat,
    /// Row `k` is the composite channel `h_kᵀ`.
    pub h_users: CMat,
    pub c_ris: f64,
    pub c0: Vec<f64>,
}

impl WProblemData {
    /// `wᴴYw = Σ_i |yᴴw_i|²`.
    pub fn y_quad(&self, w_mat: &CMat) -> f64 {
        (w_mat.adjoint() * &self.y_vec).norm_squared()
    }

    /// `wᴴZw`.
    pub fn z_quad(&self, w_mat: &CMat) -> f64 {
        (&self.z_factor * w_mat).norm_squared()
    }

    /// Dense `N(K+N) × N(K+N)` operator `I ⊗ yyᴴ`, for tests.
    pub fn y_dense(&self) -> CMat {
        let blk = &self.y_vec * self.y_vec.adjoint();
        CMat::identity(self.n_streams, self.n_streams).kronecker(&blk)
    }

    /// Dense `I ⊗ Z_blk`, for tests.
    pub fn z_dense(&self) -> CMat {
        CMat::identity(self.n_streams, self.n_streams).kronecker(&self.z_blk)
    }

    pub fn sinr(&self, w_mat: &CMat, k: usize) -> f64 {
        let gains = self.h_users.row(k) * w_mat;
        let desired = gains[k].norm_sqr();
        let other: f64 = gains
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, g)| g.norm_sqr())
            .sum();
        desired / (other + self.c0[k])
    }

    /// `√(1+Γ)·Re{h_kᵀw_k} − √Γ‖[h_kᵀw_1, …, h_kᵀw_{K+N}, √c₀]‖`.
    pub fn sinr_soc_margin(&self, w_mat: &CMat, k: usize, gamma: f64) -> f64 {
        let gains = self.h_users.row(k) * w_mat;
        let spread = (gains.norm_squared() + self.c0[k]).sqrt();
        (1.0 + gamma).sqrt() * gains[k].re - gamma.sqrt() * spread
    }
}

pub fn build_w_data(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    phi: &CVec,
    u: &CVec,
) -> Result<WProblemData> {
    ch.check(cfg)?;
    if u.len() != cfg.n_bs {
        return Err(Error::Dimension(format!(
            "u has {} entries, expected {}",
            u.len(),
            cfg.n_bs
        )));
    }
    let cas = radar_cascade(ch, phi)?;
    let y_vec = cas.h_t.adjoint() * u;

    let b = phi.component_mul(&ch.h_rt);
    let a = ch.g_mat.tr_mul(&b);
    let b2 = b.norm_squared();
    let mut phi_g = ch.g_mat.clone();
    for (mut row, p) in phi_g.row_iter_mut().zip(phi.iter()) {
        row *= *p;
    }
    let echo = a.conjugate() * a.transpose() * C64::from(cfg.rcs_var * b2);
    let z_blk = hermitian_part(&(phi_g.adjoint() * &phi_g + echo));
    let z_factor = psd_factor(&z_blk, 1e-9, 1e-14)?;

    let mut h_users = CMat::zeros(cfg.n_users, cfg.n_bs);
    for k in 0..cfg.n_users {
        h_users
            .row_mut(k)
            .copy_from(&composite_channel(ch, phi, k)?.transpose());
    }
    let c_ris = cfg.rcs_var * cfg.sigma2_z * b2 * b2 + 2.0 * cfg.sigma2_z * phi.norm_squared();
    let c0 = (0..cfg.n_users)
        .map(|k| {
            let leak: f64 = ch
                .h_r
                .row(k)
                .iter()
                .zip(phi.iter())
                .map(|(h, p)| (h * p).norm_sqr())
                .sum();
            cfg.sigma2_z * leak + cfg.sigma2_user[k]
        })
        .collect();
    Ok(WProblemData {
        n_bs: cfg.n_bs,
        n_streams: cfg.n_streams(),
        y_vec,
        z_blk,
        z_factor,
        h_users,
        c_ris,
        c0,
    })
}

/// First-order minorizer `g(w) = 2Re{(Yw_s)ᴴw} − w_sᴴYw_s` of `wᴴYw`.
#[derive(Debug, Clone, PartialEq)]
pub struct WSurrogate {
    /// `Yw_s` reshaped to `N×(K+N)`.
    pub grad: CMat,
    pub constant: f64,
}

impl WSurrogate {
    pub fn eval(&self, w_mat: &CMat) -> f64 {
        2.0 * self.grad.dotc(w_mat).re + self.constant
    }
}

pub fn w_surrogate(data: &WProblemData, w_s: &CMat) -> WSurrogate {
    let proj = w_s.adjoint() * &data.y_vec;
    let grad = &data.y_vec * proj.adjoint();
    WSurrogate {
        grad,
        constant: -proj.norm_squared(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Run the feasibility pre-phase when `w_init` violates a SINR target.
    pub restore_feasibility: bool,
    pub conic: ConicOptions,
    pub backend: Backend,
}

impl Default for MmOptions {
    fn default() -> Self {
        Self {
            max_iters: 30,
            rel_tol: 1e-5,
            restore_feasibility: false,
            conic: ConicOptions::default(),
            backend: Backend::default(),
        }
    }
}

impl MmOptions {
    /// One minorize-maximize step per call.
    pub fn single_step() -> Self {
        Self {
            max_iters: 1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WUpdate {
    pub w_mat: CMat,
    /// `wᴴYw` at the start and after every accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub last_status: Option<ConicStatus>,
}

impl WUpdate {
    pub fn objective(&self) -> f64 {
        *self.trace.last().unwrap_or(&0.0)
    }
}

/// Rotates each user stream so that `h_kᵀw_k` is real and non-negative.
pub fn rotate_user_streams(data: &WProblemData, w_mat: &CMat) -> CMat {
    let mut w = w_mat.clone();
    for k in 0..data.h_users.nrows() {
        let g = (data.h_users.row(k) * w.column(k))[0];
        if g.norm() > 0.0 {
            let rot = (g / g.norm()).conj();
            for x in w.column_mut(k).iter_mut() {
                *x *= rot;
            }
        }
    }
    w
}

/// Whether `W` meets the BS budget, the RIS budget and every SINR target, each
/// to relative tolerance `tol`.
pub fn w_feasible(data: &WProblemData, cfg: &SystemConfig, w_mat: &CMat, tol: f64) -> bool {
    if w_mat.norm_squared() > cfg.p_bs * (1.0 + tol) {
        return false;
    }
    if cfg.ris_power_limited() && data.z_quad(w_mat) + data.c_ris > cfg.p_ris * (1.0 + tol) {
        return false;
    }
    cfg.gamma_targets
        .iter()
        .enumerate()
        .all(|(k, &g)| g == 0.0 || data.sinr(w_mat, k) >= g * (1.0 - tol))
}

fn ris_headroom(data: &WProblemData, cfg: &SystemConfig) -> Result<Option<f64>> {
    if !cfg.ris_power_limited() {
        return Ok(None);
    }
    let room = cfg.p_ris * (1.0 - BUDGET_MARGIN) - data.c_ris;
    if room <= 0.0 {
        return Err(Error::Infeasible(format!(
            "RIS noise alone draws {:.3e} W of the {:.3e} W budget",
            data.c_ris, cfg.p_ris
        )));
    }
    Ok(Some(room))
}

/// Real rows `(Re ℓ, Im ℓ)` of the complex linear form `ℓ(w) = Σ a_i w_{off+i}`.
fn linear_rows(coeffs: impl Iterator<Item = C64>, offset: usize, n_real: usize) -> (RVec, RVec) {
    let mut re = RVec::zeros(n_real);
    let mut im = RVec::zeros(n_real);
    for (i, a) in coeffs.enumerate() {
        let p = offset + i;
        re[2 * p] = a.re;
        re[2 * p + 1] = -a.im;
        im[2 * p] = a.im;
        im[2 * p + 1] = a.re;
    }
    (re, im)
}

/// Budget constraints shared by the MM step and the pre-phase, on the first
/// `2N(K+N)` of `n_vars` real variables.
fn budget_constraints(
    data: &WProblemData,
    cfg: &SystemConfig,
    n_vars: usize,
) -> Result<Vec<SocConstraint>> {
    let (n, s) = (data.n_bs, data.n_streams);
    let nw = 2 * n * s;
    let mut a = RMat::zeros(nw, n_vars);
    a.view_mut((0, 0), (nw, nw)).fill_with_identity();
    let mut out = vec![SocConstraint {
        a,
        b: RVec::zeros(nw),
        c: RVec::zeros(n_vars),
        d: (cfg.p_bs * (1.0 - BUDGET_MARGIN)).sqrt(),
    }];
    if let Some(room) = ris_headroom(data, cfg)? {
        let r = &data.z_factor;
        let rows = r.nrows();
        if rows > 0 {
            let mut a = RMat::zeros(2 * rows * s, n_vars);
            for i in 0..s {
                for j in 0..rows {
                    let (re, im) = linear_rows(r.row(j).iter().copied(), i * n, n_vars);
                    a.row_mut(2 * (i * rows + j)).copy_from(&re.transpose());
                    a.row_mut(2 * (i * rows + j) + 1).copy_from(&im.transpose());
                }
            }
            out.push(SocConstraint {
                a,
                b: RVec::zeros(2 * rows * s),
                c: RVec::zeros(n_vars),
                d: room.sqrt(),
            });
        }
    }
    Ok(out)
}

/// `√(1+Γ)Re{h_kᵀw_k}/√c₀ + slack ≥ √Γ‖[h_kᵀw_i/√c₀; 1]‖`, with the slack
/// variable at index `slack` if present.
fn sinr_constraint(
    data: &WProblemData,
    k: usize,
    gamma: f64,
    n_vars: usize,
    slack: Option<usize>,
) -> SocConstraint {
    let (n, s) = (data.n_bs, data.n_streams);
    let scale = 1.0 / data.c0[k].sqrt();
    let h = data.h_users.row(k);
    let sg = gamma.sqrt() * scale;
    let mut a = RMat::zeros(2 * s + 1, n_vars);
    let mut c = RVec::zeros(n_vars);
    for i in 0..s {
        let (re, im) = linear_rows(h.iter().copied(), i * n, n_vars);
        a.row_mut(2 * i).copy_from(&(&re * sg).transpose());
        a.row_mut(2 * i + 1).copy_from(&(&im * sg).transpose());
        if i == k {
            c = re * ((1.0 + gamma).sqrt() * scale);
        }
    }
    let mut b = RVec::zeros(2 * s + 1);
    b[2 * s] = gamma.sqrt();
    if let Some(j) = slack {
        c[j] = 1.0;
    }
    SocConstraint { a, b, c, d: 0.0 }
}

fn to_real(w_mat: &CMat) -> RVec {
    let v = w_mat.as_slice();
    RVec::from_fn(2 * v.len(), |i, _| {
        if i % 2 == 0 {
            v[i / 2].re
        } else {
            v[i / 2].im
        }
    })
}

fn from_real(z: &RVec, n: usize, s: usize) -> CMat {
    CMat::from_fn(n, s, |r, c| {
        let p = c * n + r;
        C64::new(z[2 * p], z[2 * p + 1])
    })
}

fn tightened(gamma: f64) -> f64 {
    gamma * (1.0 + BUDGET_MARGIN)
}

/// Feasibility pre-phase: minimizes a common normalized SINR slack under the
/// power budgets. Returns a feasible `W`, or `Infeasible` if the smallest
/// slack is positive.
pub fn restore_feasibility(
    data: &WProblemData,
    cfg: &SystemConfig,
    opts: &MmOptions,
) -> Result<CMat> {
    let (n, s) = (data.n_bs, data.n_streams);
    let nw = 2 * n * s;
    if cfg.gamma_targets.iter().all(|&g| g == 0.0) {
        return Ok(CMat::zeros(n, s));
    }
    let n_vars = nw + 1;
    let mut obj = RVec::zeros(n_vars);
    obj[nw] = 1.0;
    let mut p = ConicProblem::new(n_vars, obj);
    p.soc = budget_constraints(data, cfg, n_vars)?;
    for (k, &g) in cfg.gamma_targets.iter().enumerate() {
        if g > 0.0 {
            p.soc
                .push(sinr_constraint(data, k, tightened(g), n_vars, Some(nw)));
        }
    }
    let mut floor = RVec::zeros(n_vars);
    floor[nw] = 1.0;
    p.soc.push(SocConstraint::halfspace(floor, 1.0));

    let sol = opts.backend.solve(&p, &opts.conic)?;
    if sol.status == ConicStatus::Infeasible {
        return Err(Error::Infeasible(
            "power budgets admit no beamformer".into(),
        ));
    }
    let w = rotate_user_streams(data, &from_real(&sol.z, n, s));
    if w_feasible(data, cfg, &w, 1e-9) {
        return Ok(w);
    }
    Err(Error::Infeasible(format!(
        "SINR targets unattainable: smallest common slack {:.3e} ({:?})",
        sol.z[nw], sol.status
    )))
}

/// One MM step from `w_s`: the conic maximizer of the minorizer.
fn mm_step(
    data: &WProblemData,
    cfg: &SystemConfig,
    w_s: &CMat,
    opts: &MmOptions,
) -> Result<(Option<CMat>, ConicStatus)> {
    let (n, s) = (data.n_bs, data.n_streams);
    let n_vars = 2 * n * s;
    let sur = w_surrogate(data, w_s);
    let mut p = ConicProblem::new(n_vars, -to_real(&sur.grad));
    p.soc = budget_constraints(data, cfg, n_vars)?;
    for (k, &g) in cfg.gamma_targets.iter().enumerate() {
        if g > 0.0 {
            p.soc
                .push(sinr_constraint(data, k, tightened(g), n_vars, None));
        }
    }
    let sol = opts.backend.solve(&p, &opts.conic)?;
    let usable = matches!(
        sol.status,
        ConicStatus::Optimal | ConicStatus::MaxIter | ConicStatus::NumericalFailure
    );
    Ok((usable.then(|| from_real(&sol.z, n, s)), sol.status))
}

/// Minorize-maximize iterations on `wᴴYw` under the BS budget, the RIS
/// budget and the per-user SINR targets. Each step is accepted only if it is
/// feasible and does not lower the objective.
pub fn mm_update_w(
    data: &WProblemData,
    cfg: &SystemConfig,
    w_init: &CMat,
    opts: &MmOptions,
) -> Result<WUpdate> {
    if opts.max_iters == 0 {
        return Err(Error::Invalid("max_iters must be at least 1".into()));
    }
    if w_init.shape() != (data.n_bs, data.n_streams) {
        return Err(Error::Dimension(format!(
            "W is {:?}, expected ({}, {})",
            w_init.shape(),
            data.n_bs,
            data.n_streams
        )));
    }
    ris_headroom(data, cfg)?;
    let mut w = rotate_user_streams(data, w_init);
    if !w_feasible(data, cfg, &w, 1e-6) {
        if !opts.restore_feasibility {
            return Err(Error::Infeasible(
                "initial beamformer violates a constraint".into(),
            ));
        }
        w = restore_feasibility(data, cfg, opts)?;
    }
    let mut obj = data.y_quad(&w);
    let mut trace = vec![obj];
    let mut last_status = None;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        let (cand, status) = mm_step(data, cfg, &w, opts)?;
        last_status = Some(status);
        let Some(cand) = cand.map(|c| rotate_user_streams(data, &c)) else {
            break;
        };
        let cand_obj = data.y_quad(&cand);
        if !w_feasible(data, cfg, &cand, 1e-9) || cand_obj < obj {
            log::debug!("beamformer step rejected ({status:?}): {cand_obj:e} vs {obj:e}");
            break;
        }
        let change = (cand_obj - obj) / obj.abs().max(f64::MIN_POSITIVE);
        w = cand;
        obj = cand_obj;
        trace.push(obj);
        if change < opts.rel_tol {
            break;
        }
    }
    Ok(WUpdate {
        w_mat: w,
        trace,
        iterations,
        last_status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{radar_cascade, ris_reflect_power, tests::cn, user_sinr};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64, gamma: f64) -> (SystemConfig, ChannelSet, CVec, CVec) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, k, m) = (4, 2, 4);
        let cfg = SystemConfig::uniform(n, k, m, 1.0, 1.0, 0.01, gamma, 2.0, 0.5);
        let ch = ChannelSet {
            h_d: CMat::from_fn(k, n, |_, _| cn(&mut rng)),
            g_mat: CMat::from_fn(m, n, |_, _| cn(&mut rng)),
            h_r: CMat::from_fn(k, m, |_, _| cn(&mut rng)),
            h_rt: CVec::from_fn(m, |_, _| cn(&mut rng)),
        };
        let phi = CVec::from_fn(m, |_, _| cn(&mut rng));
        let u = CVec::from_fn(n, |_, _| cn(&mut rng)).normalize();
        (cfg, ch, phi, u)
    }

    fn random_w(seed: u64, n: usize, s: usize) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, s, |_, _| cn(&mut rng))
    }

    #[test]
    fn zero_phi_data() {
        let (cfg, ch, _, u) = instance(0, 1.0);
        let d = build_w_data(&cfg, &ch, &CVec::zeros(4), &u).unwrap();
        assert_eq!(d.y_vec.norm(), 0.0);
        assert_eq!(d.z_blk.norm(), 0.0);
        assert_eq!(d.c_ris, 0.0);
        assert_eq!(d.c0, cfg.sigma2_user);
    }

    #[test]
    fn operator_identities() {
        let (cfg, ch, phi, u) = instance(1, 1.0);
        let d = build_w_data(&cfg, &ch, &phi, &u).unwrap();
        let cas = radar_cascade(&ch, &phi).unwrap();
        for seed in 0..10 {
            let w = random_w(seed, 4, 6);
            let wv = CVec::from_column_slice(w.as_slice());
            let num = (u.adjoint() * &cas.h_t * &w * w.adjoint() * cas.h_t.adjoint() * &u)[0].re;
            assert_relative_eq!(d.y_quad(&w), num, max_relative = 1e-12);
            assert_relative_eq!(wv.dotc(&(d.y_dense() * &wv)).re, num, max_relative = 1e-12);
            let p = ris_reflect_power(&cfg, &ch, &w, &phi).unwrap();
            assert_relative_eq!(d.z_quad(&w) + d.c_ris, p, max_relative = 1e-12);
            assert_relative_eq!(
                wv.dotc(&(d.z_dense() * &wv)).re + d.c_ris,
                p,
                max_relative = 1e-12
            );
            for k in 0..2 {
                assert_relative_eq!(
                    d.sinr(&w, k),
                    user_sinr(&cfg, &ch, &w, &phi, k).unwrap(),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn single_stream_block_is_exact() {
        let (mut cfg, ch, phi, u) = instance(2, 1.0);
        cfg.n_users = 1;
        cfg.n_bs = 4;
        let ch1 = ChannelSet {
            h_d: ch.h_d.rows(0, 1).into_owned(),
            h_r: ch.h_r.rows(0, 1).into_owned(),
            ..ch.clone()
        };
        cfg.sigma2_user.truncate(1);
        cfg.gamma_targets.truncate(1);
        let d = build_w_data(&cfg, &ch1, &phi, &u).unwrap();
        let cas = radar_cascade(&ch1, &phi).unwrap();
        let blk = cas.h_t.adjoint() * &u * u.adjoint() * &cas.h_t;
        let dense = d.y_dense();
        assert!((dense.view((0, 0), (4, 4)) - &blk).norm() <= 1e-12 * blk.norm());
    }

    #[test]
    fn surrogate_minorizes() {
        let (cfg, ch, phi, u) = instance(3, 1.0);
        let d = build_w_data(&cfg, &ch, &phi, &u).unwrap();
        for seed in 0..1000 {
            let w_s = random_w(2 * seed, 4, 6);
            let w = random_w(2 * seed + 1, 4, 6);
            let sur = w_surrogate(&d, &w_s);
            assert!(d.y_quad(&w) - sur.eval(&w) >= -1e-10 * d.y_quad(&w).max(1.0));
            assert_relative_eq!(sur.eval(&w_s), d.y_quad(&w_s), max_relative = 1e-12);
        }
        let zero = WProblemData {
            y_vec: CVec::zeros(4),
            ..d
        };
        assert_eq!(
            w_surrogate(&zero, &random_w(0, 4, 6)).eval(&random_w(1, 4, 6)),
            0.0
        );
    }

    #[test]
    fn soc_form_matches_sinr_classification() {
        let (cfg, ch, phi, u) = instance(4, 1.0);
        let d = build_w_data(&cfg, &ch, &phi, &u).unwrap();
        let mut agree = 0;
        for seed in 0..1000 {
            let w = rotate_user_streams(&d, &random_w(seed, 4, 6));
            for (k, gamma) in [(0, 0.3), (1, 1.5)] {
                let soc = d.sinr_soc_margin(&w, k, gamma) >= 0.0;
                let gains = d.h_users.row(k) * &w;
                let squared =
                    (1.0 + gamma) * gains[k].norm_sqr() >= gamma * (gains.norm_squared() + d.c0[k]);
                assert_eq!(soc, squared);
                assert_eq!(soc, d.sinr(&w, k) >= gamma);
                agree += 1;
            }
        }
        assert_eq!(agree, 2000);
    }

    #[test]
    fn radar_only_aligns_with_dominant_direction() {
        let (mut cfg, ch, phi, u) = instance(5, 0.0);
        cfg.p_ris = 1e6;
        let d = build_w_data(&cfg, &ch, &phi, &u).unwrap();
        let w0 = random_w(9, 4, 6) * C64::from(0.1);
        let up = mm_update_w(&d, &cfg, &w0, &MmOptions::default()).unwrap();
        let best = cfg.p_bs * d.y_vec.norm_squared();
        assert_relative_eq!(up.objective(), best, max_relative = 1e-5);
        for pair in up.trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-8);
        }
    }

    #[test]
    fn mm_is_monotone_and_feasible() {
        let (cfg, ch, phi, u) = instance(6, 0.5);
        let d = build_w_data(&cfg, &ch, &phi, &u).unwrap();
        let opts = MmOptions {
            restore_feasibility: true,
            ..MmOptions::default()
        };
        let up = mm_update_w(&d, &cfg, &CMat::zeros(4, 6), &opts).unwrap();
        assert!(up.trace.len() >= 2);
        for pair in up.trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-8);
        }
        assert!(w_feasible(&d, &cfg, &up.w_mat, 1e-8));
        let again = mm_update_w(&d, &cfg, &up.w_mat, &opts).unwrap();
        assert!(again.iterations <= 2);
        assert_relative_eq!(again.objective(), up.objective(), max_relative = 1e-4);
    }

    #[test]
    fn infeasible_start_is_rejected_without_restoration() {
        let (cfg, ch, phi, u) = instance(7, 0.5);
        let d = build_w_data(&cfg, &ch, &phi, &u).unwrap();
        let err = mm_update_w(&d, &cfg, &CMat::zeros(4, 6), &MmOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn unattainable_targets_are_reported() {
        let (cfg, ch, phi, u) = instance(8, 1e6);
        let d = build_w_data(&cfg, &ch, &phi, &u).unwrap();
        let opts = MmOptions {
            restore_feasibility: true,
            ..MmOptions::default()
        };
        assert!(matches!(
            mm_update_w(&d, &cfg, &CMat::zeros(4, 6), &opts),
            Err(Error::Infeasible(_))
        ));
    }
}
