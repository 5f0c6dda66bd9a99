//! Reflection-coefficient update: Dinkelbach iterations on the radar SNR
//! `f(φ)/g(φ)`, each round minimizing `ϖg − f` by majorize-minimize steps.
//!
//! The quartic parts of `f`, `g` and the RIS power are written with
//! `x = φ⊗φ = vec(φφᵀ)` as Kronecker forms `xᴴ(A⊗B)x = (φᴴAφ)(φᴴBφ)`. They are
//! majorized in two stages: a second-order bound in `x` with the box bound
//! `xᴴx ≤ M²a_max⁴`, then a second-order bound of the resulting real quadratic
//! form in `φ̄ = [Re φ; Im φ]`. Every step solves a small cone program.

use crate::conic::{
    Backend, ConicOptions, ConicProblem, ConicStatus, QuadConstraint, SocConstraint,
};
use crate::error::{Error, Result};
use crate::model::{check_feasibility, ChannelSet, SystemConfig};
use crate::numerics::{
    embed_vec, herm_max_eigpair, hermitian_part, max_eig_sym, real_embed, unembed_vec,
};
use crate::{CMat, CVec, RMat, RVec, C64};

/// Relative tightening of the RIS budget and SINR targets inside the cone
/// program.
const BUDGET_MARGIN: f64 = 1e-7;

/// Data of the reflection subproblem for fixed `(W, u)`.
///
/// The `M²×M²` operators are stored through their Kronecker factors:
/// `C = ς²P₁⊗P₂`, `D = ς²σ_z²J̃⊗P₂`, `J = T⊗J̃` with `P₂ = qqᴴ` and
/// `T = ς²P₁ + ς²σ_z²J̃`. `E`, `J̃` and `K` are diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiProblemData {
    pub n_ris: usize,
    /// `G̃ = Gᵀdiag{h_{r,t}}`.
    pub g_tilde: CMat,
    /// `P₁ = G̃ᴴW*WᵀG̃`.
    pub p1: CMat,
    /// `q = G̃ᴴu`.
    pub q: CVec,
    /// Diagonal of `J̃ = diag{|h_{r,t}|²}`.
    pub j_tilde: RVec,
    /// Diagonal of `E = σ_z² diag{|G*u|²}`.
    pub e_diag: RVec,
    /// Diagonal of `K = Σ_i diag{|Gw_i|²} + 2σ_z²I`.
    pub k_diag: RVec,
    /// Row `k` is `a_kᵀ = [h_{d,k}ᵀw_1, …]`.
    pub a_vecs: CMat,
    /// `B_k` (`M×(K+N)`), column `i` is `diag{Gw_i}h_{r,k}`.
    pub b_mats: Vec<CMat>,
    /// Row `k` is `h_{r,k}ᵀ`, used for the amplified-noise leakage.
    pub h_r: CMat,
    pub sigma_r_term: f64,
    pub rcs_var: f64,
    pub sigma2_z: f64,
    pub sigma_user: Vec<f64>,
}

impl PhiProblemData {
    fn qform(m: &CMat, phi: &CVec) -> f64 {
        phi.dotc(&(m * phi)).re
    }

    fn diag_form(d: &RVec, phi: &CVec) -> f64 {
        d.iter()
            .zip(phi.iter())
            .map(|(d, p)| d * p.norm_sqr())
            .sum()
    }

    /// `T = ς²P₁ + ς²σ_z²J̃`.
    pub fn t_mat(&self) -> CMat {
        let jt = CMat::from_diagonal(&self.j_tilde.map(C64::from));
        &self.p1 * C64::from(self.rcs_var) + jt * C64::from(self.rcs_var * self.sigma2_z)
    }

    /// `f(φ) = xᴴCx`, the radar SNR numerator.
    pub fn f_val(&self, phi: &CVec) -> f64 {
        self.rcs_var * Self::qform(&self.p1, phi) * self.q.dotc(phi).norm_sqr()
    }

    /// `g(φ) = xᴴDx + φᴴEφ + σ_r²‖u‖²`, the radar SNR denominator.
    pub fn g_val(&self, phi: &CVec) -> f64 {
        self.rcs_var
            * self.sigma2_z
            * Self::diag_form(&self.j_tilde, phi)
            * self.q.dotc(phi).norm_sqr()
            + Self::diag_form(&self.e_diag, phi)
            + self.sigma_r_term
    }

    /// `P(φ) = xᴴJx + φᴴKφ`, the RIS reflection power.
    pub fn power(&self, phi: &CVec) -> f64 {
        Self::qform(&self.t_mat(), phi) * Self::diag_form(&self.j_tilde, phi)
            + Self::diag_form(&self.k_diag, phi)
    }

    /// `ã_k(φ) = h_{d,k}ᵀw_k + h_{r,k}ᵀdiag{Gw_k}φ`.
    pub fn a_tilde(&self, k: usize, phi: &CVec) -> C64 {
        self.a_vecs[(k, k)] + self.b_mats[k].column(k).dot(phi)
    }

    fn p2(&self) -> CMat {
        &self.q * self.q.adjoint()
    }

    fn jt_mat(&self) -> CMat {
        CMat::from_diagonal(&self.j_tilde.map(C64::from))
    }

    /// Dense `C`, for tests and small instances.
    pub fn c_dense(&self) -> CMat {
        (&self.p1 * C64::from(self.rcs_var)).kronecker(&self.p2())
    }

    /// Dense `D`.
    pub fn d_dense(&self) -> CMat {
        (self.jt_mat() * C64::from(self.rcs_var * self.sigma2_z)).kronecker(&self.p2())
    }

    /// Dense `J`.
    pub fn j_dense(&self) -> CMat {
        self.t_mat().kronecker(&self.jt_mat())
    }
}

pub fn build_phi_data(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    u: &CVec,
) -> Result<PhiProblemData> {
    ch.check(cfg)?;
    if w_mat.shape() != (cfg.n_bs, cfg.n_streams()) {
        return Err(Error::Dimension(format!(
            "W is {:?}, expected ({}, {})",
            w_mat.shape(),
            cfg.n_bs,
            cfg.n_streams()
        )));
    }
    if u.len() != cfg.n_bs {
        return Err(Error::Dimension(format!(
            "u has {} entries, expected {}",
            u.len(),
            cfg.n_bs
        )));
    }
    let m = cfg.n_ris;
    let mut g_tilde = ch.g_mat.transpose();
    for (mut col, h) in g_tilde.column_iter_mut().zip(ch.h_rt.iter()) {
        col *= *h;
    }
    let wt_g = w_mat.transpose() * &g_tilde;
    let p1 = hermitian_part(&(wt_g.adjoint() * &wt_g));
    let q = g_tilde.adjoint() * u;
    let j_tilde = ch.h_rt.map(|h| h.norm_sqr());
    let gu = ch.g_mat.conjugate() * u;
    let e_diag = gu.map(|x| cfg.sigma2_z * x.norm_sqr());
    let gw = &ch.g_mat * w_mat;
    let k_diag = RVec::from_fn(m, |i, _| gw.row(i).norm_squared() + 2.0 * cfg.sigma2_z);
    let a_vecs = &ch.h_d * w_mat;
    let b_mats = (0..cfg.n_users)
        .map(|k| {
            let mut b = gw.clone();
            for (mut row, h) in b.row_iter_mut().zip(ch.h_r.row(k).iter()) {
                row *= *h;
            }
            b
        })
        .collect();
    Ok(PhiProblemData {
        n_ris: m,
        g_tilde,
        p1,
        q,
        j_tilde,
        e_diag,
        k_diag,
        a_vecs,
        b_mats,
        h_r: ch.h_r.clone(),
        sigma_r_term: cfg.sigma2_r * u.norm_squared(),
        rcs_var: cfg.rcs_var,
        sigma2_z: cfg.sigma2_z,
        sigma_user: cfg.sigma2_user.iter().map(|s| s.sqrt()).collect(),
    })
}

/// `ϖ = f/g`.
pub fn dinkelbach_ratio(f_val: f64, g_val: f64) -> Result<f64> {
    if !(g_val > 0.0) {
        return Err(Error::Invalid(format!(
            "ratio denominator must be positive, got {g_val}"
        )));
    }
    Ok(f_val / g_val)
}

/// Convex upper bound `φᴴẼφ + Re{φᴴf̃} + c₁ + c₂ + c₃` on `ϖg(φ) − f(φ)` over
/// the amplitude box.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveBound {
    /// Diagonal of `Ẽ = ϖE + (λ_f̃/2)I`.
    pub e_tilde: RVec,
    pub f_tilde: CVec,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Bound on `λ_max(F)`, `F = ϖD − C`.
    pub lambda_f: f64,
    /// `λ_max(F̄ + F̄ᵀ)`.
    pub lambda_ft: f64,
    /// `F̃ = mat{2(F − λ_f I)x_s}`.
    pub f_mat: CMat,
}

impl ObjectiveBound {
    pub fn e_tilde_mat(&self) -> CMat {
        CMat::from_diagonal(&self.e_tilde.map(C64::from))
    }

    pub fn eval(&self, phi: &CVec) -> f64 {
        PhiProblemData::diag_form(&self.e_tilde, phi)
            + self.f_tilde.dotc(phi).re
            + self.c1
            + self.c2
            + self.c3
    }
}

/// Convex upper bound `φᴴK̃φ + Re{φᴴp̃} + c₅` on the RIS power over the box.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBound {
    /// Diagonal of `K̃ = K + (λ_p/2)I`.
    pub k_tilde: RVec,
    pub p_tilde: CVec,
    pub c4: f64,
    pub c5: f64,
    /// `λ_j = Tr{J}`.
    pub lambda_j: f64,
    /// `λ_max(P̄ + P̄ᵀ)`.
    pub lambda_p: f64,
    /// `P̃ = mat{2(J − λ_j I)x_s}`.
    pub p_mat: CMat,
}

impl PowerBound {
    pub fn k_tilde_mat(&self) -> CMat {
        CMat::from_diagonal(&self.k_tilde.map(C64::from))
    }

    pub fn eval(&self, phi: &CVec) -> f64 {
        PhiProblemData::diag_form(&self.k_tilde, phi) + self.p_tilde.dotc(phi).re + self.c5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSurrogate {
    pub objective: ObjectiveBound,
    pub power: PowerBound,
}

/// Second stage: the real quadratic form `φ̄ᵀX̄φ̄` of `mat` majorized at
/// `φ_s` by `(λ/2)‖φ‖² + Re{φᴴv} + c`. Returns `(λ, v, c)`.
fn real_quadratic_bound(mat: &CMat, phi_s: &CVec) -> Result<(f64, CVec, f64)> {
    let x_bar = real_embed(mat)?;
    let hess = &x_bar + x_bar.transpose();
    let lambda = max_eig_sym(&hess).max(0.0);
    let s = embed_vec(phi_s);
    let v = (&hess - RMat::identity(hess.nrows(), hess.ncols()) * lambda) * &s;
    let c = -s.dot(&(&x_bar * &s)) + 0.5 * lambda * s.norm_squared();
    Ok((lambda, unembed_vec(&v), c))
}

fn box_quartic(cfg: &SystemConfig) -> f64 {
    let m = cfg.n_ris as f64;
    m * m * cfg.a_max.powi(4)
}

pub fn objective_surrogate(
    data: &PhiProblemData,
    varpi: f64,
    phi_s: &CVec,
    cfg: &SystemConfig,
) -> Result<ObjectiveBound> {
    check_phi_len(data, phi_s)?;
    let jt = data.jt_mat();
    // F = S⊗P₂ with S = ϖς²σ_z²J̃ − ς²P₁.
    let s_mat = hermitian_part(
        &(jt * C64::from(varpi * data.rcs_var * data.sigma2_z)
            - &data.p1 * C64::from(data.rcs_var)),
    );
    let (s_max, _) = herm_max_eigpair(&s_mat)?;
    let q2 = data.q.norm_squared();
    let lambda_f = s_max.max(0.0) * q2;

    let qphi = data.q.dotc(phi_s);
    let s_phi = &s_mat * phi_s;
    let x_s = phi_s * phi_s.transpose();
    // mat{(S⊗qqᴴ)x_s} = qqᴴX_sSᵀ = (qᴴφ_s) q (Sφ_s)ᵀ.
    let f_mat = (&data.q * s_phi.transpose() * qphi - &x_s * C64::from(lambda_f)) * C64::from(2.0);
    let x_f_x = phi_s.dotc(&s_phi).re * qphi.norm_sqr();
    let c2 = lambda_f * box_quartic(cfg) + lambda_f * phi_s.norm_squared().powi(2) - x_f_x;

    let (lambda_ft, f_tilde, c3) = real_quadratic_bound(&f_mat, phi_s)?;
    let e_tilde = data.e_diag.map(|e| varpi * e + 0.5 * lambda_ft);
    Ok(ObjectiveBound {
        e_tilde,
        f_tilde,
        c1: varpi * data.sigma_r_term,
        c2,
        c3,
        lambda_f,
        lambda_ft,
        f_mat,
    })
}

pub fn power_surrogate(
    data: &PhiProblemData,
    phi_s: &CVec,
    cfg: &SystemConfig,
) -> Result<PowerBound> {
    check_phi_len(data, phi_s)?;
    let t = data.t_mat();
    let lambda_j = t.trace().re * data.j_tilde.sum();
    let x_s = phi_s * phi_s.transpose();
    // mat{(T⊗J̃)x_s} = J̃X_sTᵀ.
    let jx = CMat::from_fn(data.n_ris, data.n_ris, |i, j| x_s[(i, j)] * data.j_tilde[i]);
    let p_mat = (jx * t.transpose() - &x_s * C64::from(lambda_j)) * C64::from(2.0);
    let x_j_x = phi_s.dotc(&(&t * phi_s)).re * PhiProblemData::diag_form(&data.j_tilde, phi_s);
    let c4 = lambda_j * box_quartic(cfg) + lambda_j * phi_s.norm_squared().powi(2) - x_j_x;
    let (lambda_p, p_tilde, c) = real_quadratic_bound(&p_mat, phi_s)?;
    Ok(PowerBound {
        k_tilde: data.k_diag.map(|k| k + 0.5 * lambda_p),
        p_tilde,
        c4,
        c5: c + c4,
        lambda_j,
        lambda_p,
        p_mat,
    })
}

pub fn build_surrogates(
    data: &PhiProblemData,
    varpi: f64,
    phi_s: &CVec,
    cfg: &SystemConfig,
) -> Result<PhiSurrogate> {
    Ok(PhiSurrogate {
        objective: objective_surrogate(data, varpi, phi_s, cfg)?,
        power: power_surrogate(data, phi_s, cfg)?,
    })
}

fn check_phi_len(data: &PhiProblemData, phi: &CVec) -> Result<()> {
    if phi.len() != data.n_ris {
        return Err(Error::Dimension(format!(
            "phi has {} entries, expected {}",
            phi.len(),
            data.n_ris
        )));
    }
    Ok(())
}

/// Real rows `(Re ℓ, Im ℓ)` of `ℓ(φ) = Σ c_m φ_m` over `z = [Re φ; Im φ; t]`.
fn linear_rows(coeffs: &CVec, n_vars: usize) -> (RVec, RVec) {
    let m = coeffs.len();
    let mut re = RVec::zeros(n_vars);
    let mut im = RVec::zeros(n_vars);
    for (i, c) in coeffs.iter().enumerate() {
        re[i] = c.re;
        re[m + i] = -c.im;
        im[i] = c.im;
        im[m + i] = c.re;
    }
    (re, im)
}

/// `Σ d_m|φ_m|² + Re{φᴴv}` as `(Q, q)` over `z = [Re φ; Im φ; t]`.
fn real_quadratic(diag: &RVec, v: &CVec, n_vars: usize) -> (RMat, RVec) {
    let m = diag.len();
    let mut q_mat = RMat::zeros(n_vars, n_vars);
    let mut q = RVec::zeros(n_vars);
    for i in 0..m {
        q_mat[(i, i)] = diag[i];
        q_mat[(m + i, m + i)] = diag[i];
        q[i] = v[i].re;
        q[m + i] = v[i].im;
    }
    (q_mat, q)
}

/// SINR constraint of user `k` with the modulus of `ã_k` replaced by
/// `Re{e^{−jθ}ã_k}`, `θ = arg ã_k(φ_s)`. Scaled by `1/σ_k`.
fn sinr_constraint(
    data: &PhiProblemData,
    k: usize,
    gamma: f64,
    phi_s: &CVec,
    n_vars: usize,
) -> SocConstraint {
    let m = data.n_ris;
    let b_k = &data.b_mats[k];
    let s = b_k.ncols();
    let a_s = data.a_tilde(k, phi_s);
    let rot = if a_s.norm() > 0.0 {
        (a_s / a_s.norm()).conj()
    } else {
        C64::new(1.0, 0.0)
    };
    let scale = 1.0 / data.sigma_user[k];
    let lhs = (1.0 + gamma).sqrt() * scale;
    let rhs = gamma.sqrt() * scale;

    let (c_re, _) = linear_rows(&(b_k.column(k) * rot), n_vars);
    let d = lhs * (data.a_vecs[(k, k)] * rot).re;

    let rows = 2 * s + 2 * m + 1;
    let mut a = RMat::zeros(rows, n_vars);
    let mut b = RVec::zeros(rows);
    for i in 0..s {
        let (re, im) = linear_rows(&b_k.column(i).into_owned(), n_vars);
        a.row_mut(2 * i).copy_from(&(re * rhs).transpose());
        a.row_mut(2 * i + 1).copy_from(&(im * rhs).transpose());
        b[2 * i] = rhs * data.a_vecs[(k, i)].re;
        b[2 * i + 1] = rhs * data.a_vecs[(k, i)].im;
    }
    let sz = data.sigma2_z.sqrt();
    for j in 0..m {
        let c = data.h_r[(k, j)] * sz * rhs;
        let r = 2 * s + 2 * j;
        a[(r, j)] = c.re;
        a[(r, m + j)] = -c.im;
        a[(r + 1, j)] = c.im;
        a[(r + 1, m + j)] = c.re;
    }
    b[rows - 1] = gamma.sqrt();
    SocConstraint {
        a,
        b,
        c: c_re * lhs,
        d,
    }
}

/// Solves the convex reflection step: minimize the objective bound subject to
/// the power bound, the rotated SINR constraints and `|φ_m| ≤ a_max`.
pub fn solve_phi_subproblem(
    sur: &PhiSurrogate,
    data: &PhiProblemData,
    cfg: &SystemConfig,
    phi_s: &CVec,
    opts: &PhiOptions,
) -> Result<(CVec, ConicStatus)> {
    check_phi_len(data, phi_s)?;
    let m = data.n_ris;
    let n_vars = 2 * m + 1;
    let mut obj = RVec::zeros(n_vars);
    obj[2 * m] = 1.0;
    let mut p = ConicProblem::new(n_vars, obj);

    let ob = &sur.objective;
    let a2 = cfg.a_max * cfg.a_max;
    let obj_scale = (ob.e_tilde.amax() * a2 * m as f64)
        .max(ob.f_tilde.norm() * cfg.a_max * (m as f64).sqrt())
        .max(f64::MIN_POSITIVE);
    let (mut q_mat, mut q) = real_quadratic(&ob.e_tilde, &ob.f_tilde, n_vars);
    q_mat /= obj_scale;
    q /= obj_scale;
    q[2 * m] = -1.0;
    p.quad.push(QuadConstraint { q_mat, q, r: 0.0 });

    if cfg.ris_power_limited() {
        let pw = &sur.power;
        let budget = cfg.p_ris * (1.0 - BUDGET_MARGIN) - pw.c5;
        let (q_mat, q) = real_quadratic(&pw.k_tilde, &pw.p_tilde, n_vars);
        p.quad.push(QuadConstraint {
            q_mat: q_mat / cfg.p_ris,
            q: q / cfg.p_ris,
            r: budget / cfg.p_ris,
        });
    }
    for (k, &g) in cfg.gamma_targets.iter().enumerate() {
        if g > 0.0 {
            p.soc.push(sinr_constraint(
                data,
                k,
                g * (1.0 + BUDGET_MARGIN),
                phi_s,
                n_vars,
            ));
        }
    }
    for j in 0..m {
        let mut a = RMat::zeros(2, n_vars);
        a[(0, j)] = 1.0;
        a[(1, m + j)] = 1.0;
        p.soc.push(SocConstraint {
            a,
            b: RVec::zeros(2),
            c: RVec::zeros(n_vars),
            d: cfg.a_max,
        });
    }
    let sol = opts.backend.solve(&p, &opts.conic)?;
    match sol.status {
        ConicStatus::Infeasible | ConicStatus::Unbounded => Err(Error::Conic(sol.status)),
        status => Ok((unembed_vec(&sol.z.rows(0, 2 * m).into_owned()), status)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Dinkelbach stop: `f − ϖg ≤ tol·g`.
    pub tol: f64,
    /// Inner stop on the relative decrease of `ϖg − f`, measured against `ϖg`.
    pub inner_tol: f64,
    pub conic: ConicOptions,
    pub backend: Backend,
}

impl Default for PhiOptions {
    fn default() -> Self {
        Self {
            max_outer: 20,
            max_inner: 15,
            tol: 1e-6,
            inner_tol: 1e-6,
            conic: ConicOptions::default(),
            backend: Backend::default(),
        }
    }
}

impl PhiOptions {
    /// A single Dinkelbach update with a single majorization step.
    pub fn single_update() -> Self {
        Self {
            max_outer: 1,
            max_inner: 1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiUpdate {
    pub phi: CVec,
    /// `ϖ` at the start of every Dinkelbach round and at the end.
    pub varpi_trace: Vec<f64>,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// `|f − ϖg|/g` of the last round, with `ϖ` the ratio that round started from.
    pub final_gap: f64,
    pub last_status: Option<ConicStatus>,
}

impl PhiUpdate {
    pub fn ratio(&self) -> f64 {
        *self.varpi_trace.last().unwrap_or(&0.0)
    }
}

fn phi_feasible(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    phi: &CVec,
    tol: f64,
) -> Result<bool> {
    Ok(check_feasibility(cfg, ch, w_mat, phi, tol)?.feasible)
}

/// Dinkelbach/MM update of `φ` for fixed `(W, u)`. Each majorization step is
/// accepted only if it is feasible and strictly lowers `ϖg − f`, so the ratio
/// never decreases.
pub fn update_phi(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    w_mat: &CMat,
    u: &CVec,
    phi_init: &CVec,
    opts: &PhiOptions,
) -> Result<PhiUpdate> {
    if opts.max_outer == 0 || opts.max_inner == 0 {
        return Err(Error::Invalid("iteration caps must be at least 1".into()));
    }
    let data = build_phi_data(cfg, ch, w_mat, u)?;
    check_phi_len(&data, phi_init)?;
    if !phi_feasible(cfg, ch, w_mat, phi_init, 1e-6)? {
        return Err(Error::Infeasible(
            "initial reflection vector violates a constraint".into(),
        ));
    }
    let mut phi = phi_init.clone();
    let mut varpi = dinkelbach_ratio(data.f_val(&phi), data.g_val(&phi))?;
    let mut trace = vec![varpi];
    let mut inner_iters = 0;
    let mut last_status = None;
    let mut outer = 0;
    let mut final_gap = 0.0;
    while outer < opts.max_outer {
        outer += 1;
        let mut value = varpi * data.g_val(&phi) - data.f_val(&phi);
        let mut moved = false;
        for _ in 0..opts.max_inner {
            inner_iters += 1;
            let sur = build_surrogates(&data, varpi, &phi, cfg)?;
            let cand = match solve_phi_subproblem(&sur, &data, cfg, &phi, opts) {
                Ok((cand, status)) => {
                    last_status = Some(status);
                    cand
                }
                Err(Error::Conic(status)) => {
                    log::debug!("reflection step returned {status:?}; keeping the current point");
                    last_status = Some(status);
                    break;
                }
                Err(e) => return Err(e),
            };
            let cand_value = varpi * data.g_val(&cand) - data.f_val(&cand);
            if !(cand_value < value) || !phi_feasible(cfg, ch, w_mat, &cand, 1e-9)? {
                break;
            }
            let gain = value - cand_value;
            phi = cand;
            value = cand_value;
            moved = true;
            if gain <= opts.inner_tol * (varpi * data.g_val(&phi)).max(f64::MIN_POSITIVE) {
                break;
            }
        }
        let (f, g) = (data.f_val(&phi), data.g_val(&phi));
        let next = dinkelbach_ratio(f, g)?;
        let gap = f - varpi * g;
        final_gap = gap.abs() / g;
        varpi = next.max(varpi);
        trace.push(varpi);
        if !moved || gap <= opts.tol * g {
            break;
        }
    }
    Ok(PhiUpdate {
        phi,
        varpi_trace: trace,
        outer_iters: outer,
        inner_iters,
        final_gap,
        last_status,
    })
}
