//! Real second-order-cone programs: problem representation, quadratic
//! lowering, and the solver contract shared by all backends.
//!
//! A problem minimizes `objectiveᵀz` subject to constraints
//! `‖Az + b‖₂ ≤ cᵀz + d` and convex quadratics `zᵀQz + qᵀz ≤ r`. Backends see
//! the standard form `min cᵀx  s.t.  Gx + s = h,  s ∈ K` with `K` a product
//! of a nonnegative orthant and second-order cones (see [`StandardForm`]).

#[cfg(feature = "clarabel")]
mod clarabel;
mod ipm;

#[cfg(feature = "clarabel")]
pub use self::clarabel::ClarabelBackend;
pub use ipm::EmbeddedIpm;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::psd_factor_real;
use crate::{RMat, RVec};

/// Tolerance for accepting a quadratic-constraint matrix as PSD.
pub const PSD_TOL: f64 = 1e-9;

/// `‖Az + b‖₂ ≤ cᵀz + d`. An `A` with zero rows encodes the halfspace
/// `cᵀz + d ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub a: RMat,
    pub b: RVec,
    pub c: RVec,
    pub d: f64,
}

impl SocConstraint {
    pub fn halfspace(c: RVec, d: f64) -> Self {
        let n = c.len();
        Self {
            a: RMat::zeros(0, n),
            b: RVec::zeros(0),
            c,
            d,
        }
    }

    /// `cᵀz + d − ‖Az + b‖`; negative values are violations.
    pub fn margin(&self, z: &RVec) -> f64 {
        self.c.dot(z) + self.d - (&self.a * z + &self.b).norm()
    }
}

/// `zᵀQz + qᵀz ≤ r` with `Q` symmetric PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConstraint {
    pub q_mat: RMat,
    pub q: RVec,
    pub r: f64,
}

impl QuadConstraint {
    pub fn value(&self, z: &RVec) -> f64 {
        z.dot(&(&self.q_mat * z)) + self.q.dot(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub n_vars: usize,
    pub objective: RVec,
    pub soc: Vec<SocConstraint>,
    pub quad: Vec<QuadConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    /// The objective is unbounded below (dual infeasible).
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub z: RVec,
    pub status: ConicStatus,
    /// Largest constraint violation, each scaled by `1 + ‖b‖`.
    pub primal_residual: f64,
    pub dual_gap: f64,
    pub objective: f64,
    /// Dual objective; a lower bound on the optimum up to `dual_gap`.
    pub dual_bound: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for ConicOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl ConicOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            feas_tol: tol,
            gap_tol: tol,
            ..Self::default()
        }
    }
}

/// A cone-program solver.
pub trait ConicBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, p: &ConicProblem, opts: &ConicOptions) -> Result<ConicSolution>;
}

/// Backend selector carried by solver options.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum Backend {
    #[default]
    Embedded,
    #[cfg(feature = "clarabel")]
    Clarabel,
}

impl Backend {
    pub fn solve(&self, p: &ConicProblem, opts: &ConicOptions) -> Result<ConicSolution> {
        match self {
            Backend::Embedded => EmbeddedIpm.solve(p, opts),
            #[cfg(feature = "clarabel")]
            Backend::Clarabel => ClarabelBackend.solve(p, opts),
        }
    }
}

/// Solves with the embedded interior-point backend.
pub fn solve(p: &ConicProblem, tol: f64) -> Result<ConicSolution> {
    EmbeddedIpm.solve(p, &ConicOptions::with_tol(tol))
}

/// Rewrites `zᵀQz + qᵀz ≤ r` as `‖(2Lᵀz, 1 − t)‖ ≤ 1 + t` with
/// `t = r − qᵀz` and `Q = LLᵀ`; a zero `Q` becomes the halfspace `t ≥ 0`.
pub fn lower_quadratic(q_mat: &RMat, q: &RVec, r: f64) -> Result<SocConstraint> {
    let n = q.len();
    if q_mat.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "Q is {:?} but q has {n} entries",
            q_mat.shape()
        )));
    }
    let l = psd_factor_real(q_mat, PSD_TOL, 1e-15)?;
    if l.ncols() == 0 {
        return Ok(SocConstraint::halfspace(-q, r));
    }
    let rank = l.ncols();
    let mut a = RMat::zeros(rank + 1, n);
    a.rows_mut(0, rank).copy_from(&(l.transpose() * 2.0));
    a.row_mut(rank).copy_from(&q.transpose());
    let mut b = RVec::zeros(rank + 1);
    b[rank] = 1.0 - r;
    Ok(SocConstraint {
        a,
        b,
        c: -q,
        d: 1.0 + r,
    })
}

impl ConicProblem {
    pub fn new(n_vars: usize, objective: RVec) -> Self {
        Self {
            n_vars,
            objective,
            soc: Vec::new(),
            quad: Vec::new(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let n = self.n_vars;
        if self.objective.len() != n {
            return Err(Error::Dimension(format!(
                "objective has {} entries, expected {n}",
                self.objective.len()
            )));
        }
        for (i, s) in self.soc.iter().enumerate() {
            if s.a.ncols() != n || s.c.len() != n || s.a.nrows() != s.b.len() {
                return Err(Error::Dimension(format!(
                    "SOC constraint {i} is inconsistent with {n} variables"
                )));
            }
        }
        for (i, q) in self.quad.iter().enumerate() {
            if q.q_mat.shape() != (n, n) || q.q.len() != n {
                return Err(Error::Dimension(format!(
                    "quadratic constraint {i} is inconsistent with {n} variables"
                )));
            }
        }
        let finite = self.objective.iter().all(|x| x.is_finite())
            && self.soc.iter().all(|s| {
                s.a.iter()
                    .chain(s.b.iter())
                    .chain(s.c.iter())
                    .all(|x| x.is_finite())
                    && s.d.is_finite()
            })
            && self.quad.iter().all(|q| {
                q.q_mat.iter().chain(q.q.iter()).all(|x| x.is_finite()) && q.r.is_finite()
            });
        if !finite {
            return Err(Error::Invalid("conic problem data must be finite".into()));
        }
        Ok(())
    }

    /// All constraints as SOCs (quadratics lowered).
    pub fn all_socs(&self) -> Result<Vec<SocConstraint>> {
        let mut out = self.soc.clone();
        for q in &self.quad {
            out.push(lower_quadratic(&q.q_mat, &q.q, q.r)?);
        }
        Ok(out)
    }

    /// Largest violation over all constraints, each scaled by `1 + ‖b‖`
    /// (quadratics by `1 + |r|`).
    pub fn primal_residual(&self, z: &RVec) -> f64 {
        let soc = self
            .soc
            .iter()
            .map(|s| (-s.margin(z)).max(0.0) / (1.0 + s.b.norm()));
        let quad = self
            .quad
            .iter()
            .map(|q| (q.value(z) - q.r).max(0.0) / (1.0 + q.r.abs()));
        soc.chain(quad).fold(0.0, f64::max)
    }

    pub fn to_standard_form(&self) -> Result<StandardForm> {
        self.check()?;
        StandardForm::build(self.n_vars, &self.objective, &self.all_socs()?)
    }
}

/// `min cᵀx  s.t.  Gx + s = h,  s ∈ R₊^{n_orthant} × Q^{soc_dims[0]} × …`.
///
/// Orthant rows come first. Each SOC block is ordered `(t, x₁, …)` with
/// `t ≥ ‖x‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub c: RVec,
    pub g: RMat,
    pub h: RVec,
    pub n_orthant: usize,
    pub soc_dims: Vec<usize>,
}

impl StandardForm {
    fn build(n: usize, objective: &RVec, socs: &[SocConstraint]) -> Result<Self> {
        let (flat, cones): (Vec<_>, Vec<_>) = socs.iter().partition(|s| s.a.nrows() == 0);
        let rows = flat.len() + cones.iter().map(|s| s.a.nrows() + 1).sum::<usize>();
        let mut g = RMat::zeros(rows, n);
        let mut h = RVec::zeros(rows);
        let mut r = 0;
        for s in &flat {
            g.row_mut(r).copy_from(&(-s.c.transpose()));
            h[r] = s.d;
            r += 1;
        }
        let mut soc_dims = Vec::with_capacity(cones.len());
        for s in &cones {
            let m = s.a.nrows();
            g.row_mut(r).copy_from(&(-s.c.transpose()));
            h[r] = s.d;
            g.rows_mut(r + 1, m).copy_from(&(-&s.a));
            h.rows_mut(r + 1, m).copy_from(&s.b);
            soc_dims.push(m + 1);
            r += m + 1;
        }
        Ok(Self {
            c: objective.clone(),
            g,
            h,
            n_orthant: flat.len(),
            soc_dims,
        })
    }
}

/// Weak-duality bookkeeping shared by backends: builds a [`ConicSolution`]
/// from a primal point and a dual vector `y ∈ K*` for the standard form.
pub(crate) fn finish(
    p: &ConicProblem,
    z: RVec,
    status: ConicStatus,
    dual_bound: f64,
    iterations: usize,
) -> ConicSolution {
    let objective = p.objective.dot(&z);
    let primal_residual = p.primal_residual(&z);
    let dual_gap = if dual_bound.is_finite() {
        (objective - dual_bound).max(0.0)
    } else {
        f64::INFINITY
    };
    ConicSolution {
        z,
        status,
        primal_residual,
        dual_gap,
        objective,
        dual_bound,
        iterations,
    }
}
