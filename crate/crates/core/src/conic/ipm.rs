//! Dense primal-dual interior-point method on the homogeneous self-dual
//! embedding, with Nesterov–Todd scaling and Mehrotra predictor-corrector
//! steps. Sized for the small dense subproblems of the design loop.

use nalgebra::Cholesky;

use super::{
    finish, ConicBackend, ConicOptions, ConicProblem, ConicSolution, ConicStatus, StandardForm,
};
use crate::error::Result;
use crate::{RMat, RVec};

const STEP_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, Default)]
pub struct EmbeddedIpm;

impl ConicBackend for EmbeddedIpm {
    fn name(&self) -> &'static str {
        "embedded-ipm"
    }

    fn solve(&self, p: &ConicProblem, opts: &ConicOptions) -> Result<ConicSolution> {
        let sf = p.to_standard_form()?;
        let out = Ipm::new(sf, opts).run();
        Ok(finish(p, out.x, out.status, out.dual_bound, out.iterations))
    }
}

struct IpmOutput {
    x: RVec,
    status: ConicStatus,
    dual_bound: f64,
    iterations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    dim: usize,
}

/// Cone layout: `n_orth` scalar cones followed by SOC blocks.
#[derive(Debug, Clone)]
pub(crate) struct Cones {
    n_orth: usize,
    soc: Vec<Block>,
    m: usize,
}

impl Cones {
    pub(crate) fn new(n_orth: usize, soc_dims: &[usize]) -> Self {
        let mut start = n_orth;
        let soc = soc_dims
            .iter()
            .map(|&dim| {
                let b = Block { start, dim };
                start += dim;
                b
            })
            .collect();
        Self {
            n_orth,
            soc,
            m: start,
        }
    }

    fn degree(&self) -> usize {
        self.n_orth + self.soc.len()
    }

    /// Identity element of the Jordan algebra.
    fn unit(&self) -> RVec {
        let mut e = RVec::zeros(self.m);
        e.rows_mut(0, self.n_orth).fill(1.0);
        for b in &self.soc {
            e[b.start] = 1.0;
        }
        e
    }

    /// Smallest "eigenvalue" of `v` (negative outside the cone).
    fn min_eig(&self, v: &RVec) -> f64 {
        let mut t = f64::INFINITY;
        for i in 0..self.n_orth {
            t = t.min(v[i]);
        }
        for b in &self.soc {
            let tail = v.rows(b.start + 1, b.dim - 1).norm();
            t = t.min(v[b.start] - tail);
        }
        t
    }

    /// Jordan product `x ∘ y`.
    fn prod(&self, x: &RVec, y: &RVec) -> RVec {
        let mut out = RVec::zeros(self.m);
        for i in 0..self.n_orth {
            out[i] = x[i] * y[i];
        }
        for b in &self.soc {
            let (s, n) = (b.start, b.dim - 1);
            let x0 = x[s];
            let y0 = y[s];
            let x1 = x.rows(s + 1, n);
            let y1 = y.rows(s + 1, n);
            out[s] = x0 * y0 + x1.dot(&y1);
            out.rows_mut(s + 1, n).copy_from(&(y1 * x0 + x1 * y0));
        }
        out
    }

    /// Solves `λ ∘ u = d` for `u`, with `λ` in the cone interior.
    fn div(&self, lambda: &RVec, d: &RVec) -> RVec {
        let mut out = RVec::zeros(self.m);
        for i in 0..self.n_orth {
            out[i] = d[i] / lambda[i];
        }
        for b in &self.soc {
            let (s, n) = (b.start, b.dim - 1);
            let l0 = lambda[s];
            let l1 = lambda.rows(s + 1, n);
            let d0 = d[s];
            let d1 = d.rows(s + 1, n);
            let det = l0 * l0 - l1.norm_squared();
            let u0 = (l0 * d0 - l1.dot(&d1)) / det;
            out[s] = u0;
            out.rows_mut(s + 1, n).copy_from(&((d1 - l1 * u0) / l0));
        }
        out
    }

    /// Largest `α ≥ 0` with `v + α·dv` in the cone (`∞` if unbounded).
    fn max_step(&self, v: &RVec, dv: &RVec) -> f64 {
        let mut alpha = f64::INFINITY;
        for i in 0..self.n_orth {
            if dv[i] < 0.0 {
                alpha = alpha.min(-v[i] / dv[i]);
            }
        }
        for b in &self.soc {
            let (s, n) = (b.start, b.dim - 1);
            let x0 = v[s];
            let d0 = dv[s];
            let x1 = v.rows(s + 1, n);
            let d1 = dv.rows(s + 1, n);
            if d0 < 0.0 {
                alpha = alpha.min(-x0 / d0);
            }
            // (x0 + αd0)² − ‖x1 + αd1‖² = qa·α² + 2qb·α + qc
            let qa = d0 * d0 - d1.norm_squared();
            let qb = x0 * d0 - x1.dot(&d1);
            let qc = (x0 - x1.norm()) * (x0 + x1.norm());
            alpha = alpha.min(smallest_positive_root(qa, qb, qc.max(0.0)));
        }
        alpha
    }
}

/// Smallest positive root of `a·α² + 2b·α + c` with `c ≥ 0`, or `∞`.
fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    if c == 0.0 {
        // Already on the boundary: any step that decreases the form is blocked.
        return if b < 0.0 || (b == 0.0 && a < 0.0) {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let scale = a.abs().max(b.abs()).max(c);
    if a.abs() <= 1e-15 * scale {
        return if b < 0.0 {
            -c / (2.0 * b)
        } else {
            f64::INFINITY
        };
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let q = -(b + b.signum() * disc.sqrt());
    let mut best = f64::INFINITY;
    for r in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if r > 0.0 && r < best {
            best = r;
        }
    }
    best
}

/// Nesterov–Todd scaling `W` with `W z = W⁻¹ s = λ`.
///
/// For an SOC block the scaling point `w̄ = (s̄ + Jz̄)/(2γ)` is stored through
/// `v = (w̄ + e)/√(2(w̄₀ + 1))`, which gives `W = β(2vvᵀ − J)` and
/// `W⁻¹ = (2(Jv)(Jv)ᵀ − J)/β`.
struct Scaling {
    /// Orthant part: `W = diag(w)`.
    w: RVec,
    /// SOC part: `(β, v)`.
    soc: Vec<(f64, RVec)>,
}

fn jdot(x: &nalgebra::DVectorView<f64>, y: &nalgebra::DVectorView<f64>) -> f64 {
    x[0] * y[0] - x.rows(1, x.len() - 1).dot(&y.rows(1, y.len() - 1))
}

impl Scaling {
    fn new(cones: &Cones, s: &RVec, z: &RVec) -> Option<Self> {
        let mut w = RVec::zeros(cones.n_orth);
        for i in 0..cones.n_orth {
            if !(s[i] > 0.0 && z[i] > 0.0) {
                return None;
            }
            w[i] = (s[i] / z[i]).sqrt();
        }
        let mut soc = Vec::with_capacity(cones.soc.len());
        for b in &cones.soc {
            let sv = s.rows(b.start, b.dim);
            let zv = z.rows(b.start, b.dim);
            let sjs = jdot(&sv, &sv);
            let zjz = jdot(&zv, &zv);
            if !(sjs > 0.0 && zjz > 0.0 && sv[0] > 0.0 && zv[0] > 0.0) {
                return None;
            }
            let sbar = sv / sjs.sqrt();
            let zbar = zv / zjz.sqrt();
            let gamma = ((1.0 + sbar.dot(&zbar)) / 2.0).sqrt();
            let mut wbar = sbar + {
                let mut jz = zbar.clone_owned();
                jz.rows_mut(1, b.dim - 1).neg_mut();
                jz
            };
            wbar /= 2.0 * gamma;
            let beta = (sjs / zjz).sqrt().sqrt();
            let scale = (2.0 * (wbar[0] + 1.0)).sqrt();
            let mut v = wbar;
            v[0] += 1.0;
            v /= scale;
            soc.push((beta, v));
        }
        Some(Self { w, soc })
    }

    /// `W x`.
    fn apply(&self, cones: &Cones, x: &RVec) -> RVec {
        let mut out = RVec::zeros(cones.m);
        for i in 0..cones.n_orth {
            out[i] = self.w[i] * x[i];
        }
        for (b, (beta, wbar)) in cones.soc.iter().zip(&self.soc) {
            let xv = x.rows(b.start, b.dim);
            let t = 2.0 * wbar.dot(&xv);
            let mut o = wbar * t;
            o[0] -= xv[0];
            for k in 1..b.dim {
                o[k] += xv[k];
            }
            out.rows_mut(b.start, b.dim).copy_from(&(o * *beta));
        }
        out
    }

    /// `W⁻¹ x`.
    fn apply_inv(&self, cones: &Cones, x: &RVec) -> RVec {
        let mut out = RVec::zeros(cones.m);
        for i in 0..cones.n_orth {
            out[i] = x[i] / self.w[i];
        }
        for (b, (beta, wbar)) in cones.soc.iter().zip(&self.soc) {
            let xv = x.rows(b.start, b.dim);
            let mut v = wbar.clone_owned();
            v.rows_mut(1, b.dim - 1).neg_mut();
            let t = 2.0 * v.dot(&xv);
            let mut o = v * t;
            o[0] -= xv[0];
            for k in 1..b.dim {
                o[k] += xv[k];
            }
            out.rows_mut(b.start, b.dim).copy_from(&(o / *beta));
        }
        out
    }
}

/// Precomputed `G`-dependent pieces of `GᵀW⁻²G`.
struct Gram {
    /// `G_iᵀG_i` per SOC block.
    soc_gram: Vec<RMat>,
}

struct Ipm<'a> {
    c: RVec,
    g: RMat,
    gt: RMat,
    h: RVec,
    cones: Cones,
    gram: Gram,
    opts: &'a ConicOptions,
    c_scale: f64,
}

struct Factor {
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> Ipm<'a> {
    fn new(sf: StandardForm, opts: &'a ConicOptions) -> Self {
        let cones = Cones::new(sf.n_orthant, &sf.soc_dims);
        let mut g = sf.g;
        let mut h = sf.h;
        let mut row_scale = RVec::from_element(cones.m, 1.0);
        for i in 0..cones.n_orth {
            let nrm = g.row(i).norm();
            if nrm > 0.0 {
                row_scale[i] = 1.0 / nrm;
            }
        }
        for b in &cones.soc {
            let nrm = g.rows(b.start, b.dim).norm() / (b.dim as f64).sqrt();
            if nrm > 0.0 {
                row_scale.rows_mut(b.start, b.dim).fill(1.0 / nrm);
            }
        }
        for i in 0..cones.m {
            g.row_mut(i).scale_mut(row_scale[i]);
            h[i] *= row_scale[i];
        }
        let c_scale = sf.c.amax();
        let c_scale = if c_scale > 0.0 { c_scale } else { 1.0 };
        let c = sf.c / c_scale;
        let soc_gram = cones
            .soc
            .iter()
            .map(|b| {
                let gi = g.rows(b.start, b.dim);
                gi.transpose() * gi
            })
            .collect();
        let gt = g.transpose();
        Self {
            c,
            g,
            gt,
            h,
            cones,
            gram: Gram { soc_gram },
            opts,
            c_scale,
        }
    }

    fn n(&self) -> usize {
        self.c.len()
    }

    /// Factors `GᵀW⁻²G` (plus a tiny diagonal shift).
    fn factor(&self, sc: Option<&Scaling>) -> Option<Factor> {
        let n = self.n();
        let mut hmat = RMat::zeros(n, n);
        let cones = &self.cones;
        for i in 0..cones.n_orth {
            let wi = sc.map_or(1.0, |s| s.w[i]);
            let gi = self.g.row(i);
            hmat.ger(1.0 / (wi * wi), &gi.transpose(), &gi.transpose(), 1.0);
        }
        for (k, b) in cones.soc.iter().enumerate() {
            let gram = &self.gram.soc_gram[k];
            match sc {
                None => hmat += gram,
                Some(s) => {
                    let (beta, wbar) = &s.soc[k];
                    let gi = self.g.rows(b.start, b.dim);
                    let mut v = wbar.clone_owned();
                    v.rows_mut(1, b.dim - 1).neg_mut();
                    let gv = gi.transpose() * &v;
                    let gw = gi.transpose() * wbar;
                    let inv_b2 = 1.0 / (beta * beta);
                    hmat += gram * inv_b2;
                    hmat.ger(4.0 * wbar.norm_squared() * inv_b2, &gv, &gv, 1.0);
                    hmat.ger(-2.0 * inv_b2, &gv, &gw, 1.0);
                    hmat.ger(-2.0 * inv_b2, &gw, &gv, 1.0);
                }
            }
        }
        let scale = hmat.diagonal().amax().max(1e-300);
        let mut shift = 1e-13 * scale;
        for _ in 0..6 {
            let mut reg = hmat.clone();
            for i in 0..n {
                reg[(i, i)] += shift;
            }
            if let Some(chol) = Cholesky::new(reg) {
                return Some(Factor { chol });
            }
            shift *= 100.0;
        }
        None
    }

    fn w_inv2(&self, sc: Option<&Scaling>, x: &RVec) -> RVec {
        match sc {
            None => x.clone(),
            Some(s) => s.apply_inv(&self.cones, &s.apply_inv(&self.cones, x)),
        }
    }

    /// Solves `[0 Gᵀ; G −W²][dx; dz] = [bx; bz]`.
    fn kkt(&self, f: &Factor, sc: Option<&Scaling>, bx: &RVec, bz: &RVec) -> (RVec, RVec) {
        let reduced = |rx: &RVec, rz: &RVec| {
            let rhs = rx + &self.gt * self.w_inv2(sc, rz);
            let dx = f.chol.solve(&rhs);
            let dz = self.w_inv2(sc, &(&self.g * &dx - rz));
            (dx, dz)
        };
        let (mut dx, mut dz) = reduced(bx, bz);
        // Refinement against the unreduced system, applying W exactly.
        let scale = bx.norm() + bz.norm();
        for _ in 0..3 {
            let r1 = bx - &self.gt * &dz;
            let w2dz = match sc {
                None => dz.clone(),
                Some(s) => s.apply(&self.cones, &s.apply(&self.cones, &dz)),
            };
            let r2 = bz - &self.g * &dx + w2dz;
            if r1.norm() + r2.norm() <= 1e-14 * scale {
                break;
            }
            let (cx, cz) = reduced(&r1, &r2);
            dx += cx;
            dz += cz;
        }
        (dx, dz)
    }

    fn unscale(&self, x: RVec, tau: f64) -> RVec {
        x / tau
    }

    fn run(&self) -> IpmOutput {
        let n = self.n();
        let m = self.cones.m;
        let opts = self.opts;
        if m == 0 {
            let status = if self.c.amax() == 0.0 {
                ConicStatus::Optimal
            } else {
                ConicStatus::Unbounded
            };
            let bound = if status == ConicStatus::Optimal {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            return IpmOutput {
                x: RVec::zeros(n),
                status,
                dual_bound: bound,
                iterations: 0,
            };
        }
        let cones = &self.cones;
        let e = cones.unit();
        let nu = cones.degree() as f64;
        let c_norm = self.c.norm().max(1.0);
        let h_norm = self.h.norm().max(1.0);

        // Initial point from two least-squares problems, shifted into the cone.
        let Some(f0) = self.factor(None) else {
            return self.failure(RVec::zeros(n), 0);
        };
        let (mut x, s_tilde) = self.kkt(&f0, None, &RVec::zeros(n), &self.h);
        let mut s = -s_tilde;
        let (_, mut z) = self.kkt(&f0, None, &(-&self.c), &RVec::zeros(m));
        for v in [&mut s, &mut z] {
            let t = cones.min_eig(v);
            if t <= 1e-8 * v.norm().max(1.0) {
                *v += &e * (1.0 - t);
            }
        }
        let mut tau = 1.0;
        let mut kappa = 1.0;

        let mut last_x = x.clone();
        let mut last_tau = tau;
        let mut stalls = 0;
        for iter in 0..=opts.max_iter {
            let rx = &self.gt * &z + &self.c * tau;
            let rz = &s + &self.g * &x - &self.h * tau;
            let cx = self.c.dot(&x);
            let hz = self.h.dot(&z);
            let rt = kappa + cx + hz;
            let sz = s.dot(&z);
            let mu = (sz + tau * kappa) / (nu + 1.0);

            let pres = rz.norm() / tau / h_norm;
            let dres = rx.norm() / tau / c_norm;
            let pcost = cx / tau;
            let dcost = -hz / tau;
            let gap = sz / (tau * tau);
            log::trace!("ipm {iter}: pres {pres:.2e} dres {dres:.2e} pcost {pcost:.6e} dcost {dcost:.6e} gap {gap:.2e}");
            let gap_ok = gap <= opts.gap_tol * pcost.abs().min(dcost.abs()).max(1.0);
            if pres <= opts.feas_tol && dres <= opts.feas_tol && gap_ok {
                return IpmOutput {
                    x: self.unscale(x, tau),
                    status: ConicStatus::Optimal,
                    dual_bound: dcost * self.c_scale,
                    iterations: iter,
                };
            }
            if hz < 0.0 {
                let pinf = (&self.gt * &z).norm() / c_norm / (-hz);
                if pinf <= opts.feas_tol {
                    return IpmOutput {
                        x: self.unscale(x, tau),
                        status: ConicStatus::Infeasible,
                        dual_bound: f64::INFINITY,
                        iterations: iter,
                    };
                }
            }
            if cx < 0.0 {
                let dinf = (&self.g * &x + &s).norm() / h_norm / (-cx);
                if dinf <= opts.feas_tol {
                    return IpmOutput {
                        x: self.unscale(x, tau),
                        status: ConicStatus::Unbounded,
                        dual_bound: f64::NEG_INFINITY,
                        iterations: iter,
                    };
                }
            }
            if iter == opts.max_iter {
                break;
            }

            let Some(sc) = Scaling::new(cones, &s, &z) else {
                return self.failure(self.unscale(x, tau), iter);
            };
            let lambda = sc.apply(cones, &z);
            let Some(fac) = self.factor(Some(&sc)) else {
                return self.failure(self.unscale(x, tau), iter);
            };
            let (x1, z1) = self.kkt(&fac, Some(&sc), &(-&self.c), &self.h);
            let denom = self.c.dot(&x1) + self.h.dot(&z1) - kappa / tau;

            let direction = |d_s: &RVec, d_k: f64, eta: f64| {
                let bx = &rx * (-eta);
                let u = cones.div(&lambda, d_s);
                let bz = &rz * (-eta) - sc.apply(cones, &u);
                let (x2, z2) = self.kkt(&fac, Some(&sc), &bx, &bz);
                let dtau = (-eta * rt - self.c.dot(&x2) - self.h.dot(&z2) - d_k / tau) / denom;
                let dx = x2 + &x1 * dtau;
                let dz = z2 + &z1 * dtau;
                let ds = sc.apply(cones, &(u - sc.apply(cones, &dz)));
                let dk = (d_k - kappa * dtau) / tau;
                (dx, dz, ds, dtau, dk)
            };
            let step_len = |dz: &RVec, ds: &RVec, dt: f64, dk: f64| {
                let mut a = cones.max_step(&s, ds).min(cones.max_step(&z, dz));
                if dt < 0.0 {
                    a = a.min(-tau / dt);
                }
                if dk < 0.0 {
                    a = a.min(-kappa / dk);
                }
                a
            };

            let ll = cones.prod(&lambda, &lambda);
            let (_, dz_a, ds_a, dt_a, dk_a) = direction(&(-&ll), -tau * kappa, 1.0);
            let alpha_a = step_len(&dz_a, &ds_a, dt_a, dk_a).min(1.0);
            let sigma = (1.0 - alpha_a).powi(3);

            let corr = cones.prod(&sc.apply_inv(cones, &ds_a), &sc.apply(cones, &dz_a));
            let d_s = -ll - corr + &e * (sigma * mu);
            let d_k = -tau * kappa - dt_a * dk_a + sigma * mu;
            let (dx, dz, ds, dt, dk) = direction(&d_s, d_k, 1.0 - sigma);
            let alpha = (STEP_FRACTION * step_len(&dz, &ds, dt, dk)).min(1.0);
            if !alpha.is_finite() || !dx.iter().all(|v| v.is_finite()) {
                return self.failure(self.unscale(last_x, last_tau), iter);
            }
            if alpha < 1e-10 {
                stalls += 1;
                if stalls >= 3 {
                    return self.failure(self.unscale(x, tau), iter);
                }
            } else {
                stalls = 0;
            }
            last_x = x.clone();
            last_tau = tau;
            x += dx * alpha;
            s += ds * alpha;
            z += dz * alpha;
            tau += dt * alpha;
            kappa += dk * alpha;
            if !(tau > 0.0 && kappa > 0.0) {
                return self.failure(self.unscale(last_x, last_tau), iter);
            }
            // Keep the homogeneous iterate bounded.
            let big = x.amax().max(z.amax()).max(s.amax()).max(tau);
            if big > 1e12 {
                let f = 1.0 / big;
                x *= f;
                s *= f;
                z *= f;
                tau *= f;
                kappa *= f;
            }
        }
        IpmOutput {
            x: self.unscale(x, tau),
            status: ConicStatus::MaxIter,
            dual_bound: f64::NEG_INFINITY,
            iterations: opts.max_iter,
        }
    }

    fn failure(&self, x: RVec, iter: usize) -> IpmOutput {
        IpmOutput {
            x,
            status: ConicStatus::NumericalFailure,
            dual_bound: f64::NEG_INFINITY,
            iterations: iter,
        }
    }
}
