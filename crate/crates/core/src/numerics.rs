//! Dense eigen/Kronecker kernels and the complex-to-real embedding.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{CMat, CVec, RMat, RVec, C64};

/// Tolerance used by [`herm_max_eigpair`] when accepting Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// `‖H − Hᴴ‖_F / max(1, ‖H‖_F)`.
pub fn hermitian_residual(h: &CMat) -> f64 {
    (h - h.adjoint()).norm() / h.norm().max(1.0)
}

/// `(H + Hᴴ)/2`.
pub fn hermitian_part(h: &CMat) -> CMat {
    (h + h.adjoint()) * C64::from(0.5)
}

fn require_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {rows}x{cols}"
        )));
    }
    Ok(())
}

fn check_hermitian(h: &CMat) -> Result<()> {
    require_square(h.nrows(), h.ncols())?;
    let r = hermitian_residual(h);
    if !(r <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian(r));
    }
    Ok(())
}

/// Largest eigenvalue of a Hermitian matrix and a unit-norm eigenvector.
pub fn herm_max_eigpair(h: &CMat) -> Result<(f64, CVec)> {
    check_hermitian(h)?;
    if h.nrows() == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let eig = SymmetricEigen::new(hermitian_part(h));
    let idx = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(idx).into_owned();
    let norm = v.norm();
    Ok((eig.eigenvalues[idx], v / C64::from(norm)))
}

/// Full Hermitian eigendecomposition with eigenvalues sorted descending.
pub fn herm_eig_sorted(h: &CMat) -> Result<(RVec, CMat)> {
    check_hermitian(h)?;
    let eig = SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = RVec::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = CMat::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i))
            .collect::<Vec<_>>(),
    );
    Ok((vals, vecs))
}

/// Maximizes `uᴴAu / uᴴBu` over nonzero `u`: Cholesky-whiten `B`, then take
/// the principal eigenvector of `L⁻¹AL⁻ᴴ`.
pub fn gen_rayleigh_max(a: &CMat, b: &CMat) -> Result<(f64, CVec)> {
    check_hermitian(a)?;
    check_hermitian(b)?;
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "A is {:?} but B is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let chol = Cholesky::new(hermitian_part(b)).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let diag_min = l
        .diagonal()
        .iter()
        .map(|d| d.re)
        .fold(f64::INFINITY, f64::min);
    let diag_max = l.diagonal().iter().map(|d| d.re).fold(0.0, f64::max);
    if !(diag_min > 1e-12 * diag_max) {
        return Err(Error::NotPositiveDefinite);
    }
    // C = L⁻¹ A L⁻ᴴ via two triangular solves.
    let x = l
        .solve_lower_triangular(&hermitian_part(a))
        .ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or(Error::NotPositiveDefinite)?;
    let (lambda, v) = herm_max_eigpair(&hermitian_part(&c))?;
    let u = l
        .adjoint()
        .solve_upper_triangular(&v)
        .ok_or(Error::NotPositiveDefinite)?;
    let norm = u.norm();
    Ok((lambda, u / C64::from(norm)))
}

/// Column-major vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`] for an `rows×cols` matrix.
pub fn mat_of(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// `|Tr{ABCD} − vecᴴ{Dᴴ}(Cᵀ⊗A)vec{B}|`.
pub fn vec_kron_trace_check(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> Result<f64> {
    if a.ncols() != b.nrows()
        || b.ncols() != c.nrows()
        || c.ncols() != d.nrows()
        || d.ncols() != a.nrows()
    {
        return Err(Error::Dimension(
            "matrices are not conformable for Tr{ABCD}".into(),
        ));
    }
    let lhs = (a * b * c * d).trace();
    let rhs = vec_of(&d.adjoint()).dotc(&(c.transpose().kronecker(a) * vec_of(b)));
    Ok((lhs - rhs).norm())
}

/// `[Re φ; Im φ]`.
pub fn embed_vec(phi: &CVec) -> RVec {
    let m = phi.len();
    RVec::from_fn(2 * m, |i, _| if i < m { phi[i].re } else { phi[i - m].im })
}

/// Inverse of [`embed_vec`].
pub fn unembed_vec(v: &RVec) -> CVec {
    let m = v.len() / 2;
    CVec::from_fn(m, |i, _| C64::new(v[i], v[i + m]))
}

/// `[[Re F̃, Im F̃], [Im F̃, −Re F̃]]`, so that `φ̄ᵀF̄φ̄ = Re{φᴴF̃φ*}`.
pub fn real_embed(f_tilde: &CMat) -> Result<RMat> {
    require_square(f_tilde.nrows(), f_tilde.ncols())?;
    let m = f_tilde.nrows();
    Ok(RMat::from_fn(2 * m, 2 * m, |i, j| {
        let z = f_tilde[(i % m, j % m)];
        match (i < m, j < m) {
            (true, true) => z.re,
            (false, false) => -z.re,
            _ => z.im,
        }
    }))
}

/// A complex vector/matrix pair in real-embedded form.
#[derive(Debug, Clone, PartialEq)]
pub struct RealEmbedding {
    pub phi_bar: RVec,
    pub f_bar: RMat,
}

impl RealEmbedding {
    pub fn new(phi: &CVec, f_tilde: &CMat) -> Result<Self> {
        if phi.len() != f_tilde.nrows() {
            return Err(Error::Dimension(format!(
                "phi has {} entries, F is {}x{}",
                phi.len(),
                f_tilde.nrows(),
                f_tilde.ncols()
            )));
        }
        Ok(Self {
            phi_bar: embed_vec(phi),
            f_bar: real_embed(f_tilde)?,
        })
    }

    /// `φ̄ᵀF̄φ̄`.
    pub fn quad_form(&self) -> f64 {
        self.phi_bar.dot(&(&self.f_bar * &self.phi_bar))
    }
}

/// Largest eigenvalue of a real symmetric matrix (`0` for an empty matrix).
pub fn max_eig_sym(s: &RMat) -> f64 {
    if s.nrows() == 0 {
        return 0.0;
    }
    let sym = (s + s.transpose()) * 0.5;
    sym.symmetric_eigenvalues().max()
}

/// Factor `R` (`r×n`) with `RᴴR = H` for a Hermitian PSD `H`; eigenvalues below
/// `rel_drop·λ_max` are discarded. Fails if an eigenvalue is more negative than
/// `−psd_tol·max(1, λ_max)`.
pub fn psd_factor(h: &CMat, psd_tol: f64, rel_drop: f64) -> Result<CMat> {
    let (vals, vecs) = herm_eig_sorted(h)?;
    let top = vals.iter().copied().fold(0.0, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -psd_tol * top.max(1.0) {
        return Err(Error::NotPsd(min));
    }
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i] > rel_drop * top && vals[i] > 0.0)
        .collect();
    let mut r = CMat::zeros(keep.len(), h.ncols());
    for (row, &i) in keep.iter().enumerate() {
        let s = vals[i].sqrt();
        for j in 0..h.ncols() {
            r[(row, j)] = vecs[(j, i)].conj() * s;
        }
    }
    Ok(r)
}

/// Real analogue of [`psd_factor`]: `L` (`n×r`) with `LLᵀ = Q`.
pub fn psd_factor_real(q: &RMat, psd_tol: f64, rel_drop: f64) -> Result<RMat> {
    require_square(q.nrows(), q.ncols())?;
    let asym = (q - q.transpose()).norm() / q.norm().max(1.0);
    if asym > psd_tol {
        return Err(Error::Invalid(format!(
            "matrix is not symmetric (residual {asym:e})"
        )));
    }
    let eig = SymmetricEigen::new((q + q.transpose()) * 0.5);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -psd_tol * top.max(1.0) {
        return Err(Error::NotPsd(min));
    }
    let keep: Vec<usize> = (0..q.nrows())
        .filter(|&i| eig.eigenvalues[i] > rel_drop * top && eig.eigenvalues[i] > 0.0)
        .collect();
    let mut l = RMat::zeros(q.nrows(), keep.len());
    for (col, &i) in keep.iter().enumerate() {
        l.set_column(
            col,
            &(eig.eigenvectors.column(i) * eig.eigenvalues[i].sqrt()),
        );
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cn(rng: &mut impl Rng) -> C64 {
        C64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
    }

    fn rand_herm(rng: &mut impl Rng, n: usize) -> CMat {
        let x = CMat::from_fn(n, n, |_, _| cn(rng));
        hermitian_part(&x)
    }

    fn rand_psd(rng: &mut impl Rng, n: usize, rank: usize) -> CMat {
        let x = CMat::from_fn(n, rank, |_, _| cn(rng));
        &x * x.adjoint()
    }

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            v.len(),
            v.iter().map(|x| C64::from(*x)),
        ))
    }

    #[test]
    fn max_eigpair_cases() {
        let (l, v) = herm_max_eigpair(&CMat::identity(4, 4)).unwrap();
        assert_relative_eq!(l, 1.0, max_relative = 1e-14);
        assert_relative_eq!(v.norm(), 1.0, max_relative = 1e-14);

        let (l, v) = herm_max_eigpair(&diag(&[1.0, 3.0, 2.0])).unwrap();
        assert_relative_eq!(l, 3.0, max_relative = 1e-14);
        assert_relative_eq!(v[1].norm(), 1.0, max_relative = 1e-12);

        let mut bad = CMat::identity(2, 2);
        bad[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            herm_max_eigpair(&bad),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn max_eigpair_dominates_rayleigh_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = rand_herm(&mut rng, 8);
        let (l, v) = herm_max_eigpair(&h).unwrap();
        assert!((&h * &v - &v * C64::from(l)).norm() <= 1e-8 * h.norm());
        for _ in 0..1000 {
            let x = CVec::from_fn(8, |_, _| cn(&mut rng));
            let x = &x / C64::from(x.norm());
            assert!(x.dotc(&(&h * &x)).re <= l + 1e-12);
        }
    }

    #[test]
    fn gen_rayleigh_cases() {
        let (val, u) = gen_rayleigh_max(&diag(&[1.0, 4.0]), &diag(&[1.0, 2.0])).unwrap();
        assert_relative_eq!(val, 2.0, max_relative = 1e-12);
        assert_relative_eq!(u[1].norm(), 1.0, max_relative = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = rand_psd(&mut rng, 5, 5);
        let (v1, _) = gen_rayleigh_max(&a, &CMat::identity(5, 5)).unwrap();
        let (v2, _) = herm_max_eigpair(&a).unwrap();
        assert_relative_eq!(v1, v2, max_relative = 1e-12);

        assert!(matches!(
            gen_rayleigh_max(&a, &diag(&[1.0, 1.0, 0.0, 1.0, 1.0])),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn gen_rayleigh_is_optimal_and_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = rand_psd(&mut rng, 6, 3);
        let b = rand_psd(&mut rng, 6, 6) + CMat::identity(6, 6) * C64::from(0.1);
        let (val, u) = gen_rayleigh_max(&a, &b).unwrap();
        let q = |x: &CVec| x.dotc(&(&a * x)).re / x.dotc(&(&b * x)).re;
        assert_relative_eq!(q(&u), val, max_relative = 1e-10);
        let resid = (&a * &u - &b * &u * C64::from(val)).norm();
        assert!(resid <= 1e-8 * (a.norm() + b.norm()));
        for _ in 0..10_000 {
            let x = CVec::from_fn(6, |_, _| cn(&mut rng));
            assert!(q(&x) <= val * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gen_rayleigh_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = rand_psd(&mut rng, 4, 2);
        let b = rand_psd(&mut rng, 4, 4) + CMat::identity(4, 4);
        let (v1, u1) = gen_rayleigh_max(&a, &b).unwrap();
        let (v2, u2) = gen_rayleigh_max(&(&a * C64::from(3.0)), &(&b * C64::from(0.5))).unwrap();
        assert_relative_eq!(v2, v1 * 6.0, max_relative = 1e-10);
        assert_relative_eq!(u1.dotc(&u2).norm(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn kron_trace_identity() {
        let i2 = CMat::identity(2, 2);
        assert!(vec_kron_trace_check(&i2, &i2, &i2, &i2).unwrap() < 1e-15);
        assert_relative_eq!((&i2 * &i2 * &i2 * &i2).trace().re, 2.0);
        let z = CMat::zeros(3, 3);
        assert_eq!(vec_kron_trace_check(&z, &z, &z, &z).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m: Vec<CMat> = (0..4)
            .map(|_| CMat::from_fn(3, 3, |_, _| cn(&mut rng)))
            .collect();
        assert!(vec_kron_trace_check(&m[0], &m[1], &m[2], &m[3]).unwrap() <= 1e-10);
    }

    #[test]
    fn real_embed_cases() {
        let e = real_embed(&CMat::identity(2, 2)).unwrap();
        let mut want = RMat::identity(4, 4);
        want[(2, 2)] = -1.0;
        want[(3, 3)] = -1.0;
        assert_eq!(e, want);

        let e = real_embed(&(CMat::identity(2, 2) * C64::new(0.0, 1.0))).unwrap();
        let mut want = RMat::zeros(4, 4);
        for i in 0..2 {
            want[(i, i + 2)] = 1.0;
            want[(i + 2, i)] = 1.0;
        }
        assert_eq!(e, want);
    }

    #[test]
    fn real_embed_quadratic_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let f = CMat::from_fn(4, 4, |_, _| cn(&mut rng));
            let phi = CVec::from_fn(4, |_, _| cn(&mut rng));
            let emb = RealEmbedding::new(&phi, &f).unwrap();
            let direct = phi.dotc(&(&f * phi.conjugate())).re;
            assert!((emb.quad_form() - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            assert!(emb.f_bar.trace().abs() < 1e-14);
            assert!(max_eig_sym(&(&emb.f_bar + emb.f_bar.transpose())) >= 0.0);
            assert_eq!(unembed_vec(&emb.phi_bar), phi);
        }
    }

    #[test]
    fn max_eig_sym_cases() {
        assert_eq!(max_eig_sym(&RMat::zeros(3, 3)), 0.0);
        let d = RMat::from_diagonal(&RVec::from_vec(vec![-1.0, 5.0]));
        assert_relative_eq!(max_eig_sym(&d), 5.0, max_relative = 1e-14);
    }

    #[test]
    fn psd_factors_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = rand_psd(&mut rng, 5, 2);
        let r = psd_factor(&h, 1e-9, 1e-14).unwrap();
        assert_eq!(r.nrows(), 2);
        assert!((r.adjoint() * &r - &h).norm() <= 1e-12 * h.norm());
        assert!(matches!(
            psd_factor(&(-&h), 1e-9, 1e-14),
            Err(Error::NotPsd(_))
        ));

        let x = RMat::from_fn(4, 3, |_, _| rng.gen::<f64>() - 0.5);
        let q = &x * x.transpose();
        let l = psd_factor_real(&q, 1e-9, 1e-14).unwrap();
        assert!((&l * l.transpose() - &q).norm() <= 1e-12 * q.norm());
    }
}
