//! Cone solver checked against an independent first-order reference and, when
//! available, against Clarabel.

use arisac::conic::{
    solve, ConicBackend, ConicOptions, ConicProblem, ConicStatus, EmbeddedIpm, QuadConstraint,
    SocConstraint,
};
use arisac::{RMat, RVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_socp(seed: u64, n: usize, n_cones: usize) -> ConicProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = || rng.gen::<f64>() - 0.5;
    let z0 = RVec::from_fn(n, |_, _| u());
    let mut p = ConicProblem::new(n, RVec::from_fn(n, |_, _| u()));
    for _ in 0..n_cones {
        let a = RMat::from_fn(4, n, |_, _| u());
        let b = RVec::from_fn(4, |_, _| u());
        let c = RVec::from_fn(n, |_, _| 0.2 * u());
        let d = (&a * &z0 + &b).norm() - c.dot(&z0) + 0.5;
        p.soc.push(SocConstraint { a, b, c, d });
    }
    p.soc.push(SocConstraint {
        a: RMat::identity(n, n),
        b: RVec::zeros(n),
        c: RVec::zeros(n),
        d: z0.norm() + 3.0,
    });
    p
}

/// Projection onto `{(t, x) : ‖x‖ ≤ t}`.
fn project_soc(t: f64, x: &RVec) -> (f64, RVec) {
    let nx = x.norm();
    if nx <= t {
        (t, x.clone())
    } else if nx <= -t {
        (0.0, RVec::zeros(x.len()))
    } else {
        let a = (t + nx) / 2.0;
        (a, x * (a / nx))
    }
}

/// ADMM on `min cᵀz s.t. y = Mz + q ∈ K` with `K` a product of SOCs.
fn admm_reference(p: &ConicProblem, iters: usize) -> f64 {
    let n = p.n_vars;
    let dims: Vec<usize> = p.soc.iter().map(|s| s.a.nrows() + 1).collect();
    let m: usize = dims.iter().sum();
    let mut mm = RMat::zeros(m, n);
    let mut q = RVec::zeros(m);
    let mut r = 0;
    for s in &p.soc {
        mm.row_mut(r).copy_from(&s.c.transpose());
        q[r] = s.d;
        mm.rows_mut(r + 1, s.a.nrows()).copy_from(&s.a);
        q.rows_mut(r + 1, s.a.nrows()).copy_from(&s.b);
        r += s.a.nrows() + 1;
    }
    let rho = 1.0;
    let chol = (mm.transpose() * &mm).cholesky().expect("full column rank");
    let mut y = RVec::zeros(m);
    let mut u = RVec::zeros(m);
    let mut z = RVec::zeros(n);
    for _ in 0..iters {
        let rhs = -(&p.objective / rho) - mm.transpose() * (&q - &y + &u);
        z = chol.solve(&rhs);
        let v = &mm * &z + &q + &u;
        let mut off = 0;
        for &d in &dims {
            let (t, x) = project_soc(v[off], &v.rows(off + 1, d - 1).into_owned());
            y[off] = t;
            y.rows_mut(off + 1, d - 1).copy_from(&x);
            off += d;
        }
        u += &mm * &z + &q - &y;
    }
    p.objective.dot(&z)
}

#[test]
fn random_socps_match_first_order_reference() {
    for seed in 0..3 {
        let p = random_socp(seed, 20, 6);
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, ConicStatus::Optimal, "seed {seed}");
        let reference = admm_reference(&p, 200_000);
        let err = (sol.objective - reference).abs() / sol.objective.abs().max(1.0);
        assert!(
            err <= 1e-5,
            "seed {seed}: ipm {} vs reference {reference}",
            sol.objective
        );
    }
}

#[test]
fn optimal_solutions_satisfy_constraints_and_weak_duality() {
    for seed in 10..30 {
        let p = random_socp(seed, 12, 5);
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, ConicStatus::Optimal);
        for s in &p.soc {
            assert!(-s.margin(&sol.z) <= 1e-8 * (1.0 + s.b.norm()));
        }
        assert!(sol.dual_bound <= sol.objective + sol.dual_gap + 1e-12);
        assert!(sol.dual_gap <= 1e-7 * sol.objective.abs().max(1.0));
        let again = solve(&p, 1e-8).unwrap();
        assert!((again.objective - sol.objective).abs() <= 1e-9 * sol.objective.abs().max(1.0));
    }
}

#[test]
fn quadratic_constraints_are_lowered() {
    // min z₀ + z₁ s.t. z₀² + 4z₁² ≤ 1: optimum −√5/2.
    let mut p = ConicProblem::new(2, RVec::from_vec(vec![1.0, 1.0]));
    p.quad.push(QuadConstraint {
        q_mat: RMat::from_diagonal(&RVec::from_vec(vec![1.0, 4.0])),
        q: RVec::zeros(2),
        r: 1.0,
    });
    let sol = solve(&p, 1e-9).unwrap();
    assert_eq!(sol.status, ConicStatus::Optimal);
    assert!((sol.objective + 5f64.sqrt() / 2.0).abs() < 1e-7);
}

#[test]
fn embedded_reports_infeasible_ball_intersection() {
    let mut p = ConicProblem::new(2, RVec::zeros(2));
    for center in [-2.0, 2.0] {
        p.soc.push(SocConstraint {
            a: RMat::identity(2, 2),
            b: RVec::from_vec(vec![-center, 0.0]),
            c: RVec::zeros(2),
            d: 1.0,
        });
    }
    assert_eq!(
        EmbeddedIpm
            .solve(&p, &ConicOptions::default())
            .unwrap()
            .status,
        ConicStatus::Infeasible
    );
}

#[cfg(feature = "clarabel")]
#[test]
fn embedded_matches_clarabel() {
    use arisac::conic::ClarabelBackend;
    let opts = ConicOptions::default();
    for seed in 40..60 {
        let p = random_socp(seed, 15, 4);
        let a = EmbeddedIpm.solve(&p, &opts).unwrap();
        let b = ClarabelBackend.solve(&p, &opts).unwrap();
        assert_eq!(a.status, ConicStatus::Optimal);
        assert_eq!(b.status, ConicStatus::Optimal);
        assert!(
            (a.objective - b.objective).abs() <= 1e-6 * a.objective.abs().max(1.0),
            "seed {seed}: {} vs {}",
            a.objective,
            b.objective
        );
    }
}
