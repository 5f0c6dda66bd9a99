//! Adapter for the Clarabel interior-point solver.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{finish, ConicBackend, ConicOptions, ConicProblem, ConicSolution, ConicStatus};
use crate::error::{Error, Result};
use crate::RVec;

#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, p: &ConicProblem, opts: &ConicOptions) -> Result<ConicSolution> {
        let sf = p.to_standard_form()?;
        let n = p.n_vars;
        let (m, _) = sf.g.shape();

        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for j in 0..n {
            for i in 0..m {
                let v = sf.g[(i, j)];
                if v != 0.0 {
                    rowval.push(i);
                    nzval.push(v);
                }
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(m, n, colptr, rowval, nzval);
        let pmat = CscMatrix::<f64>::zeros((n, n));
        let mut cones = Vec::new();
        if sf.n_orthant > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(sf.n_orthant));
        }
        cones.extend(
            sf.soc_dims
                .iter()
                .map(|&d| SupportedConeT::SecondOrderConeT(d)),
        );

        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(opts.max_iter as u32)
            .tol_feas(opts.feas_tol)
            .tol_gap_abs(opts.gap_tol)
            .tol_gap_rel(opts.gap_tol)
            .build()
            .map_err(|e| Error::Invalid(format!("clarabel settings: {e:?}")))?;
        let mut solver = DefaultSolver::new(
            &pmat,
            sf.c.as_slice(),
            &a,
            sf.h.as_slice(),
            &cones,
            settings,
        )
        .map_err(|e| Error::Invalid(format!("clarabel setup: {e}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => ConicStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                ConicStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                ConicStatus::Unbounded
            }
            SolverStatus::MaxIterations | SolverStatus::MaxTime => ConicStatus::MaxIter,
            _ => ConicStatus::NumericalFailure,
        };
        let dual_bound = if status == ConicStatus::Optimal {
            sol.obj_val_dual
        } else {
            f64::NEG_INFINITY
        };
        Ok(finish(
            p,
            RVec::from_column_slice(&sol.x),
            status,
            dual_bound,
            sol.iterations as usize,
        ))
    }
}
