//! Sweep execution and CSV output.

use std::io::Write;
use std::time::Instant;

use arisac::model::{
    check_feasibility, linear_to_db, ris_reflect_power, validate_solution, FeasibilityReport,
};
use arisac::{optimize, synth_channels, BcdOptions, DesignSolution, Error, Mode, SystemConfig};
use rayon::prelude::*;

use crate::spec::{ExperimentSpec, SpecError};

/// Relative tolerance of the feasibility check behind `Status::Ok`.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    /// Converged and feasible.
    Ok,
    /// Feasible, but the round cap was reached first.
    NotConverged,
    /// No feasible starting point exists for the SINR targets.
    Infeasible,
    /// Solver error, non-finite output or a returned point that fails the
    /// feasibility check.
    NumericalFailure,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NotConverged => "not_converged",
            Status::Infeasible => "infeasible",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

/// One solved (mode, sweep value, seed) point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub mode: Mode,
    pub sweep_param: &'static str,
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub seed: u64,
    pub gamma_r_db: f64,
    /// `min_k 10·log10(γ_k/Γ_k)` over users with `Γ_k > 0`; `+∞` without targets.
    pub min_sinr_margin_db: f64,
    pub bs_power_used_w: f64,
    pub ris_power_used_w: f64,
    pub outer_iters: usize,
    pub status: Status,
    pub wall_ms: u128,
    /// Feasibility residuals and error text for the diagnostics log.
    pub detail: String,
}

impl PointResult {
    fn failed(
        mode: Mode,
        sweep_param: &'static str,
        sweep_index: usize,
        sweep_value: f64,
        seed: u64,
        status: Status,
        detail: String,
    ) -> Self {
        Self {
            mode,
            sweep_param,
            sweep_index,
            sweep_value,
            seed,
            gamma_r_db: f64::NAN,
            min_sinr_margin_db: f64::NAN,
            bs_power_used_w: f64::NAN,
            ris_power_used_w: f64::NAN,
            outer_iters: 0,
            status,
            wall_ms: 0,
            detail,
        }
    }
}

fn sinr_margin_db(cfg: &SystemConfig, sinrs: &[f64]) -> f64 {
    sinrs
        .iter()
        .zip(&cfg.gamma_targets)
        .filter(|(_, &g)| g > 0.0)
        .map(|(&s, &g)| linear_to_db(s / g))
        .fold(f64::INFINITY, f64::min)
}

fn describe(rep: &FeasibilityReport) -> String {
    let max_amp = rep.amplitude.iter().cloned().fold(0.0, f64::max);
    let sinr: Vec<String> = rep.sinr.iter().map(|s| format!("{s:.6e}")).collect();
    format!(
        "feasible={} bs_power={:.6e} ris_power={:.6e} max_amplitude={:.6e} sinr=[{}]",
        rep.feasible,
        rep.bs_power,
        rep.ris_power,
        max_amp,
        sinr.join(",")
    )
}

fn classify(
    cfg: &SystemConfig,
    ch: &arisac::ChannelSet,
    sol: &DesignSolution,
) -> Result<(Status, String), Error> {
    let rep = validate_solution(cfg, ch, sol, FEASIBILITY_TOL)?;
    let status = if !sol.radar_snr.is_finite() || !rep.feasible {
        Status::NumericalFailure
    } else if sol.converged {
        Status::Ok
    } else {
        Status::NotConverged
    };
    Ok((status, describe(&rep)))
}

/// Solves one point. Errors become a status; they never abort the sweep.
pub fn solve_point(
    spec: &ExperimentSpec,
    mode: Mode,
    sweep_index: usize,
    seed: u64,
) -> PointResult {
    let sweep_param = spec.sweep.parameter.name();
    let value = spec.sweep.values[sweep_index];
    let fail = |status, detail: String| {
        PointResult::failed(mode, sweep_param, sweep_index, value, seed, status, detail)
    };
    let start = Instant::now();
    let cfg = match spec.config_at(value) {
        Ok(c) => c,
        Err(e) => return fail(Status::Infeasible, e.to_string()),
    };
    let solved = synth_channels(&cfg, &spec.geometry.build(cfg.n_users, seed)).and_then(|ch| {
        let sol = optimize(
            &cfg,
            &ch,
            &BcdOptions {
                seed,
                mode,
                ..Default::default()
            },
        )?;
        let mode_cfg = mode.apply(&cfg)?;
        let (status, detail) = classify(&mode_cfg, &ch, &sol)?;
        let ris = ris_reflect_power(&mode_cfg, &ch, &sol.w_mat, &sol.phi)?;
        Ok((sol, mode_cfg, status, detail, ris))
    });
    let wall_ms = start.elapsed().as_millis();
    match solved {
        Ok((sol, mode_cfg, status, detail, ris)) => PointResult {
            mode,
            sweep_param,
            sweep_index,
            sweep_value: value,
            seed,
            gamma_r_db: linear_to_db(sol.radar_snr),
            min_sinr_margin_db: sinr_margin_db(&mode_cfg, &sol.user_sinrs),
            bs_power_used_w: sol.w_mat.norm_squared(),
            ris_power_used_w: ris,
            outer_iters: sol.outer_iters(),
            status,
            wall_ms,
            detail,
        },
        Err(Error::Infeasible(msg)) => PointResult {
            wall_ms,
            ..fail(Status::Infeasible, msg)
        },
        Err(e) => PointResult {
            wall_ms,
            ..fail(Status::NumericalFailure, e.to_string())
        },
    }
}

/// Solves every (mode, sweep value, seed) point of `spec` on `jobs` worker
/// threads (all cores when `None`). Rows come back sorted by mode, sweep
/// position and seed whatever the completion order.
pub fn run(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<Vec<PointResult>, SpecError> {
    spec.check()?;
    let mut points = Vec::new();
    for &mode in &spec.modes {
        for i in 0..spec.sweep.values.len() {
            for seed in spec.seeds() {
                points.push((mode, i, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| SpecError::Parse(format!("cannot start worker pool: {e}")))?;
    let mut rows: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .map(|&(mode, i, seed)| {
                let row = solve_point(spec, mode, i, seed);
                log::info!(
                    "{} {}={} seed {}: {} ({} ms)",
                    mode.name(),
                    row.sweep_param,
                    row.sweep_value,
                    seed,
                    row.status.name(),
                    row.wall_ms
                );
                row
            })
            .collect()
    });
    rows.sort_by(|a, b| (a.mode, a.sweep_index, a.seed).cmp(&(b.mode, b.sweep_index, b.seed)));
    Ok(rows)
}

pub const CSV_HEADER: [&str; 11] = [
    "mode",
    "sweep_param",
    "sweep_value",
    "seed",
    "gamma_r_db",
    "min_sinr_margin_db",
    "bs_power_used_w",
    "ris_power_used_w",
    "outer_iters",
    "status",
    "wall_ms",
];

/// Nine significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn write_csv<W: Write>(rows: &[PointResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.mode.name().to_string(),
            r.sweep_param.to_string(),
            fmt_float(r.sweep_value),
            r.seed.to_string(),
            fmt_float(r.gamma_r_db),
            fmt_float(r.min_sinr_margin_db),
            fmt_float(r.bs_power_used_w),
            fmt_float(r.ris_power_used_w),
            r.outer_iters.to_string(),
            r.status.name().to_string(),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One diagnostics line per point, in row order.
pub fn write_log<W: Write>(rows: &[PointResult], mut out: W) -> std::io::Result<()> {
    for r in rows {
        writeln!(
            out,
            "{} {}={} seed={} status={} iters={} {}",
            r.mode.name(),
            r.sweep_param,
            fmt_float(r.sweep_value),
            r.seed,
            r.status.name(),
            r.outer_iters,
            r.detail
        )?;
    }
    Ok(())
}

/// Feasibility of the starting point of `mode` at sweep position `i`.
pub fn precheck(
    spec: &ExperimentSpec,
    mode: Mode,
    i: usize,
) -> Result<FeasibilityReport, SpecError> {
    let cfg = mode.apply(&spec.config_at(spec.sweep.values[i])?)?;
    let ch = synth_channels(&cfg, &spec.geometry.build(cfg.n_users, spec.seed))?;
    let (w, phi) = arisac::bcd::initialize(&cfg, &ch, spec.seed)?;
    Ok(check_feasibility(&cfg, &ch, &w, &phi, FEASIBILITY_TOL)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{SweepParam, SweepSpec};

    fn tiny() -> ExperimentSpec {
        let mut spec = ExperimentSpec::default_scenario();
        spec.scenario.n_bs = 4;
        spec.scenario.n_users = 2;
        spec.scenario.n_ris = 4;
        spec.modes = vec![Mode::RadarOnlyActive];
        spec.n_seeds = 1;
        spec.sweep = SweepSpec {
            parameter: SweepParam::PBsDbm,
            values: vec![36.0],
        };
        spec
    }

    #[test]
    fn one_point_gives_one_row() {
        let rows = run(&tiny(), Some(1)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, Status::Ok);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("radar_only_active,p_bs_dbm,3.60000000e1,0,"));
    }

    #[test]
    fn infeasible_points_are_recorded() {
        let mut spec = tiny();
        spec.modes = vec![Mode::ActiveIsac];
        spec.scenario.gamma_db = 80.0;
        let rows = run(&spec, Some(1)).unwrap();
        assert_eq!(rows[0].status, Status::Infeasible);
        assert!(rows[0].gamma_r_db.is_nan());
    }

    #[test]
    fn margins_ignore_users_without_targets() {
        let mut cfg = ExperimentSpec::default_scenario().config_at(30.0).unwrap();
        cfg.gamma_targets = vec![0.0, 2.0, 4.0, 0.0];
        let m = sinr_margin_db(&cfg, &[1.0, 4.0, 4.0, 1.0]);
        assert!(m.abs() < 1e-12);
        cfg.gamma_targets = vec![0.0; 4];
        assert_eq!(sinr_margin_db(&cfg, &[1.0; 4]), f64::INFINITY);
    }

    #[test]
    fn float_format_has_nine_digits() {
        assert_eq!(fmt_float(1.0 / 3.0), "3.33333333e-1");
        assert_eq!(fmt_float(-12.5), "-1.25000000e1");
    }
}
