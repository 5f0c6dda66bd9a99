//! `validate`: schema check, starting-point feasibility per scenario and a
//! dump of the spec with every default filled in.

use std::fmt::Write;

use crate::run::{fmt_float, precheck};
use crate::spec::{ExperimentSpec, SpecError};

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub spec: ExperimentSpec,
    /// `(mode, sweep value, outcome)`; outcome is `None` when the starting
    /// point is feasible.
    pub prechecks: Vec<(String, f64, Option<String>)>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.prechecks.iter().all(|(_, _, e)| e.is_none())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# status: {}",
            if self.ok() {
                "ok"
            } else {
                "infeasible scenarios"
            }
        )
        .unwrap();
        writeln!(s, "# resolved spec").unwrap();
        s.push_str(&self.spec.to_toml());
        writeln!(s, "# starting points (seed {})", self.spec.seed).unwrap();
        for (mode, value, outcome) in &self.prechecks {
            let verdict = outcome.as_deref().unwrap_or("ok");
            writeln!(
                s,
                "{mode} {}={}: {verdict}",
                self.spec.sweep.parameter.name(),
                fmt_float(*value)
            )
            .unwrap();
        }
        s
    }
}

/// Parses and checks `text`. Schema and range errors are returned as `Err`;
/// infeasible scenarios are reported, not raised.
pub fn validate(text: &str) -> Result<ValidationReport, SpecError> {
    let spec = ExperimentSpec::from_toml_str(text)?;
    let mut prechecks = Vec::new();
    for &mode in &spec.modes {
        for (i, &v) in spec.sweep.values.iter().enumerate() {
            let outcome = match precheck(&spec, mode, i) {
                Ok(rep) if rep.feasible => None,
                Ok(rep) => Some(format!(
                    "starting point violates constraints (relative violation {:.3e})",
                    rep.max_relative_violation(&spec.config_at(v)?)
                )),
                Err(e) => Some(e.to_string()),
            };
            prechecks.push((mode.name().to_string(), v, outcome));
        }
    }
    Ok(ValidationReport { spec, prechecks })
}
