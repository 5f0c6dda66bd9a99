//! Experiment description and its TOML ingestion.

use std::path::{Path, PathBuf};

use arisac::channels::{users_in_disk, LinkParams};
use arisac::model::db_to_linear;
use arisac::{dbm_to_watt, Geometry, Mode, SystemConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// TOML syntax or schema error; the message carries the line and column.
    #[error("{0}")]
    Parse(String),

    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error(transparent)]
    Model(#[from] arisac::Error),
}

fn invalid(field: &str, reason: impl Into<String>) -> SpecError {
    SpecError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// System parameters with powers in dBm and SINR targets in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n_bs: usize,
    pub n_users: usize,
    pub n_ris: usize,
    pub p_bs_dbm: f64,
    pub p_ris_dbm: f64,
    /// Common power of every noise source, in dBm. Exactly one of
    /// `noise_dbm` and `noise_w` must be given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_dbm: Option<f64>,
    /// Common noise power in watts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_w: Option<f64>,
    pub gamma_db: f64,
    pub a_max: f64,
    pub rcs_var: f64,
}

impl ScenarioSpec {
    pub fn noise_watts(&self) -> Result<f64, SpecError> {
        match (self.noise_dbm, self.noise_w) {
            (Some(dbm), None) => Ok(dbm_to_watt(dbm)),
            (None, Some(w)) => Ok(w),
            _ => Err(invalid(
                "scenario.noise_dbm",
                "give exactly one of `noise_dbm` and `noise_w`",
            )),
        }
    }

    pub fn to_config(&self) -> Result<SystemConfig, SpecError> {
        let cfg = SystemConfig::uniform(
            self.n_bs,
            self.n_users,
            self.n_ris,
            dbm_to_watt(self.p_bs_dbm),
            dbm_to_watt(self.p_ris_dbm),
            self.noise_watts()?,
            db_to_linear(self.gamma_db),
            self.a_max,
            self.rcs_var,
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Scenario geometry. Users are dropped uniformly in a disk per seed unless
/// `user_positions` lists them explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    pub bs_pos: [f64; 2],
    pub ris_pos: [f64; 2],
    pub target_pos: [f64; 2],
    pub user_center: [f64; 2],
    pub user_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user_positions: Option<Vec<[f64; 2]>>,
    pub pathloss_ref_db: f64,
    pub exponents: LinkParams,
    pub rician_k: LinkParams,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            bs_pos: Geometry::DEFAULT_BS,
            ris_pos: Geometry::DEFAULT_RIS,
            target_pos: Geometry::DEFAULT_TARGET,
            user_center: Geometry::DEFAULT_USER_CENTER,
            user_radius: Geometry::DEFAULT_USER_RADIUS,
            user_positions: None,
            pathloss_ref_db: -30.0,
            exponents: Geometry::default_exponents(),
            rician_k: Geometry::default_rician(),
        }
    }
}

impl GeometrySpec {
    pub fn build(&self, n_users: usize, seed: u64) -> Geometry {
        Geometry {
            bs_pos: self.bs_pos,
            ris_pos: self.ris_pos,
            target_pos: self.target_pos,
            user_positions: match &self.user_positions {
                Some(p) => p.clone(),
                None => users_in_disk(self.user_center, self.user_radius, n_users, seed),
            },
            pathloss_ref_db: self.pathloss_ref_db,
            exponents: self.exponents,
            rician_k: self.rician_k,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PBsDbm,
    GammaDb,
    NRis,
    AMax,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::PBsDbm => "p_bs_dbm",
            SweepParam::GammaDb => "gamma_db",
            SweepParam::NRis => "n_ris",
            SweepParam::AMax => "a_max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

fn all_modes() -> Vec<Mode> {
    Mode::ALL.to_vec()
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "all_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "one")]
    pub n_seeds: u64,
    /// First seed; point seeds are `seed, seed + 1, …`.
    #[serde(default)]
    pub seed: u64,
    /// CSV destination of `run`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub geometry: GeometrySpec,
    pub sweep: SweepSpec,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, SpecError> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
            path: path.into(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment specs always serialize")
    }

    /// Default scenario (N=8, K=4, M=16, Γ=12 dB, P_RIS=20 dBm, noise
    /// −80 dBm, ς²=1, a_max=8) swept over P_BS ∈ {30, 34, 38, 42, 46} dBm.
    pub fn default_scenario() -> Self {
        Self {
            modes: all_modes(),
            n_seeds: 10,
            seed: 0,
            output: None,
            scenario: ScenarioSpec {
                n_bs: 8,
                n_users: 4,
                n_ris: 16,
                p_bs_dbm: 40.0,
                p_ris_dbm: 20.0,
                noise_dbm: Some(-80.0),
                noise_w: None,
                gamma_db: 12.0,
                a_max: 8.0,
                rcs_var: 1.0,
            },
            geometry: GeometrySpec::default(),
            sweep: SweepSpec {
                parameter: SweepParam::PBsDbm,
                values: vec![30.0, 34.0, 38.0, 42.0, 46.0],
            },
        }
    }

    /// Structural checks plus validation of every swept configuration.
    pub fn check(&self) -> Result<(), SpecError> {
        if self.sweep.values.is_empty() {
            return Err(invalid("sweep.values", "must not be empty"));
        }
        if self.n_seeds == 0 {
            return Err(invalid("n_seeds", "must be at least 1"));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes", "must not be empty"));
        }
        for &v in &self.sweep.values {
            if !v.is_finite() {
                return Err(invalid("sweep.values", format!("{v} is not finite")));
            }
            if self.sweep.parameter == SweepParam::NRis && (v < 1.0 || v.fract() != 0.0) {
                return Err(invalid(
                    "sweep.values",
                    format!("n_ris values must be positive integers, got {v}"),
                ));
            }
            let cfg = self.config_at(v)?;
            self.geometry.build(cfg.n_users, self.seed).validate(&cfg)?;
        }
        Ok(())
    }

    /// Scenario with the swept parameter set to `value`.
    pub fn config_at(&self, value: f64) -> Result<SystemConfig, SpecError> {
        let mut s = self.scenario.clone();
        match self.sweep.parameter {
            SweepParam::PBsDbm => s.p_bs_dbm = value,
            SweepParam::GammaDb => s.gamma_db = value,
            SweepParam::NRis => s.n_ris = value as usize,
            SweepParam::AMax => s.a_max = value,
        }
        s.to_config()
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + Clone {
        self.seed..self.seed + self.n_seeds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let spec = ExperimentSpec::default_scenario();
        assert_eq!(
            ExperimentSpec::from_toml_str(&spec.to_toml()).unwrap(),
            spec
        );
    }

    #[test]
    fn dbm_fields_are_converted() {
        let cfg = ExperimentSpec::default_scenario().config_at(30.0).unwrap();
        assert!((cfg.p_bs - 1.0).abs() < 1e-15);
        assert!((cfg.p_ris - 0.1).abs() < 1e-15);
        assert!((cfg.sigma2_r - 1e-11).abs() < 1e-25);
        assert!((cfg.gamma_targets[0] - 10f64.powf(1.2)).abs() < 1e-12);
    }

    #[test]
    fn sweep_parameters_apply() {
        let mut spec = ExperimentSpec::default_scenario();
        spec.sweep = SweepSpec {
            parameter: SweepParam::NRis,
            values: vec![8.0],
        };
        assert_eq!(spec.config_at(8.0).unwrap().n_ris, 8);
        spec.sweep = SweepSpec {
            parameter: SweepParam::AMax,
            values: vec![3.0],
        };
        assert_eq!(spec.config_at(3.0).unwrap().a_max, 3.0);
        spec.sweep = SweepSpec {
            parameter: SweepParam::NRis,
            values: vec![2.5],
        };
        assert!(spec.check().is_err());
    }

    #[test]
    fn noise_needs_exactly_one_form() {
        let mut s = ExperimentSpec::default_scenario().scenario;
        s.noise_w = Some(1e-11);
        assert!(s.noise_watts().is_err());
        s.noise_dbm = None;
        assert_eq!(s.noise_watts().unwrap(), 1e-11);
    }

    #[test]
    fn explicit_users_override_the_disk() {
        let mut g = GeometrySpec::default();
        g.user_positions = Some(vec![[30.0, -8.0]]);
        assert_eq!(g.build(1, 4).user_positions, vec![[30.0, -8.0]]);
        assert_eq!(GeometrySpec::default().build(2, 4).user_positions.len(), 2);
    }
}
