//! Geometric channel synthesis with seeded randomness.
//!
//! Every array is a half-wavelength ULA laid along the y axis, so the
//! departure/arrival angle of a link is `atan2(dy, dx)` measured from the
//! array broadside.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelSet, SystemConfig};
use crate::{CMat, CVec, C64};

/// Element spacing in wavelengths.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// Per-link values for the four channel blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub bs_user: f64,
    pub bs_ris: f64,
    pub ris_user: f64,
    pub ris_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_pos: [f64; 2],
    pub ris_pos: [f64; 2],
    pub target_pos: [f64; 2],
    pub user_positions: Vec<[f64; 2]>,
    /// Path loss at 1 m, in dB (negative).
    pub pathloss_ref_db: f64,
    pub exponents: LinkParams,
    /// Linear Rician factors; `0` is Rayleigh and `f64::INFINITY` pure LoS.
    pub rician_k: LinkParams,
    pub seed: u64,
}

impl Geometry {
    pub const DEFAULT_BS: [f64; 2] = [0.0, 0.0];
    pub const DEFAULT_RIS: [f64; 2] = [10.0, 5.0];
    pub const DEFAULT_TARGET: [f64; 2] = [30.0, 0.0];
    pub const DEFAULT_USER_CENTER: [f64; 2] = [30.0, -10.0];
    pub const DEFAULT_USER_RADIUS: f64 = 5.0;

    pub fn default_exponents() -> LinkParams {
        LinkParams {
            bs_user: 3.5,
            bs_ris: 2.2,
            ris_user: 2.8,
            ris_target: 2.0,
        }
    }

    pub fn default_rician() -> LinkParams {
        LinkParams {
            bs_user: 0.0,
            bs_ris: 10.0,
            ris_user: 10.0,
            ris_target: f64::INFINITY,
        }
    }

    /// Default scenario with `n_users` users dropped uniformly in the user disk.
    /// User placement is a deterministic function of `seed`.
    pub fn default_scenario(n_users: usize, seed: u64) -> Self {
        Self {
            bs_pos: Self::DEFAULT_BS,
            ris_pos: Self::DEFAULT_RIS,
            target_pos: Self::DEFAULT_TARGET,
            user_positions: users_in_disk(
                Self::DEFAULT_USER_CENTER,
                Self::DEFAULT_USER_RADIUS,
                n_users,
                seed,
            ),
            pathloss_ref_db: -30.0,
            exponents: Self::default_exponents(),
            rician_k: Self::default_rician(),
            seed,
        }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        let bad = |field: &'static str, reason: String| Error::InvalidConfig { field, reason };
        if self.user_positions.len() != cfg.n_users {
            return Err(bad(
                "user_positions",
                format!(
                    "has {} entries, expected {}",
                    self.user_positions.len(),
                    cfg.n_users
                ),
            ));
        }
        let e = &self.exponents;
        for (name, x) in [
            ("bs_user", e.bs_user),
            ("bs_ris", e.bs_ris),
            ("ris_user", e.ris_user),
            ("ris_target", e.ris_target),
        ] {
            if !(x.is_finite() && x >= 2.0) {
                return Err(bad(
                    "exponents",
                    format!("{name} must be finite and at least 2, got {x}"),
                ));
            }
        }
        let r = &self.rician_k;
        for (name, x) in [
            ("bs_user", r.bs_user),
            ("bs_ris", r.bs_ris),
            ("ris_user", r.ris_user),
            ("ris_target", r.ris_target),
        ] {
            if x.is_nan() || x < 0.0 {
                return Err(bad(
                    "rician_k",
                    format!("{name} must be non-negative, got {x}"),
                ));
            }
        }
        if !self.pathloss_ref_db.is_finite() {
            return Err(bad("pathloss_ref_db", "must be finite".into()));
        }
        let check = |name: &'static str, a: [f64; 2], b: [f64; 2]| {
            let d = distance(a, b);
            if d.is_finite() && d > 0.0 {
                Ok(())
            } else {
                Err(bad(
                    name,
                    format!("positions {a:?} and {b:?} must be distinct"),
                ))
            }
        };
        check("ris_pos", self.bs_pos, self.ris_pos)?;
        check("target_pos", self.ris_pos, self.target_pos)?;
        for p in &self.user_positions {
            check("user_positions", self.bs_pos, *p)?;
            check("user_positions", self.ris_pos, *p)?;
        }
        Ok(())
    }
}

/// `k` points uniform in the disk of radius `r` around `center`.
pub fn users_in_disk(center: [f64; 2], r: f64, k: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..k)
        .map(|_| {
            let rho = r * rng.gen::<f64>().sqrt();
            let ang = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            [center[0] + rho * ang.cos(), center[1] + rho * ang.sin()]
        })
        .collect()
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn angle(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

/// ULA response: entry `i` is `exp(j·2π·spacing·i·sin(angle))`.
pub fn ula_steering(m: usize, angle: f64, spacing_ratio: f64) -> CVec {
    let step = 2.0 * std::f64::consts::PI * spacing_ratio * angle.sin();
    CVec::from_fn(m, |i, _| C64::from_polar(1.0, step * i as f64))
}

/// Large-scale amplitude gain `sqrt(10^((ref − 10·exponent·log10 d)/10))`.
pub fn pathloss(d: f64, exponent: f64, ref_db: f64) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Invalid(format!(
            "distance must be positive, got {d}"
        )));
    }
    let db = ref_db - 10.0 * exponent * d.log10();
    Ok(10f64.powf(db / 20.0))
}

fn cn(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Rician combination of a unit-power LoS matrix and CN(0,1) scattering.
fn rician(rng: &mut ChaCha8Rng, los: &CMat, kappa: f64, gain: f64) -> CMat {
    let (w_los, w_nlos) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
    };
    // Scattering is drawn even in the LoS limit so the RNG stream does not
    // depend on the Rician factors.
    let nlos = CMat::from_fn(los.nrows(), los.ncols(), |_, _| cn(rng));
    (los * C64::from(w_los) + nlos * C64::from(w_nlos)) * C64::from(gain)
}

/// Draws a [`ChannelSet`] for `cfg` from `geo`; bit-identical for equal seeds.
pub fn synth_channels(cfg: &SystemConfig, geo: &Geometry) -> Result<ChannelSet> {
    geo.validate(cfg)?;
    let (n, k, m) = (cfg.n_bs, cfg.n_users, cfg.n_ris);
    let e = &geo.exponents;
    let r = &geo.rician_k;
    let mut rng = ChaCha8Rng::seed_from_u64(geo.seed);

    let mut h_d = CMat::zeros(k, n);
    for (i, p) in geo.user_positions.iter().enumerate() {
        let gain = pathloss(distance(geo.bs_pos, *p), e.bs_user, geo.pathloss_ref_db)?;
        let los = CMat::from_row_slice(
            1,
            n,
            ula_steering(n, angle(geo.bs_pos, *p), HALF_WAVELENGTH).as_slice(),
        );
        h_d.set_row(i, &rician(&mut rng, &los, r.bs_user, gain).row(0));
    }

    let gain = pathloss(
        distance(geo.bs_pos, geo.ris_pos),
        e.bs_ris,
        geo.pathloss_ref_db,
    )?;
    let arrive = ula_steering(m, angle(geo.ris_pos, geo.bs_pos), HALF_WAVELENGTH);
    let depart = ula_steering(n, angle(geo.bs_pos, geo.ris_pos), HALF_WAVELENGTH);
    let g_mat = rician(&mut rng, &(arrive * depart.transpose()), r.bs_ris, gain);

    let mut h_r = CMat::zeros(k, m);
    for (i, p) in geo.user_positions.iter().enumerate() {
        let gain = pathloss(distance(geo.ris_pos, *p), e.ris_user, geo.pathloss_ref_db)?;
        let los = CMat::from_row_slice(
            1,
            m,
            ula_steering(m, angle(geo.ris_pos, *p), HALF_WAVELENGTH).as_slice(),
        );
        h_r.set_row(i, &rician(&mut rng, &los, r.ris_user, gain).row(0));
    }

    let gain = pathloss(
        distance(geo.ris_pos, geo.target_pos),
        e.ris_target,
        geo.pathloss_ref_db,
    )?;
    let los = ula_steering(m, angle(geo.ris_pos, geo.target_pos), HALF_WAVELENGTH);
    let h_rt = rician(
        &mut rng,
        &CMat::from_column_slice(m, 1, los.as_slice()),
        r.ris_target,
        gain,
    )
    .column(0)
    .into_owned();

    Ok(ChannelSet {
        h_d,
        g_mat,
        h_r,
        h_rt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(k: usize) -> SystemConfig {
        SystemConfig::uniform(4, k, 6, 1.0, 0.1, 1e-11, 10.0, 8.0, 1.0)
    }

    #[test]
    fn steering_cases() {
        let v = ula_steering(5, 0.0, 0.5);
        assert!(v.iter().all(|x| (x - C64::new(1.0, 0.0)).norm() < 1e-15));
        let v = ula_steering(2, std::f64::consts::FRAC_PI_2, 0.5);
        assert!((v[1] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        let v = ula_steering(7, 0.83, 0.5);
        assert_relative_eq!(v.norm_squared(), 7.0, max_relative = 1e-14);
    }

    #[test]
    fn pathloss_cases() {
        assert_relative_eq!(
            pathloss(1.0, 3.1, -30.0).unwrap(),
            10f64.powf(-1.5),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            pathloss(10.0, 2.0, -30.0).unwrap().powi(2),
            1e-5,
            max_relative = 1e-12
        );
        let ratio = pathloss(14.0, 2.0, -30.0).unwrap().powi(2)
            / pathloss(7.0, 2.0, -30.0).unwrap().powi(2);
        assert_relative_eq!(ratio, 0.25, max_relative = 1e-12);
        assert!(pathloss(0.0, 2.0, -30.0).is_err());
    }

    #[test]
    fn determinism() {
        let c = cfg(3);
        let geo = Geometry::default_scenario(3, 42);
        let a = synth_channels(&c, &geo).unwrap();
        let b = synth_channels(&c, &geo).unwrap();
        assert_eq!(a, b);
        let other = synth_channels(&c, &Geometry { seed: 43, ..geo }).unwrap();
        assert_ne!(a.h_d, other.h_d);
    }

    #[test]
    fn target_link_is_line_of_sight() {
        let c = cfg(2);
        let geo = Geometry::default_scenario(2, 5);
        let ch = synth_channels(&c, &geo).unwrap();
        let steer = ula_steering(6, angle(geo.ris_pos, geo.target_pos), 0.5);
        let ratio = ch.h_rt[0] / steer[0];
        assert!((ch.h_rt.clone() - steer * ratio).norm() < 1e-15);
        let gain = pathloss(distance(geo.ris_pos, geo.target_pos), 2.0, -30.0).unwrap();
        assert_relative_eq!(ratio.norm(), gain, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_geometry() {
        let c = cfg(2);
        let mut geo = Geometry::default_scenario(2, 0);
        geo.exponents.bs_ris = 1.5;
        assert!(synth_channels(&c, &geo).is_err());
        let mut geo = Geometry::default_scenario(2, 0);
        geo.target_pos = geo.ris_pos;
        assert!(synth_channels(&c, &geo).is_err());
        assert!(synth_channels(&c, &Geometry::default_scenario(3, 0)).is_err());
    }

    #[test]
    fn users_stay_in_disk() {
        let pts = users_in_disk([1.0, 2.0], 5.0, 200, 9);
        assert!(pts.iter().all(|p| distance(*p, [1.0, 2.0]) <= 5.0));
    }
}
