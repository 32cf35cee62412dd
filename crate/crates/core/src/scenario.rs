//! Network geometry: access-point panels, element grids, users, scatterers
//! and the physical constants shared by every other module.
//!
//! Units are SI throughout (meters, radians, watts). Decibel-milliwatt values
//! only appear at the configuration boundary and are converted with
//! [`dbm_to_watts`].

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // redundant when num-traits is built with std
use num_traits::Float;
use rand::Rng;

use crate::math::{RotationMatrix, Vec3};
use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Row-major element index of grid cell `(m_x, m_y)`; all indices are 1-based.
pub fn grid_index(m_x: usize, m_y: usize, count_x: usize) -> Result<usize> {
    if m_x == 0 || m_x > count_x || m_y == 0 {
        return Err(Error::Domain(format!(
            "grid cell ({m_x}, {m_y}) outside 1..={count_x} x 1.."
        )));
    }
    Ok(m_x + (m_y - 1) * count_x)
}

/// One planar panel of rotatable elements.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ApConfig {
    pub center: Vec3,
    pub pose: RotationMatrix,
    pub count_x: usize,
    pub count_y: usize,
    /// Inter-element spacing in meters.
    pub spacing: f64,
}

impl ApConfig {
    pub fn num_elements(&self) -> usize {
        self.count_x * self.count_y
    }

    /// Panel-local offset of element `m` (1-based, row-major) from the panel center.
    pub fn local_offset(&self, m: usize) -> Result<Vec3> {
        let total = self.num_elements();
        if m == 0 || m > total {
            return Err(Error::Domain(format!("element index {m} outside 1..={total}")));
        }
        let m_x = (m - 1) % self.count_x + 1;
        let m_y = (m - 1) / self.count_x + 1;
        let cx = (self.count_x as f64 + 1.0) / 2.0;
        let cy = (self.count_y as f64 + 1.0) / 2.0;
        Ok(Vec3::new(
            (m_x as f64 - cx) * self.spacing,
            (m_y as f64 - cy) * self.spacing,
            0.0,
        ))
    }

    /// Global position of element `m` (1-based).
    pub fn element_position(&self, m: usize) -> Result<Vec3> {
        Ok(self.center + self.pose.apply(self.local_offset(m)?))
    }

    /// Global positions of all elements in stacking order.
    pub fn element_positions(&self) -> Vec<Vec3> {
        (1..=self.num_elements())
            .map(|m| self.element_position(m).expect("index in range"))
            .collect()
    }
}

/// Pose whose local z-axis points horizontally from `ap_position` toward
/// `aim_point`, tilted down by `downtilt` radians. The local x-axis stays
/// horizontal.
pub fn boresight_rotation(ap_position: Vec3, aim_point: Vec3, downtilt: f64) -> Result<RotationMatrix> {
    let horizontal = Vec3::new(aim_point.x - ap_position.x, aim_point.y - ap_position.y, 0.0);
    let toward = horizontal.normalized().ok_or_else(|| {
        Error::DegenerateGeometry("aim point directly below or above the AP; azimuth undefined".to_string())
    })?;
    let z = toward * downtilt.cos() - Vec3::E_Z * downtilt.sin();
    let x = Vec3::E_Z.cross(toward);
    let y = z.cross(x);
    Ok(RotationMatrix::from_columns(x, y, z))
}

/// Draws a unit vector uniformly (by area) from the cap of half-angle `theta_max`
/// around the local z-axis.
pub fn sample_cap_uniform<R: Rng + ?Sized>(theta_max: f64, rng: &mut R) -> Vec3 {
    let c = theta_max.cos();
    let u: f64 = rng.gen();
    let cos_t = (1.0 - u * (1.0 - c)).max(c).min(1.0);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = 2.0 * PI * rng.gen::<f64>();
    Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t)
}

/// Point scatterer with radar cross-section `rcs` (m²) and a random phase.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scatterer {
    pub position: Vec3,
    pub rcs: f64,
    pub phase: f64,
}

/// How element gain depends on the boresight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GainMode {
    /// Cosine pattern around the (steerable) boresight.
    #[default]
    Directional,
    /// Constant gain 2 over the front half-space of the fixed panel normal.
    Isotropic,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub aps: Vec<ApConfig>,
    pub users: Vec<Vec3>,
    pub scatterers: Vec<Scatterer>,
    pub wavelength: f64,
    /// Directivity factor `p` of the cosine pattern.
    pub directivity: f64,
    pub theta_max: f64,
    /// Noise power per user, watts.
    pub noise_power: f64,
    /// Per-AP transmit budget, watts.
    pub p_max: f64,
    pub gain_mode: GainMode,
    /// Seed of the drop that produced users and scatterers.
    pub seed: u64,
}

impl Scenario {
    pub fn num_aps(&self) -> usize {
        self.aps.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// Elements per AP. Every panel in a scenario has the same grid.
    pub fn elements_per_ap(&self) -> usize {
        self.aps.first().map_or(0, ApConfig::num_elements)
    }

    /// Length of a stacked channel or beamforming vector.
    pub fn stacked_len(&self) -> usize {
        self.num_aps() * self.elements_per_ap()
    }

    /// Peak gain of the cosine pattern, `2(2p+1)`.
    pub fn kappa_max(&self) -> f64 {
        match self.gain_mode {
            GainMode::Directional => kappa_max(self.directivity),
            GainMode::Isotropic => kappa_max(0.0),
        }
    }

    /// Free-space reference gain `(λ/4π)²`.
    pub fn beta0(&self) -> f64 {
        let a = self.wavelength / (4.0 * PI);
        a * a
    }

    /// Same geometry with the isotropic gain model.
    pub fn isotropic(&self) -> Scenario {
        Scenario { gain_mode: GainMode::Isotropic, ..self.clone() }
    }

    pub fn with_theta_max(&self, theta_max: f64) -> Scenario {
        Scenario { theta_max, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.aps.is_empty() {
            return Err(Error::Domain("scenario has no APs".to_string()));
        }
        if self.users.is_empty() {
            return Err(Error::Domain("scenario has no users".to_string()));
        }
        let m = self.elements_per_ap();
        for (b, ap) in self.aps.iter().enumerate() {
            if ap.num_elements() == 0 || ap.num_elements() != m {
                return Err(Error::Domain(format!("AP {b} grid differs from AP 0 or is empty")));
            }
            if !(ap.spacing > 0.0) {
                return Err(Error::Domain(format!("AP {b} spacing must be positive")));
            }
            if !ap.pose.is_proper(1e-12) {
                return Err(Error::Domain(format!("AP {b} pose is not a proper rotation")));
            }
        }
        if !(0.0..PI / 2.0).contains(&self.theta_max) {
            return Err(Error::Domain(format!("theta_max {} outside [0, pi/2)", self.theta_max)));
        }
        if !(self.wavelength > 0.0) || !(self.noise_power > 0.0) || !(self.p_max > 0.0) {
            return Err(Error::Domain("wavelength, noise power and P_max must be positive".to_string()));
        }
        if !(self.directivity >= 0.0) {
            return Err(Error::Domain("directivity must be non-negative".to_string()));
        }
        for s in &self.scatterers {
            if !(s.rcs > 0.0) || !(0.0..2.0 * PI).contains(&s.phase) {
                return Err(Error::Domain("scatterer rcs must be positive and phase in [0, 2pi)".to_string()));
            }
        }
        for (k, u) in self.users.iter().enumerate() {
            for ap in &self.aps {
                if ap.element_positions().iter().any(|p| p.distance(*u) == 0.0) {
                    return Err(Error::DegenerateGeometry(format!("user {k} coincides with an element")));
                }
            }
        }
        Ok(())
    }
}

pub fn kappa_max(p: f64) -> f64 {
    2.0 * (2.0 * p + 1.0)
}

/// Topology and radio parameters; defaults reproduce the reference deployment
/// (5 APs on a 300 m ring, 2x2 half-wavelength panels, 8 users, 2.4 GHz).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TopologyConfig {
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub num_aps: usize,
    #[cfg_attr(feature = "serde", serde(rename = "M_x"))]
    pub count_x: usize,
    #[cfg_attr(feature = "serde", serde(rename = "M_y"))]
    pub count_y: usize,
    #[cfg_attr(feature = "serde", serde(rename = "K"))]
    pub num_users: usize,
    #[cfg_attr(feature = "serde", serde(rename = "R_cov"))]
    pub coverage_radius: f64,
    pub h_ap: f64,
    pub h_user: f64,
    /// Carrier frequency, Hz.
    pub f_c: f64,
    pub d_over_lambda: f64,
    pub downtilt_deg: f64,
    /// Maximum zenith angle of each boresight, radians.
    pub theta_max: f64,
    pub p: f64,
    #[cfg_attr(feature = "serde", serde(rename = "P_max_dBm"))]
    pub p_max_dbm: f64,
    #[cfg_attr(feature = "serde", serde(rename = "noise_dBm"))]
    pub noise_dbm: f64,
    #[cfg_attr(feature = "serde", serde(rename = "Q"))]
    pub num_scatterers: usize,
    pub rcs: f64,
    pub scatterer_height_min: f64,
    pub scatterer_height_max: f64,
    pub seed: u64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            num_aps: 5,
            count_x: 2,
            count_y: 2,
            num_users: 8,
            coverage_radius: 300.0,
            h_ap: 30.0,
            h_user: 1.5,
            f_c: 2.4e9,
            d_over_lambda: 0.5,
            downtilt_deg: 5.7,
            theta_max: PI / 3.0,
            p: 5.0,
            p_max_dbm: 15.0,
            noise_dbm: -80.0,
            num_scatterers: 2,
            rcs: 1.0,
            scatterer_height_min: 5.0,
            scatterer_height_max: 20.0,
            seed: 0,
        }
    }
}

impl TopologyConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    /// Checks every key and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        fn bad(key: &'static str, reason: &str) -> Result<()> {
            Err(Error::Config { key, reason: reason.to_string() })
        }
        let finite = [
            ("R_cov", self.coverage_radius),
            ("h_ap", self.h_ap),
            ("h_user", self.h_user),
            ("f_c", self.f_c),
            ("d_over_lambda", self.d_over_lambda),
            ("downtilt_deg", self.downtilt_deg),
            ("theta_max", self.theta_max),
            ("p", self.p),
            ("P_max_dBm", self.p_max_dbm),
            ("noise_dBm", self.noise_dbm),
            ("rcs", self.rcs),
            ("scatterer_height_min", self.scatterer_height_min),
            ("scatterer_height_max", self.scatterer_height_max),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return bad(key, "must be finite");
            }
        }
        if self.num_aps == 0 {
            return bad("B", "need at least one AP");
        }
        if self.count_x == 0 {
            return bad("M_x", "must be >= 1");
        }
        if self.count_y == 0 {
            return bad("M_y", "must be >= 1");
        }
        if self.num_users == 0 {
            return bad("K", "need at least one user");
        }
        if self.coverage_radius <= 0.0 {
            return bad("R_cov", "must be positive");
        }
        if self.f_c <= 0.0 {
            return bad("f_c", "must be positive");
        }
        if self.d_over_lambda <= 0.0 {
            return bad("d_over_lambda", "must be positive");
        }
        if !(-90.0..=90.0).contains(&self.downtilt_deg) {
            return bad("downtilt_deg", "must lie in [-90, 90]");
        }
        if !(0.0..PI / 2.0).contains(&self.theta_max) {
            return bad("theta_max", "must lie in [0, pi/2) radians");
        }
        if self.p < 0.0 {
            return bad("p", "must be non-negative");
        }
        if self.rcs <= 0.0 {
            return bad("rcs", "must be positive");
        }
        if self.scatterer_height_min > self.scatterer_height_max {
            return bad("scatterer_height_min", "exceeds scatterer_height_max");
        }
        if self.h_ap == self.h_user {
            return bad("h_user", "users at AP height can coincide with elements");
        }
        Ok(())
    }

    /// AP panels on a ring of radius `R_cov`, each aimed at the ring center.
    pub fn build_aps(&self) -> Result<Vec<ApConfig>> {
        let spacing = self.d_over_lambda * self.wavelength();
        let tilt = self.downtilt_deg.to_radians();
        (0..self.num_aps)
            .map(|b| {
                let angle = 2.0 * PI * b as f64 / self.num_aps as f64;
                let center = Vec3::new(
                    self.coverage_radius * angle.cos(),
                    self.coverage_radius * angle.sin(),
                    self.h_ap,
                );
                let pose = boresight_rotation(center, Vec3::new(0.0, 0.0, self.h_ap), tilt)?;
                Ok(ApConfig { center, pose, count_x: self.count_x, count_y: self.count_y, spacing })
            })
            .collect()
    }

    /// Builds one drop: fixed AP ring plus users and scatterers drawn from `rng`.
    ///
    /// Users are drawn before scatterers and no draw depends on `B`, `p`,
    /// `theta_max` or the power settings, so the same generator state yields
    /// the same drop across sweeps over those parameters.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Scenario> {
        self.validate()?;
        let users = (0..self.num_users)
            .map(|_| {
                let (x, y) = uniform_disc(self.coverage_radius, rng);
                Vec3::new(x, y, self.h_user)
            })
            .collect();
        let scatterers = (0..self.num_scatterers)
            .map(|_| {
                let (x, y) = uniform_disc(self.coverage_radius, rng);
                let h = self.scatterer_height_min
                    + (self.scatterer_height_max - self.scatterer_height_min) * rng.gen::<f64>();
                let phase = 2.0 * PI * rng.gen::<f64>();
                Scatterer { position: Vec3::new(x, y, h), rcs: self.rcs, phase }
            })
            .collect();
        let scenario = Scenario {
            aps: self.build_aps()?,
            users,
            scatterers,
            wavelength: self.wavelength(),
            directivity: self.p,
            theta_max: self.theta_max,
            noise_power: dbm_to_watts(self.noise_dbm),
            p_max: dbm_to_watts(self.p_max_dbm),
            gain_mode: GainMode::Directional,
            seed: self.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn uniform_disc<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> (f64, f64) {
    let r = radius * rng.gen::<f64>().sqrt();
    let phi = 2.0 * PI * rng.gen::<f64>();
    (r * phi.cos(), r * phi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn panel(pose: RotationMatrix, cx: usize, cy: usize, d: f64) -> ApConfig {
        ApConfig { center: Vec3::new(10.0, -4.0, 30.0), pose, count_x: cx, count_y: cy, spacing: d }
    }

    #[test]
    fn grid_index_row_major() {
        assert_eq!(grid_index(1, 1, 2).unwrap(), 1);
        assert_eq!(grid_index(2, 2, 2).unwrap(), 4);
        assert_eq!(grid_index(1, 2, 2).unwrap(), 3);
        assert!(grid_index(3, 1, 2).is_err());
        assert!(grid_index(0, 1, 2).is_err());
        assert!(grid_index(1, 0, 2).is_err());
    }

    #[test]
    fn single_element_sits_at_center() {
        let ap = panel(RotationMatrix::IDENTITY, 1, 1, 0.0625);
        assert_eq!(ap.element_position(1).unwrap(), ap.center);
        assert!(ap.element_position(2).is_err());
        assert!(ap.element_position(0).is_err());
    }

    #[test]
    fn first_element_of_two_by_two() {
        let ap = panel(RotationMatrix::IDENTITY, 2, 2, 0.0625);
        let p = ap.element_position(1).unwrap() - ap.center;
        assert_eq!(p, Vec3::new(-0.03125, -0.03125, 0.0));
    }

    #[test]
    fn element_grid_is_centered_for_any_pose() {
        let pose = boresight_rotation(Vec3::new(100.0, 50.0, 30.0), Vec3::new(0.0, 0.0, 30.0), 0.3).unwrap();
        let ap = panel(pose, 3, 2, 0.07);
        let positions = ap.element_positions();
        let mean = positions.iter().fold(Vec3::ZERO, |acc, p| acc + *p) * (1.0 / positions.len() as f64);
        assert!((mean - ap.center).norm() < 1e-12);
    }

    #[test]
    fn horizontal_aim_maps_z_to_center() {
        let r = boresight_rotation(Vec3::new(300.0, 0.0, 30.0), Vec3::new(0.0, 0.0, 30.0), 0.0).unwrap();
        assert!((r.apply(Vec3::E_Z) - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!(r.is_proper(1e-12));
    }

    #[test]
    fn straight_down_tilt() {
        let r = boresight_rotation(Vec3::new(300.0, 0.0, 30.0), Vec3::ZERO, PI / 2.0).unwrap();
        assert!((r.apply(Vec3::E_Z) - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        assert!(r.is_proper(1e-12));
        // local x stays horizontal
        assert_eq!(r.column(0).z, 0.0);
    }

    #[test]
    fn aim_directly_below_is_degenerate() {
        let err = boresight_rotation(Vec3::new(1.0, 2.0, 30.0), Vec3::new(1.0, 2.0, 0.0), 0.1);
        assert!(matches!(err, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn rotations_are_proper_for_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let ap = Vec3::new(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0), rng.gen_range(0.0..60.0));
            let aim = Vec3::new(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0), 0.0);
            let tilt = rng.gen_range(-PI / 2.0..PI / 2.0);
            let r = boresight_rotation(ap, aim, tilt).unwrap();
            assert!(r.orthogonality_error() <= 1e-12);
            assert!((r.determinant() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn degenerate_cap_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let v = sample_cap_uniform(0.0, &mut rng);
            assert_eq!(v.z, 1.0);
            assert_eq!(v.x.abs() + v.y.abs(), 0.0);
        }
    }

    #[test]
    fn cap_samples_have_analytic_mean_height() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let theta = PI / 3.0;
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = sample_cap_uniform(theta, &mut rng);
            assert!((v.norm() - 1.0).abs() < 1e-15);
            assert!(v.z >= 0.5);
            sum += v.z;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.75).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn dbm_conversions() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert!((dbm_to_watts(15.0) - 0.0316228).abs() < 1e-7);
        assert!((dbm_to_watts(-80.0) - 1e-11).abs() < 1e-24);
        assert!((watts_to_dbm(dbm_to_watts(12.5)) - 12.5).abs() < 1e-12);
    }

    #[test]
    fn default_topology() {
        let cfg = TopologyConfig::default();
        assert!((cfg.wavelength() - 0.125).abs() < 1e-15);
        let s = cfg.generate(&mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(s.num_aps(), 5);
        assert_eq!(s.elements_per_ap(), 4);
        assert_eq!(s.num_users(), 8);
        assert_eq!(s.scatterers.len(), 2);
        for ap in &s.aps {
            let c = ap.center;
            assert!(((c.x * c.x + c.y * c.y).sqrt() - 300.0).abs() < 1e-9);
            assert_eq!(c.z, 30.0);
            assert!((ap.spacing - 0.0625).abs() < 1e-15);
            let bore = ap.pose.apply(Vec3::E_Z);
            let tilt = (-bore.z).asin();
            assert!((tilt - 5.7f64.to_radians()).abs() < 1e-12);
            // horizontal component points at the ring center
            let toward = Vec3::new(-c.x, -c.y, 0.0).normalized().unwrap();
            let horiz = Vec3::new(bore.x, bore.y, 0.0).normalized().unwrap();
            assert!((toward - horiz).norm() < 1e-12);
        }
        for u in &s.users {
            assert_eq!(u.z, 1.5);
            assert!((u.x * u.x + u.y * u.y).sqrt() <= 300.0);
        }
        for q in &s.scatterers {
            assert!((5.0..=20.0).contains(&q.position.z));
            assert_eq!(q.rcs, 1.0);
        }
    }

    #[test]
    fn drops_are_paired_across_num_aps() {
        let a = TopologyConfig { num_aps: 3, ..Default::default() };
        let b = TopologyConfig { num_aps: 6, theta_max: 0.2, p: 2.0, ..Default::default() };
        let sa = a.generate(&mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let sb = b.generate(&mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(sa.users, sb.users);
        assert_eq!(sa.scatterers, sb.scatterers);
    }

    #[test]
    fn config_validation_names_first_bad_key() {
        let cfg = TopologyConfig { count_y: 0, theta_max: 2.0, ..Default::default() };
        match cfg.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "M_y"),
            other => panic!("unexpected {other:?}"),
        }
        let cfg = TopologyConfig { theta_max: PI / 2.0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config { key: "theta_max", .. })));
        let cfg = TopologyConfig { f_c: f64::NAN, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config { key: "f_c", .. })));
    }
}
