//! Orientation-dependent channels.
//!
//! Every element-to-user coefficient is a sum of paths (the direct path plus
//! one bistatic bounce per scatterer). A path contributes
//! `amp * [fᵀv]₊^p * phase`, where `f` is the local-frame boresight, `v` the
//! local-frame departure direction, `amp` the distance-dependent amplitude
//! and `phase` the unit phasor fixed by path length. Only the positive-part
//! factor depends on `f`, which keeps derivatives cheap and makes rescaling a
//! boresight act as a pure per-element gain.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // redundant when num-traits is built with std
use num_traits::Float;
use rand::Rng;

use crate::math::Vec3;
use crate::scenario::{kappa_max, sample_cap_uniform, GainMode, Scenario};
use crate::{Error, Result};

pub type CVec3 = [Complex64; 3];
pub type CMat3 = [[Complex64; 3]; 3];

/// Cosine power pattern `κ_max cos^{2p}(ε)` on the front half-space, zero behind.
pub fn element_gain(epsilon: f64, p: f64) -> f64 {
    let eps = epsilon.abs();
    if eps > PI / 2.0 {
        return 0.0;
    }
    kappa_max(p) * positive_power(eps.cos(), 2.0 * p)
}

/// `[x]₊^e` with the convention that it vanishes for `x <= 0` (including `e = 0`).
pub fn positive_power(x: f64, e: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if e == 0.0 {
        1.0
    } else if e.fract() == 0.0 && e <= 32.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

/// One local-frame boresight per (AP, element), stored AP-major.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrientationSet {
    num_aps: usize,
    per_ap: usize,
    boresights: Vec<Vec3>,
}

impl OrientationSet {
    pub fn new(num_aps: usize, per_ap: usize, boresights: Vec<Vec3>) -> Result<Self> {
        if boresights.len() != num_aps * per_ap {
            return Err(Error::Domain(format!(
                "expected {} boresights, got {}",
                num_aps * per_ap,
                boresights.len()
            )));
        }
        Ok(OrientationSet { num_aps, per_ap, boresights })
    }

    pub fn uniform(num_aps: usize, per_ap: usize, v: Vec3) -> Self {
        OrientationSet { num_aps, per_ap, boresights: vec![v; num_aps * per_ap] }
    }

    /// Every boresight along its panel normal.
    pub fn panel_normal(scenario: &Scenario) -> Self {
        Self::uniform(scenario.num_aps(), scenario.elements_per_ap(), Vec3::E_Z)
    }

    /// Independent area-uniform draws from the scenario's cap.
    pub fn random_cap<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Self {
        let n = scenario.stacked_len();
        let boresights = (0..n).map(|_| sample_cap_uniform(scenario.theta_max, rng)).collect();
        OrientationSet { num_aps: scenario.num_aps(), per_ap: scenario.elements_per_ap(), boresights }
    }

    pub fn num_aps(&self) -> usize {
        self.num_aps
    }

    pub fn per_ap(&self) -> usize {
        self.per_ap
    }

    pub fn len(&self) -> usize {
        self.boresights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boresights.is_empty()
    }

    /// Boresight of element `m` (0-based) on AP `b` (0-based).
    pub fn get(&self, b: usize, m: usize) -> Vec3 {
        self.boresights[b * self.per_ap + m]
    }

    pub fn as_slice(&self) -> &[Vec3] {
        &self.boresights
    }

    pub fn as_mut_slice(&mut self) -> &mut [Vec3] {
        &mut self.boresights
    }

    /// Checks cap membership (within 1e-10) and the norm constraint: unit
    /// norm, or at most unit norm when `relaxed`.
    pub fn check(&self, theta_max: f64, relaxed: bool) -> Result<()> {
        let cz = theta_max.cos();
        for (i, f) in self.boresights.iter().enumerate() {
            let n = f.norm();
            let norm_ok = if relaxed { n <= 1.0 + 1e-10 } else { (n - 1.0).abs() <= 1e-10 };
            if !f.is_finite() || !norm_ok {
                return Err(Error::Invariant(format!("boresight {i} has norm {n}")));
            }
            if f.z < cz - 1e-10 {
                return Err(Error::Invariant(format!("boresight {i} leaves the cap (z = {})", f.z)));
            }
        }
        Ok(())
    }
}

/// Stacked channels `h_k ∈ C^{BM}` for all users, AP-major then row-major element.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    num_users: usize,
    len: usize,
    per_ap: usize,
    entries: Vec<Complex64>,
}

impl ChannelSet {
    /// One row per user; `per_ap` consecutive entries belong to each AP.
    pub fn from_rows(rows: Vec<Vec<Complex64>>, per_ap: usize) -> Result<Self> {
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) {
            return Err(Error::Domain("channel rows differ in length".into()));
        }
        if per_ap == 0 || len % per_ap != 0 {
            return Err(Error::Domain(format!("row length {len} is not a multiple of {per_ap} elements per AP")));
        }
        let num_users = rows.len();
        Ok(ChannelSet { num_users, len, per_ap, entries: rows.into_iter().flatten().collect() })
    }

    pub fn zeros(num_users: usize, num_aps: usize, per_ap: usize) -> Self {
        let len = num_aps * per_ap;
        ChannelSet { num_users, len, per_ap, entries: vec![Complex64::new(0.0, 0.0); num_users * len] }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn per_ap(&self) -> usize {
        self.per_ap
    }

    pub fn num_aps(&self) -> usize {
        self.len / self.per_ap
    }

    /// Block of user `k`'s channel belonging to AP `b`.
    pub fn ap_block(&self, k: usize, b: usize) -> &[Complex64] {
        &self.user(k)[b * self.per_ap..(b + 1) * self.per_ap]
    }

    /// Stacked length `B·M`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn user(&self, k: usize) -> &[Complex64] {
        &self.entries[k * self.len..(k + 1) * self.len]
    }

    pub fn user_mut(&mut self, k: usize) -> &mut [Complex64] {
        &mut self.entries[k * self.len..(k + 1) * self.len]
    }

    pub fn get(&self, k: usize, i: usize) -> Complex64 {
        self.entries[k * self.len + i]
    }

    /// Every channel multiplied by `s`.
    pub fn scaled(&self, s: f64) -> ChannelSet {
        ChannelSet {
            num_users: self.num_users,
            len: self.len,
            per_ap: self.per_ap,
            entries: self.entries.iter().map(|h| h * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|h| h.re.is_finite() && h.im.is_finite())
    }
}

#[derive(Clone, Copy, Debug)]
struct Path {
    amp: f64,
    phase: Complex64,
    /// Departure direction in the panel frame, `R_bᵀ s`.
    dir: Vec3,
}

/// Conservative magnitude bounds over the feasible (sub-)unit boresights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MagnitudeBounds {
    pub h_max: f64,
    pub g_max: f64,
    pub hess_max: f64,
}

/// Precomputed path geometry for one scenario; evaluates channels and their
/// boresight derivatives for any orientation set.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    num_users: usize,
    num_aps: usize,
    per_ap: usize,
    paths_per_link: usize,
    p: f64,
    mode: GainMode,
    paths: Vec<Path>,
}

impl ChannelModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let k_count = scenario.num_users();
        let m_count = scenario.elements_per_ap();
        let q_count = scenario.scatterers.len();
        let lambda = scenario.wavelength;
        let root_gain = (scenario.beta0() * scenario.kappa_max()).sqrt();
        let wave = |d: f64| Complex64::from_polar(1.0, -2.0 * PI * d / lambda);

        let mut paths = Vec::with_capacity(k_count * scenario.stacked_len() * (1 + q_count));
        for (k, user) in scenario.users.iter().enumerate() {
            let mut bounce = Vec::with_capacity(q_count);
            for (q, sc) in scenario.scatterers.iter().enumerate() {
                let r_hat = sc.position.distance(*user);
                if !(r_hat > 0.0) {
                    return Err(Error::DegenerateGeometry(format!("user {k} coincides with scatterer {q}")));
                }
                bounce.push(r_hat);
            }
            for (b, ap) in scenario.aps.iter().enumerate() {
                for (m, elem) in ap.element_positions().into_iter().enumerate() {
                    let delta = *user - elem;
                    let r = delta.norm();
                    if !(r > 0.0) {
                        return Err(Error::DegenerateGeometry(format!(
                            "user {k} coincides with element ({b}, {m})"
                        )));
                    }
                    paths.push(Path {
                        amp: root_gain / r,
                        phase: wave(r),
                        dir: ap.pose.apply_transpose(delta * (1.0 / r)),
                    });
                    for (sc, &r_hat) in scenario.scatterers.iter().zip(&bounce) {
                        let delta = sc.position - elem;
                        let r_tilde = delta.norm();
                        if !(r_tilde > 0.0) {
                            return Err(Error::DegenerateGeometry(format!(
                                "scatterer coincides with element ({b}, {m})"
                            )));
                        }
                        paths.push(Path {
                            amp: root_gain * (sc.rcs / (4.0 * PI)).sqrt() / (r_tilde * r_hat),
                            phase: wave(r_tilde + r_hat) * Complex64::from_polar(1.0, sc.phase),
                            dir: ap.pose.apply_transpose(delta * (1.0 / r_tilde)),
                        });
                    }
                }
            }
        }
        Ok(ChannelModel {
            num_users: k_count,
            num_aps: scenario.num_aps(),
            per_ap: m_count,
            paths_per_link: 1 + q_count,
            p: scenario.directivity,
            mode: scenario.gain_mode,
            paths,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_aps(&self) -> usize {
        self.num_aps
    }

    pub fn per_ap(&self) -> usize {
        self.per_ap
    }

    pub fn stacked_len(&self) -> usize {
        self.num_aps * self.per_ap
    }

    pub fn directivity(&self) -> f64 {
        self.p
    }

    pub fn gain_mode(&self) -> GainMode {
        self.mode
    }

    fn link(&self, k: usize, i: usize) -> &[Path] {
        let start = (k * self.stacked_len() + i) * self.paths_per_link;
        &self.paths[start..start + self.paths_per_link]
    }

    fn pattern(&self, f: Vec3, dir: Vec3) -> f64 {
        match self.mode {
            GainMode::Directional => positive_power(f.dot(dir), self.p),
            GainMode::Isotropic => {
                if dir.z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn path_sum(&self, paths: &[Path], f: Vec3) -> Complex64 {
        paths.iter().fold(Complex64::new(0.0, 0.0), |acc, path| {
            acc + path.phase * (path.amp * self.pattern(f, path.dir))
        })
    }

    /// Direct-path coefficient for user `k` and element `m` of AP `b` (0-based).
    pub fn los_coefficient(&self, orientations: &OrientationSet, k: usize, b: usize, m: usize) -> Complex64 {
        let i = b * self.per_ap + m;
        self.path_sum(&self.link(k, i)[..1], orientations.as_slice()[i])
    }

    /// Sum of bistatic scatterer contributions for user `k`, element `(b, m)`.
    pub fn nlos_coefficient(&self, orientations: &OrientationSet, k: usize, b: usize, m: usize) -> Complex64 {
        let i = b * self.per_ap + m;
        self.path_sum(&self.link(k, i)[1..], orientations.as_slice()[i])
    }

    /// Full coefficient for user `k` at stacked index `i` with boresight `f`.
    pub fn coefficient(&self, k: usize, i: usize, f: Vec3) -> Complex64 {
        self.path_sum(self.link(k, i), f)
    }

    pub fn channel_matrix(&self, orientations: &OrientationSet) -> ChannelSet {
        let n = self.stacked_len();
        debug_assert_eq!(orientations.len(), n);
        let f = orientations.as_slice();
        let mut entries = Vec::with_capacity(self.num_users * n);
        for k in 0..self.num_users {
            for (i, &fi) in f.iter().enumerate() {
                entries.push(self.coefficient(k, i, fi));
            }
        }
        ChannelSet { num_users: self.num_users, len: n, per_ap: self.per_ap, entries }
    }

    /// Gradient of `h_{k,i}` with respect to the local boresight `f` (needs `p >= 1`).
    ///
    /// Zero in isotropic mode, where gains ignore the boresight.
    pub fn gradient(&self, k: usize, i: usize, f: Vec3) -> CVec3 {
        let zero = Complex64::new(0.0, 0.0);
        let mut g = [zero; 3];
        if self.mode == GainMode::Isotropic {
            return g;
        }
        for path in self.link(k, i) {
            let w = path.amp * self.p * positive_power(f.dot(path.dir), self.p - 1.0);
            if w == 0.0 {
                continue;
            }
            let c = path.phase * w;
            g[0] += c * path.dir.x;
            g[1] += c * path.dir.y;
            g[2] += c * path.dir.z;
        }
        g
    }

    /// Hessian of `h_{k,i}` with respect to `f`; a sum of symmetric rank-one terms.
    pub fn hessian(&self, k: usize, i: usize, f: Vec3) -> Result<CMat3> {
        if self.p < 2.0 {
            return Err(Error::UnsupportedRegime { p: self.p });
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut h = [[zero; 3]; 3];
        if self.mode == GainMode::Isotropic {
            return Ok(h);
        }
        for path in self.link(k, i) {
            let w = path.amp * self.p * (self.p - 1.0) * positive_power(f.dot(path.dir), self.p - 2.0);
            if w == 0.0 {
                continue;
            }
            let c = path.phase * w;
            let d = path.dir.to_array();
            for r in 0..3 {
                for s in 0..3 {
                    h[r][s] += c * (d[r] * d[s]);
                }
            }
        }
        Ok(h)
    }

    /// Bounds on `|h|`, `‖∇h‖₂` and `‖∇²h‖_F` over every boresight with
    /// `‖f‖ <= 1`, using `[fᵀv]₊ <= 1` for unit `v`.
    pub fn magnitude_bounds(&self, k: usize, i: usize) -> MagnitudeBounds {
        let amp_sum: f64 = self.link(k, i).iter().map(|p| p.amp).sum();
        let p = match self.mode {
            GainMode::Directional => self.p,
            GainMode::Isotropic => 0.0,
        };
        MagnitudeBounds {
            h_max: amp_sum,
            g_max: p * amp_sum,
            hess_max: p * (p - 1.0).max(0.0) * amp_sum,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RotationMatrix;
    use crate::scenario::{ApConfig, Scatterer, TopologyConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_link(user: Vec3, p: f64, scatterers: Vec<Scatterer>) -> Scenario {
        Scenario {
            aps: vec![ApConfig {
                center: Vec3::ZERO,
                pose: RotationMatrix::IDENTITY,
                count_x: 1,
                count_y: 1,
                spacing: 0.0625,
            }],
            users: vec![user],
            scatterers,
            wavelength: 0.125,
            directivity: p,
            theta_max: 1.0,
            noise_power: 1e-11,
            p_max: 0.03,
            gain_mode: GainMode::Directional,
            seed: 0,
        }
    }

    #[test]
    fn gain_pattern_values() {
        assert_eq!(element_gain(0.0, 2.0), 10.0);
        assert!(element_gain(PI / 2.0, 2.0).abs() < 1e-30);
        assert_eq!(element_gain(PI / 2.0 + 1e-9, 0.0), 0.0);
        assert!((element_gain(PI / 3.0, 2.0) - 0.625).abs() < 1e-14);
    }

    #[test]
    fn aligned_los_magnitude_and_phase() {
        let s = one_link(Vec3::new(0.0, 0.0, 100.0), 2.0, vec![]);
        let model = ChannelModel::new(&s).unwrap();
        let f = OrientationSet::uniform(1, 1, Vec3::E_Z);
        let h = model.los_coefficient(&f, 0, 0, 0);
        assert!((h.norm() - 3.1456e-4).abs() < 1e-8);
        let beta0 = (0.125 / (4.0 * PI)).powi(2);
        assert!((beta0 - 9.8948e-5).abs() < 1e-8);
        assert!((h.norm() - (beta0 * 10.0).sqrt() / 100.0).abs() < 1e-18);
        let expected = Complex64::from_polar(1.0, -2.0 * PI * 100.0 / 0.125);
        assert!((h / h.norm() - expected).norm() < 1e-12);
        assert_eq!(model.nlos_coefficient(&f, 0, 0, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn perpendicular_boresight_kills_los() {
        let s = one_link(Vec3::new(0.0, 0.0, 100.0), 2.0, vec![]);
        let model = ChannelModel::new(&s).unwrap();
        let f = OrientationSet::uniform(1, 1, Vec3::E_X);
        assert_eq!(model.los_coefficient(&f, 0, 0, 0).norm(), 0.0);
    }

    #[test]
    fn single_scatterer_hand_evaluation() {
        let sc = Scatterer { position: Vec3::new(30.0, 0.0, 40.0), rcs: 2.0, phase: 1.1 };
        let user = Vec3::new(60.0, 10.0, 1.5);
        let s = one_link(user, 3.0, vec![sc]);
        let model = ChannelModel::new(&s).unwrap();
        let f0 = Vec3::new(0.3, 0.1, 0.9).normalized().unwrap();
        let f = OrientationSet::uniform(1, 1, f0);
        let got = model.nlos_coefficient(&f, 0, 0, 0);

        // scalar hand evaluation
        let lambda = 0.125;
        let beta0 = (lambda / (4.0 * PI)) * (lambda / (4.0 * PI));
        let kappa = 2.0 * (2.0 * 3.0 + 1.0);
        let r_t = sc.position.norm();
        let s_q = sc.position * (1.0 / r_t);
        let cosang = f0.dot(s_q);
        let g_q = beta0 / (r_t * r_t) * kappa * cosang.powf(6.0);
        let r_h = (user - sc.position).norm();
        let mag = (2.0 * g_q / (4.0 * PI * r_h * r_h)).sqrt();
        let phase = -2.0 * PI / lambda * (r_t + r_h) + 1.1;
        let want = Complex64::from_polar(mag, phase);
        assert!((got - want).norm() <= 1e-12 * want.norm());
    }

    #[test]
    fn empty_scatterer_set_gives_zero_nlos() {
        let s = TopologyConfig { num_scatterers: 0, ..Default::default() }
            .generate(&mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        let model = ChannelModel::new(&s).unwrap();
        let f = OrientationSet::panel_normal(&s);
        for k in 0..s.num_users() {
            assert_eq!(model.nlos_coefficient(&f, k, 1, 2), Complex64::new(0.0, 0.0));
            let b = model.magnitude_bounds(k, 3);
            let r = s.users[k].distance(s.aps[0].element_position(4).unwrap());
            assert_eq!(b.h_max, (s.beta0() * s.kappa_max()).sqrt() / r);
        }
    }

    #[test]
    fn back_facing_boresight_zeroes_derivatives() {
        let sc = Scatterer { position: Vec3::new(5.0, 5.0, 40.0), rcs: 1.0, phase: 0.3 };
        let s = one_link(Vec3::new(3.0, -2.0, 80.0), 3.0, vec![sc]);
        let model = ChannelModel::new(&s).unwrap();
        let f = Vec3::new(0.0, 0.0, -1.0);
        assert_eq!(model.coefficient(0, 0, f), Complex64::new(0.0, 0.0));
        assert!(model.gradient(0, 0, f).iter().all(|c| c.norm() == 0.0));
        let h = model.hessian(0, 0, f).unwrap();
        assert!(h.iter().flatten().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn hessian_rejects_low_directivity() {
        let s = one_link(Vec3::new(0.0, 0.0, 10.0), 1.5, vec![]);
        let model = ChannelModel::new(&s).unwrap();
        assert!(matches!(model.hessian(0, 0, Vec3::E_Z), Err(Error::UnsupportedRegime { .. })));
    }

    #[test]
    fn coincident_user_is_degenerate() {
        let s = one_link(Vec3::ZERO, 2.0, vec![]);
        assert!(matches!(ChannelModel::new(&s), Err(Error::DegenerateGeometry(_))));
        let sc = Scatterer { position: Vec3::new(1.0, 1.0, 1.0), rcs: 1.0, phase: 0.0 };
        let s = one_link(Vec3::new(1.0, 1.0, 1.0), 2.0, vec![sc]);
        assert!(matches!(ChannelModel::new(&s), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn bounds_scale_with_kappa() {
        let s = one_link(Vec3::new(1.0, 2.0, 50.0), 2.0, vec![]);
        let lo = ChannelModel::new(&s).unwrap().magnitude_bounds(0, 0);
        let s3 = one_link(Vec3::new(1.0, 2.0, 50.0), 3.0, vec![]);
        let hi = ChannelModel::new(&s3).unwrap().magnitude_bounds(0, 0);
        assert!(hi.h_max > lo.h_max && hi.g_max > lo.g_max && hi.hess_max > lo.hess_max);
    }

    #[test]
    fn isotropic_mode_ignores_orientation() {
        let s = TopologyConfig::default().generate(&mut ChaCha8Rng::seed_from_u64(9)).unwrap().isotropic();
        let model = ChannelModel::new(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = model.channel_matrix(&OrientationSet::random_cap(&s, &mut rng));
        let b = model.channel_matrix(&OrientationSet::panel_normal(&s));
        assert_eq!(a, b);
        assert!(a.user(0).iter().any(|h| h.norm() > 0.0));
    }
}
