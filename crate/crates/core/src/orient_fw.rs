//! Geometry-driven orientation design by Frank–Wolfe on the spherical cap.
//!
//! The beamformer-free objective is the proportional-fair utility
//! `U = Σ_k ln(η_k + ε)` of the aggregate gains `η_k = ‖h_k‖²`. Every
//! iteration projects the Euclidean gradient onto each boresight's tangent
//! space, maximizes it linearly over the cap in closed form, and moves all
//! boresights along `y − f` with one shared Armijo step followed by
//! renormalization. The cap `{‖x‖ = 1, x_z >= cos θ_max}` is the unit-sphere
//! slice of a convex cone, so the retraction of any convex combination of
//! two cap points stays in the cap.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // redundant when num-traits is built with std
use num_traits::Float;

use crate::channel::{ChannelModel, ChannelSet, OrientationSet};
use crate::{Error, Result, Vec3};

/// Default utility regularizer `ε` (channel-power units).
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// `η_k = ‖h_k‖²`.
pub fn aggregate_gain(channels: &ChannelSet, k: usize) -> f64 {
    channels.user(k).iter().map(Complex64::norm_sqr).sum()
}

/// `Σ_k ln(η_k + ε)`.
pub fn log_utility(channels: &ChannelSet, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("utility regularizer must be positive (got {epsilon})")));
    }
    Ok((0..channels.num_users()).map(|k| (aggregate_gain(channels, k) + epsilon).ln()).sum())
}

/// Euclidean gradient of the utility with respect to each boresight:
/// `Σ_k 2Re{conj(h_{k,i}) ∇h_{k,i}} / (η_k + ε)`.
pub fn utility_gradient(model: &ChannelModel, orientations: &OrientationSet, epsilon: f64) -> Vec<Vec3> {
    let channels = model.channel_matrix(orientations);
    gradient_at(model, orientations, &channels, epsilon)
}

fn gradient_at(model: &ChannelModel, orientations: &OrientationSet, channels: &ChannelSet, epsilon: f64) -> Vec<Vec3> {
    let weights: Vec<f64> = (0..channels.num_users()).map(|k| 1.0 / (aggregate_gain(channels, k) + epsilon)).collect();
    orientations
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let mut acc = [0.0; 3];
            for (k, wk) in weights.iter().enumerate() {
                let h = channels.get(k, i).conj();
                let g = model.gradient(k, i, f);
                for axis in 0..3 {
                    acc[axis] += 2.0 * wk * (h * g[axis]).re;
                }
            }
            Vec3::from_array(acc)
        })
        .collect()
}

/// Tangent-space projection `(I − ffᵀ)g` at unit `f`.
pub fn riemannian_project(f: Vec3, g: Vec3) -> Vec3 {
    g - f * f.dot(g)
}

/// Maximizer of `⟨g, x⟩` over the cap `{‖x‖ = 1, x_z >= cos θ_max}`.
///
/// The normalized gradient is returned when it lies in the cap; otherwise the
/// maximizer sits on the rim at the gradient's azimuth, and for `g ∥ −e_z`
/// every rim point ties (the one at azimuth zero is returned). A zero
/// gradient expresses no preference and returns `incumbent`.
pub fn cap_linear_oracle(g: Vec3, theta_max: f64, incumbent: Vec3) -> Vec3 {
    let norm = g.norm();
    if norm == 0.0 {
        return incumbent;
    }
    let (sin_max, cos_max) = theta_max.sin_cos();
    let unit = g * (1.0 / norm);
    if unit.z >= cos_max {
        return unit;
    }
    let planar = (g.x * g.x + g.y * g.y).sqrt();
    if planar == 0.0 {
        return Vec3::new(sin_max, 0.0, cos_max);
    }
    Vec3::new(sin_max * g.x / planar, sin_max * g.y / planar, cos_max)
}

/// Frank–Wolfe direction `y − f`.
pub fn fw_direction(f: Vec3, y: Vec3) -> Vec3 {
    y - f
}

/// `(f + ρd)/‖f + ρd‖`, or `None` when the combination vanishes.
pub fn retract(f: Vec3, d: Vec3, rho: f64) -> Option<Vec3> {
    (f + d * rho).normalized()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FwSettings {
    pub epsilon: f64,
    /// Stop once `|U^{[t+1]} − U^{[t]}| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-increase constant.
    pub armijo_c1: f64,
    pub backtrack: f64,
    /// Line search gives up below this step.
    pub min_step: f64,
}

impl Default for FwSettings {
    fn default() -> Self {
        FwSettings { epsilon: DEFAULT_EPSILON, tol: 1e-6, max_iter: 200, armijo_c1: 1e-4, backtrack: 0.5, min_step: 1e-8 }
    }
}

/// One accepted Frank–Wolfe iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FwTraceEntry {
    pub iter: usize,
    pub utility: f64,
    pub rho: f64,
    /// Largest per-element boresight move.
    pub max_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FwOutcome {
    pub orientations: OrientationSet,
    pub utility: f64,
    pub initial_utility: f64,
    pub iterations: usize,
    pub trace: Vec<FwTraceEntry>,
    /// Why the loop ended before meeting the tolerance, if it did.
    pub diagnostic: Option<String>,
}

/// Snaps round-off so the boresight is unit-norm and inside the cap.
fn clean(f: Vec3, cos_max: f64) -> Vec3 {
    if f.z >= cos_max {
        return f;
    }
    let planar = (f.x * f.x + f.y * f.y).sqrt();
    let sin_max = (1.0 - cos_max * cos_max).max(0.0).sqrt();
    if planar == 0.0 {
        return Vec3::new(sin_max, 0.0, cos_max);
    }
    Vec3::new(sin_max * f.x / planar, sin_max * f.y / planar, cos_max)
}

/// Stage-1 loop from a cap-feasible, unit-norm `init`.
pub fn run_fw(model: &ChannelModel, init: &OrientationSet, theta_max: f64, settings: &FwSettings) -> Result<FwOutcome> {
    init.check(theta_max, false)?;
    let cos_max = theta_max.cos();
    let mut current = init.clone();
    let mut channels = model.channel_matrix(&current);
    let initial_utility = log_utility(&channels, settings.epsilon)?;
    let mut utility = initial_utility;
    let mut trace = Vec::new();
    let mut diagnostic = None;
    for iter in 1..=settings.max_iter {
        let grad = gradient_at(model, &current, &channels, settings.epsilon);
        let f = current.as_slice();
        let mut directions = Vec::with_capacity(f.len());
        let mut slope = 0.0;
        for (fi, gi) in f.iter().zip(&grad) {
            let rg = riemannian_project(*fi, *gi);
            let d = fw_direction(*fi, cap_linear_oracle(rg, theta_max, *fi));
            slope += rg.dot(d);
            directions.push(d);
        }
        if !(slope > 0.0) {
            break;
        }
        let mut rho = 1.0;
        let accepted = loop {
            if rho < settings.min_step {
                break None;
            }
            let mut trial = current.clone();
            let mut ok = true;
            for (t, (fi, d)) in trial.as_mut_slice().iter_mut().zip(f.iter().zip(&directions)) {
                match retract(*fi, *d, rho) {
                    Some(v) => *t = clean(v, cos_max),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let trial_channels = model.channel_matrix(&trial);
                let u = log_utility(&trial_channels, settings.epsilon)?;
                if u >= utility + settings.armijo_c1 * rho * slope {
                    break Some((trial, trial_channels, u));
                }
            }
            rho *= settings.backtrack;
        };
        let Some((trial, trial_channels, u)) = accepted else {
            diagnostic = Some(String::from("line search exhausted"));
            break;
        };
        let max_step = trial.as_slice().iter().zip(f).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
        let delta = u - utility;
        current = trial;
        channels = trial_channels;
        utility = u;
        trace.push(FwTraceEntry { iter, utility, rho, max_step });
        if delta.abs() <= settings.tol {
            break;
        }
    }
    Ok(FwOutcome { orientations: current, utility, initial_utility, iterations: trace.len(), trace, diagnostic })
}
