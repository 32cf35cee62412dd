//! Orientation design for fixed beamformers by successive convex
//! approximation.
//!
//! With beams fixed, the worst-user SINR target `γ` is met iff
//! `S_k(f) >= z_k γ` and `I_k(f) + σ² <= z_k` for auxiliary `z_k`, where
//! `S_k = |h_kᴴw_k|²` and `I_k = Σ_{j≠k} |h_kᴴw_j|²`. Each iteration replaces
//!
//! * the bilinear `z_k γ` by the Young bound `½((z_t/γ_t)γ² + (γ_t/z_t)z²)`,
//! * `S_k` by the concave quadratic minorant `S₀ + ∇Sᵀ(f−f_t) − ξ_k/2 ‖f−f_t‖²`,
//! * `I_k` by the convex quadratic majorant `I₀ + ∇Iᵀ(f−f_t) + χ_k/2 ‖f−f_t‖²`,
//!
//! and relaxes `‖f‖ = 1` to `‖f‖ <= 1`, giving an SOC program in
//! `(f, γ, z)`. All surrogates are tight at the expansion point, so the
//! incumbent stays feasible and `γ` never decreases. Sub-unit boresights are
//! repaired afterwards by [`normalize_orientations`], which for directional
//! patterns merely scales each channel entry by `‖f‖^{-p} >= 1`.
//!
//! Internally powers are divided by the noise power so that `γ` and `z` are
//! of order one.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // redundant when num-traits is built with std
use num_traits::Float;

use crate::beamform::{inner, BeamformerSet};
use crate::channel::{ChannelModel, ChannelSet, OrientationSet};
use crate::conic::{self, centered_diagonal_quad_to_soc, ConicProgram, DenseMatrix, SocConstraint, SolveStatus};
use crate::scenario::GainMode;
use crate::{Error, Result, Vec3};

/// Floor applied to curvature constants of users with vanishing beams.
pub const CURVATURE_FLOOR: f64 = 1e-12;
/// Floor keeping the Young anchors strictly positive.
pub const ANCHOR_FLOOR: f64 = 1e-9;

/// `(S_k, I_k)` for user `k` at the given channels.
pub fn signal_interference_values(channels: &ChannelSet, beams: &BeamformerSet, k: usize) -> (f64, f64) {
    let h = channels.user(k);
    let mut s = 0.0;
    let mut i = 0.0;
    for j in 0..beams.num_users() {
        let v = inner(h, beams.user(j)).norm_sqr();
        if j == k {
            s = v;
        } else {
            i += v;
        }
    }
    (s, i)
}

/// Per-element gradients of `S_k` and `I_k` with respect to the boresights.
#[derive(Clone, Debug, PartialEq)]
pub struct SiGradients {
    pub signal: Vec<Vec3>,
    pub interference: Vec<Vec3>,
}

fn re_scaled(g: &[Complex64; 3], c: Complex64) -> Vec3 {
    Vec3::new((g[0] * c).re, (g[1] * c).re, (g[2] * c).re)
}

/// `∇S_k = 2Re{w*_{k,i}(h_kᴴw_k)∇h_{k,i}}` and the analogous sum over `j ≠ k`
/// for `∇I_k`, at `orientations` (needs `p >= 1`).
pub fn si_gradients(model: &ChannelModel, orientations: &OrientationSet, beams: &BeamformerSet, k: usize) -> SiGradients {
    let channels = model.channel_matrix(orientations);
    si_gradients_at(model, orientations, &channels, beams, k)
}

fn si_gradients_at(
    model: &ChannelModel,
    orientations: &OrientationSet,
    channels: &ChannelSet,
    beams: &BeamformerSet,
    k: usize,
) -> SiGradients {
    let h = channels.user(k);
    let products: Vec<Complex64> = (0..beams.num_users()).map(|j| inner(h, beams.user(j))).collect();
    let f = orientations.as_slice();
    let mut signal = Vec::with_capacity(f.len());
    let mut interference = Vec::with_capacity(f.len());
    for (i, &fi) in f.iter().enumerate() {
        let g = model.gradient(k, i, fi);
        // d conj(h_i)/df = conj(∇h_i), so ∇|a|² = 2Re{conj(a) w_i conj(∇h_i)} = 2Re{w_i^* a ∇h_i}
        let cs = beams.get(k, i).conj() * products[k] * 2.0;
        let ci = (0..beams.num_users())
            .filter(|&j| j != k)
            .fold(Complex64::new(0.0, 0.0), |acc, j| acc + beams.get(j, i).conj() * products[j])
            * 2.0;
        signal.push(re_scaled(&g, cs));
        interference.push(re_scaled(&g, ci));
    }
    SiGradients { signal, interference }
}

/// Curvature constants `(ξ_k, χ_k)` bounding the spectral norm of the
/// Hessians of `S_k` and `I_k` over every boresight set with `‖f‖ <= 1`.
///
/// Writing `S = |a|²` with `a = Σ_i conj(h_i) w_i`, the Hessian is
/// `2Re{∇a ∇aᴴ} + 2Re{conj(a) ∇²a}`; the first part is bounded by
/// `2Σ_i |w_i|² g_i²` and the block-diagonal second part by
/// `2|a| max_i |w_i| H_i` with `|a| <= Σ_i h_i |w_i|`. `I_k` sums the same
/// bound over interfering beams. Both are floored at [`CURVATURE_FLOOR`].
pub fn curvature_constants(model: &ChannelModel, beams: &BeamformerSet, k: usize) -> Result<(f64, f64)> {
    if model.gain_mode() == GainMode::Directional && model.directivity() < 2.0 {
        return Err(Error::UnsupportedRegime { p: model.directivity() });
    }
    let n = model.stacked_len();
    let bounds: Vec<_> = (0..n).map(|i| model.magnitude_bounds(k, i)).collect();
    let per_beam = |j: usize| {
        let w = beams.user(j);
        let first: f64 = w.iter().zip(&bounds).map(|(w, b)| w.norm_sqr() * b.g_max * b.g_max).sum();
        let amp: f64 = w.iter().zip(&bounds).map(|(w, b)| w.norm() * b.h_max).sum();
        let second = w.iter().zip(&bounds).map(|(w, b)| w.norm() * b.hess_max).fold(0.0, f64::max);
        2.0 * first + 2.0 * amp * second
    };
    let xi = per_beam(k);
    let chi: f64 = (0..beams.num_users()).filter(|&j| j != k).map(per_beam).sum();
    Ok((xi.max(CURVATURE_FLOOR), chi.max(CURVATURE_FLOOR)))
}

/// Young's bound on the bilinear term: `½((z_t/γ_t)γ² + (γ_t/z_t)z²) >= zγ`.
pub fn young_upper_bound(z_t: f64, gamma_t: f64, z: f64, gamma: f64) -> Result<f64> {
    if !(z_t > 0.0) || !(gamma_t > 0.0) {
        return Err(Error::Domain(format!("Young anchors must be positive (got z {z_t}, gamma {gamma_t})")));
    }
    Ok(0.5 * ((z_t / gamma_t) * gamma * gamma + (gamma_t / z_t) * z * z))
}

/// Expansion data of one user's surrogates.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateCoefficients {
    pub s0: f64,
    pub grad_s: Vec<Vec3>,
    pub xi: f64,
    pub i0: f64,
    pub grad_i: Vec<Vec3>,
    pub chi: f64,
}

impl SurrogateCoefficients {
    fn linear_part(grad: &[Vec3], at: &[Vec3], f: &[Vec3]) -> (f64, f64) {
        grad.iter().zip(at.iter().zip(f)).fold((0.0, 0.0), |(lin, sq), (g, (a, x))| {
            let d = *x - *a;
            (lin + g.dot(d), sq + d.norm_sq())
        })
    }

    /// `S₀ + ∇Sᵀ(f − f_t) − ξ/2‖f − f_t‖²`.
    pub fn signal_lower(&self, at: &OrientationSet, f: &OrientationSet) -> f64 {
        let (lin, sq) = Self::linear_part(&self.grad_s, at.as_slice(), f.as_slice());
        self.s0 + lin - 0.5 * self.xi * sq
    }

    /// `I₀ + ∇Iᵀ(f − f_t) + χ/2‖f − f_t‖²`.
    pub fn interference_upper(&self, at: &OrientationSet, f: &OrientationSet) -> f64 {
        let (lin, sq) = Self::linear_part(&self.grad_i, at.as_slice(), f.as_slice());
        self.i0 + lin + 0.5 * self.chi * sq
    }
}

/// Surrogate data for user `k` expanded at `orientations` (needs `p >= 2`).
pub fn surrogate_coefficients(
    model: &ChannelModel,
    orientations: &OrientationSet,
    beams: &BeamformerSet,
    k: usize,
) -> Result<SurrogateCoefficients> {
    let channels = model.channel_matrix(orientations);
    let (xi, chi) = curvature_constants(model, beams, k)?;
    Ok(coefficients_at(model, orientations, &channels, beams, k, xi, chi))
}

fn coefficients_at(
    model: &ChannelModel,
    orientations: &OrientationSet,
    channels: &ChannelSet,
    beams: &BeamformerSet,
    k: usize,
    xi: f64,
    chi: f64,
) -> SurrogateCoefficients {
    let (s0, i0) = signal_interference_values(channels, beams, k);
    let grads = si_gradients_at(model, orientations, channels, beams, k);
    SurrogateCoefficients { s0, grad_s: grads.signal, xi, i0, grad_i: grads.interference, chi }
}

/// One SCA iterate: relaxed boresights plus the Young anchors.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaState {
    pub orientations: OrientationSet,
    /// Worst-user SINR `γ^{[t]}`.
    pub gamma: f64,
    /// Interference-plus-noise levels `z_k^{[t]}` in watts.
    pub z: Vec<f64>,
    pub iter: usize,
}

impl ScaState {
    /// Anchors from the incumbent: `γ` = achieved min SINR and
    /// `z_k = I_k + σ²`, floored at [`ANCHOR_FLOOR`] (times `σ²` for `z`).
    pub fn from_incumbent(channels: &ChannelSet, beams: &BeamformerSet, orientations: OrientationSet, noise: f64) -> Self {
        let mut gamma = f64::INFINITY;
        let mut z = Vec::with_capacity(channels.num_users());
        for k in 0..channels.num_users() {
            let (s, i) = signal_interference_values(channels, beams, k);
            gamma = gamma.min(s / (i + noise));
            z.push((i + noise).max(ANCHOR_FLOOR * noise));
        }
        ScaState { orientations, gamma: gamma.max(ANCHOR_FLOOR), z, iter: 0 }
    }
}

/// Variable layout of the surrogate program: `3BM` boresight coordinates,
/// then `γ`, then `z_1..z_K` (in noise units).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SurrogateLayout {
    pub num_elements: usize,
    pub num_users: usize,
}

impl SurrogateLayout {
    pub fn num_vars(&self) -> usize {
        3 * self.num_elements + self.num_users + 1
    }

    pub fn f(&self, i: usize, axis: usize) -> usize {
        3 * i + axis
    }

    pub fn gamma(&self) -> usize {
        3 * self.num_elements
    }

    pub fn z(&self, k: usize) -> usize {
        3 * self.num_elements + 1 + k
    }
}

/// Assembles the surrogate SOC program from precomputed coefficients
/// (objective: minimize `−γ`).
pub fn assemble_surrogate(
    state: &ScaState,
    coefficients: &[SurrogateCoefficients],
    noise: f64,
    theta_max: f64,
) -> Result<ConicProgram> {
    let layout = SurrogateLayout { num_elements: state.orientations.len(), num_users: coefficients.len() };
    let nv = layout.num_vars();
    let mut prog = ConicProgram::new(nv);
    let mut objective = vec![0.0; nv];
    objective[layout.gamma()] = -1.0;
    prog.set_objective(objective)?;
    let f_t = state.orientations.as_slice();
    let gamma_t = state.gamma;
    for (k, c) in coefficients.iter().enumerate() {
        let z_t = state.z[k] / noise;
        if !(z_t > 0.0) || !(gamma_t > 0.0) {
            return Err(Error::Domain(format!("Young anchors must be positive (user {k})")));
        }
        // signal:  ξ/2‖f−f_t‖² + ½(aγ² + b z²) − ∇Sᵀf + (∇Sᵀf_t − S₀) <= 0
        let (d, center, mut q, mut r) = centered_parts(nv, f_t, &c.grad_s, 0.5 * c.xi / noise, -1.0 / noise);
        r -= c.s0 / noise;
        let mut d = d;
        d[layout.gamma()] = 0.5 * z_t / gamma_t;
        d[layout.z(k)] = 0.5 * gamma_t / z_t;
        let mu = (c.s0 / noise).max(1e-6);
        prog.add_constraint(centered_diagonal_quad_to_soc(&d, &center, &q, r, mu)?)?;

        // interference:  χ/2‖f−f_t‖² + ∇Iᵀf − ∇Iᵀf_t + I₀ + 1 − z <= 0
        let (d, center, q2, r2) = centered_parts(nv, f_t, &c.grad_i, 0.5 * c.chi / noise, 1.0 / noise);
        q = q2;
        r = r2 + c.i0 / noise + 1.0;
        q[layout.z(k)] = -1.0;
        let mu = (c.i0 / noise + 1.0).max(1e-6);
        prog.add_constraint(centered_diagonal_quad_to_soc(&d, &center, &q, r, mu)?)?;
    }
    let cos_max = theta_max.cos();
    for i in 0..layout.num_elements {
        // ‖f_i‖ <= 1
        let mut a = DenseMatrix::zeros(3, nv);
        for axis in 0..3 {
            a.set(axis, layout.f(i, axis), 1.0);
        }
        prog.add_constraint(SocConstraint::new(a, vec![0.0; 3], vec![0.0; nv], 1.0)?)?;
        prog.set_bounds(layout.f(i, 2), cos_max, 1.0)?;
    }
    Ok(prog)
}

/// Curvature `d` and center `f_t` on the boresight coordinates, plus the
/// linear term `sign·∇ᵀ(f − f_t)` split into `qᵀf` and a constant.
fn centered_parts(nv: usize, f_t: &[Vec3], grad: &[Vec3], curvature: f64, sign: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let mut d = vec![0.0; nv];
    let mut center = vec![0.0; nv];
    let mut q = vec![0.0; nv];
    let mut r = 0.0;
    for (i, (ft, g)) in f_t.iter().zip(grad).enumerate() {
        let (ft, g) = (ft.to_array(), g.to_array());
        for axis in 0..3 {
            let v = 3 * i + axis;
            d[v] = curvature;
            center[v] = ft[axis];
            q[v] = sign * g[axis];
            r -= sign * g[axis] * ft[axis];
        }
    }
    (d, center, q, r)
}

/// Surrogate program at `state` with analytic curvature constants.
pub fn build_surrogate_program(
    model: &ChannelModel,
    state: &ScaState,
    beams: &BeamformerSet,
    noise: f64,
    theta_max: f64,
) -> Result<ConicProgram> {
    let coefficients = (0..model.num_users())
        .map(|k| surrogate_coefficients(model, &state.orientations, beams, k))
        .collect::<Result<Vec<_>>>()?;
    assemble_surrogate(state, &coefficients, noise, theta_max)
}

/// Unit-norm projection `f/‖f‖` of every boresight.
pub fn normalize_orientations(raw: &OrientationSet) -> Result<OrientationSet> {
    let mut out = raw.clone();
    for (i, f) in out.as_mut_slice().iter_mut().enumerate() {
        *f = f
            .normalized()
            .ok_or_else(|| Error::Invariant(format!("boresight {i} vanished before normalization")))?;
    }
    Ok(out)
}

/// Channel gains `‖f_i‖^{-p}` picked up by each element under normalization.
pub fn normalization_gains(raw: &OrientationSet, p: f64) -> Vec<f64> {
    raw.as_slice().iter().map(|f| f.norm().powf(-p)).collect()
}

/// How the curvature constants are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CurvatureMode {
    /// Global Hessian bounds; every surrogate is a certified bound.
    #[default]
    Analytic,
    /// Start from a fraction of the analytic constants and grow them ×4
    /// whenever the bound fails at the new point (never beyond analytic).
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaSettings {
    /// Stop once `|γ^{[t+1]} − γ^{[t]}| <= tol · max(1, γ^{[t]})`.
    pub tol: f64,
    pub max_iter: usize,
    pub curvature: CurvatureMode,
    /// Starting fraction of the analytic constants in adaptive mode.
    pub adaptive_start: f64,
}

impl Default for ScaSettings {
    fn default() -> Self {
        ScaSettings { tol: 1e-4, max_iter: 30, curvature: CurvatureMode::Analytic, adaptive_start: 1e-2 }
    }
}

/// One accepted SCA iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaTraceEntry {
    pub iter: usize,
    /// True worst-user SINR at the new (relaxed) boresights.
    pub gamma: f64,
    /// Optimal `γ` of the surrogate program.
    pub surrogate_gamma: f64,
    /// Largest per-element boresight move.
    pub max_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaOutcome {
    /// Relaxed boresights (`‖f‖ <= 1`); normalize before use.
    pub orientations: OrientationSet,
    /// Worst-user SINR at `orientations` with the fixed beams.
    pub gamma_sca: f64,
    pub iterations: usize,
    pub trace: Vec<ScaTraceEntry>,
    /// Why the loop stopped early, if it did not converge normally.
    pub diagnostic: Option<String>,
}

/// Returns the boresight moved back into the relaxed cap `{‖f‖ <= 1, f_z >= cos θ_max}`,
/// absorbing solver round-off.
fn repair(f: Vec3, cos_max: f64) -> Vec3 {
    let z = f.z.clamp(cos_max, 1.0);
    let planar = f.x * f.x + f.y * f.y;
    let room = (1.0 - z * z).max(0.0);
    if planar + z * z <= 1.0 || planar == 0.0 {
        Vec3::new(f.x, f.y, z)
    } else {
        let s = (room / planar).sqrt();
        Vec3::new(f.x * s, f.y * s, z)
    }
}

fn worst_sinr(channels: &ChannelSet, beams: &BeamformerSet, noise: f64) -> f64 {
    crate::beamform::min_sinr(channels, beams, noise)
}

/// Algorithm loop: repeatedly builds and solves the surrogate program with
/// `beams` fixed, starting from unit-norm, cap-feasible `init`.
pub fn run_sca(
    model: &ChannelModel,
    beams: &BeamformerSet,
    init: &OrientationSet,
    noise: f64,
    theta_max: f64,
    settings: &ScaSettings,
) -> Result<ScaOutcome> {
    if model.directivity() < 2.0 {
        return Err(Error::UnsupportedRegime { p: model.directivity() });
    }
    init.check(theta_max, false)?;
    let k_count = model.num_users();
    let channels = model.channel_matrix(init);
    let mut state = ScaState::from_incumbent(&channels, beams, init.clone(), noise);
    let mut current_gamma = worst_sinr(&channels, beams, noise);
    let analytic = (0..k_count).map(|k| curvature_constants(model, beams, k)).collect::<Result<Vec<_>>>()?;
    let mut trace = Vec::new();
    let mut diagnostic = None;
    let cos_max = theta_max.cos();
    let pinned = cos_max >= 1.0 - 1e-12 || model.gain_mode() == GainMode::Isotropic;
    let mut current_channels = channels;
    let start = match settings.curvature {
        CurvatureMode::Analytic => 1.0,
        CurvatureMode::Adaptive => settings.adaptive_start,
    };
    let mut multipliers = vec![(start, start); k_count];
    while !pinned && state.iter < settings.max_iter {
        let base: Vec<SurrogateCoefficients> = (0..k_count)
            .map(|k| coefficients_at(model, &state.orientations, &current_channels, beams, k, 0.0, 0.0))
            .collect();
        let mut accepted = None;
        loop {
            let coefficients: Vec<SurrogateCoefficients> = base
                .iter()
                .zip(&analytic)
                .zip(&multipliers)
                .map(|((c, &(xi, chi)), &(mx, mc))| SurrogateCoefficients { xi: xi * mx, chi: chi * mc, ..c.clone() })
                .collect();
            let prog = assemble_surrogate(&state, &coefficients, noise, theta_max)?;
            let sol = conic::solve(&prog);
            if !matches!(sol.status, SolveStatus::Optimal | SolveStatus::MaxIter | SolveStatus::NumericalFailure)
                || sol.x.iter().any(|v| !v.is_finite())
            {
                diagnostic = Some(format!("surrogate solve ended with {:?}", sol.status));
                break;
            }
            let layout = SurrogateLayout { num_elements: init.len(), num_users: k_count };
            let mut candidate = state.orientations.clone();
            for (i, f) in candidate.as_mut_slice().iter_mut().enumerate() {
                let raw = Vec3::new(sol.x[layout.f(i, 0)], sol.x[layout.f(i, 1)], sol.x[layout.f(i, 2)]);
                *f = repair(raw, cos_max);
            }
            let new_channels = model.channel_matrix(&candidate);
            // in adaptive mode, grow the constants of users whose bound failed
            let mut grew = false;
            if settings.curvature == CurvatureMode::Adaptive {
                for (k, c) in coefficients.iter().enumerate() {
                    let (s, i) = signal_interference_values(&new_channels, beams, k);
                    let slack = 1e-12 * (c.s0 + c.i0 + noise);
                    let (mx, mc) = &mut multipliers[k];
                    if s < c.signal_lower(&state.orientations, &candidate) - slack && *mx < 1.0 {
                        *mx = (*mx * 4.0).min(1.0);
                        grew = true;
                    }
                    if i > c.interference_upper(&state.orientations, &candidate) + slack && *mc < 1.0 {
                        *mc = (*mc * 4.0).min(1.0);
                        grew = true;
                    }
                }
            }
            if grew {
                continue;
            }
            let gamma = worst_sinr(&new_channels, beams, noise);
            if sol.status != SolveStatus::Optimal {
                diagnostic = Some(format!("surrogate solve ended with {:?}", sol.status));
            }
            let max_step = candidate
                .as_slice()
                .iter()
                .zip(state.orientations.as_slice())
                .map(|(a, b)| (*a - *b).norm())
                .fold(0.0, f64::max);
            accepted = Some((candidate, new_channels, gamma, -sol.objective_value, max_step));
            break;
        }
        let Some((candidate, new_channels, gamma, surrogate_gamma, max_step)) = accepted else {
            break;
        };
        if !(gamma >= current_gamma) {
            // round-off (or an inexact solve) would lose ground; keep the incumbent
            diagnostic.get_or_insert_with(|| "step rejected: no improvement".into());
            break;
        }
        let improvement = gamma - current_gamma;
        state = ScaState::from_incumbent(&new_channels, beams, candidate, noise);
        state.iter = trace.len() + 1;
        current_channels = new_channels;
        current_gamma = gamma;
        trace.push(ScaTraceEntry { iter: state.iter, gamma, surrogate_gamma, max_step });
        if diagnostic.is_some() || improvement <= settings.tol * current_gamma.max(1.0) {
            break;
        }
        // let the adaptive constants relax again after a successful step
        if settings.curvature == CurvatureMode::Adaptive {
            for m in multipliers.iter_mut() {
                m.0 = (m.0 * 0.5).max(start);
                m.1 = (m.1 * 0.5).max(start);
            }
        }
    }
    Ok(ScaOutcome {
        orientations: state.orientations,
        gamma_sca: current_gamma,
        iterations: trace.len(),
        trace,
        diagnostic,
    })
}
