//! Max-min SINR beamforming for fixed channels.
//!
//! Feasibility of a common SINR target `γ` is decided by the power
//! minimization
//!
//! ```text
//! min τ  s.t.  ‖(h_kᴴw_j)_{j≠k}, σ‖ <= Re{h_kᴴw_k}/√γ   for every user k,
//!              ‖(w_{1,b}, …, w_{K,b})‖ <= τ             for every AP b,
//! ```
//!
//! and `γ` is achievable under the per-AP budget iff `τ* <= √P_max`. The outer
//! search brackets the optimum: every probe's beams, rescaled so the busiest
//! AP transmits exactly `P_max`, certify a lower bound through their achieved
//! SINR, and every probe with `τ* > √P_max` certifies an upper bound. Probe
//! targets come from a model of `τ*(γ)` and fall back to geometric bisection
//! whenever the bracket stops shrinking.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // redundant when num-traits is built with std
use num_traits::Float;

use crate::channel::ChannelSet;
use crate::conic::{self, embed_complex, ConicProgram, DenseMatrix, SocConstraint, SolveStatus};
use crate::{Error, Result};

/// Stacked precoders `w_k ∈ C^{BM}`, laid out like [`ChannelSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerSet {
    num_users: usize,
    len: usize,
    per_ap: usize,
    entries: Vec<Complex64>,
}

impl BeamformerSet {
    pub fn zeros(num_users: usize, num_aps: usize, per_ap: usize) -> Self {
        let len = num_aps * per_ap;
        BeamformerSet { num_users, len, per_ap, entries: vec![Complex64::new(0.0, 0.0); num_users * len] }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>, per_ap: usize) -> Result<Self> {
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) || per_ap == 0 || len % per_ap != 0 {
            return Err(Error::Domain("beamformer rows must share a length divisible by the AP size".into()));
        }
        let num_users = rows.len();
        Ok(BeamformerSet { num_users, len, per_ap, entries: rows.into_iter().flatten().collect() })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn per_ap(&self) -> usize {
        self.per_ap
    }

    pub fn num_aps(&self) -> usize {
        self.len / self.per_ap
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

    /// Transmit power of AP `b` summed over users, `Σ_k ‖w_{k,b}‖²`.
    pub fn ap_power(&self, b: usize) -> f64 {
        (0..self.num_users)
            .map(|k| self.user(k)[b * self.per_ap..(b + 1) * self.per_ap].iter().map(|w| w.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn ap_powers(&self) -> Vec<f64> {
        (0..self.num_aps()).map(|b| self.ap_power(b)).collect()
    }

    pub fn max_ap_power(&self) -> f64 {
        self.ap_powers().into_iter().fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> BeamformerSet {
        BeamformerSet { entries: self.entries.iter().map(|w| w * s).collect(), ..self.clone() }
    }

    /// Elementwise `w_{k,i} · d_i` for every user.
    pub fn scaled_per_element(&self, d: &[f64]) -> BeamformerSet {
        let mut out = self.clone();
        for k in 0..self.num_users {
            for (w, di) in out.user_mut(k).iter_mut().zip(d) {
                *w *= di;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|w| w.re.is_finite() && w.im.is_finite())
    }
}

/// `h_kᴴ w_j`.
pub fn inner(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    h.iter().zip(w).fold(Complex64::new(0.0, 0.0), |acc, (h, w)| acc + h.conj() * w)
}

/// SINR of user `k`: `|h_kᴴw_k|² / (Σ_{j≠k} |h_kᴴw_j|² + σ²)`.
pub fn sinr(channels: &ChannelSet, beams: &BeamformerSet, noise: f64, k: usize) -> f64 {
    let h = channels.user(k);
    let mut signal = 0.0;
    let mut interference = 0.0;
    for j in 0..beams.num_users() {
        let p = inner(h, beams.user(j)).norm_sqr();
        if j == k {
            signal = p;
        } else {
            interference += p;
        }
    }
    signal / (interference + noise)
}

pub fn sinrs(channels: &ChannelSet, beams: &BeamformerSet, noise: f64) -> Vec<f64> {
    (0..channels.num_users()).map(|k| sinr(channels, beams, noise, k)).collect()
}

pub fn min_sinr(channels: &ChannelSet, beams: &BeamformerSet, noise: f64) -> f64 {
    sinrs(channels, beams, noise).into_iter().fold(f64::INFINITY, f64::min)
}

/// Spectral efficiency `log₂(1 + γ)` in bps/Hz.
pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Outcome of one power-minimization probe.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityProbe {
    pub gamma: f64,
    /// Minimal peak per-AP amplitude `τ*` (√W) meeting the target.
    pub tau_star: f64,
    /// Whether `τ* <= √P_max (1 + 1e-9)`.
    pub feasible: bool,
    pub status: SolveStatus,
    /// Beams attaining `τ*` (not rescaled to the budget).
    pub beams: BeamformerSet,
}

/// Per-user power-normalized channels `g_k = h_k √P_max / σ`, turning the budget into 1 and
/// the noise into 1.
fn normalized(channels: &ChannelSet, p_max: f64, noise: f64) -> ChannelSet {
    channels.scaled((p_max / noise).sqrt())
}

fn build_probe(g: &ChannelSet, gamma: f64) -> ConicProgram {
    let k_count = g.num_users();
    let n = g.len();
    let emb = embed_complex(k_count * n).expect("nonempty");
    let nv = emb.num_real() + 1;
    let tau = nv - 1;
    let mut prog = ConicProgram::new(nv);
    let mut objective = vec![0.0; nv];
    objective[tau] = 1.0;
    prog.set_objective(objective).expect("sized");
    let inv_sqrt_gamma = 1.0 / gamma.sqrt();
    for k in 0..k_count {
        let h = g.user(k);
        let rows_count = 2 * (k_count - 1) + 1;
        let mut a = DenseMatrix::zeros(rows_count, nv);
        let mut c = vec![0.0; nv];
        let mut r = 0;
        for j in 0..k_count {
            for (i, hi) in h.iter().enumerate() {
                let v = j * n + i;
                // conj(h)·w = (h_re w_re + h_im w_im) + j(h_re w_im − h_im w_re)
                if j == k {
                    c[emb.re(v)] = hi.re * inv_sqrt_gamma;
                    c[emb.im(v)] = hi.im * inv_sqrt_gamma;
                } else {
                    a.set(r, emb.re(v), hi.re);
                    a.set(r, emb.im(v), hi.im);
                    a.set(r + 1, emb.re(v), -hi.im);
                    a.set(r + 1, emb.im(v), hi.re);
                }
            }
            if j != k {
                r += 2;
            }
        }
        let mut b = vec![0.0; rows_count];
        b[rows_count - 1] = 1.0;
        prog.add_constraint(SocConstraint::new(a, b, c, 0.0).expect("sized")).expect("sized");
    }
    let per_ap = g.per_ap();
    for ap in 0..g.num_aps() {
        let rows_count = 2 * k_count * per_ap;
        let mut a = DenseMatrix::zeros(rows_count, nv);
        let mut r = 0;
        for j in 0..k_count {
            for m in 0..per_ap {
                let v = j * n + ap * per_ap + m;
                a.set(r, emb.re(v), 1.0);
                a.set(r + 1, emb.im(v), 1.0);
                r += 2;
            }
        }
        let mut c = vec![0.0; nv];
        c[tau] = 1.0;
        prog.add_constraint(SocConstraint::new(a, vec![0.0; rows_count], c, 0.0).expect("sized"))
            .expect("sized");
    }
    prog
}

fn beams_from_solution(x: &[f64], num_users: usize, n: usize, per_ap: usize, scale: f64) -> BeamformerSet {
    let rows = (0..num_users)
        .map(|k| (0..n).map(|i| Complex64::new(x[2 * (k * n + i)], x[2 * (k * n + i) + 1]) * scale).collect())
        .collect();
    BeamformerSet::from_rows(rows, per_ap).expect("consistent layout")
}

fn probe_normalized(g: &ChannelSet, gamma: f64) -> (f64, SolveStatus, BeamformerSet, f64) {
    let prog = build_probe(g, gamma);
    let sol = conic::solve(&prog);
    let tau = *sol.x.last().unwrap_or(&f64::NAN);
    let beams = beams_from_solution(&sol.x, g.num_users(), g.len(), g.per_ap(), 1.0);
    (tau, sol.status, beams, sol.dual_objective)
}

/// Solves the power-minimization probe at SINR target `gamma_target`.
pub fn feasibility_min_power(
    channels: &ChannelSet,
    gamma_target: f64,
    noise: f64,
    p_max: f64,
) -> Result<FeasibilityProbe> {
    if !(gamma_target > 0.0) || !(noise > 0.0) || !(p_max > 0.0) {
        return Err(Error::Domain(format!(
            "probe needs positive target, noise and budget (got {gamma_target}, {noise}, {p_max})"
        )));
    }
    let g = normalized(channels, p_max, noise);
    let (tau, status, beams, _) = probe_normalized(&g, gamma_target);
    if status != SolveStatus::Optimal {
        return Err(Error::Solver(format!("feasibility probe at gamma {gamma_target} ended with {status:?}")));
    }
    Ok(FeasibilityProbe {
        gamma: gamma_target,
        tau_star: tau * p_max.sqrt(),
        feasible: tau <= 1.0 + 1e-9,
        status,
        beams: beams.scaled(p_max.sqrt()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxMinSettings {
    /// Relative bracket width `εγ` at termination.
    pub eps_gamma: f64,
    pub max_probes: usize,
}

impl Default for MaxMinSettings {
    fn default() -> Self {
        MaxMinSettings { eps_gamma: 1e-4, max_probes: 80 }
    }
}

/// One feasibility decision of the outer search.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeRecord {
    pub gamma: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxMinResult {
    /// Worst-user SINR achieved by `beamformers`.
    pub gamma_star: f64,
    /// `log₂(1 + gamma_star)`.
    pub rate_star: f64,
    pub beamformers: BeamformerSet,
    /// Number of SOC probes solved.
    pub bisection_iters: usize,
    /// Final certified bracket.
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub probes: Vec<ProbeRecord>,
    /// Every infeasible probe lies above every feasible one.
    pub monotone: bool,
    /// A user had an all-zero channel, so the problem value is 0.
    pub degenerate: bool,
    /// Some probe ended without an optimal solver status.
    pub solver_warnings: usize,
}

/// Max-min SINR beamforming under per-AP budgets `p_max` with noise power `noise`.
pub fn maxmin_beamforming(channels: &ChannelSet, p_max: f64, noise: f64) -> Result<MaxMinResult> {
    maxmin_beamforming_with(channels, p_max, noise, None, &MaxMinSettings::default())
}

/// Bracket upper end: each user alone, every AP steering its whole budget at it.
pub fn gamma_upper_bound(channels: &ChannelSet, p_max: f64, noise: f64) -> f64 {
    (0..channels.num_users())
        .map(|k| {
            let s: f64 = (0..channels.num_aps())
                .map(|b| channels.ap_block(k, b).iter().map(|h| h.norm_sqr()).sum::<f64>().sqrt())
                .sum();
            p_max * s * s / noise
        })
        .fold(f64::INFINITY, f64::min)
}

/// Rescales `beams` so the busiest AP transmits exactly `p_max`.
pub fn scale_to_budget(beams: &BeamformerSet, p_max: f64) -> BeamformerSet {
    let peak = beams.max_ap_power();
    if peak > 0.0 {
        beams.scaled((p_max / peak).sqrt())
    } else {
        beams.clone()
    }
}

/// As [`maxmin_beamforming`], optionally seeded with budget-feasible
/// `incumbent` beams whose achieved SINR starts the lower bound, so the
/// result is never worse than the incumbent.
pub fn maxmin_beamforming_with(
    channels: &ChannelSet,
    p_max: f64,
    noise: f64,
    incumbent: Option<&BeamformerSet>,
    settings: &MaxMinSettings,
) -> Result<MaxMinResult> {
    if !(p_max > 0.0) || !(noise > 0.0) {
        return Err(Error::Domain("P_max and noise must be positive".into()));
    }
    if !channels.is_finite() {
        return Err(Error::Domain("channels contain non-finite entries".into()));
    }
    let (k_count, n, per_ap) = (channels.num_users(), channels.len(), channels.per_ap());
    let zero_beams = BeamformerSet::zeros(k_count, channels.num_aps(), per_ap);
    let degenerate = (0..k_count).any(|k| channels.user(k).iter().all(|h| h.norm_sqr() == 0.0));
    if degenerate || k_count == 0 {
        return Ok(MaxMinResult {
            gamma_star: 0.0,
            rate_star: 0.0,
            beamformers: zero_beams,
            bisection_iters: 0,
            gamma_lo: 0.0,
            gamma_hi: 0.0,
            probes: Vec::new(),
            monotone: true,
            degenerate: true,
            solver_warnings: 0,
        });
    }
    let g = normalized(channels, p_max, noise);
    let eps = settings.eps_gamma;

    // Everything below is in normalized units: budget 1, noise 1.
    let mut hi = gamma_upper_bound(&g, 1.0, 1.0);
    let mut lo = 0.0;
    let mut best = zero_beams.clone();
    let consider = |beams: &BeamformerSet, lo: &mut f64, best: &mut BeamformerSet| {
        if !beams.is_finite() {
            return;
        }
        let fitted = scale_to_budget(beams, 1.0);
        let achieved = min_sinr(&g, &fitted, 1.0);
        if achieved > *lo {
            *lo = achieved;
            *best = fitted;
        }
    };
    if let Some(w) = incumbent {
        if w.num_users() != k_count || w.len() != n || w.per_ap() != per_ap {
            return Err(Error::Domain("incumbent beams do not match the channel layout".into()));
        }
        let w_norm = w.scaled(1.0 / p_max.sqrt());
        if w_norm.max_ap_power() <= 1.0 + 1e-9 && w_norm.is_finite() {
            let achieved = min_sinr(&g, &w_norm, 1.0);
            if achieved > lo {
                lo = achieved;
                best = w_norm;
            }
        }
    }

    let mut probes = Vec::new();
    let mut history: Vec<(f64, f64)> = Vec::new(); // (γ, τ*²) of optimal probes
    let mut warnings = 0;
    let mut widths: Vec<f64> = vec![hi - lo];
    while hi - lo > eps * lo.max(1.0) && probes.len() < settings.max_probes {
        let gamma = next_target(lo, hi, &history, &widths, eps);
        let (tau, status, beams, dual) = probe_normalized(&g, gamma);
        consider(&beams, &mut lo, &mut best);
        let feasible = match status {
            SolveStatus::Optimal => {
                history.push((gamma, tau * tau));
                tau <= 1.0 + 1e-9
            }
            _ => {
                warnings += 1;
                // a dual bound above the budget still certifies infeasibility;
                // otherwise fall back on whether the rescaled beams reach γ
                !(dual > 1.0 + 1e-6) && lo >= gamma
            }
        };
        if !feasible {
            hi = hi.min(gamma);
        }
        if hi < lo {
            // a witness above a refuted target can only come from roundoff
            hi = lo;
        }
        probes.push(ProbeRecord { gamma, feasible });
        widths.push(hi - lo);
    }

    let monotone = probes.iter().filter(|p| !p.feasible).all(|bad| {
        probes.iter().filter(|p| p.feasible).all(|good| good.gamma <= bad.gamma)
    });
    let beamformers = best.scaled(p_max.sqrt());
    let gamma_star = min_sinr(channels, &beamformers, noise);
    Ok(MaxMinResult {
        gamma_star,
        rate_star: rate(gamma_star),
        beamformers,
        bisection_iters: probes.len(),
        gamma_lo: lo,
        gamma_hi: hi,
        probes,
        monotone,
        degenerate: false,
        solver_warnings: warnings,
    })
}

/// Picks the next SINR target inside `(lo, hi)`.
///
/// The model `1/τ*²(γ) ≈ a/γ − b` is exact for a single user and tracks the
/// interference-limited bend otherwise; solving it for `τ* = 1` predicts the
/// optimum. Aiming slightly above the prediction lets one probe close the
/// bracket: it is then infeasible (new upper end) while its rescaled beams
/// certify a lower end just below.
fn next_target(lo: f64, hi: f64, history: &[(f64, f64)], widths: &[f64], eps: f64) -> f64 {
    let geometric = if lo > 0.0 { (lo * hi).sqrt() } else { hi * 0.25 };
    // fall back to bisection when the last two probes failed to halve the bracket
    if widths.len() >= 3 && widths[widths.len() - 1] > 0.5 * widths[widths.len() - 3] {
        return geometric.clamp(lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo));
    }
    let predicted = match history {
        [] => None,
        [.., (g, t2)] if history.len() == 1 => Some(g / t2),
        [.., (g1, t1), (g2, t2)] => {
            let (x1, y1, x2, y2) = (1.0 / g1, 1.0 / t1, 1.0 / g2, 1.0 / t2);
            if (x2 - x1).abs() > 1e-12 * x1.abs() {
                let slope = (y2 - y1) / (x2 - x1);
                let x = x2 + (1.0 - y2) / slope;
                (slope > 0.0 && x > 0.0).then(|| 1.0 / x)
            } else {
                Some(g2 / t2)
            }
        }
        _ => None,
    };
    let target = match predicted {
        Some(p) if p.is_finite() => p * (1.0 + 0.3 * eps),
        _ => geometric,
    };
    let floor = lo + 0.3 * eps * lo.max(1.0);
    if target <= floor {
        floor.min(0.5 * (lo + hi))
    } else if target >= hi {
        geometric.max(lo + 0.5 * (hi - lo)).min(hi - 0.3 * eps * lo.max(1.0)).max(0.5 * (lo + hi))
    } else {
        target
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channels(rng: &mut ChaCha8Rng, k: usize, b: usize, m: usize, scale: f64) -> ChannelSet {
        let rows = (0..k)
            .map(|_| {
                (0..b * m)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)
                    .collect()
            })
            .collect();
        ChannelSet::from_rows(rows, m).unwrap()
    }

    #[test]
    fn mrt_without_interference() {
        let h = ChannelSet::from_rows(vec![vec![Complex64::new(0.3, 0.4), Complex64::new(-1.0, 0.5)]], 2).unwrap();
        let p = 2.0;
        let hn = (h.user(0).iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt();
        let w = BeamformerSet::from_rows(vec![h.user(0).iter().map(|v| v * (p.sqrt() / hn)).collect()], 2).unwrap();
        let s = sinr(&h, &w, 0.1, 0);
        assert!((s - p * hn * hn / 0.1).abs() < 1e-10);
        let zero = BeamformerSet::zeros(1, 1, 2);
        assert_eq!(sinr(&h, &zero, 0.1, 0), 0.0);
    }

    #[test]
    fn orthogonal_users_do_not_interfere() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let h = ChannelSet::from_rows(vec![vec![one, zero], vec![zero, one * 2.0]], 1).unwrap();
        let w = BeamformerSet::from_rows(vec![vec![one, zero], vec![zero, one]], 1).unwrap();
        assert!((sinr(&h, &w, 0.5, 0) - 2.0).abs() < 1e-15);
        assert!((sinr(&h, &w, 0.5, 1) - 8.0).abs() < 1e-15);
    }

    #[test]
    fn single_user_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let h = random_channels(&mut rng, 1, 3, 2, 1.0);
            let (p_max, noise) = (0.5, 0.02);
            let closed = gamma_upper_bound(&h, p_max, noise);
            let res = maxmin_beamforming(&h, p_max, noise).unwrap();
            assert!(((res.gamma_star - closed) / closed).abs() <= 1e-4, "{} vs {closed}", res.gamma_star);
            assert!(res.monotone);
            for pw in res.beamformers.ap_powers() {
                assert!(pw <= p_max + 1e-9);
            }
            // feasibility flips exactly at the closed form
            assert!(feasibility_min_power(&h, closed * 0.999, noise, p_max).unwrap().feasible);
            assert!(!feasibility_min_power(&h, closed * 1.001, noise, p_max).unwrap().feasible);
        }
    }

    #[test]
    fn probe_tau_vanishes_with_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let h = random_channels(&mut rng, 3, 2, 2, 1.0);
        let small = feasibility_min_power(&h, 1e-8, 1.0, 1.0).unwrap();
        let large = feasibility_min_power(&h, 1e-2, 1.0, 1.0).unwrap();
        assert!(small.tau_star < 1e-3 && small.tau_star < large.tau_star);
        // beams at τ*, rescaled to the budget, still meet the target
        let fitted = scale_to_budget(&large.beams, 1.0);
        assert!(min_sinr(&h, &fitted, 1.0) >= 1e-2 - 1e-6);
    }

    #[test]
    fn homogeneous_in_channel_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = random_channels(&mut rng, 3, 2, 2, 1.0);
        // doubling the channels is the same as quadrupling the budget
        let a = maxmin_beamforming(&h, 4.0, 0.1).unwrap();
        let b = maxmin_beamforming(&h.scaled(2.0), 1.0, 0.1).unwrap();
        assert!((b.gamma_star / a.gamma_star - 1.0).abs() < 3e-4);
        // and with noise scaled alongside, the optimum is unchanged
        let c = maxmin_beamforming(&h.scaled(2.0), 1.0, 0.4).unwrap();
        let d = maxmin_beamforming(&h, 1.0, 0.1).unwrap();
        assert!((c.gamma_star / d.gamma_star - 1.0).abs() < 3e-4);
    }

    #[test]
    fn balanced_sinrs_and_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let h = random_channels(&mut rng, 4, 3, 2, 1.0);
        let res = maxmin_beamforming(&h, 1.0, 0.05).unwrap();
        let s = sinrs(&h, &res.beamformers, 0.05);
        let (lo, hi) = s.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!((hi - lo) / lo < 1e-3, "{s:?}");
        assert!(res.beamformers.max_ap_power() <= 1.0 + 1e-9);
        assert!(res.monotone);
        assert!(res.gamma_hi - res.gamma_lo <= 1e-4 * res.gamma_lo.max(1.0));
    }

    #[test]
    fn zero_channel_user_is_degenerate() {
        let mut h = ChannelSet::zeros(2, 1, 2);
        h.user_mut(0)[0] = Complex64::new(1.0, 0.0);
        let res = maxmin_beamforming(&h, 1.0, 1.0).unwrap();
        assert!(res.degenerate);
        assert_eq!(res.gamma_star, 0.0);
    }

    #[test]
    fn incumbent_is_never_lost() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let h = random_channels(&mut rng, 3, 2, 2, 1.0);
        let first = maxmin_beamforming(&h, 1.0, 0.1).unwrap();
        let again = maxmin_beamforming_with(&h, 1.0, 0.1, Some(&first.beamformers), &MaxMinSettings::default()).unwrap();
        assert!(again.gamma_star >= first.gamma_star);
    }
}
