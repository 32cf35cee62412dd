//! Invariant suites with independent oracles.
//!
//! Each suite returns its measured figures rather than a verdict so callers
//! (the `validate` command, the acceptance tests) apply their own limits.
//! [`run_all`] applies the documented default limits.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotcf_core::beamform::{inner, maxmin_beamforming, BeamformerSet};
use rotcf_core::channel::{ChannelModel, ChannelSet, OrientationSet};
use rotcf_core::drivers::{initial_orientations, run_ao, DriverSettings};
use rotcf_core::orient_fw::{cap_linear_oracle, run_fw, FwSettings};
use rotcf_core::orient_sca::{normalization_gains, normalize_orientations, signal_interference_values, surrogate_coefficients};
use rotcf_core::scenario::{sample_cap_uniform, Scenario, TopologyConfig};
use rotcf_core::Vec3;

use crate::error::SimError;

fn small_scenario(seed: u64, users: usize, aps: usize, count_x: usize, p: f64, theta_max: f64) -> Result<Scenario, SimError> {
    let cfg = TopologyConfig {
        num_aps: aps,
        count_x,
        count_y: 1,
        num_users: users,
        num_scatterers: 2,
        p,
        theta_max,
        seed,
        ..TopologyConfig::default()
    };
    Ok(cfg.generate(&mut ChaCha8Rng::seed_from_u64(seed))?)
}

fn shifted(f: Vec3, axis: usize, delta: f64) -> Vec3 {
    let mut a = f.to_array();
    a[axis] += delta;
    Vec3::from_array(a)
}

fn random_beams(rng: &mut ChaCha8Rng, users: usize, aps: usize, per_ap: usize, scale: f64) -> BeamformerSet {
    let rows = (0..users)
        .map(|_| {
            (0..aps * per_ap)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)
                .collect()
        })
        .collect();
    BeamformerSet::from_rows(rows, per_ap).expect("consistent dimensions")
}

/// Boresight derivatives against central finite differences.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeCheck {
    pub instances: usize,
    /// Worst gradient error relative to the gradient's largest entry.
    pub gradient_rel_err: f64,
    /// Worst Hessian error relative to the Hessian's largest entry.
    pub hessian_rel_err: f64,
    pub seconds: f64,
}

/// `instances` random (scenario, user, element, sub-unit boresight) draws
/// cycling through `p ∈ {2, 3, 5}`.
pub fn derivative_check(instances: usize, seed: u64) -> Result<DerivativeCheck, SimError> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut g_err, mut h_err) = (0.0f64, 0.0f64);
    let mut done = 0;
    let mut draw = 0u64;
    while done < instances {
        let p = [2.0, 3.0, 5.0][done % 3];
        let sc = small_scenario(seed.wrapping_add(draw), 3, 2, 2, p, FRAC_PI_3)?;
        draw += 1;
        let model = ChannelModel::new(&sc)?;
        let k = rng.gen_range(0..sc.num_users());
        let i = rng.gen_range(0..sc.stacked_len());
        let f = sample_cap_uniform(sc.theta_max, &mut rng) * rng.gen_range(0.6..1.0);
        let g = model.gradient(k, i, f);
        let h = model.hessian(k, i, f)?;
        let g_scale = g.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let h_scale = h.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        if g_scale == 0.0 || h_scale == 0.0 {
            // every path behind the element; nothing to differentiate
            continue;
        }
        let step = 1e-6;
        for axis in 0..3 {
            let fd = (model.coefficient(k, i, shifted(f, axis, step)) - model.coefficient(k, i, shifted(f, axis, -step)))
                / (2.0 * step);
            g_err = g_err.max((fd - g[axis]).norm() / g_scale);
        }
        let step = 1e-5;
        for s in 0..3 {
            let (gp, gm) = (model.gradient(k, i, shifted(f, s, step)), model.gradient(k, i, shifted(f, s, -step)));
            for r in 0..3 {
                let fd = (gp[r] - gm[r]) / (2.0 * step);
                h_err = h_err.max((fd - h[r][s]).norm() / h_scale);
            }
        }
        done += 1;
    }
    Ok(DerivativeCheck { instances, gradient_rel_err: g_err, hessian_rel_err: h_err, seconds: start.elapsed().as_secs_f64() })
}

/// Unit normalization of sub-unit boresights with the matching beam rescaling.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationCheck {
    pub sets: usize,
    /// Worst `|h_norm − D h_raw| / |D h_raw|`, with `D` computed here.
    pub channel_rel_err: f64,
    /// Smallest diagonal gain (must be at least one).
    pub min_gain: f64,
    /// Worst relative change of any `h_kᴴ w_j` after rescaling `w → D⁻¹ w`.
    pub product_rel_err: f64,
    /// Largest per-AP power increase caused by the rescaling (must be ≤ 0).
    pub max_power_increase: f64,
    /// Error of the `‖f‖ = 0.8, p = 2` case against the factor 1.5625.
    pub quadratic_case_err: f64,
}

pub fn normalization_check(sets: usize, seed: u64) -> Result<NormalizationCheck, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = NormalizationCheck {
        sets,
        channel_rel_err: 0.0,
        min_gain: f64::INFINITY,
        product_rel_err: 0.0,
        max_power_increase: f64::NEG_INFINITY,
        quadratic_case_err: 0.0,
    };
    for t in 0..sets {
        let p = [2.0, 3.0, 5.0][t % 3];
        let sc = small_scenario(seed.wrapping_add(t as u64), 3, 2, 2, p, FRAC_PI_3)?;
        let model = ChannelModel::new(&sc)?;
        let raw: Vec<Vec3> =
            (0..sc.stacked_len()).map(|_| sample_cap_uniform(sc.theta_max, &mut rng) * rng.gen_range(0.5..1.0)).collect();
        let raw = OrientationSet::new(sc.num_aps(), sc.elements_per_ap(), raw)?;
        let unit = normalize_orientations(&raw)?;
        let d: Vec<f64> = raw.as_slice().iter().map(|f| f.norm().powf(-p)).collect();
        let reported = normalization_gains(&raw, p);
        let (h_raw, h_unit) = (model.channel_matrix(&raw), model.channel_matrix(&unit));
        for k in 0..sc.num_users() {
            for (i, &di) in d.iter().enumerate() {
                out.min_gain = out.min_gain.min(di).min(reported[i]);
                let want = h_raw.get(k, i) * di;
                if want.norm() > 0.0 {
                    out.channel_rel_err = out.channel_rel_err.max((h_unit.get(k, i) - want).norm() / want.norm());
                }
            }
        }
        let beams = random_beams(&mut rng, sc.num_users(), sc.num_aps(), sc.elements_per_ap(), 0.05);
        let inverse: Vec<f64> = d.iter().map(|x| 1.0 / x).collect();
        let rescaled = beams.scaled_per_element(&inverse);
        for k in 0..sc.num_users() {
            for j in 0..sc.num_users() {
                let before = inner(h_raw.user(k), beams.user(j));
                let after = inner(h_unit.user(k), rescaled.user(j));
                if before.norm() > 0.0 {
                    out.product_rel_err = out.product_rel_err.max((after - before).norm() / before.norm());
                }
            }
        }
        for b in 0..sc.num_aps() {
            out.max_power_increase = out.max_power_increase.max(rescaled.ap_power(b) - beams.ap_power(b));
        }
    }
    let sc = small_scenario(seed, 2, 2, 2, 2.0, FRAC_PI_3)?;
    let model = ChannelModel::new(&sc)?;
    let short = OrientationSet::uniform(sc.num_aps(), sc.elements_per_ap(), Vec3::new(0.0, 0.48, 0.64));
    let h_raw = model.channel_matrix(&short);
    let h_unit = model.channel_matrix(&normalize_orientations(&short)?);
    for k in 0..sc.num_users() {
        for i in 0..sc.stacked_len() {
            let want = h_raw.get(k, i) * 1.5625;
            if want.norm() > 0.0 {
                out.quadratic_case_err = out.quadratic_case_err.max((h_unit.get(k, i) - want).norm() / want.norm());
            }
        }
    }
    Ok(out)
}

/// Two-user, two-AP, single-antenna instances and the grid optimum of each,
/// from an independent conic solver scanning SINR targets in steps of 1e-3
/// (`tests/oracles/maxmin_grid.py`). Entries: channels, budget, noise, optimum.
#[allow(clippy::type_complexity)]
pub const GRID_ORACLE: [([[(f64, f64); 2]; 2], f64, f64, f64); 3] = [
    ([[(1.0, 0.2), (0.3, -0.5)], [(0.4, 0.1), (-0.9, 0.6)]], 2.0, 0.5, 5.161),
    ([[(1.0, 0.0), (0.0, 0.8)], [(0.9, 0.0), (0.1, 0.7)]], 1.0, 0.1, 1.001),
    ([[(2.0, 0.0), (0.1, 0.0)], [(0.0, 0.05), (0.5, 0.0)]], 1.0, 1.0, 0.293),
];
pub const GRID_STEP: f64 = 1e-3;

/// Max-min beamforming against closed forms and the grid oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformingCheck {
    /// Worst relative error against `P_max (Σ_b ‖h_b‖)² / σ²` for one user.
    pub single_user_rel_err: f64,
    /// `(oracle grid optimum, bisection result)` per oracle instance.
    pub grid: Vec<(f64, f64)>,
}

impl BeamformingCheck {
    /// Worst distance of a bisection result from its grid cell `[g, g + step)`.
    pub fn grid_excess(&self) -> f64 {
        self.grid.iter().map(|&(g, got)| (g - got).max(got - (g + GRID_STEP)).max(0.0)).fold(0.0, f64::max)
    }
}

pub fn beamforming_check(instances: usize, seed: u64) -> Result<BeamformingCheck, SimError> {
    let mut worst = 0.0f64;
    for t in 0..instances {
        let sc = small_scenario(seed.wrapping_add(t as u64), 1, 2 + t % 3, 2, 3.0, FRAC_PI_3)?;
        let h = ChannelModel::new(&sc)?.channel_matrix(&initial_orientations(&sc));
        let sum: f64 = (0..sc.num_aps())
            .map(|b| h.ap_block(0, b).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .sum();
        let closed = sc.p_max * sum * sum / sc.noise_power;
        let got = maxmin_beamforming(&h, sc.p_max, sc.noise_power)?.gamma_star;
        worst = worst.max((got - closed).abs() / closed);
    }
    let mut grid = Vec::new();
    for (rows, p_max, noise, optimum) in GRID_ORACLE {
        let rows = rows.iter().map(|r| r.iter().map(|&(re, im)| Complex64::new(re, im)).collect()).collect();
        let h = ChannelSet::from_rows(rows, 1)?;
        grid.push((optimum, maxmin_beamforming(&h, p_max, noise)?.gamma_star));
    }
    Ok(BeamformingCheck { single_user_rel_err: worst, grid })
}

/// Sampled validity of the quadratic signal/interference surrogates.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateCheck {
    pub scenarios: usize,
    pub points: usize,
    /// Samples where a bound failed by more than `1e-10` relative.
    pub violations: usize,
    /// Worst relative failure seen (negative when every bound held strictly).
    pub worst_excess: f64,
}

/// `scenarios` random instances with random expansion points and beams; each
/// bound is evaluated at `points` random relaxed-cap boresight sets.
pub fn surrogate_check(scenarios: usize, points: usize, seed: u64) -> Result<SurrogateCheck, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SurrogateCheck { scenarios, points, violations: 0, worst_excess: f64::NEG_INFINITY };
    for s in 0..scenarios {
        let p = [2.0, 3.0, 4.0, 5.0][s % 4];
        let theta = [FRAC_PI_6, FRAC_PI_3][s % 2];
        let sc = small_scenario(seed.wrapping_add(s as u64), 3, 2, 2, p, theta)?;
        let model = ChannelModel::new(&sc)?;
        let at = OrientationSet::random_cap(&sc, &mut rng);
        let h_at = model.channel_matrix(&at);
        let beams = maxmin_beamforming(&h_at, sc.p_max, sc.noise_power)?.beamformers;
        let coeffs = (0..sc.num_users())
            .map(|k| surrogate_coefficients(&model, &at, &beams, k))
            .collect::<Result<Vec<_>, _>>()?;
        for _ in 0..points {
            let f: Vec<Vec3> =
                (0..sc.stacked_len()).map(|_| sample_cap_uniform(theta, &mut rng) * rng.gen_range(0.3..1.0)).collect();
            let f = OrientationSet::new(sc.num_aps(), sc.elements_per_ap(), f)?;
            let h = model.channel_matrix(&f);
            for (k, c) in coeffs.iter().enumerate() {
                let (sig, intf) = signal_interference_values(&h, &beams, k);
                let scale = (c.s0 + c.i0).max(sig + intf).max(f64::MIN_POSITIVE);
                let excess = (c.signal_lower(&at, &f) - sig).max(intf - c.interference_upper(&at, &f)) / scale;
                out.worst_excess = out.worst_excess.max(excess);
                if excess > 1e-10 {
                    out.violations += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Closed-form cap oracle against a one-degree grid and hand cases.
#[derive(Clone, Debug, PartialEq)]
pub struct CapOracleCheck {
    pub gradients: usize,
    /// Largest `max_grid ⟨g, v⟩ − ⟨g, y⟩` relative to `‖g‖` (≤ 0 means the
    /// closed form is never beaten).
    pub worst_grid_gain: f64,
    /// Worst cap-membership violation of any oracle output.
    pub worst_infeasibility: f64,
    /// Worst error on the hand-computed cases.
    pub hand_case_err: f64,
}

pub fn cap_oracle_check(gradients_per_cap: usize, seed: u64) -> CapOracleCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CapOracleCheck { gradients: 0, worst_grid_gain: f64::NEG_INFINITY, worst_infeasibility: 0.0, hand_case_err: 0.0 };
    for theta in [FRAC_PI_6, FRAC_PI_3] {
        let degrees = theta.to_degrees().round() as usize;
        let grid: Vec<Vec3> = (0..=degrees)
            .flat_map(|t| {
                let th = (t as f64).to_radians();
                (0..360).map(move |a| {
                    let az = (a as f64).to_radians();
                    Vec3::new(th.sin() * az.cos(), th.sin() * az.sin(), th.cos())
                })
            })
            .collect();
        for _ in 0..gradients_per_cap {
            let g = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let y = cap_linear_oracle(g, theta, Vec3::E_Z);
            let best = grid.iter().map(|v| g.dot(*v)).fold(f64::NEG_INFINITY, f64::max);
            out.worst_grid_gain = out.worst_grid_gain.max((best - g.dot(y)) / g.norm());
            out.worst_infeasibility =
                out.worst_infeasibility.max((y.norm() - 1.0).abs()).max(theta.cos() - y.z);
            out.gradients += 1;
        }
    }
    let (s, c) = FRAC_PI_3.sin_cos();
    let half = 0.5f64.sqrt();
    let hand = [
        // gradient inside the cap: its own direction
        (Vec3::new(0.0, 0.3, 1.0), Vec3::new(0.0, 0.3, 1.0) * (1.0 / 1.09f64.sqrt())),
        (Vec3::E_Z * 5.0, Vec3::E_Z),
        // outside: rim point at the gradient's azimuth
        (Vec3::new(1.0, 0.0, 0.0), Vec3::new(s, 0.0, c)),
        (Vec3::new(-2.0, -2.0, -1.0), Vec3::new(-s * half, -s * half, c)),
        (Vec3::new(0.0, 1.0, 0.5), Vec3::new(0.0, s, c)),
        // straight down: every rim point ties, azimuth zero is returned
        (Vec3::new(0.0, 0.0, -1.0), Vec3::new(s, 0.0, c)),
        // no gradient: keep the incumbent
        (Vec3::ZERO, Vec3::E_Z),
    ];
    for (g, want) in hand {
        out.hand_case_err = out.hand_case_err.max((cap_linear_oracle(g, FRAC_PI_3, Vec3::E_Z) - want).norm());
    }
    out
}

/// Frank–Wolfe monotonicity and the single-element grid optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct FwCheck {
    pub runs: usize,
    /// Accepted iterations whose utility fell below the previous one.
    pub decreases: usize,
    pub worst_decrease: f64,
    /// Angle between the single-element result and the 0.5° grid optimum.
    pub single_element_angle_deg: f64,
}

pub fn fw_check(runs: usize, seed: u64) -> Result<FwCheck, SimError> {
    let mut out = FwCheck { runs, decreases: 0, worst_decrease: 0.0, single_element_angle_deg: 0.0 };
    for r in 0..runs {
        let cfg = TopologyConfig { seed: seed.wrapping_add(r as u64), ..TopologyConfig::default() };
        let sc = cfg.generate(&mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
        let model = ChannelModel::new(&sc)?;
        let fw = run_fw(&model, &initial_orientations(&sc), sc.theta_max, &FwSettings::default())?;
        let mut prev = fw.initial_utility;
        for e in &fw.trace {
            if e.utility < prev {
                out.decreases += 1;
                out.worst_decrease = out.worst_decrease.max(prev - e.utility);
            }
            prev = e.utility;
        }
    }
    let sc = small_scenario(seed, 1, 1, 1, 5.0, FRAC_PI_3)?;
    let model = ChannelModel::new(&sc)?;
    let fw = run_fw(&model, &initial_orientations(&sc), sc.theta_max, &FwSettings::default())?;
    let mut best = (f64::NEG_INFINITY, Vec3::E_Z);
    let steps = (sc.theta_max.to_degrees() * 2.0).round() as usize;
    for t in 0..=steps {
        let th = (t as f64 * 0.5).to_radians();
        for a in 0..720 {
            let az = (a as f64 * 0.5).to_radians();
            let v = Vec3::new(th.sin() * az.cos(), th.sin() * az.sin(), th.cos());
            let gain = model.coefficient(0, 0, v).norm_sqr();
            if gain > best.0 {
                best = (gain, v);
            }
        }
    }
    let found = fw.orientations.as_slice()[0];
    out.single_element_angle_deg = found.dot(best.1).clamp(-1.0, 1.0).acos().to_degrees();
    Ok(out)
}

/// Alternating-design traces at the reference deployment.
#[derive(Clone, Debug, PartialEq)]
pub struct AoCheck {
    pub runs: usize,
    /// Largest drop between consecutive outer iterations (bps/Hz).
    pub worst_decrease: f64,
    /// Runs that did not settle to `|ΔR| <= tol_ao` within the allowance.
    pub unconverged: usize,
    pub max_outer_used: usize,
    pub mean_final_rate: f64,
    pub seconds: f64,
}

/// `runs` seeded AO runs with directivity `p`; a run counts as converged when
/// its last step is within `tol_ao` no later than outer iteration `allowance`.
pub fn ao_check(runs: usize, seed: u64, p: f64, settings: &DriverSettings, allowance: usize) -> Result<AoCheck, SimError> {
    let start = Instant::now();
    let mut out =
        AoCheck { runs, worst_decrease: f64::NEG_INFINITY, unconverged: 0, max_outer_used: 0, mean_final_rate: 0.0, seconds: 0.0 };
    for r in 0..runs {
        let cfg = TopologyConfig { p, seed: seed.wrapping_add(r as u64), ..TopologyConfig::default() };
        let sc = cfg.generate(&mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
        let report = run_ao(&sc, &initial_orientations(&sc), settings)?;
        for w in report.trace.windows(2) {
            out.worst_decrease = out.worst_decrease.max(w[0].1 - w[1].1);
        }
        let outer = report.trace.last().map_or(0, |t| t.0);
        out.max_outer_used = out.max_outer_used.max(outer);
        let settled = match report.trace.as_slice() {
            [.., a, b] => (b.1 - a.1).abs() <= settings.tol_ao,
            _ => true,
        };
        if !settled || outer > allowance {
            out.unconverged += 1;
        }
        out.mean_final_rate += report.min_rate / runs as f64;
    }
    out.seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Verdict of one suite under the default limits.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs the fast suites with their default limits.
pub fn run_all(seed: u64) -> Result<Vec<Verdict>, SimError> {
    let mut out = Vec::new();
    let d = derivative_check(100, seed)?;
    out.push(Verdict {
        name: "channel derivatives vs finite differences",
        passed: d.gradient_rel_err <= 1e-5 && d.hessian_rel_err <= 1e-4 && d.seconds < 10.0,
        detail: format!("gradient {:.2e}, Hessian {:.2e}, {:.2}s", d.gradient_rel_err, d.hessian_rel_err, d.seconds),
    });
    let n = normalization_check(100, seed)?;
    out.push(Verdict {
        name: "unit normalization with beam rescaling",
        passed: n.channel_rel_err <= 1e-10
            && n.min_gain >= 1.0
            && n.product_rel_err <= 1e-10
            && n.max_power_increase <= 0.0
            && n.quadratic_case_err <= 1e-12,
        detail: format!(
            "channels {:.2e}, products {:.2e}, min gain {:.4}, power change {:.2e}",
            n.channel_rel_err, n.product_rel_err, n.min_gain, n.max_power_increase
        ),
    });
    let b = beamforming_check(10, seed)?;
    out.push(Verdict {
        name: "max-min beamforming optimality",
        passed: b.single_user_rel_err <= 1e-4 && b.grid_excess() <= 1e-4,
        detail: format!("single user {:.2e}, grid excess {:.2e}", b.single_user_rel_err, b.grid_excess()),
    });
    let s = surrogate_check(20, 1000, seed)?;
    out.push(Verdict {
        name: "surrogate bounds hold on the relaxed cap",
        passed: s.violations == 0,
        detail: format!("{} violations, worst relative excess {:.2e}", s.violations, s.worst_excess),
    });
    let c = cap_oracle_check(1000, seed);
    out.push(Verdict {
        name: "cap oracle vs one-degree grid",
        passed: c.worst_grid_gain <= 1e-12 && c.worst_infeasibility <= 1e-12 && c.hand_case_err <= 1e-12,
        detail: format!(
            "grid gain {:.2e}, infeasibility {:.2e}, hand cases {:.2e}",
            c.worst_grid_gain, c.worst_infeasibility, c.hand_case_err
        ),
    });
    let f = fw_check(50, seed)?;
    out.push(Verdict {
        name: "Frank-Wolfe monotonicity and single-element optimum",
        passed: f.decreases == 0 && f.single_element_angle_deg <= 1.0,
        detail: format!("{} decreases, single element {:.3} deg off", f.decreases, f.single_element_angle_deg),
    });
    Ok(out)
}

/// Degrees between two unit vectors.
pub fn angle_deg(a: Vec3, b: Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos() * 180.0 / PI
}
