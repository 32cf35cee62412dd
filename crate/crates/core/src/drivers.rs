//! End-to-end designs: alternating optimization, the two-stage scheme and
//! the reference baselines.
//!
//! Every driver returns a [`RunReport`] whose per-user rates are recomputed
//! from the final channels and beams. Wall-clock time is left at zero here
//! (the core has no clock); front ends fill it in.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::beamform::{
    feasibility_min_power, maxmin_beamforming_with, min_sinr, rate, sinrs, BeamformerSet, MaxMinResult,
    MaxMinSettings,
};
use crate::channel::{ChannelModel, ChannelSet, OrientationSet};
use crate::orient_fw::{run_fw, FwSettings};
use crate::orient_sca::{normalization_gains, normalize_orientations, run_sca, ScaSettings};
use crate::scenario::{GainMode, Scenario};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    #[cfg_attr(feature = "serde", serde(rename = "ao"))]
    Ao,
    #[cfg_attr(feature = "serde", serde(rename = "two_stage"))]
    TwoStage,
    #[cfg_attr(feature = "serde", serde(rename = "random_orient"))]
    RandomOrient,
    #[cfg_attr(feature = "serde", serde(rename = "isotropic"))]
    Isotropic,
    #[cfg_attr(feature = "serde", serde(rename = "fixed_orient"))]
    FixedOrient,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Ao, Method::TwoStage, Method::RandomOrient, Method::Isotropic, Method::FixedOrient];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ao => "ao",
            Method::TwoStage => "two_stage",
            Method::RandomOrient => "random_orient",
            Method::Isotropic => "isotropic",
            Method::FixedOrient => "fixed_orient",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one design run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub method: Method,
    /// Worst-user rate in bps/Hz.
    pub min_rate: f64,
    pub per_user_rates: Vec<f64>,
    pub final_orientations: OrientationSet,
    pub final_beams: BeamformerSet,
    /// `(iteration, min rate)` per outer iteration (a single entry for
    /// one-shot methods).
    pub trace: Vec<(usize, f64)>,
    pub wallclock: f64,
    pub seed: u64,
    /// Number of SOC beamforming probes across the run.
    pub probes: usize,
    /// Non-fatal problems met along the way.
    pub diagnostics: Vec<String>,
}

impl RunReport {
    fn new(
        method: Method,
        channels: &ChannelSet,
        orientations: OrientationSet,
        beams: BeamformerSet,
        noise: f64,
        trace: Vec<(usize, f64)>,
        seed: u64,
    ) -> Self {
        let per_user_rates: Vec<f64> = sinrs(channels, &beams, noise).into_iter().map(rate).collect();
        let min_rate = per_user_rates.iter().copied().fold(f64::INFINITY, f64::min);
        RunReport {
            method,
            min_rate,
            per_user_rates,
            final_orientations: orientations,
            final_beams: beams,
            trace,
            wallclock: 0.0,
            seed,
            probes: 0,
            diagnostics: Vec::new(),
        }
    }

    /// Checks the stored rates against rates recomputed from `channels`.
    pub fn verify(&self, channels: &ChannelSet, noise: f64) -> Result<()> {
        let fresh: Vec<f64> = sinrs(channels, &self.final_beams, noise).into_iter().map(rate).collect();
        for (k, (a, b)) in fresh.iter().zip(&self.per_user_rates).enumerate() {
            if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                return Err(Error::Invariant(format!("user {k} rate {b} does not recompute ({a})")));
            }
        }
        let min = self.per_user_rates.iter().copied().fold(f64::INFINITY, f64::min);
        if (min - self.min_rate).abs() > 1e-9 {
            return Err(Error::Invariant(format!("min rate {} is not the minimum {min}", self.min_rate)));
        }
        Ok(())
    }
}

/// Settings shared by the drivers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriverSettings {
    /// Outer stopping tolerance on the min rate (bps/Hz).
    pub tol_ao: f64,
    pub max_outer: usize,
    pub sca: ScaSettings,
    pub fw: FwSettings,
    pub beamforming: MaxMinSettings,
    /// Orientation draws of the random baseline.
    pub random_trials: usize,
}

impl Default for DriverSettings {
    fn default() -> Self {
        DriverSettings {
            tol_ao: 1e-4,
            max_outer: 30,
            sca: ScaSettings::default(),
            fw: FwSettings::default(),
            beamforming: MaxMinSettings::default(),
            random_trials: 30,
        }
    }
}

/// Boresights at the local panel normal, the starting point of every design.
pub fn initial_orientations(scenario: &Scenario) -> OrientationSet {
    OrientationSet::panel_normal(scenario)
}

fn beamform(
    channels: &ChannelSet,
    scenario: &Scenario,
    incumbent: Option<&BeamformerSet>,
    settings: &DriverSettings,
    report_probes: &mut usize,
    diagnostics: &mut Vec<String>,
) -> Result<MaxMinResult> {
    let res = maxmin_beamforming_with(channels, scenario.p_max, scenario.noise_power, incumbent, &settings.beamforming)?;
    *report_probes += res.bisection_iters;
    if res.degenerate {
        diagnostics.push("a user has an all-zero channel".into());
    }
    if res.solver_warnings > 0 {
        diagnostics.push(format!("{} beamforming probes ended without an optimal status", res.solver_warnings));
    }
    if !res.monotone {
        diagnostics.push("feasibility was not monotone across probes".into());
    }
    Ok(res)
}

/// Alternating optimization: beams by max-min SOC bisection, boresights by
/// SCA, normalization, then beams again seeded with the rescaled incumbent.
pub fn run_ao(scenario: &Scenario, init: &OrientationSet, settings: &DriverSettings) -> Result<RunReport> {
    if scenario.directivity < 2.0 {
        return Err(Error::UnsupportedRegime { p: scenario.directivity });
    }
    let model = ChannelModel::new(scenario)?;
    let noise = scenario.noise_power;
    init.check(scenario.theta_max, false)?;
    let mut orientations = init.clone();
    let mut channels = model.channel_matrix(&orientations);
    let mut probes = 0;
    let mut diagnostics = Vec::new();
    let first = beamform(&channels, scenario, None, settings, &mut probes, &mut diagnostics)?;
    let mut beams = first.beamformers;
    let mut current = rate(min_sinr(&channels, &beams, noise));
    let mut trace = vec![(0, current)];
    for t in 1..=settings.max_outer {
        let sca = run_sca(&model, &beams, &orientations, noise, scenario.theta_max, &settings.sca)?;
        if let Some(d) = &sca.diagnostic {
            diagnostics.push(format!("outer {t}: {d}"));
        }
        let normalized = normalize_orientations(&sca.orientations)?;
        let gains = normalization_gains(&sca.orientations, scenario.directivity);
        let inverse: Vec<f64> = gains.iter().map(|g| 1.0 / g).collect();
        let rescaled = beams.scaled_per_element(&inverse);
        let new_channels = model.channel_matrix(&normalized);
        let carried = min_sinr(&new_channels, &rescaled, noise);
        if (carried - sca.gamma_sca).abs() > 1e-8 * sca.gamma_sca.max(1e-300) {
            diagnostics.push(format!("outer {t}: normalization moved the SINR from {} to {carried}", sca.gamma_sca));
        }
        let res = beamform(&new_channels, scenario, Some(&rescaled), settings, &mut probes, &mut diagnostics)?;
        let next = rate(min_sinr(&new_channels, &res.beamformers, noise));
        if next < current - 1e-6 {
            // cannot happen with an incumbent-seeded search; keep the better design
            diagnostics.push(format!("outer {t}: rate fell from {current} to {next}; stopping"));
            break;
        }
        orientations = normalized;
        channels = new_channels;
        beams = res.beamformers;
        let delta = next - current;
        current = next;
        trace.push((t, current));
        if delta.abs() <= settings.tol_ao {
            break;
        }
    }
    let mut report = RunReport::new(Method::Ao, &channels, orientations, beams, noise, trace, scenario.seed);
    report.probes = probes;
    report.diagnostics = diagnostics;
    Ok(report)
}

/// Two-stage scheme: Frank–Wolfe on the proportional-fair gain utility,
/// then one max-min beamforming solve.
pub fn run_two_stage(scenario: &Scenario, init: &OrientationSet, settings: &DriverSettings) -> Result<RunReport> {
    let model = ChannelModel::new(scenario)?;
    let fw = run_fw(&model, init, scenario.theta_max, &settings.fw)?;
    let channels = model.channel_matrix(&fw.orientations);
    let mut probes = 0;
    let mut diagnostics = Vec::new();
    if let Some(d) = fw.diagnostic {
        diagnostics.push(d);
    }
    let res = beamform(&channels, scenario, None, settings, &mut probes, &mut diagnostics)?;
    let r = rate(min_sinr(&channels, &res.beamformers, scenario.noise_power));
    let mut report = RunReport::new(
        Method::TwoStage,
        &channels,
        fw.orientations,
        res.beamformers,
        scenario.noise_power,
        vec![(0, r)],
        scenario.seed,
    );
    report.probes = probes;
    report.diagnostics = diagnostics;
    Ok(report)
}

fn one_shot(method: Method, scenario: &Scenario, orientations: OrientationSet, settings: &DriverSettings) -> Result<RunReport> {
    let model = ChannelModel::new(scenario)?;
    let channels = model.channel_matrix(&orientations);
    let mut probes = 0;
    let mut diagnostics = Vec::new();
    let res = beamform(&channels, scenario, None, settings, &mut probes, &mut diagnostics)?;
    let r = rate(min_sinr(&channels, &res.beamformers, scenario.noise_power));
    let mut report =
        RunReport::new(method, &channels, orientations, res.beamformers, scenario.noise_power, vec![(0, r)], scenario.seed);
    report.probes = probes;
    report.diagnostics = diagnostics;
    Ok(report)
}

/// Baselines: boresights fixed at the panel normal, an isotropic pattern,
/// or the best of `settings.random_trials` cap-uniform draws.
///
/// For the random baseline a draw is discarded without a full search when a
/// single probe shows it cannot beat the best draw so far, which leaves the
/// reported best unchanged.
pub fn run_baseline<R: Rng + ?Sized>(
    scenario: &Scenario,
    kind: Method,
    settings: &DriverSettings,
    rng: &mut R,
) -> Result<RunReport> {
    match kind {
        Method::FixedOrient => one_shot(kind, scenario, initial_orientations(scenario), settings),
        Method::Isotropic => {
            let iso = Scenario { gain_mode: GainMode::Isotropic, ..scenario.clone() };
            one_shot(kind, &iso, initial_orientations(scenario), settings)
        }
        Method::RandomOrient => {
            if settings.random_trials == 0 {
                return Err(Error::Config { key: "random_trials", reason: "must be at least 1".into() });
            }
            let model = ChannelModel::new(scenario)?;
            let noise = scenario.noise_power;
            let mut best: Option<(f64, ChannelSet, OrientationSet, BeamformerSet)> = None;
            let mut probes = 0;
            let mut diagnostics = Vec::new();
            for _ in 0..settings.random_trials {
                let orientations = OrientationSet::random_cap(scenario, rng);
                let channels = model.channel_matrix(&orientations);
                if let Some((gamma_best, ..)) = &best {
                    if *gamma_best > 0.0 {
                        let target = gamma_best * (1.0 + settings.beamforming.eps_gamma);
                        probes += 1;
                        match feasibility_min_power(&channels, target, noise, scenario.p_max) {
                            Ok(p) if !p.feasible => continue,
                            _ => {}
                        }
                    }
                }
                let res = beamform(&channels, scenario, None, settings, &mut probes, &mut diagnostics)?;
                let gamma = min_sinr(&channels, &res.beamformers, noise);
                if best.as_ref().map_or(true, |(g, ..)| gamma > *g) {
                    best = Some((gamma, channels, orientations, res.beamformers));
                }
            }
            let (gamma, channels, orientations, beams) = best.expect("at least one trial");
            let mut report =
                RunReport::new(kind, &channels, orientations, beams, noise, vec![(0, rate(gamma))], scenario.seed);
            report.probes = probes;
            report.diagnostics = diagnostics;
            Ok(report)
        }
        Method::Ao | Method::TwoStage => Err(Error::Config {
            key: "method",
            reason: format!("{kind} is not a baseline"),
        }),
    }
}

/// Runs `method` from the panel-normal start.
pub fn run_method<R: Rng + ?Sized>(
    scenario: &Scenario,
    method: Method,
    settings: &DriverSettings,
    rng: &mut R,
) -> Result<RunReport> {
    let init = initial_orientations(scenario);
    match method {
        Method::Ao => run_ao(scenario, &init, settings),
        Method::TwoStage => run_two_stage(scenario, &init, settings),
        _ => run_baseline(scenario, method, settings, rng),
    }
}

/// Channels a report's design sees under `scenario`, for recomputation.
pub fn report_channels(scenario: &Scenario, report: &RunReport) -> Result<ChannelSet> {
    let model = if report.method == Method::Isotropic {
        ChannelModel::new(&Scenario { gain_mode: GainMode::Isotropic, ..scenario.clone() })?
    } else {
        ChannelModel::new(scenario)?
    };
    Ok(model.channel_matrix(&report.final_orientations))
}
