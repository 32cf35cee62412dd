//! JSON run reports.

use rotcf_core::drivers::{Method, RunReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    pub min_rate_bpshz: f64,
}

/// A [`RunReport`] in plain serializable form, with the config that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    pub drop: u64,
    pub min_rate_bpshz: f64,
    pub per_user_rates_bpshz: Vec<f64>,
    /// Boresights as `[x, y, z]`, AP-major then element.
    pub final_orientations: Vec<[f64; 3]>,
    /// Precoders as `[re, im]` pairs, one row per user.
    pub final_beams: Vec<Vec<[f64; 2]>>,
    pub trace: Vec<TracePoint>,
    pub wallclock_s: f64,
    pub probes: usize,
    pub diagnostics: Vec<String>,
    pub config: RunConfig,
}

impl RunRecord {
    pub fn new(report: &RunReport, drop: u64, config: &RunConfig) -> Self {
        let beams = &report.final_beams;
        RunRecord {
            method: report.method,
            seed: report.seed,
            drop,
            min_rate_bpshz: report.min_rate,
            per_user_rates_bpshz: report.per_user_rates.clone(),
            final_orientations: report.final_orientations.as_slice().iter().map(|f| f.to_array()).collect(),
            final_beams: (0..beams.num_users()).map(|k| beams.user(k).iter().map(|c| [c.re, c.im]).collect()).collect(),
            trace: report.trace.iter().map(|&(iter, r)| TracePoint { iter, min_rate_bpshz: r }).collect(),
            wallclock_s: report.wallclock,
            probes: report.probes,
            diagnostics: report.diagnostics.clone(),
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}
