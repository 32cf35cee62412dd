//! Run configuration files.
//!
//! A config is a TOML document with a `[scenario]` table (topology and radio
//! keys), an optional `[algorithm]` table (driver tolerances and iteration
//! caps) and the top-level `resample_scatterers` switch. Every key is
//! optional and defaults to the reference deployment. Loading stops at the
//! first problem and names the offending key.

use std::fmt;
use std::path::Path;

use rotcf_core::beamform::MaxMinSettings;
use rotcf_core::drivers::DriverSettings;
use rotcf_core::orient_fw::FwSettings;
use rotcf_core::orient_sca::{CurvatureMode, ScaSettings};
use rotcf_core::scenario::TopologyConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Driver knobs exposed in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    /// Outer stopping tolerance of the alternating design, bps/Hz.
    pub tol_ao: f64,
    pub max_outer: usize,
    pub sca_tol: f64,
    pub sca_max_iter: usize,
    pub curvature: CurvatureMode,
    /// Starting fraction of the analytic curvature in adaptive mode.
    pub adaptive_start: f64,
    pub fw_epsilon: f64,
    pub fw_tol: f64,
    pub fw_max_iter: usize,
    /// Relative bracket width of the max-min SINR search.
    pub eps_gamma: f64,
    pub max_probes: usize,
    pub random_trials: usize,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig::from_settings(&DriverSettings::default())
    }
}

impl AlgorithmConfig {
    pub fn from_settings(s: &DriverSettings) -> Self {
        AlgorithmConfig {
            tol_ao: s.tol_ao,
            max_outer: s.max_outer,
            sca_tol: s.sca.tol,
            sca_max_iter: s.sca.max_iter,
            curvature: s.sca.curvature,
            adaptive_start: s.sca.adaptive_start,
            fw_epsilon: s.fw.epsilon,
            fw_tol: s.fw.tol,
            fw_max_iter: s.fw.max_iter,
            eps_gamma: s.beamforming.eps_gamma,
            max_probes: s.beamforming.max_probes,
            random_trials: s.random_trials,
        }
    }

    pub fn settings(&self) -> DriverSettings {
        DriverSettings {
            tol_ao: self.tol_ao,
            max_outer: self.max_outer,
            sca: ScaSettings {
                tol: self.sca_tol,
                max_iter: self.sca_max_iter,
                curvature: self.curvature,
                adaptive_start: self.adaptive_start,
            },
            fw: FwSettings { epsilon: self.fw_epsilon, tol: self.fw_tol, max_iter: self.fw_max_iter, ..FwSettings::default() },
            beamforming: MaxMinSettings { eps_gamma: self.eps_gamma, max_probes: self.max_probes },
            random_trials: self.random_trials,
        }
    }

    /// Checks every key and reports the first violation.
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("algorithm.tol_ao", self.tol_ao),
            ("algorithm.sca_tol", self.sca_tol),
            ("algorithm.adaptive_start", self.adaptive_start),
            ("algorithm.fw_epsilon", self.fw_epsilon),
            ("algorithm.fw_tol", self.fw_tol),
            ("algorithm.eps_gamma", self.eps_gamma),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::config(key, "must be a positive finite number"));
            }
        }
        if self.adaptive_start > 1.0 {
            return Err(SimError::config("algorithm.adaptive_start", "must not exceed 1"));
        }
        let counts = [
            ("algorithm.max_outer", self.max_outer),
            ("algorithm.sca_max_iter", self.sca_max_iter),
            ("algorithm.fw_max_iter", self.fw_max_iter),
            ("algorithm.max_probes", self.max_probes),
            ("algorithm.random_trials", self.random_trials),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(SimError::config(key, "must be at least 1"));
            }
        }
        Ok(())
    }
}

/// One complete run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: TopologyConfig,
    pub algorithm: AlgorithmConfig,
    /// Draw fresh scatterers for every drop (otherwise one set per seed).
    pub resample_scatterers: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { scenario: TopologyConfig::default(), algorithm: AlgorithmConfig::default(), resample_scatterers: true }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.scenario.validate().map_err(|e| match e {
            rotcf_core::Error::Config { key, reason } => SimError::config(format!("scenario.{key}"), reason),
            other => SimError::Core(other),
        })?;
        self.algorithm.validate()
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let cfg: RunConfig = parse_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::parse(&read(path)?).map_err(|e| e.in_file(path))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub(crate) fn read(path: &Path) -> Result<String, SimError> {
    std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.to_path_buf(), source })
}

/// Deserializes TOML, naming the key that failed.
pub(crate) fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T, SimError> {
    let de = toml::Deserializer::parse(text).map_err(|e| SimError::config("<document>", e.message().trim()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().trim().to_string();
        // unknown keys are sometimes reported one level up; name the key itself
        let key = match unknown_field(&message) {
            Some(field) if path == "." => field,
            Some(field) if path == field || path.ends_with(&format!(".{field}")) => path,
            Some(field) => format!("{path}.{field}"),
            None => path,
        };
        SimError::config(key, message)
    })
}

fn unknown_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_toml())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_reference_deployment() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.scenario.num_aps, 5);
        assert_eq!(cfg.algorithm.settings(), DriverSettings::default());
    }

    #[test]
    fn keys_use_the_documented_names() {
        let cfg = RunConfig::parse(
            "resample_scatterers = false\n[scenario]\nB = 4\nM_x = 1\nK = 3\nP_max_dBm = 20.0\nnoise_dBm = -90.0\n\
             Q = 0\ntheta_max = 0.5\np = 3.0\n[algorithm]\ncurvature = \"adaptive\"\nrandom_trials = 5\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario.num_aps, 4);
        assert_eq!(cfg.scenario.count_x, 1);
        assert_eq!(cfg.scenario.num_users, 3);
        assert_eq!(cfg.scenario.p_max_dbm, 20.0);
        assert_eq!(cfg.scenario.num_scatterers, 0);
        assert_eq!(cfg.algorithm.curvature, CurvatureMode::Adaptive);
        assert_eq!(cfg.algorithm.random_trials, 5);
        assert!(!cfg.resample_scatterers);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.scenario.theta_max = 0.25;
        cfg.algorithm.max_outer = 7;
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    fn bad_key(text: &str) -> String {
        match RunConfig::parse(text) {
            Err(SimError::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn reports_the_first_bad_key() {
        assert_eq!(bad_key("[scenario]\nB = 0\n"), "scenario.B");
        assert_eq!(bad_key("[scenario]\ntheta_max = 2.0\n"), "scenario.theta_max");
        assert_eq!(bad_key("[scenario]\nK = \"eight\"\n"), "scenario.K");
        assert_eq!(bad_key("[scenario]\nbogus = 1\n"), "scenario.bogus");
        assert_eq!(bad_key("extra = 1\n"), "extra");
        assert_eq!(bad_key("[algorithm]\nmax_outer = 0\n"), "algorithm.max_outer");
        assert_eq!(bad_key("[algorithm]\ncurvature = \"loose\"\n"), "algorithm.curvature");
        assert_eq!(bad_key("[scenario]\nB = 0\nK = 0\n"), "scenario.B");
        assert_eq!(bad_key("[scenario\n"), "<document>");
    }
}
