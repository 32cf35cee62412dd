//! Monte Carlo drops, single runs and parameter sweeps.
//!
//! Drop `d` of seed `s` draws its users (then scatterers) from ChaCha8 stream
//! `d` of seed `s`. Nothing in that draw depends on the swept parameter or the
//! method, so every method and every sweep value sees the same realizations
//! and comparisons are paired. The random-orientation baseline draws its
//! boresights from a second generator keyed the same way.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rotcf_core::drivers::{report_channels, run_method, Method, RunReport};
use rotcf_core::scenario::{Scenario, TopologyConfig};
use serde::{Deserialize, Serialize};

use crate::config::{parse_toml, read, RunConfig};
use crate::error::SimError;

/// Stream reserved for the shared scatterer set when scatterers are not
/// resampled per drop.
const SHARED_SCATTERER_STREAM: u64 = u64::MAX;
/// Offset separating method randomness from topology randomness.
const METHOD_SEED_OFFSET: u64 = 0x5851_F42D_4C95_7F2D;

/// Builds drop `drop` of `seed` under `cfg`.
pub fn drop_scenario(cfg: &RunConfig, seed: u64, drop: u64) -> Result<Scenario, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(drop);
    let topology = TopologyConfig { seed, ..cfg.scenario.clone() };
    let mut scenario = topology.generate(&mut rng)?;
    if !cfg.resample_scatterers {
        let mut shared = ChaCha8Rng::seed_from_u64(seed);
        shared.set_stream(SHARED_SCATTERER_STREAM);
        scenario.scatterers = topology.generate(&mut shared)?.scatterers;
        scenario.validate()?;
    }
    Ok(scenario)
}

/// Generator for the method's own randomness on drop `drop`.
pub fn method_rng(seed: u64, drop: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(METHOD_SEED_OFFSET));
    rng.set_stream(drop);
    rng
}

/// Runs `method` on one drop, timing it and re-checking the reported rates.
pub fn run_single(cfg: &RunConfig, method: Method, seed: u64, drop: u64) -> Result<RunReport, SimError> {
    if method == Method::Ao && cfg.scenario.p < 2.0 {
        return Err(SimError::config(
            "method",
            format!("ao needs p >= 2 (got p = {}); use two_stage instead", cfg.scenario.p),
        ));
    }
    let scenario = drop_scenario(cfg, seed, drop)?;
    let settings = cfg.algorithm.settings();
    let start = Instant::now();
    let mut report = run_method(&scenario, method, &settings, &mut method_rng(seed, drop))?;
    report.wallclock = start.elapsed().as_secs_f64();
    report.verify(&report_channels(&scenario, &report)?, scenario.noise_power)?;
    Ok(report)
}

/// Parameter swept along the x-axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVariable {
    /// Cap half-angle, radians.
    #[serde(rename = "theta_max")]
    ThetaMax,
    /// Per-AP budget, dBm.
    #[serde(rename = "P_max_dBm")]
    PMax,
    #[serde(rename = "p")]
    Directivity,
    #[serde(rename = "B")]
    NumAps,
}

impl SweepVariable {
    pub const ALL: [SweepVariable; 4] =
        [SweepVariable::ThetaMax, SweepVariable::PMax, SweepVariable::Directivity, SweepVariable::NumAps];

    /// Config key of the swept parameter (also the CSV `variable` column).
    pub fn key(self) -> &'static str {
        match self {
            SweepVariable::ThetaMax => "theta_max",
            SweepVariable::PMax => "P_max_dBm",
            SweepVariable::Directivity => "p",
            SweepVariable::NumAps => "B",
        }
    }

    pub fn from_key(key: &str) -> Option<SweepVariable> {
        SweepVariable::ALL.into_iter().find(|v| v.key() == key)
    }

    /// `cfg` with this parameter set to `value`.
    pub fn apply(self, cfg: &RunConfig, value: f64) -> Result<RunConfig, SimError> {
        let mut out = cfg.clone();
        let s = &mut out.scenario;
        match self {
            SweepVariable::ThetaMax => s.theta_max = value,
            SweepVariable::PMax => s.p_max_dbm = value,
            SweepVariable::Directivity => s.p = value,
            SweepVariable::NumAps => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(SimError::config("sweep.values", format!("B = {value} is not a positive integer")));
                }
                s.num_aps = value as usize;
            }
        }
        out.validate().map_err(|e| match e {
            SimError::Config { reason, .. } => {
                SimError::config("sweep.values", format!("{} = {value}: {reason}", self.key()))
            }
            other => other,
        })?;
        Ok(out)
    }
}

/// One sweep: a parameter, its values, the methods and the paired drops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    #[serde(default = "default_drops")]
    pub drops: usize,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
}

fn default_drops() -> usize {
    50
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

impl SweepSpec {
    pub fn validate(&self, base: &RunConfig) -> Result<(), SimError> {
        if self.values.is_empty() {
            return Err(SimError::config("sweep.values", "must not be empty"));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SimError::config("sweep.values", "must be strictly increasing"));
        }
        if self.drops == 0 {
            return Err(SimError::config("sweep.drops", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(SimError::config("sweep.methods", "must list at least one method"));
        }
        for &v in &self.values {
            let cfg = self.variable.apply(base, v)?;
            if self.methods.contains(&Method::Ao) && cfg.scenario.p < 2.0 {
                return Err(SimError::config(
                    "sweep.methods",
                    format!("ao needs p >= 2 but a sweep point has p = {}; use two_stage instead", cfg.scenario.p),
                ));
            }
        }
        Ok(())
    }

    /// Methods in the fixed report order.
    pub fn ordered_methods(&self) -> Vec<Method> {
        Method::ALL.into_iter().filter(|m| self.methods.contains(m)).collect()
    }
}

/// Sweep file: a `[sweep]` table plus either `base = "<config path>"`
/// (relative to the sweep file) or inline `[scenario]`/`[algorithm]` tables.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    base: Option<String>,
    sweep: SweepSpec,
    scenario: Option<toml::Table>,
    algorithm: Option<toml::Table>,
    resample_scatterers: Option<bool>,
}

/// Loads a sweep file, returning the spec and its base config.
pub fn load_sweep(path: &Path) -> Result<(SweepSpec, RunConfig), SimError> {
    let text = read(path)?;
    let file: SweepFile = parse_toml(&text).map_err(|e| e.in_file(path))?;
    let base = match &file.base {
        Some(rel) => {
            if file.scenario.is_some() || file.algorithm.is_some() || file.resample_scatterers.is_some() {
                return Err(SimError::config("base", "give either a base config or inline tables, not both").in_file(path));
            }
            RunConfig::load(&path.parent().unwrap_or(Path::new(".")).join(rel))?
        }
        None => {
            let mut inline = toml::Table::new();
            if let Some(t) = file.scenario {
                inline.insert("scenario".into(), toml::Value::Table(t));
            }
            if let Some(t) = file.algorithm {
                inline.insert("algorithm".into(), toml::Value::Table(t));
            }
            if let Some(r) = file.resample_scatterers {
                inline.insert("resample_scatterers".into(), toml::Value::Boolean(r));
            }
            RunConfig::parse(&toml::to_string(&inline).expect("table serializes")).map_err(|e| e.in_file(path))?
        }
    };
    file.sweep.validate(&base).map_err(|e| e.in_file(path))?;
    Ok((file.sweep, base))
}

/// Per-drop failure of one cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DropFailure {
    pub drop: u64,
    pub message: String,
}

/// All drops of one (value, method) pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub value: f64,
    pub method: Method,
    /// Min rates of the successful drops, in drop order.
    pub rates: Vec<f64>,
    pub failures: Vec<DropFailure>,
    pub mean: f64,
    /// Standard error of the mean (zero with fewer than two drops).
    pub stderr: f64,
}

impl SweepCell {
    fn new(value: f64, method: Method, outcomes: Vec<(u64, Result<f64, String>)>) -> Self {
        let mut rates = Vec::new();
        let mut failures = Vec::new();
        for (drop, outcome) in outcomes {
            match outcome {
                Ok(r) => rates.push(r),
                Err(message) => failures.push(DropFailure { drop, message }),
            }
        }
        let (mean, stderr) = mean_and_stderr(&rates);
        SweepCell { value, method, rates, failures, mean, stderr }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub seed: u64,
    pub drops: usize,
    /// Value-major, methods in enum order.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, value: f64, method: Method) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.value == value && c.method == method)
    }

    /// Means of `method` across the sweep values, in value order.
    pub fn means(&self, method: Method) -> Vec<f64> {
        self.cells.iter().filter(|c| c.method == method).map(|c| c.mean).collect()
    }
}

/// Memo of finished runs keyed by the full effective config, seed, drop and
/// method, so overlapping sweeps reuse identical runs.
#[derive(Debug, Default)]
pub struct RunCache {
    map: Mutex<HashMap<(String, u64, u64, Method), Result<f64, String>>>,
}

impl RunCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_run(&self, cfg: &RunConfig, key: &str, seed: u64, drop: u64, method: Method) -> Result<f64, String> {
        let k = (key.to_string(), seed, drop, method);
        if let Some(hit) = self.map.lock().expect("cache lock").get(&k) {
            return hit.clone();
        }
        let outcome = evaluate(cfg, method, seed, drop);
        self.map.lock().expect("cache lock").insert(k, outcome.clone());
        outcome
    }
}

fn evaluate(cfg: &RunConfig, method: Method, seed: u64, drop: u64) -> Result<f64, String> {
    run_single(cfg, method, seed, drop).map(|r| r.min_rate).map_err(|e| e.to_string())
}

/// Runs every (value, drop, method) with `jobs` workers; per-run failures are
/// recorded in their cell. Results do not depend on `jobs`.
pub fn run_sweep(spec: &SweepSpec, base: &RunConfig, jobs: usize, cache: Option<&RunCache>) -> Result<SweepResult, SimError> {
    spec.validate(base)?;
    let methods = spec.ordered_methods();
    let configs = spec.values.iter().map(|&v| spec.variable.apply(base, v)).collect::<Result<Vec<_>, _>>()?;
    let keys: Vec<String> = configs.iter().map(|c| serde_json::to_string(c).expect("config serializes")).collect();
    let mut tasks: Vec<(usize, u64, Method)> = Vec::new();
    for v in 0..spec.values.len() {
        for d in 0..spec.drops as u64 {
            tasks.extend(methods.iter().map(|&m| (v, d, m)));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::config("jobs", e.to_string()))?;
    let outcomes: Vec<Result<f64, String>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(v, d, m)| match cache {
                Some(c) => c.get_or_run(&configs[v], &keys[v], spec.seed, d, m),
                None => evaluate(&configs[v], m, spec.seed, d),
            })
            .collect()
    });
    let mut grouped: Vec<Vec<(u64, Result<f64, String>)>> = vec![Vec::new(); spec.values.len() * methods.len()];
    for (&(v, d, m), outcome) in tasks.iter().zip(outcomes) {
        let mi = methods.iter().position(|&x| x == m).expect("method listed");
        grouped[v * methods.len() + mi].push((d, outcome));
    }
    let cells = grouped
        .into_iter()
        .enumerate()
        .map(|(i, outcomes)| SweepCell::new(spec.values[i / methods.len()], methods[i % methods.len()], outcomes))
        .collect();
    Ok(SweepResult { variable: spec.variable, seed: spec.seed, drops: spec.drops, cells })
}

pub const CSV_HEADER: &str = "variable,value,method,mean_min_rate_bpshz,stderr,drops,seed";

/// One CSV row as parsed back from disk.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct CsvRow {
    pub variable: String,
    pub value: f64,
    pub method: Method,
    pub mean_min_rate_bpshz: f64,
    pub stderr: f64,
    pub drops: usize,
    pub seed: u64,
}

/// `x` with six significant digits in plain decimal notation.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    let mut exp = x.abs().log10().floor() as i32;
    let rounded = |e: i32| {
        let scale = 10f64.powi(5 - e);
        (x * scale).round() / scale
    };
    let mut r = rounded(exp);
    if r.abs() >= 10f64.powi(exp + 1) {
        // rounding carried into the next decade
        exp += 1;
        r = rounded(exp);
    }
    format!("{:.*}", (5 - exp).max(0) as usize, r)
}

/// CSV text: header plus one row per (value, method), value-major.
pub fn format_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in &result.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            result.variable.key(),
            sig6(c.value),
            c.method,
            sig6(c.mean),
            sig6(c.stderr),
            c.rates.len(),
            result.seed
        );
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<(), SimError> {
    std::fs::write(path, format_csv(result)).map_err(|source| SimError::Io { path: path.to_path_buf(), source })
}

pub fn parse_csv(text: &str, path: &Path) -> Result<Vec<CsvRow>, SimError> {
    let bad = |reason: String| SimError::Csv { path: path.to_path_buf(), reason };
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(bad(format!("unexpected header `{header}`")));
    }
    reader.deserialize().map(|row| row.map_err(|e| bad(e.to_string()))).collect()
}
