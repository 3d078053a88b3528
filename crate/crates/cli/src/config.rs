//! Run configuration: a JSON document mirrored by `docs/config.schema.json`.
//!
//! Frequencies are angular and usually normalized to `gN = 1`.

use std::collections::BTreeMap;
use std::path::Path;

use holomem::model::{make_schedule, ModelParams, Schedule, ScheduleFamily};
use holomem::protocol::{GammaSource, ProtocolInput, ProtocolOptions};
use holomem::C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    /// Photonic amplitudes `c_0 … c_nmax` as `[re, im]` pairs; rescaled to unit norm.
    pub input: Vec<[f64; 2]>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "default_gamma_source")]
    pub gamma_source: String,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seeds the random control points drawn by `validate`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "gN")]
    pub g_n: f64,
    pub delta: f64,
    pub n_max_total: usize,
    pub omega_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "T_M_fraction")]
    pub t_m_fraction: f64,
    #[serde(default = "one")]
    pub cycles: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub tol: f64,
    /// Stored trajectory samples per stage.
    pub samples: usize,
    pub leakage_limit: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { tol: 1e-9, samples: 201, leakage_limit: 0.05 }
    }
}

/// File names, relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub report: String,
    pub trajectory: String,
    pub phase: String,
    pub sweep: String,
    pub bosonization: String,
    pub darkstates: String,
    pub path: String,
    pub diagnostics: String,
    pub integrand: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            report: "report.json".into(),
            trajectory: "trajectory.csv".into(),
            phase: "phase.json".into(),
            sweep: "sweep.csv".into(),
            bosonization: "bosonization.csv".into(),
            darkstates: "darkstates.csv".into(),
            path: "path.csv".into(),
            diagnostics: "diagnostics.csv".into(),
            integrand: "integrand.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "lowercase", deny_unknown_fields)]
pub enum SweepConfig {
    Delta(Vec<f64>),
    Family(Vec<String>),
    Input(Vec<Vec<[f64; 2]>>),
}

impl SweepConfig {
    pub fn axis(&self) -> &'static str {
        match self {
            SweepConfig::Delta(_) => "delta",
            SweepConfig::Family(_) => "family",
            SweepConfig::Input(_) => "input",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepConfig::Delta(v) => v.len(),
            SweepConfig::Family(v) => v.len(),
            SweepConfig::Input(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The config for point `i`, plus the point's value as CSV text.
    pub fn point(&self, base: &RunConfig, i: usize) -> (RunConfig, String) {
        let mut cfg = base.clone();
        cfg.sweep = None;
        let label = match self {
            SweepConfig::Delta(v) => {
                cfg.model.delta = v[i];
                crate::output::sci(v[i])
            }
            SweepConfig::Family(v) => {
                cfg.schedule.family = v[i].clone();
                if v[i] == ScheduleFamily::CotProfile.as_str() {
                    cfg.schedule.t_m_fraction = 0.5;
                }
                v[i].clone()
            }
            SweepConfig::Input(v) => {
                cfg.input = v[i].clone();
                v[i].iter().map(|[re, im]| format!("{}{:+}i", re, im)).collect::<Vec<_>>().join(" ")
            }
        };
        (cfg, label)
    }
}

/// Finite-N check of the bosonized dark states, plus random dark-state residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub n_atoms: Vec<usize>,
    pub excitations: Vec<usize>,
    pub theta: f64,
    pub phi: f64,
    #[serde(default = "default_random_pairs")]
    pub random_pairs: usize,
}

fn default_gamma_source() -> String {
    GammaSource::Loop.as_str().into()
}

fn one() -> u32 {
    1
}

fn default_random_pairs() -> usize {
    50
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|_| CliError::MissingInput(path.to_path_buf()))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// A validated configuration turned into simulator objects.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub params: ModelParams,
    pub schedule: Schedule,
    pub input: ProtocolInput,
    pub gamma_source: GammaSource,
    pub options: ProtocolOptions,
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl Experiment {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let m = &cfg.model;
        positive("model.gN", m.g_n)?;
        positive("model.omega_max", m.omega_max)?;
        positive("integrator.tol", cfg.integrator.tol)?;
        positive("integrator.leakage_limit", cfg.integrator.leakage_limit)?;
        if cfg.integrator.samples < 2 {
            return Err(CliError::Config("integrator.samples must be at least 2".into()));
        }
        if cfg.schedule.cycles == 0 {
            return Err(CliError::Config("schedule.cycles must be at least 1".into()));
        }
        let params = ModelParams::new(m.g_n, m.delta, m.n_max_total).map_err(CliError::config)?;
        let period = cfg.schedule.cycles as f64 * params.detuning_period();
        let schedule = make_schedule(
            &cfg.schedule.family,
            &cfg.schedule.params,
            cfg.schedule.t_m_fraction * period,
            period,
            m.omega_max,
            &params,
        )
        .map_err(CliError::config)?;

        let amplitudes: Vec<C64> = cfg.input.iter().map(|&[re, im]| C64::new(re, im)).collect();
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(CliError::Config("input amplitudes must be finite".into()));
        }
        let input = ProtocolInput::normalized(amplitudes).map_err(CliError::config)?;
        if input.n_max() + 1 > m.n_max_total {
            return Err(CliError::Config(format!(
                "input reaches n = {} but model.n_max_total = {} needs to be at least n + 1",
                input.n_max(),
                m.n_max_total
            )));
        }
        let gamma_source = cfg.gamma_source.parse().map_err(CliError::config)?;

        let mut options = ProtocolOptions::default();
        options.integrator.tol = cfg.integrator.tol;
        options.integrator.samples = cfg.integrator.samples;
        options.leakage_limit = cfg.integrator.leakage_limit;
        Ok(Self { params, schedule, input, gamma_source, options })
    }
}
