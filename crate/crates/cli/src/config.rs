//! Run configuration schemas. Configs are JSON files validated strictly
//! (unknown keys are rejected); command-line flags override file values.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use phasor_core::error::{Error, Result};
use phasor_core::sim::{DisturbanceSpec, RectifierParams};
use phasor_core::toeplitz::PeriodicMatrixSamples;
use phasor_core::PhasorConfig;

type RMat = DMatrix<f64>;

/// T-periodic matrix function given as a harmonic sum
/// `sum_k cos_k cos(k w t) + sin_k sin(k w t)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFunctionSpec {
    pub rows: usize,
    pub cols: usize,
    pub terms: Vec<MatrixTerm>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixTerm {
    pub harmonic: u32,
    #[serde(default)]
    pub cos: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub sin: Option<Vec<Vec<f64>>>,
}

impl MatrixFunctionSpec {
    fn matrix_from(&self, data: &Option<Vec<Vec<f64>>>) -> Result<Option<RMat>> {
        let Some(rows) = data else { return Ok(None) };
        if rows.len() != self.rows || rows.iter().any(|r| r.len() != self.cols) {
            return Err(Error::config(format!(
                "matrix term must be {}x{}",
                self.rows, self.cols
            )));
        }
        let mut m = RMat::zeros(self.rows, self.cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(Some(m))
    }

    /// Samples the harmonic sum on the configured one-period grid.
    pub fn sample(&self, config: &PhasorConfig) -> Result<PeriodicMatrixSamples> {
        let mut parts = Vec::new();
        for term in &self.terms {
            let cos = self.matrix_from(&term.cos)?;
            let sin = self.matrix_from(&term.sin)?;
            parts.push((term.harmonic as f64, cos, sin));
        }
        let (rows, cols) = (self.rows, self.cols);
        PeriodicMatrixSamples::from_fn(config, move |t| {
            let mut m = RMat::zeros(rows, cols);
            for (k, cos, sin) in &parts {
                let phase = k * config.omega * t;
                if let Some(c) = cos {
                    m += c * phase.cos();
                }
                if let Some(s) = sin {
                    m += s * phase.sin();
                }
            }
            m
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    pub signal_csv: PathBuf,
    pub period: f64,
    pub truncation: usize,
    pub samples_per_period: usize,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    pub trajectory_json: PathBuf,
    /// `causal`, `noncausal` (needs `offset`) or `twosided` (needs
    /// `seed_csv`).
    pub mode: String,
    #[serde(default)]
    pub offset: Option<f64>,
    #[serde(default)]
    pub seed_csv: Option<PathBuf>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapConfig {
    pub period: f64,
    pub truncation: usize,
    pub samples_per_period: usize,
    pub a: MatrixFunctionSpec,
    pub q: MatrixFunctionSpec,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiccatiConfig {
    pub period: f64,
    pub truncation: usize,
    pub samples_per_period: usize,
    pub a: MatrixFunctionSpec,
    pub b: MatrixFunctionSpec,
    pub q: MatrixFunctionSpec,
    pub r: MatrixFunctionSpec,
    #[serde(default)]
    pub eta: Option<f64>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SylvesterConfig {
    pub period: f64,
    pub truncation: usize,
    pub samples_per_period: usize,
    /// Skew-symmetric internal-model drift.
    pub o: MatrixFunctionSpec,
    pub a: MatrixFunctionSpec,
    /// Constant term of the coupling equation.
    pub lc: MatrixFunctionSpec,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub rectifier: RectifierParams,
    pub truncation: usize,
    pub samples_per_period: usize,
    pub weights: [f64; 4],
    pub v_ref: f64,
    /// Control phasors `s_k` for `k = 0..=h` as `[re, im]` pairs; the
    /// default is the sin-phase seed.
    #[serde(default)]
    pub initial_guess: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum StateSel {
    Current,
    Voltage,
}

impl StateSel {
    pub fn index(self) -> usize {
        match self {
            StateSel::Current => 0,
            StateSel::Voltage => 1,
        }
    }
}

/// One internal-model action of the forwarding bank.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "type")]
pub enum BankSpecEntry {
    /// Plain integrator on one state.
    Integrator { state: StateSel, gain: f64 },
    /// Integrator weighted by cos(w t); pins the real part of the first
    /// harmonic of the measured state.
    CosIntegrator { state: StateSel, gain: f64 },
    /// Oscillator pinning one harmonic of the measured state.
    Oscillator {
        state: StateSel,
        harmonic: usize,
        gain: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeConfig {
    pub rectifier: RectifierParams,
    pub truncation: usize,
    pub samples_per_period: usize,
    pub equilibrium_json: PathBuf,
    /// Diagonal of the constant Lyapunov weight, `(current, voltage)`.
    pub q_diag: [f64; 2],
    /// Constant base feedback gain.
    pub gamma: f64,
    #[serde(default)]
    pub bank: Vec<BankSpecEntry>,
    #[serde(default)]
    pub eta1: Option<f64>,
    #[serde(default)]
    pub eta2: Option<f64>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration: f64,
    pub steps_per_period: usize,
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    #[serde(default)]
    pub disturbances: Vec<DisturbanceSpec>,
    #[serde(default)]
    pub record_phasors: bool,
    pub trace_csv: PathBuf,
    pub metrics_json: PathBuf,
    #[serde(default)]
    pub phasors_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub rectifier: RectifierParams,
    pub controller_json: PathBuf,
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub trace_csv: PathBuf,
    pub period: f64,
    pub truncation: usize,
    pub v_in_amplitude: f64,
    pub output: PathBuf,
}

/// Loads and strictly validates a command configuration.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("invalid config {}: {e}", path.display())))
}
