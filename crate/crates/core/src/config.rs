//! Window configuration shared by the phasor and Toeplitz layers.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// Sliding-window setup: period, angular frequency, truncation order and
/// quadrature grid density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasorConfig {
    /// Window length `T` in seconds.
    pub period: f64,
    /// Angular frequency `omega = 2*pi / T` in rad/s.
    pub omega: f64,
    /// Phasors are kept for `|k| <= truncation`.
    pub truncation: usize,
    /// Uniform quadrature points per period.
    pub samples_per_period: usize,
}

impl PhasorConfig {
    /// Builds a configuration from the period; `omega` is derived.
    pub fn new(period: f64, truncation: usize, samples_per_period: usize) -> crate::Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(crate::Error::config(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        let min_samples = 4 * (2 * truncation + 1);
        if samples_per_period < min_samples {
            return Err(crate::Error::config(format!(
                "samples_per_period = {samples_per_period} is below the Nyquist-safe \
                 minimum 4*(2h+1) = {min_samples} for h = {truncation}"
            )));
        }
        Ok(Self {
            period,
            omega: TAU / period,
            truncation,
            samples_per_period,
        })
    }

    /// Grid step `T / N` in seconds.
    pub fn step(&self) -> f64 {
        self.period / self.samples_per_period as f64
    }

    /// Number of retained phasors, `2h + 1`.
    pub fn num_phasors(&self) -> usize {
        2 * self.truncation + 1
    }

    /// Signed harmonic index for a storage slot (slot `0` holds `k = -h`).
    pub fn harmonic_of_slot(&self, slot: usize) -> i64 {
        slot as i64 - self.truncation as i64
    }

    /// Storage slot of a signed harmonic index.
    pub fn slot_of_harmonic(&self, k: i64) -> usize {
        (k + self.truncation as i64) as usize
    }

    /// Checks the derived-frequency identity and the grid margin.
    pub fn validate(&self) -> crate::Result<()> {
        if (self.omega * self.period - TAU).abs() > 1e-12 * TAU {
            return Err(crate::Error::config(format!(
                "omega * period = {} differs from 2*pi",
                self.omega * self.period
            )));
        }
        let min_samples = 4 * (2 * self.truncation + 1);
        if self.samples_per_period < min_samples {
            return Err(crate::Error::config(format!(
                "samples_per_period = {} is below 4*(2h+1) = {min_samples}",
                self.samples_per_period
            )));
        }
        Ok(())
    }
}
