//! Sliding Fourier decomposition over a trailing window, its inverses, and
//! the consistency test that characterizes trajectories with a time-domain
//! representative.
//!
//! The k-th phasor of a signal `x` at time `t` is the Fourier coefficient of
//! `x` restricted to `[t - T, t]`:
//!
//! ```text
//! X_k(t) = (1/T) * integral over [t-T, t] of x(tau) exp(-i w k tau) dtau
//! ```
//!
//! Quadrature is the trapezoidal rule on the uniform sample grid, which is
//! spectrally accurate for smooth periodic integrands.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::config::PhasorConfig;
use crate::error::{Error, Result};

type CVec = DVector<Complex64>;

/// Uniformly sampled vector signal.
#[derive(Debug, Clone)]
pub struct SampledSignal {
    pub dim: usize,
    pub times: Vec<f64>,
    pub samples: Vec<CVec>,
    /// Set when the signal was constructed from real data.
    pub real_signal: bool,
}

impl SampledSignal {
    pub fn from_complex(times: Vec<f64>, samples: Vec<CVec>) -> Result<Self> {
        if times.len() != samples.len() || times.is_empty() {
            return Err(Error::config(
                "signal needs matching, nonempty times and samples",
            ));
        }
        let dim = samples[0].len();
        if dim == 0 || samples.iter().any(|s| s.len() != dim) {
            return Err(Error::config(
                "signal samples must share a positive dimension",
            ));
        }
        check_uniform(&times)?;
        Ok(Self {
            dim,
            times,
            samples,
            real_signal: false,
        })
    }

    pub fn from_real(times: Vec<f64>, samples: Vec<DVector<f64>>) -> Result<Self> {
        let complex = samples
            .iter()
            .map(|s| s.map(|v| Complex64::new(v, 0.0)))
            .collect();
        let mut sig = Self::from_complex(times, complex)?;
        sig.real_signal = true;
        Ok(sig)
    }

    /// Samples a vector function on `[t_start, t_end]` with the given step.
    pub fn from_fn(
        t_start: f64,
        t_end: f64,
        step: f64,
        f: impl Fn(f64) -> DVector<f64>,
    ) -> Result<Self> {
        if !(step > 0.0) || t_end <= t_start {
            return Err(Error::config("from_fn needs step > 0 and t_end > t_start"));
        }
        let count = ((t_end - t_start) / step).round() as usize;
        let times: Vec<f64> = (0..=count).map(|i| t_start + i as f64 * step).collect();
        let samples: Vec<DVector<f64>> = times.iter().map(|&t| f(t)).collect();
        Self::from_real(times, samples)
    }

    /// Scalar convenience wrapper around [`SampledSignal::from_fn`].
    pub fn from_scalar_fn(
        t_start: f64,
        t_end: f64,
        step: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Self::from_fn(t_start, t_end, step, |t| DVector::from_element(1, f(t)))
    }

    pub fn step(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest imaginary residue over all samples.
    pub fn max_imag(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.iter().map(|z| z.im.abs()))
            .fold(0.0, f64::max)
    }

    /// Real part of the samples, dropping any imaginary residue.
    pub fn real_samples(&self) -> Vec<DVector<f64>> {
        self.samples.iter().map(|s| s.map(|z| z.re)).collect()
    }
}

fn check_uniform(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Ok(());
    }
    let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::config("signal times must be strictly increasing"));
    }
    for (i, w) in times.windows(2).enumerate() {
        let d = w[1] - w[0];
        if (d - step).abs() > 1e-9 * step.max(1.0) {
            return Err(Error::config(format!(
                "signal grid is not uniform near index {i}: step {d} vs {step}"
            )));
        }
    }
    Ok(())
}

/// Truncated phasor stack: coefficients `X_k` for `|k| <= h`, each an
/// n-dimensional complex vector. Slot `0` stores `k = -h`.
#[derive(Debug, Clone)]
pub struct PhasorVector {
    pub dim: usize,
    pub truncation: usize,
    pub coeffs: Vec<CVec>,
}

impl PhasorVector {
    pub fn zeros(dim: usize, truncation: usize) -> Self {
        Self {
            dim,
            truncation,
            coeffs: vec![CVec::zeros(dim); 2 * truncation + 1],
        }
    }

    pub fn get(&self, k: i64) -> &CVec {
        &self.coeffs[(k + self.truncation as i64) as usize]
    }

    pub fn set(&mut self, k: i64, value: CVec) {
        self.coeffs[(k + self.truncation as i64) as usize] = value;
    }

    /// Sets `X_k` and `X_{-k} = conj(X_k)` together.
    pub fn set_symmetric(&mut self, k: i64, value: CVec) {
        self.set(-k, value.map(|z| z.conj()));
        self.set(k, value);
    }

    pub fn num_phasors(&self) -> usize {
        2 * self.truncation + 1
    }

    /// Stacks the coefficients phasor-major: `(X_{-h}, ..., X_h)`.
    pub fn stacked(&self) -> CVec {
        let mut out = CVec::zeros(self.dim * self.num_phasors());
        for (slot, c) in self.coeffs.iter().enumerate() {
            out.rows_mut(slot * self.dim, self.dim).copy_from(c);
        }
        out
    }

    pub fn from_stacked(dim: usize, truncation: usize, stacked: &CVec) -> Result<Self> {
        let m = 2 * truncation + 1;
        if stacked.len() != dim * m {
            return Err(Error::config(format!(
                "stacked length {} does not match dim {dim} x {m}",
                stacked.len()
            )));
        }
        let coeffs = (0..m)
            .map(|slot| stacked.rows(slot * dim, dim).into_owned())
            .collect();
        Ok(Self {
            dim,
            truncation,
            coeffs,
        })
    }

    /// Squared little-l2 norm of the truncated stack.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Max deviation from `X_{-k} = conj(X_k)`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let h = self.truncation as i64;
        let mut defect: f64 = 0.0;
        for k in 0..=h {
            let a = self.get(k);
            let b = self.get(-k);
            for i in 0..self.dim {
                defect = defect.max((a[i].conj() - b[i]).norm());
            }
        }
        defect
    }

    /// Synthesizes the instantaneous window series `sum_k X_k exp(i w k t)`.
    pub fn synth(&self, omega: f64, t: f64) -> CVec {
        let h = self.truncation as i64;
        let mut out = CVec::zeros(self.dim);
        for k in -h..=h {
            let phase = Complex64::from_polar(1.0, omega * k as f64 * t);
            out += self.get(k) * phase;
        }
        out
    }

    /// Real part of [`PhasorVector::synth`]; the representative value for
    /// conjugate-symmetric stacks.
    pub fn synth_real(&self, omega: f64, t: f64) -> DVector<f64> {
        self.synth(omega, t).map(|z| z.re)
    }

    /// Returns a copy padded or truncated to the target order.
    pub fn resized(&self, truncation: usize) -> Self {
        let mut out = Self::zeros(self.dim, truncation);
        let h = self.truncation.min(truncation) as i64;
        for k in -h..=h {
            out.set(k, self.get(k).clone());
        }
        out
    }
}

/// Time-sampled phasor path, the image of a signal under the sliding
/// decomposition.
#[derive(Debug, Clone)]
pub struct PhasorTrajectory {
    pub config: PhasorConfig,
    pub times: Vec<f64>,
    pub values: Vec<PhasorVector>,
    pub real_signal: bool,
}

impl PhasorTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.dim)
    }

    /// Central finite differences of every phasor on the trajectory grid,
    /// one-sided at the ends.
    pub fn derivatives(&self) -> Result<Vec<PhasorVector>> {
        let m = self.len();
        if m < 3 {
            return Err(Error::config(
                "derivative needs at least 3 trajectory samples",
            ));
        }
        let dt = self.config.step();
        let h = self.config.truncation;
        let dim = self.dim();
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let mut d = PhasorVector::zeros(dim, h);
            for slot in 0..d.num_phasors() {
                d.coeffs[slot] = if i == 0 {
                    (&self.values[1].coeffs[slot] - &self.values[0].coeffs[slot]).unscale(dt)
                } else if i == m - 1 {
                    (&self.values[m - 1].coeffs[slot] - &self.values[m - 2].coeffs[slot])
                        .unscale(dt)
                } else {
                    (&self.values[i + 1].coeffs[slot] - &self.values[i - 1].coeffs[slot])
                        .unscale(2.0 * dt)
                };
            }
            out.push(d);
        }
        Ok(out)
    }

    fn value_at_interpolated(&self, t: f64) -> Option<PhasorVector> {
        let dt = self.config.step();
        let rel = (t - self.times[0]) / dt;
        if rel < -1e-9 || rel > (self.len() - 1) as f64 + 1e-9 {
            return None;
        }
        let i0 = (rel.floor().max(0.0) as usize).min(self.len() - 1);
        let frac = (rel - i0 as f64).clamp(0.0, 1.0);
        if frac < 1e-12 || i0 + 1 >= self.len() {
            return Some(self.values[i0].clone());
        }
        let mut out = PhasorVector::zeros(self.dim(), self.config.truncation);
        for slot in 0..out.num_phasors() {
            out.coeffs[slot] = &self.values[i0].coeffs[slot] * Complex64::new(1.0 - frac, 0.0)
                + &self.values[i0 + 1].coeffs[slot] * Complex64::new(frac, 0.0);
        }
        Some(out)
    }
}

/// How to invert a phasor trajectory back into a time signal.
#[derive(Debug, Clone)]
pub enum ReconstructionMode {
    /// Window series at the right edge plus the jump correction
    /// `(T/2) * dX_0/dt`; needs no future samples.
    Causal,
    /// Window series evaluated `offset` ahead: `sum_p X_p(t + offset) e^{iwpt}`
    /// with `0 < offset < T` strictly.
    Noncausal { offset: f64 },
    /// `2 * sum_p X_p(t) e^{iwpt} - x(t - T)`, bootstrapped from one seed
    /// window of the original signal.
    TwoSided { seed: SampledSignal },
}

/// Decomposes a sampled signal into its sliding-window Fourier coefficients.
///
/// The signal must carry at least one full window of history: phasors are
/// emitted starting at the (N+1)-th sample.
pub fn decompose(signal: &SampledSignal, config: &PhasorConfig) -> Result<PhasorTrajectory> {
    config.validate()?;
    let n = config.samples_per_period;
    let dt = config.step();
    let sig_step = signal.step();
    if signal.len() < 2 || (sig_step - dt).abs() > 1e-9 * dt {
        return Err(Error::config(format!(
            "signal step {sig_step} does not match configured grid step {dt}"
        )));
    }
    if signal.len() < n + 1 {
        return Err(Error::config(format!(
            "window underflow: need at least {} samples for one window, got {}",
            n + 1,
            signal.len()
        )));
    }
    let h = config.truncation;
    let dim = signal.dim;
    let scale = dt / config.period;

    // Unit rotations exp(-i w t_j), expanded to powers k = 0..h per sample.
    let rotations: Vec<Vec<Complex64>> = signal
        .times
        .iter()
        .map(|&t| {
            let w = Complex64::from_polar(1.0, -config.omega * t);
            let mut powers = Vec::with_capacity(h + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=h {
                powers.push(acc);
                acc *= w;
            }
            powers
        })
        .collect();

    let mut times = Vec::with_capacity(signal.len() - n);
    let mut values = Vec::with_capacity(signal.len() - n);
    for end in n..signal.len() {
        let mut pv = PhasorVector::zeros(dim, h);
        for j in (end - n)..=end {
            let weight = if j == end - n || j == end { 0.5 } else { 1.0 };
            let x = &signal.samples[j];
            for k in 0..=h {
                let rot = rotations[j][k];
                let wk = rot * (weight * scale);
                let term = x * wk;
                pv.coeffs[h + k] += &term;
                if k > 0 {
                    // exp(+i w k t) = conj of the stored power; x is reused as is
                    let wk_neg = rot.conj() * (weight * scale);
                    pv.coeffs[h - k] += x * wk_neg;
                }
            }
        }
        times.push(signal.times[end]);
        values.push(pv);
    }
    Ok(PhasorTrajectory {
        config: *config,
        times,
        values,
        real_signal: signal.real_signal,
    })
}

/// Inverts a phasor trajectory on the largest time range the mode permits.
pub fn reconstruct(traj: &PhasorTrajectory, mode: &ReconstructionMode) -> Result<SampledSignal> {
    if traj.is_empty() {
        return Err(Error::config("cannot reconstruct an empty trajectory"));
    }
    let omega = traj.config.omega;
    let period = traj.config.period;
    match mode {
        ReconstructionMode::Causal => {
            let derivs = traj.derivatives()?;
            let mut samples = Vec::with_capacity(traj.len());
            for (i, &t) in traj.times.iter().enumerate() {
                let series = traj.values[i].synth(omega, t);
                let jump = derivs[i].get(0) * Complex64::new(period / 2.0, 0.0);
                samples.push(series + jump);
            }
            finish_reconstruction(traj, traj.times.clone(), samples)
        }
        ReconstructionMode::Noncausal { offset } => {
            if !(*offset > 0.0 && *offset < period) {
                return Err(Error::config(format!(
                    "noncausal offset must lie strictly inside (0, T); got {offset}"
                )));
            }
            let mut times = Vec::new();
            let mut samples = Vec::new();
            let t_last = traj.times[traj.len() - 1];
            for &t in &traj.times {
                if t + offset > t_last + 1e-9 * traj.config.step() {
                    break;
                }
                let ahead = traj
                    .value_at_interpolated(t + offset)
                    .ok_or_else(|| Error::numerical("offset lookup fell outside the trajectory"))?;
                times.push(t);
                samples.push(ahead.synth(omega, t));
            }
            if times.is_empty() {
                return Err(Error::config(
                    "trajectory too short for the requested noncausal offset",
                ));
            }
            finish_reconstruction(traj, times, samples)
        }
        ReconstructionMode::TwoSided { seed } => {
            let dt = traj.config.step();
            let n = traj.config.samples_per_period;
            if (seed.step() - dt).abs() > 1e-9 * dt {
                return Err(Error::config(
                    "seed required: seed grid does not match trajectory",
                ));
            }
            // The seed must supply x on [t0 - T, t0 - dt].
            let want_first = traj.times[0] - period;
            let offset = (want_first - seed.times[0]) / dt;
            let base = offset.round() as i64;
            if (offset - base as f64).abs() > 1e-6 || base < 0 {
                return Err(Error::config(
                    "seed required: seed window is not aligned one period before the trajectory",
                ));
            }
            let base = base as usize;
            if seed.len() < base + n {
                return Err(Error::config(
                    "seed required: seed window shorter than one period",
                ));
            }
            let mut history: Vec<CVec> = (0..n).map(|j| seed.samples[base + j].clone()).collect();
            let mut samples = Vec::with_capacity(traj.len());
            for (i, &t) in traj.times.iter().enumerate() {
                let series = traj.values[i].synth(omega, t) * Complex64::new(2.0, 0.0);
                let prev = &history[i % n];
                let value = series - prev;
                history[i % n] = value.clone();
                samples.push(value);
            }
            finish_reconstruction(traj, traj.times.clone(), samples)
        }
    }
}

fn finish_reconstruction(
    traj: &PhasorTrajectory,
    times: Vec<f64>,
    samples: Vec<CVec>,
) -> Result<SampledSignal> {
    let mut sig = SampledSignal::from_complex(times, samples)?;
    sig.real_signal = traj.real_signal && sig.max_imag() <= 1e-8;
    Ok(sig)
}

/// Per-time consistency residual of the phase-locking condition
/// `dX_k/dt = dX_0/dt * exp(-i w k t)`, normalized by `1 + |dX_0/dt|`.
///
/// Vanishes (to discretization accuracy) exactly when the trajectory is the
/// decomposition of some time-domain signal at this truncation.
pub fn coincidence_residual(traj: &PhasorTrajectory) -> Result<Vec<f64>> {
    let derivs = traj.derivatives()?;
    let h = traj.config.truncation as i64;
    let omega = traj.config.omega;
    let mut out = Vec::with_capacity(traj.len());
    for (i, &t) in traj.times.iter().enumerate() {
        let d0 = derivs[i].get(0).clone();
        let d0_norm = d0.norm();
        let mut worst: f64 = 0.0;
        for k in -h..=h {
            if k == 0 {
                continue;
            }
            let expected = &d0 * Complex64::from_polar(1.0, -omega * k as f64 * t);
            let diff = (derivs[i].get(k) - expected).norm();
            worst = worst.max(diff);
        }
        out.push(worst / (1.0 + d0_norm));
    }
    Ok(out)
}

/// Largest coincidence residual along the trajectory.
pub fn max_coincidence_residual(traj: &PhasorTrajectory) -> Result<f64> {
    Ok(coincidence_residual(traj)?.into_iter().fold(0.0, f64::max))
}

/// Trailing-window mean square of a signal at the given end index, i.e.
/// `(1/T) * integral of |x|^2` by the same trapezoidal rule `decompose` uses.
pub fn window_mean_square(
    signal: &SampledSignal,
    end: usize,
    config: &PhasorConfig,
) -> Result<f64> {
    let n = config.samples_per_period;
    if end < n || end >= signal.len() {
        return Err(Error::config("window does not fit inside the signal"));
    }
    let scale = config.step() / config.period;
    let mut acc = 0.0;
    for j in (end - n)..=end {
        let weight = if j == end - n || j == end { 0.5 } else { 1.0 };
        acc += weight * scale * signal.samples[j].norm_squared();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn config(h: usize, n: usize) -> PhasorConfig {
        PhasorConfig::new(1.0, h, n).unwrap()
    }

    fn decompose_fn(f: impl Fn(f64) -> f64, cfg: &PhasorConfig, periods: f64) -> PhasorTrajectory {
        let sig = SampledSignal::from_scalar_fn(0.0, periods * cfg.period, cfg.step(), f).unwrap();
        decompose(&sig, cfg).unwrap()
    }

    #[test]
    fn constant_signal_has_only_dc() {
        let cfg = config(3, 64);
        let traj = decompose_fn(|_| 2.5, &cfg, 2.0);
        for v in &traj.values {
            assert!((v.get(0)[0] - Complex64::new(2.5, 0.0)).norm() < 1e-12);
            for k in 1..=3i64 {
                assert!(v.get(k)[0].norm() < 1e-12);
                assert!(v.get(-k)[0].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sine_has_analytic_first_harmonic() {
        let cfg = config(1, 512);
        let omega = cfg.omega;
        let traj = decompose_fn(|t| (omega * t).sin(), &cfg, 3.0);
        for v in &traj.values {
            assert!((v.get(1)[0] - Complex64::new(0.0, -0.5)).norm() < 1e-10);
            assert!((v.get(-1)[0] - Complex64::new(0.0, 0.5)).norm() < 1e-10);
            assert!(v.get(0)[0].norm() < 1e-10);
        }
    }

    #[test]
    fn square_wave_matches_high_resolution_quadrature() {
        // Independent oracle: brute-force trapezoid at N = 2^14 is the
        // reference for the odd-harmonic coefficients -2i/(k pi).
        let cfg = PhasorConfig::new(1.0, 5, 1 << 14).unwrap();
        let square = |t: f64| {
            let phase = t.rem_euclid(1.0);
            if phase < 0.5 {
                1.0
            } else {
                -1.0
            }
        };
        let traj = decompose_fn(square, &cfg, 1.0 + 1.0 / 64.0);
        let v = &traj.values[traj.len() / 2];
        for k in 1..=5i64 {
            let expected = if k % 2 == 1 {
                Complex64::new(0.0, -2.0 / (k as f64 * PI))
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!(
                (v.get(k)[0] - expected).norm() < 2e-3,
                "k={k}: got {} want {expected}",
                v.get(k)[0]
            );
        }
        assert!(v.conjugate_symmetry_defect() < 1e-12);
    }

    #[test]
    fn underflow_and_grid_mismatch_are_reported() {
        let cfg = config(2, 64);
        let short = SampledSignal::from_scalar_fn(0.0, 0.5, cfg.step(), |t| t).unwrap();
        let err = decompose(&short, &cfg).unwrap_err();
        assert!(err.message().contains("window underflow"), "{err}");

        let wrong = SampledSignal::from_scalar_fn(0.0, 2.0, cfg.step() * 2.0, |t| t).unwrap();
        assert!(decompose(&wrong, &cfg).is_err());
    }

    #[test]
    fn constant_trajectory_reconstructs_in_every_mode() {
        let cfg = config(2, 64);
        let traj = decompose_fn(|_| -1.25, &cfg, 3.0);
        let seed = SampledSignal::from_scalar_fn(0.0, 1.0, cfg.step(), |_| -1.25).unwrap();
        let modes = [
            ReconstructionMode::Causal,
            ReconstructionMode::Noncausal { offset: 0.37 },
            ReconstructionMode::TwoSided { seed },
        ];
        for mode in &modes {
            let rec = reconstruct(&traj, mode).unwrap();
            for s in &rec.samples {
                assert!((s[0].re + 1.25).abs() < 1e-10);
                assert!(s[0].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ramp_causal_jump_correction_recovers_identity() {
        // Closed form: the window series of x(t) = t sums to t - T/2 at the
        // right edge, and the jump term contributes exactly T/2.
        let cfg = PhasorConfig::new(1.0, 8, 512).unwrap();
        let traj = decompose_fn(|t| t, &cfg, 3.0);
        let rec = reconstruct(&traj, &ReconstructionMode::Causal).unwrap();
        let tol = 2.0 * cfg.period / cfg.samples_per_period as f64;
        for (i, &t) in rec.times.iter().enumerate() {
            assert!(
                (rec.samples[i][0].re - t).abs() < tol,
                "t={t}: {} vs {t}",
                rec.samples[i][0].re
            );
        }
        // the raw series alone lands on t - T/2 (midpoint of the wrap jump)
        let mid = traj.len() / 2;
        let series = traj.values[mid].synth(cfg.omega, traj.times[mid])[0].re;
        assert!((series - (traj.times[mid] - 0.5)).abs() < tol);
    }

    #[test]
    fn banded_roundtrip_is_tight() {
        let cfg = PhasorConfig::new(1.0, 5, 512).unwrap();
        let omega = cfg.omega;
        let f = |t: f64| (omega * t).sin() + 0.3 * (3.0 * omega * t).sin();
        let traj = decompose_fn(f, &cfg, 3.0);
        let rec = reconstruct(&traj, &ReconstructionMode::Causal).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &t) in rec.times.iter().enumerate() {
            let err = rec.samples[i][0].re - f(t);
            num += err * err;
            den += f(t) * f(t);
        }
        assert!(
            (num / den).sqrt() < 1e-6,
            "rel l2 err {}",
            (num / den).sqrt()
        );
    }

    #[test]
    fn noncausal_requires_offset_inside_window() {
        let cfg = config(1, 64);
        let traj = decompose_fn(|t| t.cos(), &cfg, 2.0);
        assert!(reconstruct(&traj, &ReconstructionMode::Noncausal { offset: 0.0 }).is_err());
        assert!(reconstruct(&traj, &ReconstructionMode::Noncausal { offset: 1.0 }).is_err());
        assert!(reconstruct(&traj, &ReconstructionMode::Noncausal { offset: 0.5 }).is_ok());
    }

    #[test]
    fn twosided_rejects_misaligned_seed() {
        let cfg = config(1, 64);
        let traj = decompose_fn(|t| (cfg.omega * t).sin(), &cfg, 2.0);
        let seed = SampledSignal::from_scalar_fn(0.31, 1.29, cfg.step(), |t| (cfg.omega * t).sin())
            .unwrap();
        let err = reconstruct(&traj, &ReconstructionMode::TwoSided { seed }).unwrap_err();
        assert!(err.message().contains("seed required"), "{err}");
    }

    #[test]
    fn reconstruction_modes_agree_on_smooth_banded_signal() {
        let cfg = PhasorConfig::new(1.0, 5, 512).unwrap();
        let omega = cfg.omega;
        let f = |t: f64| {
            0.7 + (omega * t).sin() + 0.4 * (2.0 * omega * t).cos() + 0.1 * (5.0 * omega * t).sin()
        };
        let sig = SampledSignal::from_scalar_fn(0.0, 3.0, cfg.step(), f).unwrap();
        let traj = decompose(&sig, &cfg).unwrap();
        let tol = 5.0 * cfg.period / cfg.samples_per_period as f64;

        let causal = reconstruct(&traj, &ReconstructionMode::Causal).unwrap();
        let noncausal = reconstruct(&traj, &ReconstructionMode::Noncausal { offset: 0.5 }).unwrap();
        let seed = SampledSignal::from_scalar_fn(0.0, 1.0, cfg.step(), f).unwrap();
        let twosided = reconstruct(&traj, &ReconstructionMode::TwoSided { seed }).unwrap();

        for (i, &t) in noncausal.times.iter().enumerate() {
            let c = causal.samples[i][0].re;
            let nc = noncausal.samples[i][0].re;
            assert!((c - nc).abs() < tol, "t={t}: causal {c} vs noncausal {nc}");
        }
        for (i, &t) in causal.times.iter().enumerate() {
            let c = causal.samples[i][0].re;
            let ts = twosided.samples[i][0].re;
            assert!((c - ts).abs() < tol, "t={t}: causal {c} vs twosided {ts}");
        }
    }

    #[test]
    fn coincidence_residual_flags_injected_drift() {
        let cfg = PhasorConfig::new(1.0, 3, 512).unwrap();
        let omega = cfg.omega;
        let mut traj = decompose_fn(|t| (omega * t).sin(), &cfg, 3.0);
        let clean = max_coincidence_residual(&traj).unwrap();
        assert!(clean < 5e-3, "clean residual {clean}");

        // exactly constant trajectory (equilibrium phasors): residual is zero
        let mut eq = PhasorVector::zeros(1, 3);
        eq.set(0, CVec::from_element(1, Complex64::new(1.0, 0.0)));
        eq.set_symmetric(2, CVec::from_element(1, Complex64::new(0.1, -0.2)));
        let flat = PhasorTrajectory {
            config: cfg,
            times: (0..64).map(|i| i as f64 * cfg.step()).collect(),
            values: vec![eq; 64],
            real_signal: true,
        };
        assert_eq!(max_coincidence_residual(&flat).unwrap(), 0.0);

        // drift on X_1 only
        let t0 = traj.times[0];
        for (i, v) in traj.values.iter_mut().enumerate() {
            let t = t0 + i as f64 * cfg.step();
            let drifted = v.get(1) + CVec::from_element(1, Complex64::new(0.1 * t, 0.0));
            v.set(1, drifted);
        }
        let dirty = max_coincidence_residual(&traj).unwrap();
        assert!(dirty > 0.05, "drift residual {dirty}");
    }

    #[test]
    fn parseval_inequality_and_banded_equality() {
        let cfg = PhasorConfig::new(1.0, 4, 512).unwrap();
        let omega = cfg.omega;
        // trig polynomial of degree <= h: equality
        let f = |t: f64| 0.3 + (omega * t).sin() - 0.2 * (4.0 * omega * t).cos();
        let sig = SampledSignal::from_scalar_fn(0.0, 2.0, cfg.step(), f).unwrap();
        let traj = decompose(&sig, &cfg).unwrap();
        let end = sig.len() - 1;
        let lhs = traj.values.last().unwrap().norm_sq();
        let rhs = window_mean_square(&sig, end, &cfg).unwrap();
        assert!((lhs - rhs).abs() <= 1e-6 * rhs, "parseval {lhs} vs {rhs}");

        // wideband signal: truncated stack can only lose energy
        let g = |t: f64| {
            if (7.0 * omega * t).sin() > 0.0 {
                1.0
            } else {
                -0.5
            }
        };
        let sig2 = SampledSignal::from_scalar_fn(0.0, 2.0, cfg.step(), g).unwrap();
        let traj2 = decompose(&sig2, &cfg).unwrap();
        let lhs2 = traj2.values.last().unwrap().norm_sq();
        let rhs2 = window_mean_square(&sig2, sig2.len() - 1, &cfg).unwrap();
        assert!(lhs2 <= rhs2 + 1e-9);
    }

    #[test]
    fn decompose_reconstruct_is_identity_on_consistent_trajectories() {
        let cfg = PhasorConfig::new(1.0, 5, 512).unwrap();
        let omega = cfg.omega;
        let f = |t: f64| 0.2 + (omega * t).sin() + 0.25 * (3.0 * omega * t).cos();
        let traj = decompose_fn(f, &cfg, 4.0);
        assert!(max_coincidence_residual(&traj).unwrap() < 5e-3);

        let rec = reconstruct(&traj, &ReconstructionMode::Causal).unwrap();
        let again = decompose(&rec, &cfg).unwrap();
        // compare on the overlap (the second decomposition loses one window)
        let skip = traj
            .times
            .iter()
            .position(|&t| (t - again.times[0]).abs() < 1e-9)
            .unwrap();
        let mut worst: f64 = 0.0;
        for (i, v) in again.values.iter().enumerate() {
            let reference = &traj.values[skip + i];
            let diff: f64 = v
                .coeffs
                .iter()
                .zip(reference.coeffs.iter())
                .map(|(a, b)| (a - b).norm_squared())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(diff / reference.norm().max(1e-12));
        }
        assert!(worst < 1e-4, "roundtrip defect {worst}");
    }

    #[test]
    fn mean_phasor_derivative_matches_window_difference() {
        let cfg = PhasorConfig::new(1.0, 2, 256).unwrap();
        let f = |t: f64| (0.8 * t).sin() + 0.1 * t; // deliberately not T-periodic
        let sig = SampledSignal::from_scalar_fn(0.0, 4.0, cfg.step(), f).unwrap();
        let traj = decompose(&sig, &cfg).unwrap();
        let derivs = traj.derivatives().unwrap();
        let tol = 2.0 * cfg.period / cfg.samples_per_period as f64;
        for (i, &t) in traj.times.iter().enumerate().skip(1).take(traj.len() - 2) {
            let expected = (f(t) - f(t - cfg.period)) / cfg.period;
            let got = derivs[i].get(0)[0].re;
            assert!((got - expected).abs() < tol, "t={t}: {got} vs {expected}");
        }
    }

    #[test]
    fn real_signals_yield_conjugate_symmetric_phasors_and_real_reconstruction() {
        let cfg = PhasorConfig::new(1.0, 4, 256).unwrap();
        let omega = cfg.omega;
        let traj = decompose_fn(|t| (omega * t).sin() * (1.0 + 0.1 * t), &cfg, 3.0);
        for v in &traj.values {
            assert!(v.conjugate_symmetry_defect() < 1e-12);
        }
        let rec = reconstruct(&traj, &ReconstructionMode::Noncausal { offset: 0.25 }).unwrap();
        assert!(rec.max_imag() < 1e-10);
    }
}
