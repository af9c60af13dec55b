//! Fixed-step time-domain simulation of bilinear affine plants under the
//! synthesized controllers, with periodic disturbance injection, internal
//! model bank dynamics, windowed Lyapunov monitoring, and steady-state
//! metrics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::config::PhasorConfig;
use crate::control::{
    eval_feedback, eval_forwarding, saturate, ForwardingController, HarmonicController,
};
use crate::error::{Error, Result};
use crate::model::BilinearAffineSystem;
use crate::phasor::{decompose, PhasorTrajectory, PhasorVector, SampledSignal};

type RMat = DMatrix<f64>;
type RVec = DVector<f64>;

/// Single-phase rectifier bridge constants.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectifierParams {
    /// Series resistance, ohms.
    pub r: f64,
    /// Series inductance, henries.
    pub l: f64,
    /// DC-link capacitance, farads.
    pub c: f64,
    /// Load resistance, ohms.
    pub r_load: f64,
    /// Line voltage amplitude, volts.
    pub v_in_amplitude: f64,
    /// Line frequency, hertz.
    pub frequency: f64,
}

impl RectifierParams {
    /// Reference bench values: R = 1 mOhm, L = 1 mH, C = 4 mF, R_L = 10 Ohm,
    /// 100 V line amplitude at 50 Hz.
    pub fn bench() -> Self {
        Self {
            r: 1e-3,
            l: 1e-3,
            c: 4e-3,
            r_load: 10.0,
            v_in_amplitude: 100.0,
            frequency: 50.0,
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }
}

/// Averaged rectifier model as a bilinear affine plant over the state
/// `(i, v_dc)` with control `s` in `[-1, 1]` and line voltage input.
pub fn build_rectifier(params: &RectifierParams) -> Result<BilinearAffineSystem> {
    for (name, v) in [
        ("r", params.r),
        ("l", params.l),
        ("c", params.c),
        ("r_load", params.r_load),
        ("v_in_amplitude", params.v_in_amplitude),
        ("frequency", params.frequency),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::config(format!(
                "rectifier parameter {name} must be positive"
            )));
        }
    }
    let a_ind = RMat::from_row_slice(
        2,
        2,
        &[
            -params.r / params.l,
            0.0,
            0.0,
            -1.0 / (params.r_load * params.c),
        ],
    );
    let a_dep = RMat::from_row_slice(2, 2, &[0.0, -1.0 / params.l, 1.0 / params.c, 0.0]);
    let b_ind = RMat::from_row_slice(2, 1, &[1.0 / params.l, 0.0]);
    let b_dep = RMat::zeros(2, 1);
    // v_in = amplitude * sin(w t) has the single phasor pair -+ i amp / 2
    let mut w = PhasorVector::zeros(1, 1);
    w.set_symmetric(
        1,
        DVector::from_element(1, Complex64::new(0.0, -params.v_in_amplitude / 2.0)),
    );
    let mut sys = BilinearAffineSystem::new(a_ind, a_dep, b_ind, b_dep, (-1.0, 1.0), w)?;
    // load-side current disturbances enter the voltage equation through 1/C
    sys.load_injection = RMat::from_row_slice(2, 1, &[0.0, 1.0 / params.c]);
    Ok(sys)
}

/// Which physical channel a periodic disturbance enters through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DisturbanceChannel {
    /// Added to the exogenous input (line voltage).
    InputVoltage,
    /// Added through the plant's load injection column.
    LoadCurrent,
}

/// One sinusoidal component `sin_amp * sin(k w t) + cos_amp * cos(k w t)`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicTerm {
    pub harmonic: u32,
    #[serde(default)]
    pub sin_amp: f64,
    #[serde(default)]
    pub cos_amp: f64,
}

/// Periodic disturbance switched on at a start time.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub start_time: f64,
    pub channel: DisturbanceChannel,
    pub terms: Vec<HarmonicTerm>,
}

impl DisturbanceSpec {
    fn value(&self, t: f64, omega: f64) -> f64 {
        if t < self.start_time {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|term| {
                let phase = term.harmonic as f64 * omega * t;
                term.sin_amp * phase.sin() + term.cos_amp * phase.cos()
            })
            .sum()
    }
}

/// Simulation request.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub duration: f64,
    pub steps_per_period: usize,
    pub initial_state: RVec,
    /// Initial internal-model states; zeros when absent.
    pub initial_bank: Option<RVec>,
    pub disturbances: Vec<DisturbanceSpec>,
    pub record_phasors: bool,
}

impl Scenario {
    pub fn startup(duration: f64, steps_per_period: usize, dim_state: usize) -> Self {
        Self {
            duration,
            steps_per_period,
            initial_state: RVec::zeros(dim_state),
            initial_bank: None,
            disturbances: Vec::new(),
            record_phasors: false,
        }
    }
}

/// Control law driving a simulation.
#[derive(Debug, Clone)]
pub enum ControllerKind {
    /// Plays back a fixed T-periodic control; optionally carries the
    /// matching equilibrium for error monitoring.
    OpenLoop {
        config: PhasorConfig,
        s_e: PhasorVector,
        x_e: Option<PhasorVector>,
    },
    Feedback(HarmonicController),
    Forwarding(ForwardingController),
}

impl ControllerKind {
    pub fn config(&self) -> &PhasorConfig {
        match self {
            ControllerKind::OpenLoop { config, .. } => config,
            ControllerKind::Feedback(c) => &c.config,
            ControllerKind::Forwarding(c) => &c.base.config,
        }
    }

    pub fn bank_dim(&self) -> usize {
        match self {
            ControllerKind::Forwarding(c) => c.bank_dim(),
            _ => 0,
        }
    }

    fn s_e_at(&self, t: f64) -> f64 {
        match self {
            ControllerKind::OpenLoop { config, s_e, .. } => s_e.synth_real(config.omega, t)[0],
            ControllerKind::Feedback(c) => c.s_e_at(t),
            ControllerKind::Forwarding(c) => c.base.s_e_at(t),
        }
    }

    fn x_e_at(&self, t: f64) -> Option<RVec> {
        match self {
            ControllerKind::OpenLoop { config, x_e, .. } => {
                x_e.as_ref().map(|p| p.synth_real(config.omega, t))
            }
            ControllerKind::Feedback(c) => Some(c.x_e_at(t)),
            ControllerKind::Forwarding(c) => Some(c.base.x_e_at(t)),
        }
    }

    fn eval(&self, t: f64, x: &RVec, z: &RVec) -> f64 {
        match self {
            ControllerKind::OpenLoop { .. } => self.s_e_at(t),
            ControllerKind::Feedback(c) => eval_feedback(c, t, x),
            ControllerKind::Forwarding(c) => eval_forwarding(c, t, x, z),
        }
    }

    /// Instantaneous integrand of the windowed Lyapunov functional.
    fn lyapunov_integrand(&self, t: f64, x: &RVec, z: &RVec) -> Option<f64> {
        let xt = x - self.x_e_at(t)?;
        match self {
            ControllerKind::OpenLoop { .. } => Some(xt.norm_squared()),
            ControllerKind::Feedback(c) => Some((xt.transpose() * c.p_at(t) * &xt)[(0, 0)]),
            ControllerKind::Forwarding(c) => {
                let quad = (xt.transpose() * c.base.p_at(t) * &xt)[(0, 0)];
                let offset = z - c.m_at(t) * &xt;
                Some(quad + offset.norm_squared())
            }
        }
    }
}

/// Simulation output on the integrator grid.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub period: f64,
    pub steps_per_period: usize,
    pub times: Vec<f64>,
    pub states: Vec<RVec>,
    pub s_pre: Vec<f64>,
    pub s_post: Vec<f64>,
    pub bank: Vec<RVec>,
    /// First exogenous input channel including disturbances.
    pub w: Vec<f64>,
    /// Windowed Lyapunov functional; `NaN` before the first full window,
    /// absent for open-loop runs without an equilibrium reference.
    pub lyapunov: Option<Vec<f64>>,
    /// Sliding phasors of the state components, when requested.
    pub phasors: Option<PhasorTrajectory>,
}

impl SimTrace {
    pub fn dim_state(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    /// Largest per-step increase of the windowed functional after the first
    /// window, normalized by `1 + |v|`; `None` when no functional exists.
    pub fn lyapunov_max_step_increase(&self) -> Option<f64> {
        let v = self.lyapunov.as_ref()?;
        let mut worst = f64::NEG_INFINITY;
        let mut seen = false;
        for i in 1..v.len() {
            if v[i - 1].is_nan() || v[i].is_nan() {
                continue;
            }
            seen = true;
            worst = worst.max((v[i] - v[i - 1]) / (1.0 + v[i - 1].abs()));
        }
        seen.then_some(worst)
    }

    /// Fraction of steps where saturation was active.
    pub fn saturation_fraction(&self) -> f64 {
        if self.s_pre.is_empty() {
            return 0.0;
        }
        let clipped = self
            .s_pre
            .iter()
            .zip(self.s_post.iter())
            .filter(|(a, b)| (*a - *b).abs() > 1e-12)
            .count();
        clipped as f64 / self.s_pre.len() as f64
    }
}

/// Classical fixed-step RK4 integration of the closed loop; the control is
/// evaluated (and saturated) inside every stage.
pub fn simulate(
    sys: &BilinearAffineSystem,
    controller: &ControllerKind,
    scenario: &Scenario,
) -> Result<SimTrace> {
    let config = controller.config();
    let period = config.period;
    if scenario.duration < 3.0 * period {
        return Err(Error::config("scenario must cover at least 3 periods"));
    }
    if scenario.steps_per_period < config.samples_per_period {
        return Err(Error::config(format!(
            "steps_per_period {} is below the monitoring grid {}",
            scenario.steps_per_period, config.samples_per_period
        )));
    }
    if scenario.initial_state.len() != sys.dim_state() {
        return Err(Error::config("initial state dimension mismatch"));
    }
    let bank_dim = controller.bank_dim();
    let z0 = match &scenario.initial_bank {
        Some(z) => {
            if z.len() != bank_dim {
                return Err(Error::config("initial bank dimension mismatch"));
            }
            z.clone()
        }
        None => RVec::zeros(bank_dim),
    };

    let dt = period / scenario.steps_per_period as f64;
    let steps = (scenario.duration / dt).round() as usize;
    let omega = TAU / period;
    let n = sys.dim_state();

    let w_nominal = |t: f64| -> RVec {
        let mut w = sys.w_phasors.synth_real(omega, t);
        for d in &scenario.disturbances {
            if d.channel == DisturbanceChannel::InputVoltage {
                w[0] += d.value(t, omega);
            }
        }
        w
    };
    let load_dist = |t: f64| -> f64 {
        scenario
            .disturbances
            .iter()
            .filter(|d| d.channel == DisturbanceChannel::LoadCurrent)
            .map(|d| d.value(t, omega))
            .sum()
    };

    // stage derivative of the combined (x, z) state; also reports the
    // stage control for recording
    let stage = |t: f64, x: &RVec, z: &RVec| -> Result<(RVec, RVec, f64, f64)> {
        let s_raw = controller.eval(t, x, z);
        let s_e = controller.s_e_at(t);
        let s = match controller {
            ControllerKind::OpenLoop { .. } => {
                s_raw.clamp(sys.control_bounds.0, sys.control_bounds.1)
            }
            _ => saturate(s_raw, s_e, sys.control_bounds)?.value,
        };
        let w = w_nominal(t);
        let mut dx =
            &sys.a_ind * x + (&sys.a_dep * x) * s + &sys.b_ind * &w + (&sys.b_dep * &w) * s;
        let ld = load_dist(t);
        if ld != 0.0 {
            dx += &sys.load_injection * ld;
        }
        let dz = if bank_dim > 0 {
            match controller {
                ControllerKind::Forwarding(c) => {
                    let xt = x - c.base.x_e_at(t);
                    c.o_at(t) * z + c.lc_at(t) * xt
                }
                _ => RVec::zeros(0),
            }
        } else {
            RVec::zeros(0)
        };
        Ok((dx, dz, s_raw, s))
    };

    let mut x = scenario.initial_state.clone();
    let mut z = z0;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut s_pre = Vec::with_capacity(steps + 1);
    let mut s_post = Vec::with_capacity(steps + 1);
    let mut bank = Vec::with_capacity(steps + 1);
    let mut w_trace = Vec::with_capacity(steps + 1);
    let mut integrand = Vec::with_capacity(steps + 1);

    for i in 0..=steps {
        let t = i as f64 * dt;
        let (dx0, dz0, s_raw, s_val) = stage(t, &x, &z)?;
        times.push(t);
        states.push(x.clone());
        s_pre.push(s_raw);
        s_post.push(s_val);
        bank.push(z.clone());
        w_trace.push(w_nominal(t)[0]);
        if let Some(l) = controller.lyapunov_integrand(t, &x, &z) {
            integrand.push(l);
        }

        if i == steps {
            break;
        }
        let half = 0.5 * dt;
        let (k1x, k1z) = (dx0, dz0);
        let (k2x, k2z, _, _) = stage(t + half, &(&x + &k1x * half), &(&z + &k1z * half))?;
        let (k3x, k3z, _, _) = stage(t + half, &(&x + &k2x * half), &(&z + &k2z * half))?;
        let (k4x, k4z, _, _) = stage(t + dt, &(&x + &k3x * dt), &(&z + &k3z * dt))?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
        if bank_dim > 0 {
            z += (k1z + k2z * 2.0 + k3z * 2.0 + k4z) * (dt / 6.0);
        }
        if x.iter().any(|v| !v.is_finite()) || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "divergence: non-finite state at t = {:.6}; last finite time {:.6}",
                t + dt,
                t
            )));
        }
    }

    let lyapunov = if integrand.len() == times.len() {
        Some(windowed_average(
            &integrand,
            dt,
            scenario.steps_per_period,
            period,
        ))
    } else {
        None
    };

    let phasors = if scenario.record_phasors {
        Some(state_phasors(
            &times,
            &states,
            n,
            config,
            scenario.steps_per_period,
        )?)
    } else {
        None
    };

    Ok(SimTrace {
        period,
        steps_per_period: scenario.steps_per_period,
        times,
        states,
        s_pre,
        s_post,
        bank,
        w: w_trace,
        lyapunov,
        phasors,
    })
}

/// Trailing-window average of an integrand sampled on the trace grid;
/// `NaN` until one full window is available.
fn windowed_average(values: &[f64], dt: f64, steps_per_period: usize, period: f64) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    prefix.push(0.0);
    for i in 1..values.len() {
        acc += 0.5 * dt * (values[i - 1] + values[i]);
        prefix.push(acc);
    }
    (0..values.len())
        .map(|i| {
            if i < steps_per_period {
                f64::NAN
            } else {
                (prefix[i] - prefix[i - steps_per_period]) / period
            }
        })
        .collect()
}

/// Sliding phasors of the state components on the monitoring grid, which is
/// a decimation of the integrator grid.
fn state_phasors(
    times: &[f64],
    states: &[RVec],
    dim: usize,
    config: &PhasorConfig,
    steps_per_period: usize,
) -> Result<PhasorTrajectory> {
    if steps_per_period % config.samples_per_period != 0 {
        return Err(Error::config(format!(
            "steps_per_period {} must be a multiple of the monitoring grid {}",
            steps_per_period, config.samples_per_period
        )));
    }
    let stride = steps_per_period / config.samples_per_period;
    let sel_times: Vec<f64> = times.iter().copied().step_by(stride).collect();
    let sel_states: Vec<RVec> = states.iter().cloned().step_by(stride).collect();
    let signal = SampledSignal::from_real(sel_times, sel_states)?;
    let _ = dim;
    decompose(&signal, config)
}

/// Windowed Fourier coefficient of one scalar series over the final window
/// of a trace.
fn final_window_coefficient(
    times: &[f64],
    series: &[f64],
    k: i64,
    period: f64,
    window: usize,
) -> Complex64 {
    let m = times.len();
    let start = m - 1 - window;
    let omega = TAU / period;
    let dt = period / window as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=window {
        let idx = start + j;
        let weight = if j == 0 || j == window { 0.5 } else { 1.0 };
        acc += Complex64::from_polar(
            weight * dt / period * series[idx],
            -omega * k as f64 * times[idx],
        );
    }
    acc
}

/// Steady-state metrics extracted from a trace.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Metrics {
    pub v_dc_mean: f64,
    /// `|I_k|` for `k = 0..=h` over the final window.
    pub current_harmonics: Vec<f64>,
    /// `|V_k|` for `k = 0..=h` over the final window.
    pub voltage_harmonics: Vec<f64>,
    /// Complex first-harmonic phasors for downstream checks.
    pub current_first_harmonic: (f64, f64),
    pub input_first_harmonic: (f64, f64),
    /// `arg(I_1) - arg(W_1)` wrapped to `(-pi, pi]`, radians.
    pub current_phase_error: f64,
    /// First time after which the windowed Lyapunov functional stays inside
    /// the settle band around its final value.
    pub settling_time: Option<f64>,
    /// Largest normalized per-step increase of the functional.
    pub lyapunov_max_step_increase: Option<f64>,
    pub saturation_fraction: f64,
}

/// Metric extraction request.
#[derive(Debug, Clone, Copy)]
pub struct MetricsRequest {
    pub current_state: usize,
    pub voltage_state: usize,
    /// Plateau band as a fraction of the functional's swing.
    pub settle_band: f64,
    /// Harmonic order reported in the content vectors.
    pub truncation: usize,
}

impl MetricsRequest {
    pub fn rectifier(truncation: usize) -> Self {
        Self {
            current_state: 0,
            voltage_state: 1,
            settle_band: 0.01,
            truncation,
        }
    }
}

/// Computes steady-state metrics over the final window of a trace.
///
/// The trace must cover at least two periods beyond the first window so that
/// the final window sits past the initial transient of the monitors.
pub fn metrics(trace: &SimTrace, request: &MetricsRequest) -> Result<Metrics> {
    let window = trace.steps_per_period;
    if trace.times.len() < 3 * window + 1 {
        return Err(Error::config(
            "trace too short: need at least 3 periods for metrics",
        ));
    }
    let n = trace.dim_state();
    if request.current_state >= n || request.voltage_state >= n {
        return Err(Error::config(
            "metric state indices exceed the trace dimension",
        ));
    }
    let current: Vec<f64> = trace
        .states
        .iter()
        .map(|s| s[request.current_state])
        .collect();
    let voltage: Vec<f64> = trace
        .states
        .iter()
        .map(|s| s[request.voltage_state])
        .collect();

    let coeff = |series: &[f64], k: i64| {
        final_window_coefficient(&trace.times, series, k, trace.period, window)
    };
    let v_dc_mean = coeff(&voltage, 0).re;
    let current_harmonics: Vec<f64> = (0..=request.truncation as i64)
        .map(|k| coeff(&current, k).norm())
        .collect();
    let voltage_harmonics: Vec<f64> = (0..=request.truncation as i64)
        .map(|k| coeff(&voltage, k).norm())
        .collect();
    let i1 = coeff(&current, 1);
    let w1 = coeff(&trace.w, 1);
    let mut phase = i1.arg() - w1.arg();
    while phase > std::f64::consts::PI {
        phase -= TAU;
    }
    while phase <= -std::f64::consts::PI {
        phase += TAU;
    }

    let settling_time = trace.lyapunov.as_ref().and_then(|v| {
        let valid: Vec<(usize, f64)> = v
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_nan())
            .map(|(i, &x)| (i, x))
            .collect();
        let (_, v_final) = *valid.last()?;
        let peak = valid
            .iter()
            .map(|&(_, x)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        // plateau band: a fraction of the decay swing (or of the final value
        // itself when it dominates), floored against numerical noise
        let band = (request.settle_band * v_final.abs().max(peak - v_final))
            .max(1e-9 * (1.0 + peak.abs()));
        let mut settled_from = None;
        for &(i, x) in &valid {
            if (x - v_final).abs() <= band {
                settled_from.get_or_insert(i);
            } else {
                settled_from = None;
            }
        }
        settled_from.map(|i| {
            // settled before monitoring even produced its first window
            if i == valid[0].0 {
                0.0
            } else {
                trace.times[i]
            }
        })
    });

    Ok(Metrics {
        v_dc_mean,
        current_harmonics,
        voltage_harmonics,
        current_first_harmonic: (i1.re, i1.im),
        input_first_harmonic: (w1.re, w1.im),
        current_phase_error: phase,
        settling_time,
        lyapunov_max_step_increase: trace.lyapunov_max_step_increase(),
        saturation_fraction: trace.saturation_fraction(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectifier_matrices_match_bench_arithmetic() {
        let sys = build_rectifier(&RectifierParams::bench()).unwrap();
        assert!((sys.a_ind[(0, 0)] + 1.0).abs() < 1e-12);
        assert!((sys.a_ind[(1, 1)] + 25.0).abs() < 1e-12);
        assert!((sys.a_dep[(0, 1)] + 1000.0).abs() < 1e-12);
        assert!((sys.a_dep[(1, 0)] - 250.0).abs() < 1e-12);
        assert!((sys.b_ind[(0, 0)] - 1000.0).abs() < 1e-12);
        assert_eq!(sys.b_dep.norm(), 0.0);
        assert_eq!(sys.control_bounds, (-1.0, 1.0));
        // line phasor of 100 sin(w t)
        let w1 = sys.w_phasors.get(1)[0];
        assert!((w1 - Complex64::new(0.0, -50.0)).norm() < 1e-12);
        assert!((sys.load_injection[(1, 0)] - 250.0).abs() < 1e-12);
    }

    #[test]
    fn unforced_undriven_plant_dissipates_energy() {
        let params = RectifierParams::bench();
        let mut sys = build_rectifier(&params).unwrap();
        sys.w_phasors = PhasorVector::zeros(1, 1); // switch the line off
        let config = PhasorConfig::new(params.period(), 2, 64).unwrap();
        let controller = ControllerKind::OpenLoop {
            config,
            s_e: PhasorVector::zeros(1, 2),
            x_e: None,
        };
        let mut scenario = Scenario::startup(5.0 * params.period(), 256, 2);
        scenario.initial_state = RVec::from_row_slice(&[20.0, 150.0]);
        let trace = simulate(&sys, &controller, &scenario).unwrap();
        let energy = |s: &RVec| 0.5 * params.l * s[0] * s[0] + 0.5 * params.c * s[1] * s[1];
        let mut prev = f64::INFINITY;
        for s in &trace.states {
            let e = energy(s);
            assert!(e <= prev + 1e-12, "energy grew: {e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn step_halving_changes_little() {
        let params = RectifierParams::bench();
        let sys = build_rectifier(&params).unwrap();
        let config = PhasorConfig::new(params.period(), 2, 64).unwrap();
        let mut s_e = PhasorVector::zeros(1, 2);
        s_e.set_symmetric(1, DVector::from_element(1, Complex64::new(0.0, -0.35)));
        let controller = ControllerKind::OpenLoop {
            config,
            s_e,
            x_e: None,
        };
        let run = |spp: usize| {
            let scenario = Scenario::startup(4.0 * params.period(), spp, 2);
            simulate(&sys, &controller, &scenario)
                .unwrap()
                .states
                .last()
                .unwrap()
                .clone()
        };
        let coarse = run(512);
        let fine = run(1024);
        let rel = (&coarse - &fine).norm() / fine.norm();
        assert!(rel < 1e-6, "step-halving relative change {rel}");
    }

    #[test]
    fn divergence_is_reported_with_last_finite_time() {
        let params = RectifierParams::bench();
        let mut sys = build_rectifier(&params).unwrap();
        // flip the sign of the load to make the plant unstable
        sys.a_ind[(1, 1)] = 60.0;
        sys.a_ind[(0, 0)] = 40.0;
        let config = PhasorConfig::new(params.period(), 1, 64).unwrap();
        let controller = ControllerKind::OpenLoop {
            config,
            s_e: PhasorVector::zeros(1, 1),
            x_e: None,
        };
        let mut scenario = Scenario::startup(40.0 * params.period(), 128, 2);
        scenario.initial_state = RVec::from_row_slice(&[1e300, 1e300]);
        let err = simulate(&sys, &controller, &scenario).unwrap_err();
        assert!(err.message().contains("divergence"), "{err}");
    }

    #[test]
    fn synthetic_sine_trace_metrics() {
        let params = RectifierParams::bench();
        let period = params.period();
        let omega = TAU / period;
        let spp = 256;
        let dt = period / spp as f64;
        let steps = 5 * spp;
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        let states: Vec<RVec> = times
            .iter()
            .map(|&t| RVec::from_row_slice(&[(omega * t).sin(), 200.0]))
            .collect();
        let w: Vec<f64> = times.iter().map(|&t| 100.0 * (omega * t).sin()).collect();
        let m = times.len();
        let trace = SimTrace {
            period,
            steps_per_period: spp,
            times,
            states,
            s_pre: vec![0.0; m],
            s_post: vec![0.0; m],
            bank: vec![RVec::zeros(0); m],
            w,
            lyapunov: None,
            phasors: None,
        };
        let metrics = metrics(&trace, &MetricsRequest::rectifier(3)).unwrap();
        assert!((metrics.v_dc_mean - 200.0).abs() < 1e-9);
        assert!(metrics.current_phase_error.abs() < 1e-9);
        assert!((metrics.current_harmonics[1] - 0.5).abs() < 1e-9);
        assert!(metrics.current_harmonics[2] < 1e-9);
        assert!(metrics.current_harmonics[3] < 1e-9);
        assert_eq!(metrics.saturation_fraction, 0.0);
    }

    #[test]
    fn stationary_playback_settles_immediately() {
        let params = RectifierParams::bench();
        let sys = build_rectifier(&params).unwrap();
        let config = PhasorConfig::new(params.period(), 1, 64).unwrap();
        // s = 0 steady state: pure L-R circuit driven by the line
        let s_e = PhasorVector::zeros(1, 1);
        let mut x_e = PhasorVector::zeros(2, 1);
        let denom = Complex64::new(params.r, omega_l(&params));
        x_e.set_symmetric(
            1,
            DVector::from_iterator(
                2,
                [Complex64::new(0.0, -50.0) / denom, Complex64::new(0.0, 0.0)],
            ),
        );
        let controller = ControllerKind::OpenLoop {
            config,
            s_e,
            x_e: Some(x_e.clone()),
        };
        let mut scenario = Scenario::startup(6.0 * params.period(), 256, 2);
        scenario.initial_state = x_e.synth_real(TAU / params.period(), 0.0);
        let trace = simulate(&sys, &controller, &scenario).unwrap();
        let metrics = metrics(&trace, &MetricsRequest::rectifier(1)).unwrap();
        // playback of an equilibrium: the functional plateaus from the start
        let settle = metrics.settling_time.unwrap();
        assert_eq!(settle, 0.0, "stationary playback settled at {settle}");
        assert!(metrics.lyapunov_max_step_increase.unwrap() < 1e-9);
    }

    fn omega_l(params: &RectifierParams) -> f64 {
        TAU / params.period() * params.l
    }
}
