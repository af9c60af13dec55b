//! Shared fixtures for the integration and acceptance suites: the bench
//! rectifier pipeline at its reference tuning.
#![allow(dead_code)] // each test binary uses a different slice of this module

use nalgebra::DMatrix;
use phasor_core::config::PhasorConfig;
use phasor_core::control::{
    integrator_action, oscillator_action, synthesize_feedback, synthesize_forwarding,
    weighted_integrator_action, BankBlockSpec, ForwardingController, HarmonicController,
};
use phasor_core::equilibrium::{optimize_equilibrium, EquilibriumResult, EquilibriumSpec};
use phasor_core::model::{harmonic_bilinear, BilinearAffineSystem, HarmonicBilinearModel};
use phasor_core::sim::{
    build_rectifier, DisturbanceChannel, DisturbanceSpec, HarmonicTerm, RectifierParams,
};
use phasor_core::toeplitz::PeriodicMatrixSamples;

pub type RMat = DMatrix<f64>;

pub struct Bench {
    pub params: RectifierParams,
    pub sys: BilinearAffineSystem,
    pub config: PhasorConfig,
    pub model: HarmonicBilinearModel,
    pub eq: EquilibriumResult,
    pub base: HarmonicController,
}

/// Builds the reference pipeline: bench rectifier, truncation 5 on a 512
/// point grid, weights [1e3, 1, 1e3, 1] toward 200 V, Q = diag(1, 1e-2),
/// gamma = 1e-4.
pub fn bench_pipeline() -> Bench {
    let params = RectifierParams::bench();
    let sys = build_rectifier(&params).expect("bench parameters are valid");
    let config = PhasorConfig::new(params.period(), 5, 512).expect("valid window");
    let model = harmonic_bilinear(&sys, &config).expect("model assembly");
    let spec = EquilibriumSpec::new([1e3, 1.0, 1e3, 1.0], 200.0, 5);
    let eq = optimize_equilibrium(&model, &spec, &model.w).expect("equilibrium search");
    let q = PeriodicMatrixSamples::constant(
        &config,
        RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-2]),
    )
    .expect("Q samples");
    let gamma = PeriodicMatrixSamples::constant(&config, RMat::from_element(1, 1, 1e-4))
        .expect("gamma samples");
    let base = synthesize_feedback(&model, &eq, &q, &gamma).expect("base synthesis");
    Bench {
        params,
        sys,
        config,
        model,
        eq,
        base,
    }
}

/// Internal-model bank with integral actions on the DC voltage and the
/// in-phase current component.
pub fn two_action_bank(config: &PhasorConfig, gamma1: f64, gamma2: f64) -> Vec<BankBlockSpec> {
    let omega = config.omega;
    vec![
        integrator_action(config, 2, 1, gamma1).expect("voltage integrator"),
        weighted_integrator_action(config, 2, 0, move |t| gamma2 * (omega * t).cos())
            .expect("phase integrator"),
    ]
}

/// Adds oscillators pinning the 3rd and 5th current harmonics.
pub fn four_action_bank(
    config: &PhasorConfig,
    gamma1: f64,
    gamma2: f64,
    gamma3: f64,
    gamma4: f64,
) -> Vec<BankBlockSpec> {
    let mut bank = two_action_bank(config, gamma1, gamma2);
    bank.push(oscillator_action(config, 2, 0, 3, gamma3).expect("3rd harmonic oscillator"));
    bank.push(oscillator_action(config, 2, 0, 5, gamma4).expect("5th harmonic oscillator"));
    bank
}

pub fn two_action_controller(bench: &Bench) -> ForwardingController {
    synthesize_forwarding(
        bench.base.clone(),
        &two_action_bank(&bench.config, 200.0, 100.0),
        1e-7,
        2e-9,
        &bench.model,
    )
    .expect("two-action synthesis")
}

pub fn four_action_controller(bench: &Bench) -> ForwardingController {
    synthesize_forwarding(
        bench.base.clone(),
        &four_action_bank(&bench.config, 400.0, 100.0, 1000.0, 2000.0),
        4e-8,
        4e-10,
        &bench.model,
    )
    .expect("four-action synthesis")
}

/// The periodic disturbances of the rejection experiment: line harmonics
/// 1/3/5 and load-current harmonics 2/4, switched on at 0.04 s.
pub fn bench_disturbances() -> Vec<DisturbanceSpec> {
    vec![
        DisturbanceSpec {
            start_time: 0.04,
            channel: DisturbanceChannel::InputVoltage,
            terms: vec![
                HarmonicTerm {
                    harmonic: 1,
                    sin_amp: 10.0,
                    cos_amp: 0.0,
                },
                HarmonicTerm {
                    harmonic: 3,
                    sin_amp: 20.0,
                    cos_amp: 0.0,
                },
                HarmonicTerm {
                    harmonic: 5,
                    sin_amp: 20.0,
                    cos_amp: 0.0,
                },
            ],
        },
        DisturbanceSpec {
            start_time: 0.04,
            channel: DisturbanceChannel::LoadCurrent,
            terms: vec![
                HarmonicTerm {
                    harmonic: 2,
                    sin_amp: 0.0,
                    cos_amp: 20.0,
                },
                HarmonicTerm {
                    harmonic: 4,
                    sin_amp: -20.0,
                    cos_amp: 0.0,
                },
            ],
        },
    ]
}

/// Final-window phasor of one recorded state component.
pub fn final_window_phasor(
    trace: &phasor_core::sim::SimTrace,
    state: usize,
    k: i64,
) -> num_complex::Complex64 {
    use num_complex::Complex64;
    use std::f64::consts::TAU;
    let window = trace.steps_per_period;
    let start = trace.times.len() - 1 - window;
    let omega = TAU / trace.period;
    let dt = trace.period / window as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=window {
        let idx = start + j;
        let weight = if j == 0 || j == window { 0.5 } else { 1.0 };
        acc += Complex64::from_polar(
            weight * dt / trace.period * trace.states[idx][state],
            -omega * k as f64 * trace.times[idx],
        );
    }
    acc
}
