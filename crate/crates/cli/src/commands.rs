//! Command execution: wiring the pipeline stages onto files.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::json;

use phasor_core::config::PhasorConfig;
use phasor_core::control::{
    integrator_action, oscillator_action, synthesize_feedback, synthesize_forwarding,
    weighted_integrator_action, BankBlockSpec,
};
use phasor_core::equilibrium::{
    equilibrium_residual, optimize_equilibrium, EquilibriumResult, EquilibriumSpec,
};
use phasor_core::error::{Error, Result};
use phasor_core::io;
use phasor_core::model::harmonic_bilinear;
use phasor_core::phasor::{decompose, reconstruct, PhasorVector, ReconstructionMode};
use phasor_core::sim::{
    build_rectifier, metrics, simulate, ControllerKind, MetricsRequest, Scenario,
};
use phasor_core::solvers::{solve_lyapunov, solve_riccati, solve_sylvester, RiccatiOptions};
use phasor_core::toeplitz::{n_operator, retoeplitzify, toeplitz_of, ToeplitzOperator};

use crate::config::*;

type RVec = DVector<f64>;
type RMat = DMatrix<f64>;

/// Output-directory override: relative output paths land under it.
pub struct OutDir(pub Option<PathBuf>);

impl OutDir {
    fn resolve(&self, path: &Path) -> PathBuf {
        let resolved = match (&self.0, path.is_absolute()) {
            (Some(dir), false) => dir.join(path),
            _ => path.to_path_buf(),
        };
        if let Some(parent) = resolved.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).ok();
            }
        }
        resolved
    }
}

pub fn run_decompose(cfg: &DecomposeConfig, out: &OutDir) -> Result<String> {
    let window = PhasorConfig::new(cfg.period, cfg.truncation, cfg.samples_per_period)?;
    let signal = io::read_signal_csv(&cfg.signal_csv)?;
    let traj = decompose(&signal, &window)?;
    let defect = traj
        .values
        .iter()
        .map(|v| v.conjugate_symmetry_defect())
        .fold(0.0f64, f64::max);
    io::write_json_atomic(&out.resolve(&cfg.output), &io::trajectory_to_json(&traj))?;
    Ok(format!(
        "decompose: emitted {} phasor samples (h = {}, N = {}), conjugate symmetry defect {defect:.3e}",
        traj.len(),
        window.truncation,
        window.samples_per_period
    ))
}

pub fn run_reconstruct(cfg: &ReconstructConfig, out: &OutDir) -> Result<String> {
    let traj = io::trajectory_from_json(&io::read_json(&cfg.trajectory_json)?)?;
    let mode = match cfg.mode.as_str() {
        "causal" => ReconstructionMode::Causal,
        "noncausal" => ReconstructionMode::Noncausal {
            offset: cfg
                .offset
                .ok_or_else(|| Error::config("noncausal mode needs an offset"))?,
        },
        "twosided" => {
            let seed_path = cfg
                .seed_csv
                .as_ref()
                .ok_or_else(|| Error::config("seed required: twosided mode needs seed_csv"))?;
            ReconstructionMode::TwoSided {
                seed: io::read_signal_csv(seed_path)?,
            }
        }
        other => {
            return Err(Error::config(format!(
                "unknown reconstruction mode {other:?} (causal | noncausal | twosided)"
            )))
        }
    };
    let signal = reconstruct(&traj, &mode)?;
    io::write_signal_csv(&out.resolve(&cfg.output), &signal)?;
    Ok(format!(
        "reconstruct: {} samples over [{:.6}, {:.6}] s, imaginary residue {:.3e}",
        signal.len(),
        signal.times.first().unwrap(),
        signal.times.last().unwrap(),
        signal.max_imag()
    ))
}

pub fn run_lyap(cfg: &LyapConfig, out: &OutDir) -> Result<String> {
    let window = PhasorConfig::new(cfg.period, cfg.truncation, cfg.samples_per_period)?;
    let a = toeplitz_of(&cfg.a.sample(&window)?, &window)?;
    if a.block_rows != a.block_cols {
        return Err(Error::config("A(t) must be square"));
    }
    let q = toeplitz_of(&cfg.q.sample(&window)?, &window)?;
    let drift = &a.dense - n_operator(&window, a.block_rows);
    let margin = phasor_core::solvers::hurwitz_margin(&drift)?;
    let sol = solve_lyapunov(&drift, &q)?;
    io::write_json_atomic(
        &out.resolve(&cfg.output),
        &json!({
            "solution": io::operator_to_json(&sol.op),
            "report": { "residual": sol.residual, "defect": sol.defect, "hurwitz_margin": margin },
        }),
    )?;
    Ok(format!(
        "lyap: residual {:.3e}, re-Toeplitzification defect {:.3e}, drift margin {margin:.4}",
        sol.residual, sol.defect
    ))
}

pub fn run_riccati(cfg: &RiccatiConfig, out: &OutDir) -> Result<String> {
    let window = PhasorConfig::new(cfg.period, cfg.truncation, cfg.samples_per_period)?;
    let a = toeplitz_of(&cfg.a.sample(&window)?, &window)?;
    if a.block_rows != a.block_cols {
        return Err(Error::config("A(t) must be square"));
    }
    let b = toeplitz_of(&cfg.b.sample(&window)?, &window)?;
    let q = toeplitz_of(&cfg.q.sample(&window)?, &window)?;
    let r = toeplitz_of(&cfg.r.sample(&window)?, &window)?;
    let drift = &a.dense - n_operator(&window, a.block_rows);
    let options = RiccatiOptions {
        eta: cfg.eta.unwrap_or(RiccatiOptions::default().eta),
        ..RiccatiOptions::default()
    };
    let sol = solve_riccati(&drift, &b.dense, &q, &r, options)?;
    let gain_defect =
        phasor_core::toeplitz::block_toeplitz_defect(&sol.gain, b.block_cols, a.block_cols);
    io::write_json_atomic(
        &out.resolve(&cfg.output),
        &json!({
            "solution": io::operator_to_json(&sol.op),
            "report": {
                "residual": sol.residual,
                "defect": sol.defect,
                "closed_loop_margin": sol.closed_loop_margin,
                "iterations": sol.iterations,
                "gain_defect": gain_defect,
            },
        }),
    )?;
    Ok(format!(
        "riccati: residual {:.3e} in {} Newton steps, closed-loop margin {:.4}, gain defect {gain_defect:.3e}",
        sol.residual, sol.iterations, sol.closed_loop_margin
    ))
}

pub fn run_sylvester(cfg: &SylvesterConfig, out: &OutDir) -> Result<String> {
    let window = PhasorConfig::new(cfg.period, cfg.truncation, cfg.samples_per_period)?;
    let o = toeplitz_of(&cfg.o.sample(&window)?, &window)?;
    let a = toeplitz_of(&cfg.a.sample(&window)?, &window)?;
    if o.block_rows != o.block_cols || a.block_rows != a.block_cols {
        return Err(Error::config("O(t) and A(t) must be square"));
    }
    let lc = toeplitz_of(&cfg.lc.sample(&window)?, &window)?;
    let o_drift = &o.dense - n_operator(&window, o.block_rows);
    let a_drift = &a.dense - n_operator(&window, a.block_rows);
    let (m, residual) = solve_sylvester(&o_drift, &a_drift, &lc.dense)?;
    let (m_op, defect) = retoeplitzify(&m, &window, o.block_rows, a.block_rows)?;
    io::write_json_atomic(
        &out.resolve(&cfg.output),
        &json!({
            "solution": io::operator_to_json(&m_op),
            "report": { "residual": residual, "defect": defect },
        }),
    )?;
    Ok(format!(
        "sylvester: residual {residual:.3e}, re-Toeplitzification defect {defect:.3e}"
    ))
}

fn equilibrium_to_json(eq: &EquilibriumResult) -> serde_json::Value {
    json!({
        "s_phasors": io::phasor_vector_to_json(&eq.s_phasors),
        "x": io::phasor_vector_to_json(&eq.x),
        "j_star": eq.j_star,
        "residual": eq.residual,
        "gradient_norm": eq.gradient_norm,
        "iterations": eq.iterations,
        "converged": eq.converged,
        "within_bounds": eq.within_bounds,
    })
}

fn equilibrium_from_json(
    v: &serde_json::Value,
    window: &PhasorConfig,
    model: &phasor_core::model::HarmonicBilinearModel,
) -> Result<EquilibriumResult> {
    let s_phasors = io::phasor_vector_from_json(&v["s_phasors"])?.resized(window.truncation);
    let s_op = ToeplitzOperator::from_scalar_phasors(*window, &s_phasors)?;
    let x = io::phasor_vector_from_json(&v["x"])?.resized(window.truncation);
    let residual = equilibrium_residual(model, &s_op, &x, &model.w)?;
    Ok(EquilibriumResult {
        s_phasors,
        s_op,
        x,
        j_star: v["j_star"].as_f64().unwrap_or(f64::NAN),
        residual,
        gradient_norm: v["gradient_norm"].as_f64().unwrap_or(f64::NAN),
        iterations: v["iterations"].as_u64().unwrap_or(0) as usize,
        converged: v["converged"].as_bool().unwrap_or(false),
        within_bounds: v["within_bounds"].as_bool().unwrap_or(false),
    })
}

pub fn run_equilibrium(cfg: &EquilibriumConfig, out: &OutDir) -> Result<String> {
    let window = PhasorConfig::new(
        cfg.rectifier.period(),
        cfg.truncation,
        cfg.samples_per_period,
    )?;
    let sys = build_rectifier(&cfg.rectifier)?;
    let model = harmonic_bilinear(&sys, &window)?;
    let mut spec = EquilibriumSpec::new(cfg.weights, cfg.v_ref, cfg.truncation);
    if let Some(guess) = &cfg.initial_guess {
        if guess.len() != cfg.truncation + 1 {
            return Err(Error::config(format!(
                "initial_guess must list s_k for k = 0..={}",
                cfg.truncation
            )));
        }
        let mut pv = PhasorVector::zeros(1, cfg.truncation);
        for (k, pair) in guess.iter().enumerate() {
            let v = DVector::from_element(1, Complex64::new(pair[0], pair[1]));
            if k == 0 {
                pv.set(0, v);
            } else {
                pv.set_symmetric(k as i64, v);
            }
        }
        spec.initial_guess = pv;
    }
    if let Some(iters) = cfg.max_iterations {
        spec.max_iterations = iters;
    }
    let eq = optimize_equilibrium(&model, &spec, &model.w)?;
    io::write_json_atomic(&out.resolve(&cfg.output), &equilibrium_to_json(&eq))?;
    Ok(format!(
        "equilibrium: J* = {:.6e}, residual {:.3e}, {} iterations, converged = {}, V_dc0 = {:.2} V",
        eq.j_star,
        eq.residual,
        eq.iterations,
        eq.converged,
        eq.x.get(0)[1].re
    ))
}

pub fn run_synthesize(cfg: &SynthesizeConfig, out: &OutDir) -> Result<String> {
    let window = PhasorConfig::new(
        cfg.rectifier.period(),
        cfg.truncation,
        cfg.samples_per_period,
    )?;
    let sys = build_rectifier(&cfg.rectifier)?;
    let model = harmonic_bilinear(&sys, &window)?;
    let eq = equilibrium_from_json(&io::read_json(&cfg.equilibrium_json)?, &window, &model)?;

    let q = phasor_core::toeplitz::PeriodicMatrixSamples::constant(
        &window,
        RMat::from_row_slice(2, 2, &[cfg.q_diag[0], 0.0, 0.0, cfg.q_diag[1]]),
    )?;
    let gamma = phasor_core::toeplitz::PeriodicMatrixSamples::constant(
        &window,
        RMat::from_element(1, 1, cfg.gamma),
    )?;
    let base = synthesize_feedback(&model, &eq, &q, &gamma)?;

    let (controller, summary) = if cfg.bank.is_empty() {
        let summary = format!(
            "synthesize: feedback controller, drift margin {:.4}, Lyapunov residual {:.3e}",
            base.equilibrium_margin, base.lyapunov_residual
        );
        (ControllerKind::Feedback(base), summary)
    } else {
        let eta1 = cfg
            .eta1
            .ok_or_else(|| Error::config("bank synthesis needs eta1"))?;
        let eta2 = cfg
            .eta2
            .ok_or_else(|| Error::config("bank synthesis needs eta2"))?;
        let mut bank = Vec::new();
        for entry in &cfg.bank {
            let block: BankBlockSpec = match entry {
                BankSpecEntry::Integrator { state, gain } => {
                    integrator_action(&window, 2, state.index(), *gain)?
                }
                BankSpecEntry::CosIntegrator { state, gain } => {
                    let g = *gain;
                    weighted_integrator_action(&window, 2, state.index(), move |t| {
                        g * (window.omega * t).cos()
                    })?
                }
                BankSpecEntry::Oscillator {
                    state,
                    harmonic,
                    gain,
                } => oscillator_action(&window, 2, state.index(), *harmonic, *gain)?,
            };
            bank.push(block);
        }
        let fwd = synthesize_forwarding(base, &bank, eta1, eta2, &model)?;
        let worst_sylvester = fwd
            .blocks
            .iter()
            .map(|b| b.sylvester_residual)
            .fold(0.0f64, f64::max);
        let summary = format!(
            "synthesize: forwarding controller with {} bank blocks ({} states), drift margin {:.4}, worst Sylvester residual {:.3e}",
            fwd.blocks.len(),
            fwd.bank_dim(),
            fwd.base.equilibrium_margin,
            worst_sylvester
        );
        (ControllerKind::Forwarding(fwd), summary)
    };
    io::write_json_atomic(
        &out.resolve(&cfg.output),
        &io::controller_to_json(&controller)?,
    )?;
    Ok(summary)
}

pub fn run_simulate(cfg: &SimulateConfig, out: &OutDir) -> Result<Vec<String>> {
    let sys = build_rectifier(&cfg.rectifier)?;
    let controller = io::controller_from_json(&io::read_json(&cfg.controller_json)?)?;
    let truncation = controller.config().truncation;

    let results: Vec<Result<String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .scenarios
            .iter()
            .map(|sc| {
                let sys = &sys;
                let controller = &controller;
                let out = &out;
                scope.spawn(move || -> Result<String> {
                    let dim = sys.dim_state();
                    let mut scenario = Scenario::startup(sc.duration, sc.steps_per_period, dim);
                    if let Some(init) = &sc.initial_state {
                        if init.len() != dim {
                            return Err(Error::config(format!(
                                "scenario {:?}: initial state must have {dim} entries",
                                sc.name
                            )));
                        }
                        scenario.initial_state = RVec::from_vec(init.clone());
                    }
                    scenario.disturbances = sc.disturbances.clone();
                    scenario.record_phasors = sc.record_phasors;
                    let trace = simulate(sys, controller, &scenario)?;
                    let m = metrics(&trace, &MetricsRequest::rectifier(truncation))?;
                    io::write_trace_csv(&out.resolve(&sc.trace_csv), &trace)?;
                    io::write_json_atomic(
                        &out.resolve(&sc.metrics_json),
                        &io::report_to_json(&m)?,
                    )?;
                    if let Some(pj) = &sc.phasors_json {
                        let traj = trace.phasors.as_ref().ok_or_else(|| {
                            Error::config("phasors_json requested without record_phasors")
                        })?;
                        io::write_json_atomic(
                            &out.resolve(pj),
                            &io::trajectory_to_json(traj),
                        )?;
                    }
                    Ok(format!(
                        "simulate[{}]: v_dc mean {:.2} V, phase error {:.4} rad, saturation {:.1}%, settling {}",
                        sc.name,
                        m.v_dc_mean,
                        m.current_phase_error,
                        100.0 * m.saturation_fraction,
                        m.settling_time
                            .map(|t| format!("{t:.4} s"))
                            .unwrap_or_else(|| "n/a".into()),
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

pub fn run_report(cfg: &ReportConfig, out: &OutDir) -> Result<String> {
    let trace = io::read_trace_csv(&cfg.trace_csv, cfg.period, cfg.v_in_amplitude)?;
    let m = metrics(&trace, &MetricsRequest::rectifier(cfg.truncation))?;
    io::write_json_atomic(&out.resolve(&cfg.output), &io::report_to_json(&m)?)?;
    Ok(format!(
        "report: v_dc mean {:.2} V, phase error {:.4} rad, |I_k| = [{}]",
        m.v_dc_mean,
        m.current_phase_error,
        m.current_harmonics
            .iter()
            .map(|h| format!("{h:.2}"))
            .collect::<Vec<_>>()
            .join(", ")
    ))
}
