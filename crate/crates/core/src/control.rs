//! Controller synthesis from harmonic solutions and the time-domain feedback
//! laws they induce.
//!
//! The base law stabilizes a bilinear plant around a harmonic equilibrium:
//!
//! ```text
//! s(t) = s_e(t) - gamma(t) g(x)' P(t) (x - x_e(t)),   g(x) = A_dep x + B_dep w(t)
//! ```
//!
//! with `P` the harmonic Lyapunov solution at the equilibrium. The
//! forwarding law augments the plant with integrator/oscillator banks that
//! pin selected phasors under periodic disturbances, coupled through a
//! harmonic Sylvester solution `M`:
//!
//! ```text
//! s(t) = s_e(t) - eta1 g' P x~ + eta2 g' M(t)' (z - M(t) x~)
//! ```
//!
//! All representatives are evaluated by Fourier resynthesis, so the laws are
//! exactly T-periodic in their gains.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::PhasorConfig;
use crate::equilibrium::EquilibriumResult;
use crate::error::{Error, Result};
use crate::model::HarmonicBilinearModel;
use crate::phasor::PhasorVector;
use crate::solvers::{hurwitz_margin, solve_lyapunov, solve_sylvester};
use crate::toeplitz::{
    block_toeplitz_defect, min_symmetric_eigenvalue, n_operator, retoeplitzify, toeplitz_of,
    PeriodicMatrixSamples, ToeplitzOperator,
};

type CMat = DMatrix<Complex64>;
type RMat = DMatrix<f64>;
type RVec = DVector<f64>;

/// State-feedback controller synthesized at a harmonic equilibrium.
#[derive(Debug, Clone)]
pub struct HarmonicController {
    pub config: PhasorConfig,
    pub s_e: PhasorVector,
    pub s_op: ToeplitzOperator,
    pub x_e: PhasorVector,
    pub w: PhasorVector,
    pub p_op: ToeplitzOperator,
    pub gamma_op: ToeplitzOperator,
    pub a_dep: RMat,
    pub b_dep: RMat,
    pub bounds: (f64, f64),
    pub lyapunov_residual: f64,
    pub p_defect: f64,
    pub equilibrium_margin: f64,
}

impl HarmonicController {
    pub fn dim_state(&self) -> usize {
        self.a_dep.nrows()
    }

    pub fn s_e_at(&self, t: f64) -> f64 {
        self.s_e.synth_real(self.config.omega, t)[0]
    }

    pub fn x_e_at(&self, t: f64) -> RVec {
        self.x_e.synth_real(self.config.omega, t)
    }

    pub fn w_at(&self, t: f64) -> RVec {
        self.w.synth_real(self.config.omega, t)
    }

    /// Symmetrized real representative of the Lyapunov solution.
    pub fn p_at(&self, t: f64) -> RMat {
        let p = self.p_op.representative_real_at(t);
        (&p + p.transpose()).unscale(2.0)
    }

    pub fn gamma_at(&self, t: f64) -> f64 {
        self.gamma_op.representative_real_at(t)[(0, 0)]
    }

    /// Control direction `g(x) = A_dep x + B_dep w(t)`.
    pub fn g_of(&self, t: f64, x: &RVec) -> RVec {
        let mut g = &self.a_dep * x;
        if self.b_dep.ncols() > 0 {
            g += &self.b_dep * self.w_at(t);
        }
        g
    }
}

/// One internal-model block of a forwarding controller.
#[derive(Debug, Clone)]
pub struct ForwardingBlock {
    /// Bank state dimension of this block.
    pub dim: usize,
    pub o_op: ToeplitzOperator,
    pub lc_op: ToeplitzOperator,
    pub m_op: ToeplitzOperator,
    pub sylvester_residual: f64,
    pub m_defect: f64,
}

/// Bank block specification: time-domain representatives of the internal
/// model `dz/dt = O(t) z + L(t) C(t) (x - x_e)`.
#[derive(Debug, Clone)]
pub struct BankBlockSpec {
    pub o: PeriodicMatrixSamples,
    pub l: PeriodicMatrixSamples,
    pub c: PeriodicMatrixSamples,
}

/// Pure integrator on one measured state with constant gain.
pub fn integrator_action(
    config: &PhasorConfig,
    dim_state: usize,
    measured_state: usize,
    gain: f64,
) -> Result<BankBlockSpec> {
    weighted_integrator_action(config, dim_state, measured_state, move |_| gain)
}

/// Integrator whose input is weighted by a T-periodic scalar gain; a cosine
/// weight pins the real part of the first harmonic of the measured state.
pub fn weighted_integrator_action(
    config: &PhasorConfig,
    dim_state: usize,
    measured_state: usize,
    gain: impl Fn(f64) -> f64,
) -> Result<BankBlockSpec> {
    let mut c_row = RMat::zeros(1, dim_state);
    c_row[(0, measured_state)] = 1.0;
    Ok(BankBlockSpec {
        o: PeriodicMatrixSamples::constant(config, RMat::zeros(1, 1))?,
        l: PeriodicMatrixSamples::from_fn(config, |t| RMat::from_element(1, 1, gain(t)))?,
        c: PeriodicMatrixSamples::constant(config, c_row)?,
    })
}

/// Two-state oscillator tuned to one harmonic of the measured state; at
/// steady state it pins that phasor of the measurement to zero.
pub fn oscillator_action(
    config: &PhasorConfig,
    dim_state: usize,
    measured_state: usize,
    harmonic: usize,
    gain: f64,
) -> Result<BankBlockSpec> {
    let alpha = harmonic as f64 * config.omega;
    let o = RMat::from_row_slice(2, 2, &[0.0, -alpha, alpha, 0.0]);
    let mut c_row = RMat::zeros(1, dim_state);
    c_row[(0, measured_state)] = 1.0;
    Ok(BankBlockSpec {
        o: PeriodicMatrixSamples::constant(config, o)?,
        l: PeriodicMatrixSamples::constant(config, RMat::from_row_slice(2, 1, &[gain, 0.0]))?,
        c: PeriodicMatrixSamples::constant(config, c_row)?,
    })
}

/// Forwarding controller: base law plus an internal-model bank coupled by a
/// Sylvester solution.
#[derive(Debug, Clone)]
pub struct ForwardingController {
    pub base: HarmonicController,
    pub blocks: Vec<ForwardingBlock>,
    pub eta1: f64,
    pub eta2: f64,
}

impl ForwardingController {
    /// Total time-domain bank dimension.
    pub fn bank_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// Stacked representative `M(t)` mapping the state error to the bank.
    pub fn m_at(&self, t: f64) -> RMat {
        let n = self.base.dim_state();
        let mut m = RMat::zeros(self.bank_dim(), n);
        let mut row = 0;
        for b in &self.blocks {
            m.view_mut((row, 0), (b.dim, n))
                .copy_from(&b.m_op.representative_real_at(t));
            row += b.dim;
        }
        m
    }

    /// Block-diagonal internal model drift `O(t)`.
    pub fn o_at(&self, t: f64) -> RMat {
        let total = self.bank_dim();
        let mut o = RMat::zeros(total, total);
        let mut at = 0;
        for b in &self.blocks {
            o.view_mut((at, at), (b.dim, b.dim))
                .copy_from(&b.o_op.representative_real_at(t));
            at += b.dim;
        }
        o
    }

    /// Stacked measurement injection `L(t) C(t)`.
    pub fn lc_at(&self, t: f64) -> RMat {
        let n = self.base.dim_state();
        let mut lc = RMat::zeros(self.bank_dim(), n);
        let mut row = 0;
        for b in &self.blocks {
            lc.view_mut((row, 0), (b.dim, n))
                .copy_from(&b.lc_op.representative_real_at(t));
            row += b.dim;
        }
        lc
    }
}

/// Builds the base stabilizing controller at an optimized equilibrium.
///
/// `q_samples` and `gamma_samples` are one period of the Lyapunov weight and
/// the feedback gain; both must be symmetric positive definite on the grid.
pub fn synthesize_feedback(
    model: &HarmonicBilinearModel,
    eq: &EquilibriumResult,
    q_samples: &PeriodicMatrixSamples,
    gamma_samples: &PeriodicMatrixSamples,
) -> Result<HarmonicController> {
    let drift = model.drift(&eq.s_op)?;
    let margin = hurwitz_margin(&drift)?;
    if margin <= 0.0 {
        return Err(Error::numerical(format!(
            "equilibrium drift is not Hurwitz (abscissa {:.3e}); synthesis is unavailable",
            -margin
        )));
    }
    check_spd_samples(q_samples, "Q")?;
    check_spd_samples(gamma_samples, "gamma")?;
    let q_op = toeplitz_of(q_samples, &model.config)?;
    let gamma_op = toeplitz_of(gamma_samples, &model.config)?;
    let sol = solve_lyapunov(&drift, &q_op)?;

    let ctrl = HarmonicController {
        config: model.config,
        s_e: eq.s_phasors.clone(),
        s_op: eq.s_op.clone(),
        x_e: eq.x.clone(),
        w: model.w.clone(),
        p_op: sol.op,
        gamma_op,
        a_dep: model.a_dep.clone(),
        b_dep: model.b_dep.clone(),
        bounds: model.control_bounds,
        lyapunov_residual: sol.residual,
        p_defect: sol.defect,
        equilibrium_margin: margin,
    };
    check_equilibrium_control_interior(&ctrl)?;
    Ok(ctrl)
}

fn check_spd_samples(samples: &PeriodicMatrixSamples, name: &str) -> Result<()> {
    if samples.rows != samples.cols {
        return Err(Error::config(format!("{name}(t) must be square")));
    }
    for (j, v) in samples.values.iter().enumerate() {
        let imag = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if imag > 1e-9 {
            return Err(Error::config(format!("{name}(t) must be real on the grid")));
        }
        let real = v.map(|z| z.re);
        let asym = (&real - real.transpose()).norm();
        if asym > 1e-9 * real.norm().max(1.0) {
            return Err(Error::config(format!(
                "{name}(t) must be symmetric on the grid"
            )));
        }
        if min_symmetric_eigenvalue(&real) <= 0.0 {
            return Err(Error::config(format!(
                "{name}(t) must be positive definite; violated at grid index {j}"
            )));
        }
    }
    Ok(())
}

fn check_equilibrium_control_interior(ctrl: &HarmonicController) -> Result<()> {
    let cfg = &ctrl.config;
    for j in 0..cfg.samples_per_period {
        let t = j as f64 * cfg.step();
        let s = ctrl.s_e_at(t);
        if s <= ctrl.bounds.0 || s >= ctrl.bounds.1 {
            return Err(Error::numerical(format!(
                "equilibrium control {s:.6} touches the bounds at t = {t:.6}"
            )));
        }
    }
    Ok(())
}

/// Augments a base controller with an internal-model bank.
pub fn synthesize_forwarding(
    base: HarmonicController,
    bank: &[BankBlockSpec],
    eta1: f64,
    eta2: f64,
    model: &HarmonicBilinearModel,
) -> Result<ForwardingController> {
    if !(eta1 > 0.0) || !(eta2 > 0.0) {
        return Err(Error::config("forwarding gains must be positive"));
    }
    let drift_x = model.drift(&base.s_op)?;
    let mut blocks = Vec::with_capacity(bank.len());
    for (i, spec) in bank.iter().enumerate() {
        let dim = spec.o.rows;
        if spec.o.cols != dim || spec.l.rows != dim || spec.c.rows != spec.l.cols {
            return Err(Error::config(format!(
                "bank block {i} has inconsistent dimensions"
            )));
        }
        if spec.c.cols != base.dim_state() {
            return Err(Error::config(format!(
                "bank block {i} measurement width {} does not match the state dimension {}",
                spec.c.cols,
                base.dim_state()
            )));
        }
        let o_op = toeplitz_of(&spec.o, &base.config)?;
        let skew = (&o_op.dense + o_op.dense.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if skew > 1e-10 {
            return Err(Error::config(format!(
                "bank block {i} drift is not skew-hermitian (defect {skew:.3e})"
            )));
        }
        let lc_samples = spec.l.pointwise_mul(&spec.c)?;
        let lc_op = toeplitz_of(&lc_samples, &base.config)?;
        let drift_z = &o_op.dense - n_operator(&base.config, dim);
        let (m_dense, sylvester_residual) = solve_sylvester(&drift_z, &drift_x, &lc_op.dense)?;
        let (m_op, m_defect) = retoeplitzify(&m_dense, &base.config, dim, base.dim_state())?;
        blocks.push(ForwardingBlock {
            dim,
            o_op,
            lc_op,
            m_op,
            sylvester_residual,
            m_defect,
        });
    }
    Ok(ForwardingController {
        base,
        blocks,
        eta1,
        eta2,
    })
}

/// Unsaturated base law value.
pub fn eval_feedback(ctrl: &HarmonicController, t: f64, x: &RVec) -> f64 {
    let x_tilde = x - ctrl.x_e_at(t);
    let g = ctrl.g_of(t, x);
    ctrl.s_e_at(t) - ctrl.gamma_at(t) * (g.transpose() * ctrl.p_at(t) * x_tilde)[(0, 0)]
}

/// Unsaturated forwarding law value.
pub fn eval_forwarding(ctrl: &ForwardingController, t: f64, x: &RVec, z: &RVec) -> f64 {
    let base = &ctrl.base;
    let x_tilde = x - base.x_e_at(t);
    let g = base.g_of(t, x);
    let p_term = (g.transpose() * base.p_at(t) * &x_tilde)[(0, 0)];
    if ctrl.blocks.is_empty() {
        return base.s_e_at(t) - ctrl.eta1 * p_term;
    }
    let m = ctrl.m_at(t);
    let offset = z - &m * &x_tilde;
    let m_term = (g.transpose() * m.transpose() * offset)[(0, 0)];
    base.s_e_at(t) - ctrl.eta1 * p_term + ctrl.eta2 * m_term
}

/// Saturation outcome: the clipped value and the applied step fraction.
#[derive(Debug, Clone, Copy)]
pub struct Saturation {
    pub value: f64,
    pub alpha: f64,
}

/// Radial saturation around the equilibrium control:
/// `sat(s) = s_e + alpha (s - s_e)` with the largest feasible
/// `alpha in [0, 1]`. Requires `s_e` strictly inside the bounds, which keeps
/// `alpha` strictly positive.
pub fn saturate(s: f64, s_e: f64, bounds: (f64, f64)) -> Result<Saturation> {
    let (lo, hi) = bounds;
    if !(s_e > lo && s_e < hi) {
        return Err(Error::config(format!(
            "equilibrium control {s_e} must lie strictly inside [{lo}, {hi}]"
        )));
    }
    if s >= lo && s <= hi {
        return Ok(Saturation {
            value: s,
            alpha: 1.0,
        });
    }
    let delta = s - s_e;
    let alpha = if delta > 0.0 {
        (hi - s_e) / delta
    } else {
        (lo - s_e) / delta
    };
    let alpha = alpha.clamp(0.0, 1.0);
    Ok(Saturation {
        value: s_e + alpha * delta,
        alpha,
    })
}

/// Checks whether a dense gain has block-Toeplitz structure, the shape every
/// harmonic static gain must carry to admit a time-domain representative.
pub fn is_block_toeplitz_gain(gain: &CMat, block_rows: usize, block_cols: usize, tol: f64) -> bool {
    if gain.nrows() % block_rows != 0 || gain.ncols() % block_cols != 0 {
        return false;
    }
    block_toeplitz_defect(gain, block_rows, block_cols) <= tol
}
