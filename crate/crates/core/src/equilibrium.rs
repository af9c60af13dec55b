//! Harmonic equilibria of bilinear affine models and weighted least-squares
//! tuning of the control phasors.
//!
//! For a fixed control symbol the equilibrium is the linear solve
//! `X = -(A(S) - N)^-1 B(S) W`. The optimizer searches over the free phasors
//! of `S` (conjugate symmetry substituted, so `k = 0..h` with a real mean)
//! to shape the equilibrium: DC voltage tracking, low voltage/current
//! harmonic content, and current phase alignment.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::HarmonicBilinearModel;
use crate::phasor::PhasorVector;
use crate::toeplitz::{kron_with_matrix, ToeplitzOperator};

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;
type RMat = DMatrix<f64>;
type RVec = DVector<f64>;

/// Weighted objective for the equilibrium search.
#[derive(Debug, Clone)]
pub struct EquilibriumSpec {
    /// `[w0, w1, w2, w3]`: DC-voltage tracking, voltage harmonics `k >= 1`,
    /// real part of the current phasors, current harmonics `k >= 2`.
    pub weights: [f64; 4],
    pub v_ref: f64,
    /// State component carrying the current.
    pub current_state: usize,
    /// State component carrying the regulated voltage.
    pub voltage_state: usize,
    /// Starting point for the control phasors (scalar, order h).
    pub initial_guess: PhasorVector,
    pub max_iterations: usize,
}

impl EquilibriumSpec {
    /// Spec with the default sin-phase seed `s_1 = -i/2`, which reflects a
    /// rectifier-style modulation and can be overridden freely.
    pub fn new(weights: [f64; 4], v_ref: f64, truncation: usize) -> Self {
        let mut seed = PhasorVector::zeros(1, truncation);
        if truncation >= 1 {
            seed.set_symmetric(1, CVec::from_element(1, Complex64::new(0.0, -0.5)));
        }
        Self {
            weights,
            v_ref,
            current_state: 0,
            voltage_state: 1,
            initial_guess: seed,
            max_iterations: 300,
        }
    }
}

/// Optimizer output: control symbol, equilibrium, objective value and
/// first-order diagnostics.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub s_phasors: PhasorVector,
    pub s_op: ToeplitzOperator,
    pub x: PhasorVector,
    pub j_star: f64,
    /// Equilibrium equation residual normalized by `1 + |X|`.
    pub residual: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the control representative stays inside the bounds on the
    /// quadrature grid.
    pub within_bounds: bool,
}

/// Solves the harmonic equilibrium equation for a given control symbol.
pub fn equilibrium_for_control(
    model: &HarmonicBilinearModel,
    s: &ToeplitzOperator,
    w: &PhasorVector,
) -> Result<PhasorVector> {
    let drift = model.drift(s)?;
    let rhs = -(model.b_of(s)? * w.resized(model.config.truncation).stacked());
    let svd = drift.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if smin <= 1e-12 * smax {
        return Err(Error::numerical(format!(
            "harmonic matrix is singular or ill-conditioned (sigma ratio {:.3e})",
            smin / smax
        )));
    }
    let x = drift
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numerical("harmonic equilibrium solve failed"))?;
    PhasorVector::from_stacked(model.dim_state, model.config.truncation, &x)
}

/// Residual of the equilibrium equation normalized by `1 + |X|`.
pub fn equilibrium_residual(
    model: &HarmonicBilinearModel,
    s: &ToeplitzOperator,
    x: &PhasorVector,
    w: &PhasorVector,
) -> Result<f64> {
    let rhs = crate::model::harmonic_rhs(model, x, s, &w.resized(model.config.truncation))?;
    Ok(rhs.norm() / (1.0 + x.norm()))
}

struct Objective<'a> {
    model: &'a HarmonicBilinearModel,
    spec: &'a EquilibriumSpec,
    w_stacked: CVec,
    free: Vec<(i64, bool)>, // (harmonic, is_imaginary_part)
}

impl<'a> Objective<'a> {
    fn new(model: &'a HarmonicBilinearModel, spec: &'a EquilibriumSpec, w: &PhasorVector) -> Self {
        let h = model.config.truncation as i64;
        let mut free = vec![(0, false)];
        for k in 1..=h {
            free.push((k, false));
            free.push((k, true));
        }
        Self {
            model,
            spec,
            w_stacked: w.resized(model.config.truncation).stacked(),
            free,
        }
    }

    fn phasors_from(&self, theta: &RVec) -> PhasorVector {
        let mut s = PhasorVector::zeros(1, self.model.config.truncation);
        s.set(0, CVec::from_element(1, Complex64::new(theta[0], 0.0)));
        for (j, &(k, imag)) in self.free.iter().enumerate().skip(1) {
            let mut v = s.get(k)[0];
            if imag {
                v.im = theta[j];
            } else {
                v.re = theta[j];
            }
            s.set_symmetric(k, CVec::from_element(1, v));
        }
        s
    }

    fn theta_from(&self, s: &PhasorVector) -> RVec {
        let mut theta = RVec::zeros(self.free.len());
        theta[0] = s.get(0)[0].re;
        for (j, &(k, imag)) in self.free.iter().enumerate().skip(1) {
            theta[j] = if imag { s.get(k)[0].im } else { s.get(k)[0].re };
        }
        theta
    }

    /// Equilibrium solve and residual vector at `theta`.
    fn residuals(&self, theta: &RVec) -> Result<(RVec, CVec, CMat)> {
        let s = self.phasors_from(theta);
        let s_op = ToeplitzOperator::from_scalar_phasors(self.model.config, &s)?;
        let drift = self.model.drift(&s_op)?;
        let rhs = -(self.model.b_of(&s_op)? * &self.w_stacked);
        let lu = drift.clone().lu();
        let x = lu
            .solve(&rhs)
            .ok_or_else(|| Error::numerical("equilibrium singularity during optimization"))?;
        let r = self.residual_vector(&x);
        Ok((r, x, drift))
    }

    fn component(&self, x: &CVec, k: i64, state: usize) -> Complex64 {
        let slot = self.model.config.slot_of_harmonic(k);
        x[slot * self.model.dim_state + state]
    }

    fn residual_vector(&self, x: &CVec) -> RVec {
        let h = self.model.config.truncation as i64;
        let [w0, w1, w2, w3] = self.spec.weights;
        let mut r = Vec::new();
        r.push(w0.sqrt() * (self.component(x, 0, self.spec.voltage_state).re - self.spec.v_ref));
        for k in 1..=h {
            let v = self.component(x, k, self.spec.voltage_state);
            r.push(w1.sqrt() * v.re);
            r.push(w1.sqrt() * v.im);
        }
        r.push(w2.sqrt() * self.component(x, 0, self.spec.current_state).re);
        for k in 1..=h {
            // both signs of k contribute equally by conjugate symmetry
            r.push((2.0 * w2).sqrt() * self.component(x, k, self.spec.current_state).re);
        }
        for k in 2..=h {
            let c = self.component(x, k, self.spec.current_state);
            r.push(w3.sqrt() * c.re);
            r.push(w3.sqrt() * c.im);
        }
        RVec::from_vec(r)
    }

    /// d(residual vector)/d(theta) through the linear solve.
    fn jacobian(&self, theta: &RVec, x: &CVec, drift: &CMat) -> Result<RMat> {
        let lu = drift.clone().lu();
        let n_res = self.residual_vector(x).len();
        let mut jac = RMat::zeros(n_res, self.free.len());
        for (j, &(k, imag)) in self.free.iter().enumerate() {
            let basis = self.symbol_basis(k, imag);
            let da = kron_with_matrix(&basis, &self.model.a_dep);
            let db = kron_with_matrix(&basis, &self.model.b_dep);
            let rhs = -(da * x + db * &self.w_stacked);
            let dx = lu
                .solve(&rhs)
                .ok_or_else(|| Error::numerical("equilibrium singularity during optimization"))?;
            // the residual vector is linear in x, so finite shifts transport
            let r_plus = self.residual_vector(&(x + &dx));
            let r_base = self.residual_vector(x);
            for i in 0..n_res {
                jac[(i, j)] = r_plus[i] - r_base[i];
            }
        }
        let _ = theta;
        Ok(jac)
    }

    /// Derivative of the dense control symbol with respect to one free
    /// parameter: ones (or +-i) on the bands `+k` and `-k`.
    fn symbol_basis(&self, k: i64, imag: bool) -> CMat {
        let p = self.model.config.num_phasors();
        let mut e = CMat::zeros(p, p);
        for r in 0..p as i64 {
            for c in 0..p as i64 {
                let band = r - c;
                if band == k {
                    e[(r as usize, c as usize)] += if imag {
                        Complex64::new(0.0, 1.0)
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                } else if band == -k && k != 0 {
                    e[(r as usize, c as usize)] += if imag {
                        Complex64::new(0.0, -1.0)
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                }
            }
        }
        e
    }
}

/// Objective value and gradient at a given control phasor stack; exposed for
/// verification against finite differences.
pub fn objective_with_gradient(
    model: &HarmonicBilinearModel,
    spec: &EquilibriumSpec,
    w: &PhasorVector,
    s: &PhasorVector,
) -> Result<(f64, RVec)> {
    check_spec(model, spec)?;
    let obj = Objective::new(model, spec, w);
    let theta = obj.theta_from(s);
    let (r, x, drift) = obj.residuals(&theta)?;
    let jac = obj.jacobian(&theta, &x, &drift)?;
    let grad = jac.transpose() * &r * 2.0;
    Ok((r.norm_squared(), grad))
}

fn check_spec(model: &HarmonicBilinearModel, spec: &EquilibriumSpec) -> Result<()> {
    if spec.voltage_state >= model.dim_state || spec.current_state >= model.dim_state {
        return Err(Error::config(format!(
            "objective state indices ({}, {}) exceed the state dimension {}",
            spec.current_state, spec.voltage_state, model.dim_state
        )));
    }
    Ok(())
}

/// Levenberg-Marquardt search over the free control phasors.
pub fn optimize_equilibrium(
    model: &HarmonicBilinearModel,
    spec: &EquilibriumSpec,
    w: &PhasorVector,
) -> Result<EquilibriumResult> {
    check_spec(model, spec)?;
    let obj = Objective::new(model, spec, w);
    let mut theta = obj.theta_from(&spec.initial_guess.resized(model.config.truncation));

    if spec.weights.iter().all(|&w| w == 0.0) {
        return finish(model, spec, w, &obj, &theta, 0.0, 0.0, 0, true);
    }

    let (mut r, mut x, mut drift) = obj.residuals(&theta)?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;

    for iter in 0..spec.max_iterations {
        iterations = iter + 1;
        let jac = obj.jacobian(&theta, &x, &drift)?;
        let grad = jac.transpose() * &r * 2.0;
        grad_norm = grad.norm();
        if grad_norm <= 1e-6 * (1.0 + cost) {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let mut accepted = false;
        for _ in 0..40 {
            let mut lhs = jtj.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let step = match lhs.lu().solve(&(jac.transpose() * &r)) {
                Some(s) => -s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            // the admissible control phasors are small (|s(t)| <= 1), so any
            // large step is spurious; shrink instead of basin-hopping
            if step.norm() > 0.5 {
                lambda *= 10.0;
                continue;
            }
            let candidate = &theta + &step;
            match obj.residuals(&candidate) {
                Ok((r_new, x_new, drift_new)) => {
                    let cost_new = r_new.norm_squared();
                    if cost_new < cost {
                        theta = candidate;
                        r = r_new;
                        x = x_new;
                        drift = drift_new;
                        cost = cost_new;
                        lambda = (lambda * 0.3).max(1e-12);
                        accepted = true;
                        break;
                    }
                    lambda *= 10.0;
                }
                Err(_) => {
                    // singular equilibrium on the trial step: shrink the step
                    lambda *= 10.0;
                }
            }
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        // re-evaluate first-order optimality at the final iterate
        let jac = obj.jacobian(&theta, &x, &drift)?;
        grad_norm = (jac.transpose() * &r * 2.0).norm();
        converged = grad_norm <= 1e-6 * (1.0 + cost);
    }
    finish(
        model, spec, w, &obj, &theta, cost, grad_norm, iterations, converged,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    model: &HarmonicBilinearModel,
    spec: &EquilibriumSpec,
    w: &PhasorVector,
    obj: &Objective<'_>,
    theta: &RVec,
    j_star: f64,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
) -> Result<EquilibriumResult> {
    let s_phasors = obj.phasors_from(theta);
    let s_op = ToeplitzOperator::from_scalar_phasors(model.config, &s_phasors)?;
    let x = equilibrium_for_control(model, &s_op, w)?;
    let residual = equilibrium_residual(model, &s_op, &x, w)?;
    let within_bounds = control_within_bounds(model, &s_phasors);
    let _ = spec;
    Ok(EquilibriumResult {
        s_phasors,
        s_op,
        x,
        j_star,
        residual,
        gradient_norm,
        iterations,
        converged,
        within_bounds,
    })
}

fn control_within_bounds(model: &HarmonicBilinearModel, s: &PhasorVector) -> bool {
    let cfg = &model.config;
    let (lo, hi) = model.control_bounds;
    (0..cfg.samples_per_period).all(|j| {
        let t = j as f64 * cfg.step();
        let v = s.synth_real(cfg.omega, t)[0];
        (lo..=hi).contains(&v)
    })
}
