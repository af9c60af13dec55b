//! Dense algebraic solvers for the truncated harmonic equations, plus a
//! time-domain periodic-ODE oracle used to cross-validate them.
//!
//! Sizes stay at desk scale (state dimension `n(2h+1)` in the tens), so the
//! Lyapunov and Sylvester equations are solved exactly by vectorization over
//! the Kronecker-lifted linear system; the Riccati equation runs
//! Newton-Kleinman with one Lyapunov solve per step.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::toeplitz::{retoeplitzify, ToeplitzOperator};

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;
type RMat = DMatrix<f64>;

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn complex_eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::config("eigenvalues need a square matrix"));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = m
        .clone()
        .try_schur(1e-14, 20_000)
        .or_else(|| m.clone().try_schur(1e-10, 100_000))
        .ok_or_else(|| Error::numerical("Schur iteration did not converge"))?;
    schur
        .eigenvalues()
        .map(|v| v.iter().cloned().collect())
        .ok_or_else(|| Error::numerical("eigenvalue extraction failed"))
}

/// Distance to instability along the real axis: `-max Re(lambda)`.
/// Positive exactly when the matrix is Hurwitz.
pub fn hurwitz_margin(m: &CMat) -> Result<f64> {
    let eigs = complex_eigenvalues(m)?;
    Ok(-eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Solves `X M - M_left X + C = 0`-shaped linear matrix equations by
/// vectorization: `coefficient * vec(X) = -vec(C)`.
fn solve_vectorized(coefficient: CMat, c: &CMat, rows: usize, cols: usize) -> Result<CMat> {
    let rhs = -vec_of(c);
    let lu = coefficient.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::numerical("vectorized matrix equation is singular"))?;
    Ok(unvec(&sol, rows, cols))
}

/// Report attached to an operator-valued solution.
#[derive(Debug, Clone)]
pub struct OperatorSolution {
    pub op: ToeplitzOperator,
    /// Relative equation residual of the dense solution before
    /// re-Toeplitzification.
    pub residual: f64,
    /// Block-diagonal averaging defect introduced by re-Toeplitzification.
    pub defect: f64,
}

/// Solves `P (A - N) + (A - N)* P + Q = 0` for hermitian positive definite
/// `P`, returning the re-Toeplitzified operator.
pub fn solve_lyapunov(drift: &CMat, q: &ToeplitzOperator) -> Result<OperatorSolution> {
    let dim = drift.nrows();
    if drift.ncols() != dim || q.dense.nrows() != dim {
        return Err(Error::config("Lyapunov dimensions do not agree"));
    }
    let structure = q.check_structure()?;
    if !structure.hermitian || !structure.positive_definite {
        return Err(Error::config("Q must be hermitian positive definite"));
    }
    let margin = hurwitz_margin(drift)?;
    if margin <= 0.0 {
        return Err(Error::numerical(format!(
            "unstable: drift matrix has spectral abscissa {:.3e}",
            -margin
        )));
    }
    let p = solve_lyapunov_dense(drift, &q.dense)?;
    let residual = lyapunov_residual(drift, &p, &q.dense);
    if residual > 1e-9 {
        return Err(Error::numerical(format!(
            "Lyapunov residual {residual:.3e} exceeds 1e-9"
        )));
    }
    let (op, defect) = retoeplitzify(&p, &q.config, q.block_rows, q.block_cols)?;
    Ok(OperatorSolution {
        op,
        residual,
        defect,
    })
}

/// Dense core of the Lyapunov solve; `P M + M* P + Q = 0` with `M` the drift.
fn solve_lyapunov_dense(m: &CMat, q: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let coefficient = m.transpose().kronecker(&identity(n)) + identity(n).kronecker(&m.adjoint());
    let p = solve_vectorized(coefficient, q, n, n)?;
    // exact solutions are hermitian; fold in the numerical remainder
    Ok((&p + p.adjoint()).unscale(2.0))
}

fn lyapunov_residual(m: &CMat, p: &CMat, q: &CMat) -> f64 {
    let res = p * m + m.adjoint() * p + q;
    res.norm() / q.norm().max(1e-300)
}

/// Solves the coupling equation `(O - N) M - M (A - N) + L C = 0`.
///
/// The spectra of the two drifts must be disjoint; on overlap the closest
/// eigenvalue pair is reported.
pub fn solve_sylvester(o_drift: &CMat, a_drift: &CMat, lc: &CMat) -> Result<(CMat, f64)> {
    let zr = o_drift.nrows();
    let xr = a_drift.nrows();
    if o_drift.ncols() != zr || a_drift.ncols() != xr {
        return Err(Error::config("Sylvester drifts must be square"));
    }
    if lc.nrows() != zr || lc.ncols() != xr {
        return Err(Error::config(
            "Sylvester constant term has mismatched dimensions",
        ));
    }
    let o_eigs = complex_eigenvalues(o_drift)?;
    let a_eigs = complex_eigenvalues(a_drift)?;
    let scale = o_eigs
        .iter()
        .chain(a_eigs.iter())
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut gap = (
        f64::INFINITY,
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    );
    for &lo in &o_eigs {
        for &la in &a_eigs {
            let d = (lo - la).norm();
            if d < gap.0 {
                gap = (d, lo, la);
            }
        }
    }
    if gap.0 <= 1e-8 * scale {
        return Err(Error::numerical(format!(
            "resonant Sylvester: eigenvalues {:.6e}{:+.6e}i and {:.6e}{:+.6e}i are {:.3e} apart",
            gap.1.re, gap.1.im, gap.2.re, gap.2.im, gap.0
        )));
    }
    let coefficient =
        identity(xr).kronecker(o_drift) - a_drift.transpose().kronecker(&identity(zr));
    let m = solve_vectorized(coefficient, lc, zr, xr)?;
    let res = o_drift * &m - &m * a_drift + lc;
    let residual = res.norm() / lc.norm().max(1e-300);
    if residual > 1e-9 {
        return Err(Error::numerical(format!(
            "Sylvester residual {residual:.3e} exceeds 1e-9"
        )));
    }
    Ok((m, residual))
}

/// Options for the Riccati iteration.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiOptions {
    /// Grid threshold on `|det R(t)|` for inverting the weight.
    pub eta: f64,
    /// Target relative residual.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self {
            eta: 1e-9,
            tol: 1e-8,
            max_iterations: 50,
        }
    }
}

/// Riccati solution bundle: stabilizing `P`, the induced gain, and the
/// closed-loop margin.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub op: ToeplitzOperator,
    pub gain: CMat,
    pub residual: f64,
    pub defect: f64,
    pub closed_loop_margin: f64,
    pub iterations: usize,
}

/// Solves `P(A-N) + (A-N)*P - P B R^-1 B* P + Q = 0` by Newton-Kleinman.
///
/// A stabilizing start is built by eigenvalue shifting when the open loop is
/// not already Hurwitz.
pub fn solve_riccati(
    drift: &CMat,
    b: &CMat,
    q: &ToeplitzOperator,
    r: &ToeplitzOperator,
    options: RiccatiOptions,
) -> Result<RiccatiSolution> {
    let dim = drift.nrows();
    if b.nrows() != dim || q.dense.nrows() != dim {
        return Err(Error::config("Riccati dimensions do not agree"));
    }
    for (name, op) in [("Q", q), ("R", r)] {
        let s = op.check_structure()?;
        if !s.hermitian || !s.positive_definite {
            return Err(Error::config(format!(
                "{name} must be hermitian positive definite"
            )));
        }
    }
    let r_inv = r.inverse(options.eta)?;
    let q_dense = &q.dense;

    let mut gain = initial_stabilizing_gain(drift, b, dim)?;
    let mut closed = drift - b * &gain;
    let margin = hurwitz_margin(&closed)?;
    if margin <= 0.0 {
        return Err(Error::numerical(
            "not stabilizable at this truncation: shift-based start failed",
        ));
    }

    let mut p = CMat::zeros(dim, dim);
    let mut best_residual = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..options.max_iterations {
        iterations = iter + 1;
        // P_i solves P A_i + A_i* P + Q + K_i* R K_i = 0
        let q_aug = q_dense + gain.adjoint() * &r.dense * &gain;
        let p_next = solve_lyapunov_dense(&closed, &q_aug)?;
        let residual = riccati_residual(drift, b, &r_inv.dense, q_dense, &p_next);
        p = p_next;
        gain = &r_inv.dense * b.adjoint() * &p;
        closed = drift - b * &gain;
        if hurwitz_margin(&closed)? <= 0.0 {
            return Err(Error::numerical(
                "not stabilizable at this truncation: Newton step lost stability",
            ));
        }
        let stalled = residual >= best_residual * 0.5;
        best_residual = best_residual.min(residual);
        if residual < 1e-13 || (residual < options.tol && stalled) {
            break;
        }
    }
    if best_residual > options.tol {
        return Err(Error::numerical(format!(
            "not stabilizable at this truncation: residual {best_residual:.3e} after {iterations} iterations"
        )));
    }
    let residual = riccati_residual(drift, b, &r_inv.dense, q_dense, &p);
    let (op, defect) = retoeplitzify(&p, &q.config, q.block_rows, q.block_cols)?;
    let closed_loop_margin = hurwitz_margin(&closed)?;
    Ok(RiccatiSolution {
        op,
        gain,
        residual,
        defect,
        closed_loop_margin,
        iterations,
    })
}

fn riccati_residual(drift: &CMat, b: &CMat, r_inv: &CMat, q: &CMat, p: &CMat) -> f64 {
    let res = p * drift + drift.adjoint() * p - p * b * r_inv * b.adjoint() * p + q;
    res.norm() / q.norm().max(1e-300)
}

/// Stabilizing start for Newton-Kleinman. Returns the zero gain when the
/// open loop is already Hurwitz; otherwise shifts the spectrum and solves
/// one anti-stable Lyapunov equation for a Bass-style gain.
fn initial_stabilizing_gain(drift: &CMat, b: &CMat, dim: usize) -> Result<CMat> {
    let margin = hurwitz_margin(drift)?;
    if margin > 0.0 {
        return Ok(CMat::zeros(b.ncols(), dim));
    }
    let eigs = complex_eigenvalues(drift)?;
    let beta = eigs.iter().map(|z| z.re.abs()).fold(0.0f64, f64::max) + 1.0;
    let shifted = drift + identity(dim).scale(beta);
    // shifted Z + Z shifted* = 2 B B*
    let coefficient =
        identity(dim).kronecker(&shifted) + shifted.map(|z| z.conj()).kronecker(&identity(dim));
    let rhs = (b * b.adjoint()).scale(2.0);
    let z = solve_vectorized(coefficient, &(-rhs), dim, dim)?;
    let z = (&z + z.adjoint()).unscale(2.0);
    let k0 = z
        .lu()
        .solve(&b.clone())
        .ok_or_else(|| Error::numerical("not stabilizable at this truncation: singular reach"))?
        .adjoint();
    Ok(k0)
}

/// One-period solution of a periodic matrix differential equation.
#[derive(Debug, Clone)]
pub struct PeriodicOracleSolution {
    pub times: Vec<f64>,
    pub values: Vec<RMat>,
    pub periodicity_defect: f64,
    pub sweeps: usize,
}

/// Which periodic matrix equation the oracle integrates.
pub enum PeriodicEquationKind<'a> {
    /// `dP/dt + A'P + PA + Q = 0`
    Lyapunov,
    /// `dP/dt + A'P + PA - P B R^-1 B' P + Q = 0`
    Riccati {
        b: &'a dyn Fn(f64) -> RMat,
        r: &'a dyn Fn(f64) -> RMat,
    },
}

/// Time-domain oracle: integrates the periodic equation backward over one
/// period and enforces periodicity by a relaxed fixed point on the terminal
/// value. Completely independent of the harmonic solvers.
pub fn periodic_lyapunov_oracle(
    a: &dyn Fn(f64) -> RMat,
    q: &dyn Fn(f64) -> RMat,
    kind: PeriodicEquationKind<'_>,
    period: f64,
    steps: usize,
) -> Result<PeriodicOracleSolution> {
    if steps < 8 || !(period > 0.0) {
        return Err(Error::config(
            "oracle needs a positive period and >= 8 steps",
        ));
    }
    let n = a(0.0).nrows();
    match &kind {
        PeriodicEquationKind::Lyapunov => {
            let rho = monodromy_spectral_radius(a, period, steps, n)?;
            if rho >= 1.0 {
                return Err(Error::numerical(format!(
                    "unstable monodromy: spectral radius {rho:.6}"
                )));
            }
        }
        PeriodicEquationKind::Riccati { r, .. } => {
            // reject weights that lose invertibility anywhere on the grid,
            // including the half-step stage points
            for j in 0..=2 * steps {
                let t = period * j as f64 / (2 * steps) as f64;
                let det = r(t).determinant();
                if det.abs() < 1e-12 {
                    return Err(Error::numerical(format!(
                        "R(t) is numerically singular at t = {t:.6} (det {det:.3e})"
                    )));
                }
            }
        }
    }
    let field = |t: f64, p: &RMat| -> RMat {
        let at = a(t);
        let mut d = at.transpose() * p + p * at + q(t);
        if let PeriodicEquationKind::Riccati { b, r } = &kind {
            let bt = b(t);
            // invertibility was verified on the stage grid up front
            let r_inv = r(t).try_inverse().unwrap_or_else(|| RMat::zeros(bt.ncols(), bt.ncols()));
            d -= p * &bt * r_inv * bt.transpose() * p;
        }
        -d
    };

    let dt = period / steps as f64;
    let mut terminal = RMat::identity(n, n);
    let mut defect = f64::INFINITY;
    let mut sweeps = 0;
    for sweep in 0..200 {
        sweeps = sweep + 1;
        let initial = integrate_backward(&field, &terminal, period, dt, steps, false).1;
        defect = (&initial - &terminal).norm();
        let converged = defect <= 1e-8 * (1.0 + terminal.norm());
        terminal = (&terminal + &initial).unscale(2.0);
        if converged {
            terminal = initial;
            break;
        }
    }
    if defect > 1e-6 * (1.0 + terminal.norm()) {
        return Err(Error::numerical(format!(
            "periodicity fixed point did not converge: defect {defect:.3e} after {sweeps} sweeps"
        )));
    }
    let (mut values, _) = integrate_backward(&field, &terminal, period, dt, steps, true);
    values.reverse();
    let periodicity_defect = (&values[0] - &values[steps]).norm();
    let times = (0..=steps).map(|j| j as f64 * dt).collect();
    Ok(PeriodicOracleSolution {
        times,
        values,
        periodicity_defect,
        sweeps,
    })
}

/// Classical RK4 sweep from `t = period` down to `t = 0`. Returns the node
/// values in backward order when recording, and the value at `t = 0`.
fn integrate_backward(
    field: &dyn Fn(f64, &RMat) -> RMat,
    terminal: &RMat,
    period: f64,
    dt: f64,
    steps: usize,
    record: bool,
) -> (Vec<RMat>, RMat) {
    let mut p = terminal.clone();
    let mut values = Vec::new();
    if record {
        values.push(p.clone());
    }
    for j in 0..steps {
        let t = period - j as f64 * dt;
        let h = -dt;
        let k1 = field(t, &p);
        let k2 = field(t + 0.5 * h, &(&p + &k1 * (0.5 * h)));
        let k3 = field(t + 0.5 * h, &(&p + &k2 * (0.5 * h)));
        let k4 = field(t + h, &(&p + &k3 * h));
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        p = (&p + p.transpose()).unscale(2.0);
        if record {
            values.push(p.clone());
        }
    }
    (values, p)
}

/// Spectral radius of the one-period transition matrix of `dx/dt = A(t) x`.
pub fn monodromy_spectral_radius(
    a: &dyn Fn(f64) -> RMat,
    period: f64,
    steps: usize,
    n: usize,
) -> Result<f64> {
    let dt = period / steps as f64;
    let mut phi = RMat::identity(n, n);
    for j in 0..steps {
        let t = j as f64 * dt;
        let k1 = a(t) * &phi;
        let k2 = a(t + 0.5 * dt) * (&phi + &k1 * (0.5 * dt));
        let k3 = a(t + 0.5 * dt) * (&phi + &k2 * (0.5 * dt));
        let k4 = a(t + dt) * (&phi + &k3 * dt);
        phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    let eigs = complex_eigenvalues(&phi.map(|x| Complex64::new(x, 0.0)))?;
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}
