//! Harmonic models of linear time-periodic and bilinear affine systems.
//!
//! A T-periodic system lifts to a constant (LTI) model on the truncated
//! phasor state; the bilinear class keeps the control as a scalar symbol
//! entering through a Kronecker product. The phasor index varies slowest in
//! all stacked objects: the state is `(X_{-h}, ..., X_h)` with blocks of
//! size `n`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::PhasorConfig;
use crate::error::{Error, Result};
use crate::phasor::PhasorVector;
use crate::toeplitz::{
    kron_with_matrix, n_operator, toeplitz_of, PeriodicMatrixSamples, ToeplitzOperator,
};

type CMat = DMatrix<Complex64>;
type RMat = DMatrix<f64>;

/// Linear time-periodic plant given by one period of samples of `A(t)` and
/// `B(t)`.
#[derive(Debug, Clone)]
pub struct LtpSystem {
    pub dim_state: usize,
    pub dim_input: usize,
    pub a_samples: PeriodicMatrixSamples,
    pub b_samples: PeriodicMatrixSamples,
    pub period: f64,
}

impl LtpSystem {
    pub fn new(
        a_samples: PeriodicMatrixSamples,
        b_samples: PeriodicMatrixSamples,
        period: f64,
    ) -> Result<Self> {
        if a_samples.rows != a_samples.cols {
            return Err(Error::config("A(t) samples must be square"));
        }
        if b_samples.rows != a_samples.rows {
            return Err(Error::config(
                "B(t) row count must match the state dimension",
            ));
        }
        if a_samples.times.len() != b_samples.times.len() {
            return Err(Error::config("A(t) and B(t) must share the sample grid"));
        }
        Ok(Self {
            dim_state: a_samples.rows,
            dim_input: b_samples.cols,
            a_samples,
            b_samples,
            period,
        })
    }
}

/// Plant class `dx/dt = (A_ind + s A_dep) x + (B_ind + s B_dep) w` with a
/// bounded scalar control `s` and a T-periodic exogenous input `w`.
#[derive(Debug, Clone)]
pub struct BilinearAffineSystem {
    pub a_ind: RMat,
    pub a_dep: RMat,
    pub b_ind: RMat,
    pub b_dep: RMat,
    pub control_bounds: (f64, f64),
    /// Phasors of the nominal T-periodic exogenous input.
    pub w_phasors: PhasorVector,
    /// State-space column through which load-side current disturbances
    /// enter (zero when the plant has no such channel).
    pub load_injection: DMatrix<f64>,
}

impl BilinearAffineSystem {
    pub fn new(
        a_ind: RMat,
        a_dep: RMat,
        b_ind: RMat,
        b_dep: RMat,
        control_bounds: (f64, f64),
        w_phasors: PhasorVector,
    ) -> Result<Self> {
        let n = a_ind.nrows();
        if a_ind.ncols() != n || a_dep.nrows() != n || a_dep.ncols() != n {
            return Err(Error::config(
                "A_ind and A_dep must be square with equal size",
            ));
        }
        if b_ind.nrows() != n || b_dep.nrows() != n || b_ind.ncols() != b_dep.ncols() {
            return Err(Error::config("B_ind and B_dep must be n x m"));
        }
        if !(control_bounds.0 < control_bounds.1) {
            return Err(Error::config("control bounds must have nonempty interior"));
        }
        if w_phasors.dim != b_ind.ncols() {
            return Err(Error::config(
                "w phasor dimension must match the input count",
            ));
        }
        if w_phasors.conjugate_symmetry_defect() > 1e-9 {
            return Err(Error::config("w phasors must be conjugate symmetric"));
        }
        let load_injection = DMatrix::zeros(n, 1);
        Ok(Self {
            a_ind,
            a_dep,
            b_ind,
            b_dep,
            control_bounds,
            w_phasors,
            load_injection,
        })
    }

    pub fn dim_state(&self) -> usize {
        self.a_ind.nrows()
    }

    pub fn dim_input(&self) -> usize {
        self.b_ind.ncols()
    }
}

/// Truncated harmonic model of a bilinear affine plant.
#[derive(Debug, Clone)]
pub struct HarmonicBilinearModel {
    pub config: PhasorConfig,
    pub a_ind_op: ToeplitzOperator,
    pub b_ind_op: ToeplitzOperator,
    pub a_dep: RMat,
    pub b_dep: RMat,
    /// Modulation operator on the stacked state.
    pub n_op: CMat,
    /// Nominal exogenous phasors at the model truncation.
    pub w: PhasorVector,
    /// Admissible interval of the scalar control, inherited from the plant.
    pub control_bounds: (f64, f64),
    pub dim_state: usize,
    pub dim_input: usize,
}

impl HarmonicBilinearModel {
    /// State matrix `A(S) = A_ind + S (x) A_dep` for a scalar control symbol.
    pub fn a_of(&self, s: &ToeplitzOperator) -> Result<CMat> {
        self.check_scalar(s)?;
        Ok(&self.a_ind_op.dense + kron_with_matrix(&s.dense, &self.a_dep))
    }

    /// Input matrix `B(S) = B_ind + S (x) B_dep`.
    pub fn b_of(&self, s: &ToeplitzOperator) -> Result<CMat> {
        self.check_scalar(s)?;
        Ok(&self.b_ind_op.dense + kron_with_matrix(&s.dense, &self.b_dep))
    }

    /// Harmonic drift `A(S) - N`.
    pub fn drift(&self, s: &ToeplitzOperator) -> Result<CMat> {
        Ok(self.a_of(s)? - &self.n_op)
    }

    pub fn state_dim(&self) -> usize {
        self.dim_state * self.config.num_phasors()
    }

    fn check_scalar(&self, s: &ToeplitzOperator) -> Result<()> {
        if s.block_rows != 1 || s.block_cols != 1 {
            return Err(Error::config("control symbol must be scalar"));
        }
        if s.config.truncation != self.config.truncation {
            return Err(Error::config(
                "control symbol truncation must match the model",
            ));
        }
        Ok(())
    }
}

/// Lifts a T-periodic linear system to its constant harmonic matrices,
/// returning `(A_op - N, B_op)` as dense truncations.
pub fn harmonic_ltv(sys: &LtpSystem, config: &PhasorConfig) -> Result<(CMat, CMat)> {
    if (sys.period - config.period).abs() > 1e-9 * config.period {
        return Err(Error::config(format!(
            "system period {} does not match window {}",
            sys.period, config.period
        )));
    }
    let a_op = toeplitz_of(&sys.a_samples, config)?;
    let b_op = toeplitz_of(&sys.b_samples, config)?;
    let drift = &a_op.dense - n_operator(config, sys.dim_state);
    Ok((drift, b_op.dense))
}

/// Builds the truncated harmonic model of a bilinear affine plant. The
/// control-dependent parts are materialized on demand through the Kronecker
/// lift.
pub fn harmonic_bilinear(
    sys: &BilinearAffineSystem,
    config: &PhasorConfig,
) -> Result<HarmonicBilinearModel> {
    config.validate()?;
    let a_ind_op = ToeplitzOperator::constant(*config, &sys.a_ind);
    let b_ind_op = ToeplitzOperator::constant(*config, &sys.b_ind);
    let n_op = n_operator(config, sys.dim_state());
    Ok(HarmonicBilinearModel {
        config: *config,
        a_ind_op,
        b_ind_op,
        a_dep: sys.a_dep.clone(),
        b_dep: sys.b_dep.clone(),
        n_op,
        w: sys.w_phasors.resized(config.truncation),
        control_bounds: sys.control_bounds,
        dim_state: sys.dim_state(),
        dim_input: sys.dim_input(),
    })
}

/// Harmonic vector field `(A(S) - N) X + B(S) W`.
pub fn harmonic_rhs(
    model: &HarmonicBilinearModel,
    x: &PhasorVector,
    s: &ToeplitzOperator,
    w: &PhasorVector,
) -> Result<PhasorVector> {
    if x.dim != model.dim_state || x.truncation != model.config.truncation {
        return Err(Error::config(
            "state phasors do not match the model dimensions",
        ));
    }
    if w.dim != model.dim_input || w.truncation != model.config.truncation {
        return Err(Error::config(
            "input phasors do not match the model dimensions",
        ));
    }
    let drift = model.drift(s)?;
    let b = model.b_of(s)?;
    let stacked = drift * x.stacked() + b * w.stacked();
    PhasorVector::from_stacked(model.dim_state, model.config.truncation, &stacked)
}
