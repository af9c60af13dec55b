//! Truncated block-Toeplitz operator algebra.
//!
//! A T-periodic matrix function `A(t)` maps to the operator whose block at
//! row harmonic `r` and column harmonic `c` is the Fourier coefficient
//! `A_{r-c}`. Operators carry coefficient bands up to order `2h` while the
//! dense realization acts on the truncated state of `2h + 1` harmonics, so
//! central bands of products stay exact for band-limited symbols.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::PhasorConfig;
use crate::error::{Error, Result};
use crate::phasor::PhasorVector;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

/// One period of a (possibly matrix-valued) T-periodic function on a uniform
/// grid covering `[t0, t0 + T]` endpoint-inclusive.
#[derive(Debug, Clone)]
pub struct PeriodicMatrixSamples {
    pub rows: usize,
    pub cols: usize,
    pub times: Vec<f64>,
    pub values: Vec<CMat>,
}

impl PeriodicMatrixSamples {
    pub fn from_complex(times: Vec<f64>, values: Vec<CMat>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 3 {
            return Err(Error::config(
                "period samples need matching times and values",
            ));
        }
        let rows = values[0].nrows();
        let cols = values[0].ncols();
        if values
            .iter()
            .any(|v| v.nrows() != rows || v.ncols() != cols)
        {
            return Err(Error::config("period samples must share dimensions"));
        }
        Ok(Self {
            rows,
            cols,
            times,
            values,
        })
    }

    pub fn from_real(times: Vec<f64>, values: Vec<RMat>) -> Result<Self> {
        let complex = values
            .into_iter()
            .map(|v| v.map(|x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_complex(times, complex)
    }

    /// Samples a real matrix function on the configured one-period grid
    /// `t_j = j T / N`, `j = 0..=N`.
    pub fn from_fn(config: &PhasorConfig, f: impl Fn(f64) -> RMat) -> Result<Self> {
        let n = config.samples_per_period;
        let times: Vec<f64> = (0..=n).map(|j| j as f64 * config.step()).collect();
        let values: Vec<RMat> = times.iter().map(|&t| f(t)).collect();
        Self::from_real(times, values)
    }

    /// Scalar convenience wrapper around [`PeriodicMatrixSamples::from_fn`].
    pub fn from_scalar_fn(config: &PhasorConfig, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(config, |t| RMat::from_element(1, 1, f(t)))
    }

    /// Constant matrix on the configured grid.
    pub fn constant(config: &PhasorConfig, m: RMat) -> Result<Self> {
        Self::from_fn(config, |_| m.clone())
    }

    fn endpoint_mismatch(&self) -> f64 {
        let first = &self.values[0];
        let last = &self.values[self.values.len() - 1];
        (first - last).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    /// Pointwise product samples `self(t) * rhs(t)`.
    pub fn pointwise_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows || self.times.len() != rhs.times.len() {
            return Err(Error::config(
                "pointwise product needs matching grids and dims",
            ));
        }
        let values = self
            .values
            .iter()
            .zip(rhs.values.iter())
            .map(|(a, b)| a * b)
            .collect();
        Self::from_complex(self.times.clone(), values)
    }
}

/// Structural summary of a square operator.
#[derive(Debug, Clone, Copy)]
pub struct StructureReport {
    pub hermitian: bool,
    pub positive_definite: bool,
    pub toeplitz_defect: f64,
}

/// Truncated block-Toeplitz operator with coefficient band `|k| <= 2h`.
#[derive(Debug, Clone)]
pub struct ToeplitzOperator {
    pub config: PhasorConfig,
    pub block_rows: usize,
    pub block_cols: usize,
    /// Fourier blocks `A_k`; slot `0` holds `k = -2h`.
    pub blocks: Vec<CMat>,
    /// Dense realization on `2h + 1` harmonics, block `(r, c) = A_{r-c}`.
    pub dense: CMat,
    /// Re-Toeplitzification defect inherited from construction (zero for
    /// operators built directly from Fourier coefficients).
    pub defect: f64,
}

impl ToeplitzOperator {
    pub fn band(&self) -> usize {
        2 * self.config.truncation
    }

    pub fn block(&self, k: i64) -> &CMat {
        &self.blocks[(k + self.band() as i64) as usize]
    }

    /// Assembles the dense truncation from Fourier blocks.
    fn assemble(config: &PhasorConfig, n: usize, m: usize, blocks: &[CMat]) -> CMat {
        let p = config.num_phasors();
        let band = 2 * config.truncation as i64;
        let mut dense = CMat::zeros(n * p, m * p);
        for r in 0..p {
            for c in 0..p {
                let k = r as i64 - c as i64;
                if k.abs() <= band {
                    let blk = &blocks[(k + band) as usize];
                    dense.view_mut((r * n, c * m), (n, m)).copy_from(blk);
                }
            }
        }
        dense
    }

    pub fn from_blocks(
        config: PhasorConfig,
        block_rows: usize,
        block_cols: usize,
        blocks: Vec<CMat>,
    ) -> Result<Self> {
        let expect = 4 * config.truncation + 1;
        if blocks.len() != expect {
            return Err(Error::config(format!(
                "expected {expect} Fourier blocks for band 2h, got {}",
                blocks.len()
            )));
        }
        if blocks
            .iter()
            .any(|b| b.nrows() != block_rows || b.ncols() != block_cols)
        {
            return Err(Error::config("Fourier blocks must share dimensions"));
        }
        let dense = Self::assemble(&config, block_rows, block_cols, &blocks);
        Ok(Self {
            config,
            block_rows,
            block_cols,
            blocks,
            dense,
            defect: 0.0,
        })
    }

    /// Operator of a constant matrix: block-diagonal repetition.
    pub fn constant(config: PhasorConfig, m: &RMat) -> Self {
        let band = 2 * config.truncation;
        let mut blocks = vec![CMat::zeros(m.nrows(), m.ncols()); 2 * band + 1];
        blocks[band] = m.map(|x| Complex64::new(x, 0.0));
        Self::from_blocks(config, m.nrows(), m.ncols(), blocks).expect("constant blocks are square")
    }

    pub fn identity(config: PhasorConfig, n: usize) -> Self {
        Self::constant(config, &RMat::identity(n, n))
    }

    /// Builds the operator of a scalar symbol given as phasors; coefficients
    /// beyond the phasor truncation are zero.
    pub fn from_scalar_phasors(config: PhasorConfig, phasors: &PhasorVector) -> Result<Self> {
        if phasors.dim != 1 {
            return Err(Error::config("scalar operator needs 1-dimensional phasors"));
        }
        if phasors.truncation > 2 * config.truncation {
            return Err(Error::config(
                "phasor order exceeds the operator coefficient band",
            ));
        }
        let band = 2 * config.truncation;
        let mut blocks = vec![CMat::zeros(1, 1); 2 * band + 1];
        let h = phasors.truncation as i64;
        for k in -h..=h {
            blocks[(k + band as i64) as usize] = CMat::from_element(1, 1, phasors.get(k)[0]);
        }
        Self::from_blocks(config, 1, 1, blocks)
    }

    /// Conjugate-transpose operator.
    pub fn adjoint(&self) -> Self {
        let band = self.band();
        let blocks: Vec<CMat> = (0..=2 * band)
            .map(|slot| self.blocks[2 * band - slot].adjoint())
            .collect();
        Self {
            config: self.config,
            block_rows: self.block_cols,
            block_cols: self.block_rows,
            dense: Self::assemble(&self.config, self.block_cols, self.block_rows, &blocks),
            blocks,
            defect: self.defect,
        }
    }

    /// Representative value `sum_{|k| <= 2h} A_k exp(i w k t)`.
    pub fn representative_at(&self, t: f64) -> CMat {
        let band = self.band() as i64;
        let mut out = CMat::zeros(self.block_rows, self.block_cols);
        for k in -band..=band {
            let phase = Complex64::from_polar(1.0, self.config.omega * k as f64 * t);
            out += self.block(k) * phase;
        }
        out
    }

    /// Real part of the representative; meaningful when the symbol is real.
    pub fn representative_real_at(&self, t: f64) -> RMat {
        self.representative_at(t).map(|z| z.re)
    }

    /// Max deviation from `A_{-k} = conj(A_k)`, which characterizes real
    /// representatives.
    pub fn real_symbol_defect(&self) -> f64 {
        let band = self.band() as i64;
        let mut worst: f64 = 0.0;
        for k in 0..=band {
            let a = self.block(k);
            let b = self.block(-k);
            for i in 0..self.block_rows {
                for j in 0..self.block_cols {
                    worst = worst.max((a[(i, j)].conj() - b[(i, j)]).norm());
                }
            }
        }
        worst
    }

    /// Truncated operator product.
    ///
    /// Coefficients are the convolution of the carried bands, truncated back
    /// to `|k| <= 2h`; that reproduces the band of the product symbol exactly
    /// whenever the factors are band-limited to `h`. The defect recorded on
    /// the result measures how far the plain dense product deviates from
    /// block-Toeplitz structure, i.e. the truncation tail.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.block_cols != rhs.block_rows {
            return Err(Error::config(format!(
                "block dimension mismatch in product: {}x{} times {}x{}",
                self.block_rows, self.block_cols, rhs.block_rows, rhs.block_cols
            )));
        }
        if self.config != rhs.config {
            return Err(Error::config(
                "operator product needs matching configurations",
            ));
        }
        let band = self.band() as i64;
        let mut blocks = Vec::with_capacity(2 * self.band() + 1);
        for k in -band..=band {
            let mut acc = CMat::zeros(self.block_rows, rhs.block_cols);
            for p in (-band).max(k - band)..=band.min(k + band) {
                acc += self.block(p) * rhs.block(k - p);
            }
            blocks.push(acc);
        }
        let dense_product = &self.dense * &rhs.dense;
        let defect = block_toeplitz_defect(&dense_product, self.block_rows, rhs.block_cols);
        let mut out = Self::from_blocks(self.config, self.block_rows, rhs.block_cols, blocks)?;
        out.defect = defect;
        Ok(out)
    }

    /// Operator inverse via pointwise inversion of the representative.
    ///
    /// The grid proxy of the invertibility condition requires
    /// `|det A(t_j)| >= eta` at every quadrature node.
    pub fn inverse(&self, eta: f64) -> Result<Self> {
        if self.block_rows != self.block_cols {
            return Err(Error::config("operator inverse needs square blocks"));
        }
        if !(eta > 0.0) {
            return Err(Error::config("eta must be positive"));
        }
        let n = self.config.samples_per_period;
        let mut times = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(n + 1);
        let mut worst = (f64::INFINITY, 0.0);
        for j in 0..=n {
            let t = j as f64 * self.config.step();
            let rep = self.representative_at(t);
            let det = rep.clone().lu().determinant();
            if det.norm() < worst.0 {
                worst = (det.norm(), t);
            }
            times.push(t);
            values.push(rep);
        }
        if worst.0 < eta {
            return Err(Error::numerical(format!(
                "near-singular representative: |det| = {:.3e} < eta = {:.3e} at t = {:.6}",
                worst.0, eta, worst.1
            )));
        }
        let inverted: Vec<CMat> = values
            .into_iter()
            .map(|v| {
                v.try_inverse()
                    .ok_or_else(|| Error::numerical("representative inversion failed"))
            })
            .collect::<Result<_>>()?;
        let samples = PeriodicMatrixSamples::from_complex(times, inverted)?;
        toeplitz_of(&samples, &self.config)
    }

    /// Hermitian / positive-definite / Toeplitz-structure summary of the
    /// dense realization.
    pub fn check_structure(&self) -> Result<StructureReport> {
        check_structure_dense(&self.dense, self.block_rows, self.block_cols)
    }

    pub fn state_dim(&self) -> usize {
        self.block_rows * self.config.num_phasors()
    }

    /// Applies the dense truncation to a stacked phasor vector.
    pub fn apply(&self, x: &PhasorVector) -> Result<PhasorVector> {
        if x.dim != self.block_cols || x.truncation != self.config.truncation {
            return Err(Error::config("operator/vector dimension mismatch"));
        }
        let y = &self.dense * x.stacked();
        PhasorVector::from_stacked(self.block_rows, self.config.truncation, &y)
    }
}

/// Fourier coefficients of one-period samples, up to order `2h`.
///
/// The function must be T-periodic: the first and last sample have to agree.
pub fn toeplitz_of(
    samples: &PeriodicMatrixSamples,
    config: &PhasorConfig,
) -> Result<ToeplitzOperator> {
    config.validate()?;
    let m = samples.times.len();
    if m < 3 {
        return Err(Error::config("need at least 3 samples over the period"));
    }
    let span = samples.times[m - 1] - samples.times[0];
    if (span - config.period).abs() > 1e-6 * config.period {
        return Err(Error::config(format!(
            "samples span {span} instead of one period {}",
            config.period
        )));
    }
    let tol = 1e-6 * samples.max_abs().max(1.0);
    let mismatch = samples.endpoint_mismatch();
    if mismatch > tol {
        return Err(Error::config(format!(
            "not T-periodic: endpoint mismatch {mismatch:.3e} exceeds tolerance {tol:.3e}"
        )));
    }
    let band = 2 * config.truncation as i64;
    let step = span / (m - 1) as f64;
    let scale = step / config.period;
    let mut blocks = Vec::with_capacity((2 * band + 1) as usize);
    for k in -band..=band {
        let mut acc = CMat::zeros(samples.rows, samples.cols);
        for (j, &t) in samples.times.iter().enumerate() {
            let weight = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
            let phase = Complex64::from_polar(weight * scale, -config.omega * k as f64 * t);
            acc += &samples.values[j] * phase;
        }
        blocks.push(acc);
    }
    ToeplitzOperator::from_blocks(*config, samples.rows, samples.cols, blocks)
}

/// Dense image of the differentiation modulation: block-diagonal
/// `i w k Id_n` for `k = -h..h`.
pub fn n_operator(config: &PhasorConfig, dim: usize) -> CMat {
    let p = config.num_phasors();
    let mut out = CMat::zeros(dim * p, dim * p);
    for slot in 0..p {
        let k = config.harmonic_of_slot(slot) as f64;
        let v = Complex64::new(0.0, config.omega * k);
        for i in 0..dim {
            out[(slot * dim + i, slot * dim + i)] = v;
        }
    }
    out
}

/// Max deviation of a dense matrix from constancy along its block diagonals.
pub fn block_toeplitz_defect(m: &CMat, block_rows: usize, block_cols: usize) -> f64 {
    let p_rows = m.nrows() / block_rows;
    let p_cols = m.ncols() / block_cols;
    let mut worst: f64 = 0.0;
    for d in -(p_rows as i64 - 1)..=(p_cols as i64 - 1) {
        let mut avg = CMat::zeros(block_rows, block_cols);
        let mut count = 0usize;
        for r in 0..p_rows {
            let c = r as i64 + d;
            if c < 0 || c >= p_cols as i64 {
                continue;
            }
            avg += m.view(
                (r * block_rows, c as usize * block_cols),
                (block_rows, block_cols),
            );
            count += 1;
        }
        if count == 0 {
            continue;
        }
        avg.unscale_mut(count as f64);
        for r in 0..p_rows {
            let c = r as i64 + d;
            if c < 0 || c >= p_cols as i64 {
                continue;
            }
            let view = m.view(
                (r * block_rows, c as usize * block_cols),
                (block_rows, block_cols),
            );
            let dev = (view - &avg).iter().map(|z| z.norm()).fold(0.0, f64::max);
            worst = worst.max(dev);
        }
    }
    worst
}

/// Block-diagonal averages of a dense matrix, as Fourier blocks over the
/// carried band. This is the re-Toeplitzification step used after solves.
pub fn retoeplitzify(
    m: &CMat,
    config: &PhasorConfig,
    block_rows: usize,
    block_cols: usize,
) -> Result<(ToeplitzOperator, f64)> {
    let p = config.num_phasors();
    if m.nrows() != block_rows * p || m.ncols() != block_cols * p {
        return Err(Error::config(
            "dense dimensions do not match the block grid",
        ));
    }
    let band = 2 * config.truncation as i64;
    let mut blocks = Vec::with_capacity((2 * band + 1) as usize);
    for k in -band..=band {
        let mut avg = CMat::zeros(block_rows, block_cols);
        let mut count = 0usize;
        for r in 0..p {
            let c = r as i64 - k;
            if c < 0 || c >= p as i64 {
                continue;
            }
            avg += m.view(
                (r * block_rows, c as usize * block_cols),
                (block_rows, block_cols),
            );
            count += 1;
        }
        if count > 0 {
            avg.unscale_mut(count as f64);
        }
        blocks.push(avg);
    }
    let defect = block_toeplitz_defect(m, block_rows, block_cols);
    let mut op = ToeplitzOperator::from_blocks(*config, block_rows, block_cols, blocks)?;
    op.defect = defect;
    Ok((op, defect))
}

/// Structure checks on a raw dense matrix organized in `block_rows x
/// block_cols` blocks.
pub fn check_structure_dense(
    m: &CMat,
    block_rows: usize,
    block_cols: usize,
) -> Result<StructureReport> {
    if m.nrows() != m.ncols() {
        return Err(Error::config("structure check needs a square matrix"));
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let herm_defect = (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let hermitian = herm_defect <= 1e-9 * scale;
    let herm_part = (m + m.adjoint()).unscale(2.0);
    let eigs = herm_part.symmetric_eigen().eigenvalues;
    let max_mag = eigs.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let positive_definite = min_eig > 1e-9 * max_mag.max(1e-300);
    Ok(StructureReport {
        hermitian,
        positive_definite,
        toeplitz_defect: block_toeplitz_defect(m, block_rows, block_cols),
    })
}

/// Hermitian-part smallest eigenvalue; convenience for positivity checks on
/// grid samples.
pub fn min_symmetric_eigenvalue(m: &RMat) -> f64 {
    let sym = (m + m.transpose()).unscale(2.0);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Kronecker product lifting a scalar-block operator onto a state block,
/// `kron(S_dense, M)` with the phasor index slowest.
pub fn kron_with_matrix(scalar_dense: &CMat, m: &RMat) -> CMat {
    let mc = m.map(|x| Complex64::new(x, 0.0));
    scalar_dense.kronecker(&mc)
}

/// Stacks phasor-major vectors of two operators' shared grid; helper for
/// assembling block-partitioned vectors like `(I, V)`.
pub fn stack_phasor_vectors(parts: &[&PhasorVector]) -> Result<PhasorVector> {
    if parts.is_empty() {
        return Err(Error::config("cannot stack zero phasor vectors"));
    }
    let h = parts[0].truncation;
    if parts.iter().any(|p| p.truncation != h) {
        return Err(Error::config(
            "stacked phasor vectors must share truncation",
        ));
    }
    let dim: usize = parts.iter().map(|p| p.dim).sum();
    let mut out = PhasorVector::zeros(dim, h);
    for slot in 0..out.num_phasors() {
        let mut v = DVector::<Complex64>::zeros(dim);
        let mut at = 0;
        for p in parts {
            v.rows_mut(at, p.dim).copy_from(&p.coeffs[slot]);
            at += p.dim;
        }
        out.coeffs[slot] = v;
    }
    Ok(out)
}
