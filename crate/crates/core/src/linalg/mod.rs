//! Dense small-matrix algebra and probability-vector types.
//!
//! Basis indices are little-endian throughout the crate: bit `i` of an index
//! is the outcome of qubit `i`, and the printed basis string puts qubit 0 in
//! the rightmost position (`"01"` is index 1 on two qubits).

mod lu;
mod simplex;
mod walsh;

pub use lu::{numerical_rank, solve_dense, LuFactor};
pub use simplex::{project_simplex, project_to_prob};
pub use walsh::{fourier_coeffs, fourier_eval, fwht, walsh_matrix};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability-vector invariants.
pub const PROB_TOL: f64 = 1e-9;

/// Largest supported register width.
pub const MAX_QUBITS: usize = 10;

/// Index of a basis string such as `"0110"`. The rightmost character is qubit 0.
pub fn basis_index(s: &str, n_qubits: usize) -> Result<usize> {
    if s.len() != n_qubits {
        return Err(Error::invalid(format!(
            "basis string {s:?} has length {}, expected {n_qubits}",
            s.len()
        )));
    }
    s.bytes().try_fold(0usize, |acc, b| match b {
        b'0' => Ok(acc << 1),
        b'1' => Ok((acc << 1) | 1),
        _ => Err(Error::invalid(format!("basis string {s:?} contains non-binary characters"))),
    })
}

pub fn basis_string(index: usize, n_qubits: usize) -> String {
    format!("{index:0n_qubits$b}")
}

/// Number of qubits `n` with `2^n == len`, if `len` is such a power.
pub fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::invalid(format!("length {len} is not 2^n with n >= 1")));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::invalid(format!("{n} qubits exceeds the supported maximum {MAX_QUBITS}")));
    }
    Ok(n)
}

/// Distribution over the `2^n` computational basis outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector {
    n_qubits: usize,
    values: Vec<f64>,
}

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n_qubits = qubits_for_len(values.len())?;
        if let Some(bad) = values
            .iter()
            .find(|v| !v.is_finite() || **v < -PROB_TOL || **v > 1.0 + PROB_TOL)
        {
            return Err(Error::invalid(format!("probability entry {bad} outside [0, 1]")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { n_qubits, values })
    }

    /// Point mass on one basis state.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut values = vec![0.0; dim];
        values[index] = 1.0;
        Self::new(values)
    }

    pub fn uniform(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        Self::new(vec![1.0 / dim as f64; dim])
    }

    /// Empirical frequencies from outcome counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("cannot normalize zero counts"));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Probability that qubit `qubit` reads 0, as a one-qubit distribution.
    pub fn marginal(&self, qubit: usize) -> Result<ProbVector> {
        if qubit >= self.n_qubits {
            return Err(Error::invalid(format!("qubit {qubit} out of range")));
        }
        let p0: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(x, _)| (x >> qubit) & 1 == 0)
            .map(|(_, v)| v)
            .sum();
        let p0 = p0.clamp(0.0, 1.0);
        ProbVector::new(vec![p0, 1.0 - p0])
    }

    /// Total variation distance.
    pub fn total_variation(&self, other: &ProbVector) -> f64 {
        0.5 * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        ProbVector::new(values)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.values
    }
}

/// Walsh coefficients `p̂(s)` of a Boolean-input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n_qubits: usize,
    coeffs: Vec<f64>,
}

impl FourierSpectrum {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let n_qubits = qubits_for_len(coeffs.len())?;
        let bound = 1.0 / coeffs.len() as f64 + PROB_TOL;
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite() || c.abs() > bound) {
            return Err(Error::invalid(format!(
                "Fourier coefficient {bad} outside [-1/2^n, 1/2^n]"
            )));
        }
        Ok(Self { n_qubits, coeffs })
    }

    pub(crate) fn from_raw(n_qubits: usize, coeffs: Vec<f64>) -> Self {
        Self { n_qubits, coeffs }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multiply coefficient `s` by `(1 - eps)^(|s| m)`.
    pub fn attenuate(&self, eps: f64, m: u32) -> FourierSpectrum {
        let base = 1.0 - eps;
        let per_weight: Vec<f64> = (0..=self.n_qubits)
            .map(|w| base.powf(w as f64 * m as f64))
            .collect();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(s, c)| c * per_weight[s.count_ones() as usize])
            .collect();
        Self::from_raw(self.n_qubits, coeffs)
    }
}

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be positive"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok((0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn mul(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let d = self.dim;
        let mut out = SquareMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> SquareMatrix {
        let d = self.dim;
        let mut out = SquareMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j];
            }
        }
        out
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Nonnegative with every column summing to one (within `tol`).
    pub fn is_left_stochastic(&self, tol: f64) -> bool {
        self.data.iter().all(|&v| v >= -tol)
            && self.column_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Kronecker product of 2×2 factors where factor `i` acts on qubit `i`.
///
/// With little-endian indexing the result is `F_{n-1} ⊗ … ⊗ F_0`, i.e. entry
/// `(x, y)` is `∏_i F_i[x_i, y_i]`.
pub fn kron_chain(factors: &[SquareMatrix]) -> Result<SquareMatrix> {
    if factors.is_empty() {
        return Err(Error::invalid("kron_chain needs at least one factor"));
    }
    if let Some(f) = factors.iter().find(|f| f.dim() != 2) {
        return Err(Error::invalid(format!("kron_chain factor has dimension {}, expected 2", f.dim())));
    }
    if factors.len() > MAX_QUBITS {
        return Err(Error::invalid(format!("{} factors exceeds {MAX_QUBITS}", factors.len())));
    }
    let dim = 1usize << factors.len();
    let mut out = SquareMatrix::zeros(dim);
    for x in 0..dim {
        for y in 0..dim {
            let v = factors
                .iter()
                .enumerate()
                .map(|(i, f)| f.get((x >> i) & 1, (y >> i) & 1))
                .product();
            out.set(x, y, v);
        }
    }
    Ok(out)
}
