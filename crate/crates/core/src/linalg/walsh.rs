use super::{FourierSpectrum, ProbVector, SquareMatrix, MAX_QUBITS};
use crate::error::{Error, Result};

/// The ±1 matrix with entry `(x, s) = (-1)^{s·x}`.
pub fn walsh_matrix(n: usize) -> Result<SquareMatrix> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(Error::invalid(format!("walsh_matrix needs 1 <= n <= {MAX_QUBITS}, got {n}")));
    }
    let dim = 1usize << n;
    let mut w = SquareMatrix::zeros(dim);
    for x in 0..dim {
        for s in 0..dim {
            let sign = if (x & s).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            w.set(x, s, sign);
        }
    }
    Ok(w)
}

/// In-place unnormalized fast Walsh–Hadamard transform: `v <- W v`.
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `p̂(s) = 2^{-n} Σ_x p(x) (-1)^{s·x}`.
pub fn fourier_coeffs(p: &ProbVector) -> FourierSpectrum {
    let mut c = p.values().to_vec();
    fwht(&mut c);
    let scale = 1.0 / c.len() as f64;
    c.iter_mut().for_each(|v| *v *= scale);
    FourierSpectrum::from_raw(p.n_qubits(), c)
}

/// `p(x) = Σ_s p̂(s) (-1)^{s·x}`.
pub fn fourier_eval(spec: &FourierSpectrum) -> Vec<f64> {
    let mut v = spec.coeffs().to_vec();
    fwht(&mut v);
    v
}
