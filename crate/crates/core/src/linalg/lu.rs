use super::SquareMatrix;
use crate::error::{Error, Result};

/// Largest dimension accepted by the dense solver (2^10).
pub const MAX_SOLVE_DIM: usize = 1 << 10;

/// `PA = LU` with partial pivoting. `L` is unit lower triangular and shares
/// storage with `U`.
#[derive(Debug, Clone)]
pub struct LuFactor {
    dim: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    norm_one: f64,
}

impl LuFactor {
    pub fn new(m: &SquareMatrix) -> Result<Self> {
        let n = m.dim();
        if n > MAX_SOLVE_DIM {
            return Err(Error::invalid(format!("dense solve limited to dim {MAX_SOLVE_DIM}, got {n}")));
        }
        if m.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let mut lu = m.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = m.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tiny {
                return Err(Error::Singular { condition: f64::INFINITY });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        let factor = Self { dim: n, lu, perm, norm_one: m.norm_one() };
        let condition = factor.condition_estimate();
        if !condition.is_finite() || condition > 1.0 / f64::EPSILON {
            return Err(Error::Singular { condition });
        }
        Ok(factor)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        Ok(x)
    }

    /// Solve `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        Ok(x)
    }

    /// Hager's estimate of the 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁`.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.dim;
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let Ok(y) = self.solve(&x) else { return f64::INFINITY };
            let norm_y: f64 = y.iter().map(|v| v.abs()).sum();
            if !norm_y.is_finite() {
                return f64::INFINITY;
            }
            if norm_y <= est {
                break;
            }
            est = norm_y;
            let sign: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let Ok(z) = self.solve_transpose(&sign) else { return f64::INFINITY };
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.abs()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        est * self.norm_one
    }
}

/// Solve `M x = b` by LU with partial pivoting.
pub fn solve_dense(m: &SquareMatrix, b: &[f64]) -> Result<Vec<f64>> {
    LuFactor::new(m)?.solve(b)
}

/// Rank by Gaussian elimination with complete pivoting. A pivot counts when
/// it exceeds `rel_tol` times the largest entry of the input.
pub fn numerical_rank(m: &SquareMatrix, rel_tol: f64) -> usize {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = scale * rel_tol;
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for i in k..n {
            for j in k..n {
                let v = a[i * n + j].abs();
                if v > best {
                    (pi, pj, best) = (i, j, v);
                }
            }
        }
        if best <= tol {
            return k;
        }
        for j in 0..n {
            a.swap(k * n + j, pi * n + j);
        }
        for i in 0..n {
            a.swap(i * n + k, i * n + pj);
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / pivot;
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lcg_matrix(dim: usize, seed: u64) -> SquareMatrix {
        let mut s = seed;
        let mut data = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            s = crate::rng::mix64(s);
            data.push((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
        }
        let mut m = SquareMatrix::new(dim, data).unwrap();
        // diagonal dominance keeps it well conditioned
        for i in 0..dim {
            m.set(i, i, m.get(i, i) + dim as f64 * 0.5);
        }
        m
    }

    #[test]
    fn identity_solve() {
        let b = vec![0.1, -2.0, 3.5, 7.0];
        assert_eq!(solve_dense(&SquareMatrix::identity(4), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_solve() {
        let m = SquareMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]]).unwrap();
        assert_eq!(solve_dense(&m, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn random_residual() {
        for seed in 0..10 {
            let m = lcg_matrix(16, seed);
            let b: Vec<f64> = (0..16).map(|i| (i as f64).cos()).collect();
            let x = solve_dense(&m, &b).unwrap();
            let r = m.mul_vec(&x).unwrap();
            let bmax = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (ri, bi) in r.iter().zip(&b) {
                assert!((ri - bi).abs() <= 1e-8 * bmax);
            }
        }
    }

    #[test]
    fn transpose_solve() {
        let m = lcg_matrix(8, 3);
        let b: Vec<f64> = (0..8).map(|i| i as f64 - 3.0).collect();
        let x = LuFactor::new(&m).unwrap().solve_transpose(&b).unwrap();
        let r = m.transpose().mul_vec(&x).unwrap();
        for (ri, bi) in r.iter().zip(&b) {
            assert_abs_diff_eq!(ri, bi, epsilon = 1e-10);
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let m = SquareMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(solve_dense(&m, &[3.0, 4.0]).unwrap(), vec![4.0, 3.0]);
    }

    #[test]
    fn singular_reported() {
        let m = SquareMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(solve_dense(&m, &[1.0, 1.0]), Err(Error::Singular { .. })));
        let near = SquareMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-17]]).unwrap();
        assert!(matches!(solve_dense(&near, &[1.0, 1.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn condition_estimate_is_exact_for_diagonal() {
        let m = SquareMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1e-3]]).unwrap();
        let c = LuFactor::new(&m).unwrap().condition_estimate();
        assert_abs_diff_eq!(c, 1e3, epsilon = 1e-9);
    }
}
