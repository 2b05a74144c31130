use super::ProbVector;
use crate::error::{Error, Result};

/// Euclidean projection onto `{x : x >= 0, Σ x = 1}`.
///
/// Sort-and-threshold: find the largest `k` such that the `k` biggest entries
/// stay positive after a common shift `τ`, then clip at zero.
pub fn project_simplex(point: &[f64]) -> Result<Vec<f64>> {
    if point.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if point.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cannot project a vector with NaN or infinite entries"));
    }
    // already feasible up to summation rounding: leave it untouched
    let slack = point.len() as f64 * f64::EPSILON;
    if point.iter().all(|v| *v >= 0.0) && (point.iter().sum::<f64>() - 1.0).abs() <= slack {
        return Ok(point.to_vec());
    }
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    Ok(point.iter().map(|v| (v - tau).max(0.0)).collect())
}

/// [`project_simplex`] for vectors of length `2^n`.
pub fn project_to_prob(point: &[f64]) -> Result<ProbVector> {
    let mut x = project_simplex(point)?;
    // rounding can leave the sum a few ulps off one
    let total: f64 = x.iter().sum();
    if (total - 1.0).abs() > x.len() as f64 * f64::EPSILON {
        x.iter_mut().for_each(|v| *v /= total);
    }
    ProbVector::new(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) {
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn examples() {
        close(&project_simplex(&[1.2, -0.2]).unwrap(), &[1.0, 0.0]);
        close(&project_simplex(&[0.3, 0.7]).unwrap(), &[0.3, 0.7]);
        let third = 1.0 / 3.0;
        close(&project_simplex(&[0.5, 0.5, 0.5]).unwrap(), &[third, third, third]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(project_simplex(&[f64::NAN, 1.0]).is_err());
        assert!(project_simplex(&[f64::INFINITY, 1.0]).is_err());
        assert!(project_simplex(&[]).is_err());
    }

    fn dist2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
    }

    /// Every point of the simplex grid with step 1/steps in 4 dimensions.
    fn simplex_grid_4(steps: usize) -> Vec<[f64; 4]> {
        let h = 1.0 / steps as f64;
        let mut out = Vec::new();
        for a in 0..=steps {
            for b in 0..=steps - a {
                for c in 0..=steps - a - b {
                    let d = steps - a - b - c;
                    out.push([a as f64 * h, b as f64 * h, c as f64 * h, d as f64 * h]);
                }
            }
        }
        out
    }

    #[test]
    fn beats_every_grid_point() {
        // 37 steps gives 9880 grid points
        let grid = simplex_grid_4(37);
        assert!(grid.len() >= 9_000);
        let mut rng_state = 12345u64;
        let mut next = || {
            rng_state = crate::rng::mix64(rng_state);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..50 {
            let p: Vec<f64> = (0..4).map(|_| next()).collect();
            let proj = project_simplex(&p).unwrap();
            let best = dist2(&proj, &p);
            for g in &grid {
                assert!(best <= dist2(g, &p) + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn lands_on_simplex_and_is_idempotent(p in prop::collection::vec(-3.0f64..3.0, 1..40)) {
            let x = project_simplex(&p).unwrap();
            prop_assert!(x.iter().all(|v| *v >= 0.0));
            prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let y = project_simplex(&x).unwrap();
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
