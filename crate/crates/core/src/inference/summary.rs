use crate::error::{Error, Result};

use super::kde::gaussian_kde;

/// Resolution of the marginal peak search on `[0, 1]`.
pub const MAP_GRID_STEP: f64 = 1e-4;

fn check(samples: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = samples.first() else {
        return Err(Error::invalid("posterior summary of an empty sample set"));
    };
    let d = first.len();
    if let Some(bad) = samples.iter().find(|s| s.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
    }
    Ok(d)
}

pub fn marginal_means(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = check(samples)?;
    let n = samples.len() as f64;
    Ok((0..d).map(|k| samples.iter().map(|s| s[k]).sum::<f64>() / n).collect())
}

/// Index of the sample nearest `point` in Euclidean distance; first wins ties.
fn nearest(samples: &[Vec<f64>], point: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, s) in samples.iter().enumerate() {
        let d: f64 = s.iter().zip(point).map(|(a, b)| (a - b).powi(2)).sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// The sample closest to the vector of marginal means.
pub fn posterior_mean_tuple(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let means = marginal_means(samples)?;
    Ok(samples[nearest(samples, &means)].clone())
}

/// Mode of each marginal's KDE by grid search over `[0, 1]`. Marginals
/// without spread are their own mode.
pub fn marginal_peaks(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = check(samples)?;
    let steps = (1.0 / MAP_GRID_STEP).round() as usize;
    (0..d)
        .map(|k| {
            let column: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            let kde = match gaussian_kde(&column) {
                Ok(kde) => kde,
                Err(Error::DegenerateSamples(_)) => return Ok(column[0]),
                Err(e) => return Err(e),
            };
            let mut grid: Vec<f64> = (0..=steps).map(|i| i as f64 * MAP_GRID_STEP).collect();
            // narrow kernels can fall between grid points; add a local grid
            let h = kde.bandwidth();
            if h < 4.0 * MAP_GRID_STEP {
                let (lo, hi) = kde.range();
                let fine = h / 4.0;
                let n = ((hi - lo) / fine).ceil() as usize;
                grid.extend((0..=n).map(|i| lo + i as f64 * fine));
            }
            let dens = kde.evaluate_many(&grid);
            let mut best = (grid[0], f64::NEG_INFINITY);
            for (x, y) in grid.iter().zip(&dens) {
                if *y > best.1 {
                    best = (*x, *y);
                }
            }
            Ok(best.0)
        })
        .collect()
}

/// The sample closest to the vector of marginal KDE peaks.
pub fn posterior_map_tuple(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let peaks = marginal_peaks(samples)?;
    Ok(samples[nearest(samples, &peaks)].clone())
}

/// Effective sample size via Geyer's initial positive sequence.
pub fn effective_sample_size(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 4 {
        return n as f64;
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = chain.iter().map(|v| v - mean).collect();
    let var = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return n as f64;
    }
    let rho = |lag: usize| -> f64 {
        c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * var)
    };
    let mut sum = 0.0;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        lag += 2;
    }
    let tau = (1.0 + 2.0 * sum).max(1e-12);
    (n as f64 / tau).min(n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, Exp, StandardNormal};

    #[test]
    fn single_sample() {
        let s = vec![vec![0.1, 0.2, 0.3]];
        assert_eq!(posterior_mean_tuple(&s).unwrap(), s[0]);
        assert_eq!(posterior_map_tuple(&s).unwrap(), s[0]);
    }

    #[test]
    fn tie_goes_to_first() {
        let s = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert_eq!(posterior_mean_tuple(&s).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn centroid_member_wins() {
        let s = vec![vec![0.2, 0.2], vec![0.4, 0.4], vec![0.3, 0.3], vec![0.2, 0.4], vec![0.4, 0.2]];
        assert_eq!(posterior_mean_tuple(&s).unwrap(), vec![0.3, 0.3]);
    }

    #[test]
    fn symmetric_cloud_map_near_mean() {
        let mut rng = stream(1, 0, 0);
        let s: Vec<Vec<f64>> = (0..4000)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                vec![0.5 + 0.05 * a, 0.3 + 0.05 * b]
            })
            .collect();
        let mean = posterior_mean_tuple(&s).unwrap();
        let map = posterior_map_tuple(&s).unwrap();
        let d: f64 = mean.iter().zip(&map).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(d < 0.05, "distance {d}");
    }

    #[test]
    fn right_skew_map_below_mean() {
        let mut rng = stream(2, 0, 0);
        let exp = Exp::new(1.0).unwrap();
        let s: Vec<Vec<f64>> = (0..4000).map(|_| vec![0.005 + 0.01 * exp.sample(&mut rng)]).collect();
        let peak = marginal_peaks(&s).unwrap()[0];
        let mean = marginal_means(&s).unwrap()[0];
        assert!(peak <= mean);
        assert!(posterior_map_tuple(&s).unwrap()[0] <= mean);
    }

    #[test]
    fn pinned_marginal_keeps_value() {
        let s = vec![vec![0.1, 0.05], vec![0.2, 0.05], vec![0.3, 0.05]];
        assert_eq!(marginal_peaks(&s).unwrap()[1], 0.05);
    }

    #[test]
    fn empty_rejected() {
        assert!(posterior_mean_tuple(&[]).is_err());
        assert!(posterior_map_tuple(&[]).is_err());
    }

    #[test]
    fn ess_of_iid_is_near_n() {
        let mut rng = stream(3, 0, 0);
        let x: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ess = effective_sample_size(&x);
        assert!(ess > 1500.0, "{ess}");
    }

    #[test]
    fn ess_of_sticky_chain_is_small() {
        let mut rng = stream(4, 0, 0);
        let mut x = vec![0.0f64; 2000];
        for i in 1..x.len() {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[i] = 0.99 * x[i - 1] + z;
        }
        assert!(effective_sample_size(&x) < 100.0);
    }
}
