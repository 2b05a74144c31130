use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Kernels are dropped beyond this many bandwidths (`exp(-72) ≈ 5e-32`).
const CUTOFF: f64 = 12.0;

/// Above this many kernel evaluations `evaluate_many` switches to a table.
const DIRECT_LIMIT: usize = 4_000_000;

/// Table spacing as a fraction of the bandwidth. Linear interpolation then
/// has relative error near `(1/32)^2 / 8 ≈ 1e-4` at the mode.
const TABLE_STEP: f64 = 1.0 / 32.0;

/// Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    /// Sorted ascending.
    samples: Vec<f64>,
    bandwidth: f64,
}

/// Scott's rule bandwidth `sd · N^{-1/5}` with the `N − 1` sample sd.
pub fn scott_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSamples(format!("KDE needs at least 2 samples, got {}", samples.len())));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("KDE samples must be finite"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::DegenerateSamples(
            "all samples are identical; add jitter or collect more varied data".into(),
        ));
    }
    Ok(sd * n.powf(-0.2))
}

/// Fit a Gaussian KDE with Scott's bandwidth.
pub fn gaussian_kde(samples: &[f64]) -> Result<KdeModel> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = scott_bandwidth(&sorted)?;
    KdeModel::with_bandwidth(&sorted, h)
}

impl KdeModel {
    pub fn with_bandwidth(samples: &[f64], bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::DegenerateSamples("KDE needs samples".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("KDE samples must be finite"));
        }
        let mut samples = samples.to_vec();
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Smallest and largest sample.
    pub fn range(&self) -> (f64, f64) {
        (self.samples[0], self.samples[self.samples.len() - 1])
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.samples.partition_point(|s| *s < x - CUTOFF * h);
        let hi = self.samples.partition_point(|s| *s <= x + CUTOFF * h);
        let sum: f64 = self.samples[lo..hi]
            .iter()
            .map(|s| {
                let z = (x - s) / h;
                (-0.5 * z * z).exp()
            })
            .sum();
        sum * INV_SQRT_2PI / (h * self.samples.len() as f64)
    }

    /// Density at many points. Large workloads go through an interpolated
    /// table with spacing `h/32`.
    pub fn evaluate_many(&self, xs: &[f64]) -> Vec<f64> {
        if xs.len().saturating_mul(self.samples.len()) <= DIRECT_LIMIT {
            return xs.iter().map(|&x| self.density(x)).collect();
        }
        let table = DensityTable::new(self);
        xs.iter().map(|&x| table.get(x)).collect()
    }
}

struct DensityTable {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl DensityTable {
    fn new(kde: &KdeModel) -> Self {
        let h = kde.bandwidth;
        let (lo, hi) = kde.range();
        let start = lo - CUTOFF * h;
        let step = TABLE_STEP * h;
        let len = (((hi + CUTOFF * h) - start) / step).ceil() as usize + 2;
        let values = (0..len).map(|i| kde.density(start + i as f64 * step)).collect();
        Self { start, step, values }
    }

    fn get(&self, x: f64) -> f64 {
        let t = (x - self.start) / self.step;
        if !(t >= 0.0) || t >= (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = t as usize;
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_draws(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, 0, 0);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn symmetric_about_half() {
        let kde = KdeModel::with_bandwidth(&[0.0, 0.0, 1.0, 1.0], 0.3).unwrap();
        for d in [0.1, 0.4, 0.77, 2.0] {
            assert!((kde.density(0.5 - d) - kde.density(0.5 + d)).abs() < 1e-15);
        }
        let scott = gaussian_kde(&[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((scott.density(0.2) - scott.density(0.8)).abs() < 1e-15);
    }

    #[test]
    fn standard_normal_peak() {
        let kde = gaussian_kde(&normal_draws(20_000, 4)).unwrap();
        let target = INV_SQRT_2PI;
        assert!((kde.density(0.0) - target).abs() < 0.1 * target);
    }

    #[test]
    fn integrates_to_one() {
        let samples = [0.2, 0.35, 0.4, 0.41, 0.9, 0.55];
        let kde = gaussian_kde(&samples).unwrap();
        let h = kde.bandwidth();
        let (a, b) = (-5.0 * h, 1.0 + 5.0 * h);
        let n = 20_000;
        let dx = (b - a) / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            total += w * kde.density(a + i as f64 * dx);
        }
        assert!((total * dx - 1.0).abs() < 1e-3, "integral {}", total * dx);
    }

    #[test]
    fn order_independent() {
        let a = gaussian_kde(&[0.3, 0.1, 0.8, 0.5]).unwrap();
        let b = gaussian_kde(&[0.8, 0.5, 0.3, 0.1]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_rejected() {
        assert!(matches!(gaussian_kde(&[0.4; 10]), Err(Error::DegenerateSamples(_))));
        assert!(gaussian_kde(&[0.4]).is_err());
        assert!(KdeModel::with_bandwidth(&[0.1, 0.2], 0.0).is_err());
    }

    #[test]
    fn table_matches_direct() {
        let samples: Vec<f64> = normal_draws(5000, 9).iter().map(|z| 0.5 + 0.02 * z).collect();
        let kde = gaussian_kde(&samples).unwrap();
        let xs: Vec<f64> = (0..2000).map(|i| 0.4 + 0.2 * i as f64 / 1999.0).collect();
        let table = DensityTable::new(&kde);
        let peak = kde.density(0.5);
        for &x in &xs {
            let direct = kde.density(x);
            assert!((table.get(x) - direct).abs() <= 2e-4 * peak, "x = {x}");
        }
    }
}
