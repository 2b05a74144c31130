//! KL divergence between KDEs and one-parameter sensitivity sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ModelSpec, NoiseParams, QoiModel};
use crate::inference::KdeModel;

/// Floor applied to the second density inside the logarithm.
pub const KL_FLOOR: f64 = 1e-12;
pub const DEFAULT_KL_GRID: usize = 2048;
pub const MIN_KL_GRID: usize = 1024;

/// Sampled curve with strictly increasing `xs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Curve {
    pub fn new(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("curve xs must be strictly increasing"));
        }
        Ok(Self { label: label.into(), xs, ys })
    }

    /// Density curve of a KDE on an even grid padded by 5 bandwidths.
    pub fn from_kde(label: impl Into<String>, kde: &KdeModel, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid("curve needs at least 2 points"));
        }
        let (lo, hi) = kde.range();
        let pad = 5.0 * kde.bandwidth();
        let xs = even_grid(lo - pad, hi + pad, points);
        let ys = kde.evaluate_many(&xs);
        Self::new(label, xs, ys)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

fn even_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let dx = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * dx }).collect()
}

/// `∫ p log(p / max(q, 1e-12))` by the trapezoid rule on `grid` points
/// spanning both supports padded by 5 bandwidths.
pub fn kl_divergence(p: &KdeModel, q: &KdeModel, grid: usize) -> Result<f64> {
    if grid < MIN_KL_GRID {
        return Err(Error::invalid(format!("KL grid must have at least {MIN_KL_GRID} points, got {grid}")));
    }
    let (p0, p1) = p.range();
    let (q0, q1) = q.range();
    let lo = (p0 - 5.0 * p.bandwidth()).min(q0 - 5.0 * q.bandwidth());
    let hi = (p1 + 5.0 * p.bandwidth()).max(q1 + 5.0 * q.bandwidth());
    let xs = even_grid(lo, hi, grid);
    let dx = (hi - lo) / (grid - 1) as f64;
    let pv = p.evaluate_many(&xs);
    let qv = q.evaluate_many(&xs);
    let mut total = 0.0;
    for (i, (a, b)) in pv.iter().zip(&qv).enumerate() {
        if *a > 0.0 {
            let w = if i == 0 || i + 1 == grid { 0.5 } else { 1.0 };
            total += w * a * (a / b.max(KL_FLOOR)).ln();
        }
    }
    Ok(total * dx)
}

/// Parameter varied by a sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    EpsG,
    EpsM0(usize),
    EpsM1(usize),
}

impl SweepParam {
    pub fn index(&self, n_qubits: usize) -> Result<usize> {
        match *self {
            SweepParam::EpsG => Ok(0),
            SweepParam::EpsM0(i) if i < n_qubits => Ok(1 + i),
            SweepParam::EpsM1(i) if i < n_qubits => Ok(1 + n_qubits + i),
            _ => Err(Error::invalid(format!("{self:?} out of range for {n_qubits} qubits"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SweepParam::EpsG => "eps_g".into(),
            SweepParam::EpsM0(i) => format!("eps_m0_{i}"),
            SweepParam::EpsM1(i) => format!("eps_m1_{i}"),
        }
    }

    /// Parse `eps_g`, `eps_m0_<i>` or `eps_m1_<i>`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "eps_g" {
            return Ok(SweepParam::EpsG);
        }
        let num = |rest: &str| rest.parse::<usize>().map_err(|_| Error::invalid(format!("bad parameter name {s:?}")));
        if let Some(rest) = s.strip_prefix("eps_m0_") {
            return Ok(SweepParam::EpsM0(num(rest)?));
        }
        if let Some(rest) = s.strip_prefix("eps_m1_") {
            return Ok(SweepParam::EpsM1(num(rest)?));
        }
        Err(Error::invalid(format!("bad parameter name {s:?}")))
    }
}

/// `Q` on an even grid of one parameter with the others held at `fixed`.
pub fn sensitivity_sweep(
    spec: &ModelSpec,
    which: SweepParam,
    range: (f64, f64),
    steps: usize,
    fixed: &NoiseParams,
) -> Result<Curve> {
    let (lo, hi) = range;
    if !(0.0..1.0).contains(&lo) || !(0.0..1.0).contains(&hi) || !(lo < hi) {
        return Err(Error::invalid(format!("sweep range [{lo}, {hi}] must be increasing inside [0, 1)")));
    }
    if steps < 2 {
        return Err(Error::invalid("sweep needs at least 2 steps"));
    }
    let k = which.index(spec.n_qubits)?;
    let model = QoiModel::new(spec);
    let mut v = fixed.to_vec();
    let xs = even_grid(lo, hi, steps);
    let ys = xs
        .iter()
        .map(|&x| {
            v[k] = x;
            model.evaluate(&NoiseParams::from_slice(&v)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Curve::new(which.name(), xs, ys)
}

/// Central finite difference of `Q` in one parameter.
pub fn qoi_derivative(spec: &ModelSpec, which: SweepParam, at: &NoiseParams, h: f64) -> Result<f64> {
    let k = which.index(spec.n_qubits)?;
    let model = QoiModel::new(spec);
    let mut up = at.to_vec();
    let mut down = at.to_vec();
    up[k] += h;
    down[k] -= h;
    let f = |v: &[f64]| model.evaluate(&NoiseParams::from_slice(v)?);
    Ok((f(&up)? - f(&down)?) / (2.0 * h))
}
