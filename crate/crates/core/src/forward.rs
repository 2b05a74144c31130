//! Closed-form noise propagation.
//!
//! Bit-flip layers act first (they happen inside the circuit) and readout
//! noise last. A bit-flip layer with depolarizing rate `eps_g` flips each bit
//! with probability `eps_g / 2`, which scales Walsh coefficient `s` by
//! `(1 - eps_g)^{|s|}`; `m` layers compound to `(1 - eps_g)^{|s| m}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{basis_index, fourier_coeffs, fwht, kron_chain, ProbVector, SquareMatrix};

/// Noise parameters `λ = (eps_g, eps_m0, eps_m1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub eps_g: f64,
    pub eps_m0: Vec<f64>,
    pub eps_m1: Vec<f64>,
}

impl NoiseParams {
    pub fn new(eps_g: f64, eps_m0: Vec<f64>, eps_m1: Vec<f64>) -> Result<Self> {
        let p = Self { eps_g, eps_m0, eps_m1 };
        p.validate()?;
        Ok(p)
    }

    /// Single-qubit convenience constructor.
    pub fn single(eps_g: f64, eps_m0: f64, eps_m1: f64) -> Result<Self> {
        Self::new(eps_g, vec![eps_m0], vec![eps_m1])
    }

    pub fn noiseless(n_qubits: usize) -> Self {
        Self { eps_g: 0.0, eps_m0: vec![0.0; n_qubits], eps_m1: vec![0.0; n_qubits] }
    }

    pub fn n_qubits(&self) -> usize {
        self.eps_m0.len()
    }

    /// Every rate must lie in `[0, 1)`; `m0` and `m1` lists must match.
    pub fn validate(&self) -> Result<()> {
        if self.eps_m0.len() != self.eps_m1.len() {
            return Err(Error::DimensionMismatch { expected: self.eps_m0.len(), got: self.eps_m1.len() });
        }
        if self.eps_m0.is_empty() {
            return Err(Error::invalid("noise parameters need at least one qubit"));
        }
        if let Some(bad) = self.to_vec().into_iter().find(|v| !(0.0..1.0).contains(v)) {
            return Err(Error::invalid(format!("noise rate {bad} outside [0, 1)")));
        }
        Ok(())
    }

    /// Readout filters additionally need every readout rate below 1/2 so
    /// that each 2×2 factor is invertible.
    pub fn validate_for_filter(&self) -> Result<()> {
        self.validate()?;
        if let Some(bad) = self.eps_m0.iter().chain(&self.eps_m1).find(|v| **v >= 0.5) {
            return Err(Error::invalid(format!("readout rate {bad} must be below 0.5 to filter")));
        }
        Ok(())
    }

    /// Flattened as `[eps_g, eps_m0[0..n], eps_m1[0..n]]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + 2 * self.n_qubits());
        v.push(self.eps_g);
        v.extend(&self.eps_m0);
        v.extend(&self.eps_m1);
        v
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() < 3 || v.len() % 2 == 0 {
            return Err(Error::invalid(format!("parameter vector of length {} is not 1 + 2n", v.len())));
        }
        let n = (v.len() - 1) / 2;
        Self::new(v[0], v[1..1 + n].to_vec(), v[1 + n..].to_vec())
    }

    /// Names matching [`NoiseParams::to_vec`] order.
    pub fn param_names(n_qubits: usize) -> Vec<String> {
        let mut names = vec!["eps_g".to_string()];
        names.extend((0..n_qubits).map(|i| format!("eps_m0_{i}")));
        names.extend((0..n_qubits).map(|i| format!("eps_m1_{i}")));
        names
    }
}

/// Forward model for one scalar quantity of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecRecord", into = "ModelSpecRecord")]
pub struct ModelSpec {
    pub n_qubits: usize,
    /// Number of bit-flip layers.
    pub m: u32,
    /// Noise-free output distribution.
    pub ideal: ProbVector,
    /// Basis string whose noisy probability is the QoI.
    pub qoi_target: String,
}

#[derive(Serialize, Deserialize)]
struct ModelSpecRecord {
    n_qubits: usize,
    m: u32,
    ideal: Vec<f64>,
    qoi_target: String,
}

impl TryFrom<ModelSpecRecord> for ModelSpec {
    type Error = Error;

    fn try_from(r: ModelSpecRecord) -> Result<Self> {
        ModelSpec::new(ProbVector::new(r.ideal)?, r.m, r.qoi_target).and_then(|s| {
            if s.n_qubits != r.n_qubits {
                Err(Error::DimensionMismatch { expected: r.n_qubits, got: s.n_qubits })
            } else {
                Ok(s)
            }
        })
    }
}

impl From<ModelSpec> for ModelSpecRecord {
    fn from(s: ModelSpec) -> Self {
        ModelSpecRecord { n_qubits: s.n_qubits, m: s.m, ideal: s.ideal.into_vec(), qoi_target: s.qoi_target }
    }
}

impl ModelSpec {
    pub fn new(ideal: ProbVector, m: u32, qoi_target: impl Into<String>) -> Result<Self> {
        let qoi_target = qoi_target.into();
        let n_qubits = ideal.n_qubits();
        basis_index(&qoi_target, n_qubits)?;
        Ok(Self { n_qubits, m, ideal, qoi_target })
    }

    pub fn target_index(&self) -> usize {
        basis_index(&self.qoi_target, self.n_qubits).expect("validated at construction")
    }
}

fn readout_factor(e0: f64, e1: f64) -> SquareMatrix {
    SquareMatrix::new(2, vec![1.0 - e0, e1, e0, 1.0 - e1]).expect("2x2")
}

/// Readout transition matrix `A = ⊗_i [[1-e0_i, e1_i], [e0_i, 1-e1_i]]`.
pub fn meas_matrix(params: &NoiseParams, n: usize) -> Result<SquareMatrix> {
    params.validate()?;
    if params.n_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, got: params.n_qubits() });
    }
    let factors: Vec<SquareMatrix> = params
        .eps_m0
        .iter()
        .zip(&params.eps_m1)
        .map(|(&e0, &e1)| readout_factor(e0, e1))
        .collect();
    kron_chain(&factors)
}

/// `r̃ = A r`.
pub fn push_measurement(a: &SquareMatrix, r: &ProbVector) -> Result<ProbVector> {
    ProbVector::new(a.mul_vec(r.values())?)
}

/// Apply `m` bit-flip layers through the Walsh spectrum.
pub fn push_bitflip(p: &ProbVector, eps_g: f64, m: u32) -> Result<ProbVector> {
    if !(0.0..1.0).contains(&eps_g) {
        return Err(Error::invalid(format!("eps_g = {eps_g} outside [0, 1)")));
    }
    if m == 0 || eps_g == 0.0 {
        return Ok(p.clone());
    }
    let mut v = fourier_coeffs(p).attenuate(eps_g, m).coeffs().to_vec();
    fwht(&mut v);
    ProbVector::new(v)
}

/// Apply per-qubit readout factors in place in `O(n 2^n)`.
fn apply_readout(v: &mut [f64], params: &NoiseParams) {
    for (q, (&e0, &e1)) in params.eps_m0.iter().zip(&params.eps_m1).enumerate() {
        let bit = 1usize << q;
        for i in 0..v.len() {
            if i & bit == 0 {
                let (a, b) = (v[i], v[i | bit]);
                v[i] = (1.0 - e0) * a + e1 * b;
                v[i | bit] = e0 * a + (1.0 - e1) * b;
            }
        }
    }
}

/// Precomputed `Q(λ)` for repeated evaluation.
#[derive(Debug, Clone)]
pub struct QoiModel {
    spec: ModelSpec,
    coeffs: Vec<f64>,
    weights: Vec<u32>,
    target: usize,
}

impl QoiModel {
    pub fn new(spec: &ModelSpec) -> Self {
        let coeffs = fourier_coeffs(&spec.ideal).coeffs().to_vec();
        let weights = (0..coeffs.len()).map(|s| s.count_ones()).collect();
        Self { spec: spec.clone(), coeffs, weights, target: spec.target_index() }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Full noisy distribution (bit-flip layers, then readout).
    pub fn noisy_distribution(&self, lambda: &NoiseParams) -> Result<Vec<f64>> {
        lambda.validate()?;
        if lambda.n_qubits() != self.spec.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.spec.n_qubits, got: lambda.n_qubits() });
        }
        let base = 1.0 - lambda.eps_g;
        let m = self.spec.m as f64;
        let per_weight: Vec<f64> = (0..=self.spec.n_qubits).map(|w| base.powf(w as f64 * m)).collect();
        let mut v: Vec<f64> = self
            .coeffs
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| c * per_weight[w as usize])
            .collect();
        fwht(&mut v);
        apply_readout(&mut v, lambda);
        Ok(v)
    }

    pub fn evaluate(&self, lambda: &NoiseParams) -> Result<f64> {
        Ok(self.noisy_distribution(lambda)?[self.target].clamp(0.0, 1.0))
    }
}

/// `Q(λ)`: noisy probability of the spec's target basis state.
pub fn qoi(lambda: &NoiseParams, spec: &ModelSpec) -> Result<f64> {
    QoiModel::new(spec).evaluate(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p1(e0: f64, e1: f64) -> NoiseParams {
        NoiseParams::single(0.0, e0, e1).unwrap()
    }

    #[test]
    fn noiseless_meas_matrix_is_identity() {
        assert_eq!(meas_matrix(&NoiseParams::noiseless(3), 3).unwrap(), SquareMatrix::identity(8));
    }

    #[test]
    fn single_qubit_meas_matrix() {
        let a = meas_matrix(&p1(0.1, 0.2), 1).unwrap();
        let expected = [0.9, 0.2, 0.1, 0.8];
        for (x, y) in a.as_slice().iter().zip(expected) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_qubit_meas_matrix_is_stochastic() {
        let params = NoiseParams::new(0.0, vec![0.03, 0.1], vec![0.07, 0.2]).unwrap();
        assert!(meas_matrix(&params, 2).unwrap().is_left_stochastic(1e-15));
        assert!(meas_matrix(&params, 3).is_err());
    }

    #[test]
    fn push_measurement_examples() {
        let a = meas_matrix(&p1(0.1, 0.2), 1).unwrap();
        let r = ProbVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(push_measurement(&SquareMatrix::identity(2), &r).unwrap(), r);
        let out = push_measurement(&a, &r).unwrap();
        assert_abs_diff_eq!(out.get(0), 0.9, epsilon = 1e-15);
        let out = push_measurement(&a, &ProbVector::uniform(1).unwrap()).unwrap();
        assert_abs_diff_eq!(out.get(0), 0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(out.get(1), 0.45, epsilon = 1e-15);
    }

    #[test]
    fn push_bitflip_examples() {
        let p = ProbVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(push_bitflip(&p, 0.3, 0).unwrap(), p);
        let out = push_bitflip(&p, 0.01, 200).unwrap();
        let d = 0.5 * 0.99f64.powi(200);
        assert_abs_diff_eq!(out.get(0), 0.5 + d, epsilon = 1e-14);
        assert_abs_diff_eq!(out.get(0), 0.566_99, epsilon = 1e-5);
        let q = ProbVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        for v in push_bitflip(&q, 0.5, 50).unwrap().values() {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-6);
        }
    }

    /// Brute-force oracle: one bit-flip layer as an explicit Markov chain on
    /// basis states, each bit flipping independently with probability eps/2.
    fn bitflip_by_enumeration(p: &[f64], eps: f64, m: u32) -> Vec<f64> {
        let dim = p.len();
        let n = dim.trailing_zeros();
        let q = eps / 2.0;
        let mut cur = p.to_vec();
        for _ in 0..m {
            let mut next = vec![0.0; dim];
            for (x, &px) in cur.iter().enumerate() {
                for y in 0..dim {
                    let flips = (x ^ y).count_ones();
                    next[y] += px * q.powi(flips as i32) * (1.0 - q).powi((n - flips) as i32);
                }
            }
            cur = next;
        }
        cur
    }

    #[test]
    fn bitflip_matches_enumeration() {
        let p = ProbVector::new(vec![0.05, 0.15, 0.3, 0.1, 0.0, 0.2, 0.1, 0.1]).unwrap();
        let fast = push_bitflip(&p, 0.07, 5).unwrap();
        let slow = bitflip_by_enumeration(p.values(), 0.07, 5);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn qoi_examples() {
        let h = ModelSpec::new(ProbVector::uniform(1).unwrap(), 1, "0").unwrap();
        assert_abs_diff_eq!(qoi(&p1(0.1, 0.2), &h).unwrap(), 0.55, epsilon = 1e-15);

        let not200 = ModelSpec::new(ProbVector::basis(1, 0).unwrap(), 200, "0").unwrap();
        let lambda = NoiseParams::single(0.01, 0.05, 0.1).unwrap();
        let p0 = 0.5 + 0.5 * 0.99f64.powi(200);
        let expected = 0.95 * p0 + 0.1 * (1.0 - p0);
        assert_abs_diff_eq!(qoi(&lambda, &not200).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.581_95, epsilon = 1e-5);

        let ideal = ProbVector::new(vec![0.1, 0.6, 0.2, 0.1]).unwrap();
        let spec = ModelSpec::new(ideal, 3, "01").unwrap();
        assert_eq!(qoi(&NoiseParams::noiseless(2), &spec).unwrap(), 0.6);
    }

    #[test]
    fn qoi_matches_matrix_route() {
        let ideal = ProbVector::new(vec![0.1, 0.6, 0.2, 0.1]).unwrap();
        let spec = ModelSpec::new(ideal.clone(), 4, "10").unwrap();
        let lambda = NoiseParams::new(0.03, vec![0.02, 0.08], vec![0.05, 0.11]).unwrap();
        let a = meas_matrix(&lambda, 2).unwrap();
        let slow = push_measurement(&a, &push_bitflip(&ideal, 0.03, 4).unwrap()).unwrap();
        assert_abs_diff_eq!(qoi(&lambda, &spec).unwrap(), slow.get(2), epsilon = 1e-15);
    }

    #[test]
    fn model_spec_json() {
        let spec = ModelSpec::new(ProbVector::basis(1, 0).unwrap(), 200, "0").unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"n_qubits":1,"m":200,"ideal":[1.0,0.0],"qoi_target":"0"}"#);
        assert_eq!(serde_json::from_str::<ModelSpec>(&json).unwrap(), spec);
        assert!(serde_json::from_str::<ModelSpec>(r#"{"n_qubits":2,"m":1,"ideal":[1.0,0.0],"qoi_target":"0"}"#).is_err());
    }

    #[test]
    fn params_flatten() {
        let p = NoiseParams::new(0.01, vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        assert_eq!(p.to_vec(), vec![0.01, 0.1, 0.2, 0.3, 0.4]);
        assert_eq!(NoiseParams::from_slice(&p.to_vec()).unwrap(), p);
        assert!(NoiseParams::single(1.0, 0.1, 0.1).is_err());
        assert!(NoiseParams::single(0.1, 0.6, 0.1).unwrap().validate_for_filter().is_err());
    }

    proptest! {
        #[test]
        fn bitflip_semigroup(raw in prop::collection::vec(0.01f64..1.0, 8), eps in 0.001f64..0.5, m1 in 0u32..30, m2 in 0u32..30) {
            let total: f64 = raw.iter().sum();
            let p = ProbVector::new(raw.iter().map(|v| v / total).collect()).unwrap();
            let once = push_bitflip(&p, eps, m1 + m2).unwrap();
            let twice = push_bitflip(&push_bitflip(&p, eps, m1).unwrap(), eps, m2).unwrap();
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn measurement_preserves_simplex(raw in prop::collection::vec(0.0f64..1.0, 4), e in prop::collection::vec(0.0f64..0.99, 4)) {
            let total: f64 = raw.iter().sum::<f64>() + 1e-9;
            let mut v: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let s: f64 = v.iter().sum();
            v[0] += 1.0 - s;
            let r = ProbVector::new(v).unwrap();
            let params = NoiseParams::new(0.0, vec![e[0], e[1]], vec![e[2], e[3]]).unwrap();
            let out = push_measurement(&meas_matrix(&params, 2).unwrap(), &r).unwrap();
            prop_assert!((out.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(out.values().iter().all(|x| *x >= 0.0));
        }

        #[test]
        fn qoi_monotone_in_attenuation(eps_a in 0.0f64..0.2, d in 0.0f64..0.2, m in 1u32..50) {
            // ideal puts more than uniform mass on the target
            let ideal = ProbVector::new(vec![0.7, 0.1, 0.1, 0.1]).unwrap();
            let at = |eps: f64, m: u32| {
                qoi(&NoiseParams::new(eps, vec![0.02, 0.02], vec![0.05, 0.05]).unwrap(),
                    &ModelSpec::new(ideal.clone(), m, "00").unwrap()).unwrap()
            };
            prop_assert!(at(eps_a + d, m) <= at(eps_a, m) + 1e-15);
            prop_assert!(at(eps_a, m + 1) <= at(eps_a, m) + 1e-15);
        }
    }
}
