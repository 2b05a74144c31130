//! Backward models: undo readout noise, undo bit-flip layers, or both.
//!
//! Every filter solves a linear system and then projects the result onto the
//! probability simplex, which is the least-squares fit under the simplex
//! constraints.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{meas_matrix, ModelSpec, NoiseParams};
use crate::linalg::{fwht, numerical_rank, project_to_prob, walsh_matrix, LuFactor, ProbVector, SquareMatrix};
use crate::sim::ShotEnsemble;

/// Gate filters refuse to run above this 2-norm condition number.
pub const MAX_CONDITION: f64 = 1e12;

/// `G = W · diag((1 - eps_g)^{|s| m})`, mapping clean Walsh coefficients to
/// the noisy distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateFilterMatrix {
    pub n_qubits: usize,
    pub m: u32,
    pub eps_g: f64,
    /// Column scale for each `s`.
    attenuation: Vec<f64>,
    #[serde(skip)]
    g: Option<SquareMatrix>,
}

/// Build the gate filter matrix. `eps_g = 0` or `m = 0` gives `G = W`.
pub fn build_g(eps_g: f64, m: u32, n: usize) -> Result<GateFilterMatrix> {
    if !(0.0..1.0).contains(&eps_g) {
        return Err(Error::invalid(format!("eps_g = {eps_g} outside [0, 1)")));
    }
    let w = walsh_matrix(n)?;
    let base = 1.0 - eps_g;
    let attenuation: Vec<f64> = (0..1usize << n)
        .map(|s| base.powf(s.count_ones() as f64 * m as f64))
        .collect();
    if attenuation.contains(&0.0) {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let dim = 1usize << n;
    let mut g = w;
    for x in 0..dim {
        for (s, d) in attenuation.iter().enumerate() {
            g.set(x, s, g.get(x, s) * d);
        }
    }
    Ok(GateFilterMatrix { n_qubits: n, m, eps_g, attenuation, g: Some(g) })
}

impl GateFilterMatrix {
    pub fn matrix(&self) -> SquareMatrix {
        match &self.g {
            Some(g) => g.clone(),
            None => build_g(self.eps_g, self.m, self.n_qubits).expect("parameters validated").matrix(),
        }
    }

    pub fn attenuation(&self) -> &[f64] {
        &self.attenuation
    }

    /// Exact 2-norm condition number, `(1 - eps_g)^{-n m}`.
    pub fn condition_number(&self) -> f64 {
        (-(self.n_qubits as f64) * self.m as f64 * (1.0 - self.eps_g).ln()).exp()
    }

    /// `ln |det G|`. `|det W| = 2^{n 2^{n-1}}` and the column scales multiply in.
    pub fn log_abs_det(&self) -> f64 {
        let n = self.n_qubits as f64;
        let dim = self.attenuation.len() as f64;
        let w = n * dim / 2.0 * std::f64::consts::LN_2;
        w + self.attenuation.iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Rank of `G`. Columns are rescaled to unit max-norm first; that leaves
    /// the rank unchanged and removes the `(1 - eps_g)^{|s| m}` spread, which
    /// otherwise swamps any fixed pivot tolerance.
    pub fn rank(&self) -> usize {
        let mut g = self.matrix();
        let dim = g.dim();
        for s in 0..dim {
            let col_max = (0..dim).fold(0.0f64, |a, x| a.max(g.get(x, s).abs()));
            if col_max > 0.0 {
                for x in 0..dim {
                    g.set(x, s, g.get(x, s) / col_max);
                }
            }
        }
        numerical_rank(&g, 1e-10)
    }

    /// `G⁻¹ p̃`, computed as `diag(1/d) · W p̃ / 2^n`.
    pub fn solve(&self, p_tilde: &[f64]) -> Result<Vec<f64>> {
        let dim = self.attenuation.len();
        if p_tilde.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p_tilde.len() });
        }
        let mut v = p_tilde.to_vec();
        fwht(&mut v);
        for (x, d) in v.iter_mut().zip(&self.attenuation) {
            *x /= dim as f64 * d;
        }
        Ok(v)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let meta = [
            ("kind", "gate_filter".to_string()),
            ("n", self.n_qubits.to_string()),
            ("eps_g", self.eps_g.to_string()),
            ("m", self.m.to_string()),
        ];
        write_matrix_csv(w, &self.matrix(), &meta)
    }
}

/// Gate filter: `p* = argmin_{p ∈ simplex} ‖p − W G⁻¹ p̃‖₂`.
///
/// With `p = W ρ̂` and `W/√2^n` orthogonal this is the least-squares fit of
/// the clean spectrum `ρ̂` to `G⁻¹ p̃` under the simplex constraints.
pub fn gate_filter(gf: &GateFilterMatrix, p_tilde: &ProbVector) -> Result<ProbVector> {
    if p_tilde.n_qubits() != gf.n_qubits {
        return Err(Error::DimensionMismatch { expected: gf.n_qubits, got: p_tilde.n_qubits() });
    }
    let condition = gf.condition_number();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition, limit: MAX_CONDITION });
    }
    let mut v = gf.solve(p_tilde.values())?;
    fwht(&mut v);
    project_to_prob(&v)
}

/// Readout filter with the factorization cached for repeated use.
#[derive(Debug, Clone)]
pub struct MeasFilter {
    lu: LuFactor,
}

impl MeasFilter {
    pub fn new(a: &SquareMatrix) -> Result<Self> {
        Ok(Self { lu: LuFactor::new(a)? })
    }

    pub fn apply(&self, r_tilde: &ProbVector) -> Result<ProbVector> {
        project_to_prob(&self.lu.solve(r_tilde.values())?)
    }

    pub fn condition_estimate(&self) -> f64 {
        self.lu.condition_estimate()
    }
}

/// `r* = argmin_{r ∈ simplex} ‖A⁻¹ r̃ − r‖₂`.
pub fn meas_filter(a: &SquareMatrix, r_tilde: &ProbVector) -> Result<ProbVector> {
    MeasFilter::new(a)?.apply(r_tilde)
}

/// Readout filter followed by gate filter, both built from one `λ`.
#[derive(Debug, Clone)]
pub struct CombinedFilter {
    meas: MeasFilter,
    gate: GateFilterMatrix,
}

impl CombinedFilter {
    pub fn new(lambda: &NoiseParams, spec: &ModelSpec) -> Result<Self> {
        lambda.validate_for_filter()?;
        let a = meas_matrix(lambda, spec.n_qubits)?;
        Ok(Self { meas: MeasFilter::new(&a)?, gate: build_g(lambda.eps_g, spec.m, spec.n_qubits)? })
    }

    pub fn apply(&self, r_tilde: &ProbVector) -> Result<ProbVector> {
        gate_filter(&self.gate, &self.meas.apply(r_tilde)?)
    }

    pub fn gate(&self) -> &GateFilterMatrix {
        &self.gate
    }
}

/// Undo readout noise, then bit-flip layers.
pub fn combined_filter(lambda: &NoiseParams, spec: &ModelSpec, r_tilde: &ProbVector) -> Result<ProbVector> {
    CombinedFilter::new(lambda, spec)?.apply(r_tilde)
}

/// Readout filter estimated from basis-state preparation runs.
#[derive(Debug, Clone)]
pub struct CalibrationFilter {
    matrix: SquareMatrix,
    lu: LuFactor,
}

impl CalibrationFilter {
    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn apply(&self, r_tilde: &ProbVector) -> Result<ProbVector> {
        project_to_prob(&self.lu.solve(r_tilde.values())?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.matrix.dim().trailing_zeros();
        write_matrix_csv(w, &self.matrix, &[("kind", "calibration".to_string()), ("n", n.to_string())])
    }
}

/// Column `j` is the pooled outcome distribution of the run that prepared
/// basis state `j`; `cal[j]` must be that run.
pub fn calibration_filter(cal: &[ShotEnsemble]) -> Result<CalibrationFilter> {
    let Some(first) = cal.first() else {
        return Err(Error::invalid("calibration needs one run per basis state"));
    };
    let n = first.n_qubits();
    let dim = 1usize << n;
    if cal.len() != dim {
        return Err(Error::invalid(format!("calibration has {} runs, need {dim} for {n} qubits", cal.len())));
    }
    let mut matrix = SquareMatrix::zeros(dim);
    for (j, run) in cal.iter().enumerate() {
        if run.n_qubits() != n {
            return Err(Error::DimensionMismatch { expected: n, got: run.n_qubits() });
        }
        for (i, v) in run.pooled().values().iter().enumerate() {
            matrix.set(i, j, *v);
        }
    }
    let lu = LuFactor::new(&matrix)?;
    Ok(CalibrationFilter { matrix, lu })
}

/// Write `# key=value` metadata lines, then the matrix one row per line.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &SquareMatrix, meta: &[(&str, String)]) -> Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.dim() {
        out.write_record(m.row(i).iter().map(|v| format!("{v:?}")))?;
    }
    out.flush()?;
    Ok(())
}

/// Parse [`write_matrix_csv`] output into metadata and matrix.
pub fn read_matrix_csv<R: Read>(r: R) -> Result<(Vec<(String, String)>, SquareMatrix)> {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.to_string(), v.to_string()));
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    let mut data = Vec::new();
    let mut dim = 0;
    for rec in rdr.records() {
        let rec = rec?;
        dim += 1;
        for field in rec.iter() {
            data.push(field.parse::<f64>().map_err(|e| Error::invalid(format!("bad matrix entry {field:?}: {e}")))?);
        }
    }
    Ok((meta, SquareMatrix::new(dim, data)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{push_bitflip, push_measurement};
    use crate::linalg::{fourier_coeffs, solve_dense};
    use crate::sim::{sample_noisy, LibraryCircuit, NoiseSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn interior(raw: &[f64]) -> ProbVector {
        let total: f64 = raw.iter().sum();
        ProbVector::new(raw.iter().map(|v| v / total).collect()).unwrap()
    }

    #[test]
    fn g_single_qubit() {
        let gf = build_g(0.01, 200, 1).unwrap();
        let g = gf.matrix();
        let d = 0.99f64.powi(200);
        assert_abs_diff_eq!(g.get(0, 0), 1.0);
        assert_abs_diff_eq!(g.get(0, 1), d, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1, 1), -d, epsilon = 1e-14);
        assert_abs_diff_eq!(d, 0.133_98, epsilon = 1e-5);
    }

    #[test]
    fn g_at_zero_noise_is_walsh() {
        assert_eq!(build_g(0.0, 5, 3).unwrap().matrix(), walsh_matrix(3).unwrap());
    }

    #[test]
    fn g_full_rank_on_grid() {
        for n in 1..=4 {
            for eps in [0.001, 0.01, 0.1, 0.5] {
                for m in [1, 10, 200] {
                    let gf = build_g(eps, m, n).unwrap();
                    assert_eq!(gf.rank(), 1 << n, "n={n} eps={eps} m={m}");
                    assert!(gf.log_abs_det().is_finite());
                }
            }
        }
    }

    #[test]
    fn condition_number_matches_closed_form() {
        let gf = build_g(0.1, 10, 2).unwrap();
        approx::assert_relative_eq!(gf.condition_number(), 0.9f64.powi(-20), max_relative = 1e-12);
    }

    #[test]
    fn structured_solve_matches_lu() {
        let gf = build_g(0.05, 7, 3).unwrap();
        let b: Vec<f64> = (0..8).map(|i| 0.1 + 0.01 * i as f64).collect();
        let lu = solve_dense(&gf.matrix(), &b).unwrap();
        for (x, y) in gf.solve(&b).unwrap().iter().zip(&lu) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn gate_filter_examples() {
        let gf = build_g(0.01, 200, 1).unwrap();
        let d = 0.5 * 0.99f64.powi(200);
        let out = gate_filter(&gf, &ProbVector::new(vec![0.5 + d, 0.5 - d]).unwrap()).unwrap();
        assert_abs_diff_eq!(out.get(0), 1.0, epsilon = 1e-12);
        let half = ProbVector::uniform(1).unwrap();
        for (eps, m) in [(0.01, 200), (0.3, 2), (0.0, 9)] {
            assert_eq!(gate_filter(&build_g(eps, m, 1).unwrap(), &half).unwrap().values(), half.values());
        }
    }

    #[test]
    fn gate_filter_refuses_ill_conditioned() {
        let gf = build_g(0.5, 200, 1).unwrap();
        let err = gate_filter(&gf, &ProbVector::uniform(1).unwrap()).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn single_qubit_dc_coefficient_is_half() {
        for p0 in [0.0, 0.2, 0.56, 0.9, 1.0] {
            let r = ProbVector::new(vec![p0, 1.0 - p0]).unwrap();
            let out = gate_filter(&build_g(0.01, 200, 1).unwrap(), &r).unwrap();
            assert_abs_diff_eq!(fourier_coeffs(&out).coeffs()[0], 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn meas_filter_examples() {
        let r = interior(&[3.0, 1.0, 2.0, 4.0]);
        assert_eq!(meas_filter(&SquareMatrix::identity(4), &r).unwrap(), r);
        let lambda = NoiseParams::new(0.0, vec![0.05, 0.1], vec![0.08, 0.12]).unwrap();
        let a = meas_matrix(&lambda, 2).unwrap();
        let back = meas_filter(&a, &push_measurement(&a, &r).unwrap()).unwrap();
        for (x, y) in back.values().iter().zip(r.values()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    /// Brute-force minimizer of `‖target − p‖₂` over a grid on the 4-simplex.
    fn grid_min(target: &[f64], k: usize) -> (f64, Vec<f64>) {
        let step = 1.0 / k as f64;
        let mut best = (f64::INFINITY, vec![]);
        for a in 0..=k {
            for b in 0..=k - a {
                for c in 0..=k - a - b {
                    let p = [a as f64 * step, b as f64 * step, c as f64 * step, (k - a - b - c) as f64 * step];
                    let d: f64 = p.iter().zip(target).map(|(x, y)| (x - y).powi(2)).sum();
                    if d < best.0 {
                        best = (d, p.to_vec());
                    }
                }
            }
        }
        best
    }

    #[test]
    fn meas_filter_matches_grid_when_clipping() {
        let lambda = NoiseParams::new(0.0, vec![0.1, 0.2], vec![0.15, 0.05]).unwrap();
        let a = meas_matrix(&lambda, 2).unwrap();
        // A⁻¹ of this point has a negative entry
        let r_tilde = ProbVector::new(vec![0.02, 0.5, 0.03, 0.45]).unwrap();
        let raw = solve_dense(&a, r_tilde.values()).unwrap();
        assert!(raw.iter().any(|v| *v < 0.0));
        let out = meas_filter(&a, &r_tilde).unwrap();
        let k = 40;
        let (grid_d, grid_p) = grid_min(&raw, k);
        let our_d: f64 = out.values().iter().zip(&raw).map(|(x, y)| (x - y).powi(2)).sum();
        assert!(our_d <= grid_d + 1e-15);
        for (x, y) in out.values().iter().zip(&grid_p) {
            assert!((x - y).abs() <= 2.0 / k as f64);
        }
    }

    #[test]
    fn combined_round_trip_on_not_chain() {
        let lambda = NoiseParams::single(0.01, 0.05, 0.1).unwrap();
        let spec = ModelSpec::new(ProbVector::basis(1, 0).unwrap(), 200, "0").unwrap();
        let a = meas_matrix(&lambda, 1).unwrap();
        let noisy = push_measurement(&a, &push_bitflip(&spec.ideal, 0.01, 200).unwrap()).unwrap();
        let out = combined_filter(&lambda, &spec, &noisy).unwrap();
        assert_abs_diff_eq!(out.get(0), 1.0, epsilon = 1e-8);
        let id = interior(&[1.0, 2.0]);
        // the gate step goes through two transforms, so allow rounding
        let back = combined_filter(&NoiseParams::noiseless(1), &spec, &id).unwrap();
        for (x, y) in back.values().iter().zip(id.values()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn calibration_recovers_readout_matrix() {
        let noise = NoiseSpec { eps_g: 0.0, readout: vec![(0.05, 0.1), (0.08, 0.03)] };
        let shots = 4096u64;
        let runs: Vec<ShotEnsemble> = (0..4)
            .map(|j| {
                let c = LibraryCircuit::BasisPrep { n: 2, index: j }.build().unwrap();
                sample_noisy(&c, &noise, shots, 8, 100 + j as u64).unwrap()
            })
            .collect();
        let cal = calibration_filter(&runs).unwrap();
        let truth = meas_matrix(&NoiseParams::new(0.0, vec![0.05, 0.08], vec![0.1, 0.03]).unwrap(), 2).unwrap();
        let total = (shots * 8) as f64;
        for i in 0..4 {
            for j in 0..4 {
                let p = truth.get(i, j);
                let sigma = (p * (1.0 - p) / total).sqrt().max(1e-12);
                assert!((cal.matrix().get(i, j) - p).abs() <= 3.0 * sigma + 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn noiseless_calibration_is_identity() {
        let runs: Vec<ShotEnsemble> = (0..2)
            .map(|j| {
                let c = LibraryCircuit::BasisPrep { n: 1, index: j }.build().unwrap();
                sample_noisy(&c, &NoiseSpec::noiseless(1), 100, 2, 1).unwrap()
            })
            .collect();
        assert_eq!(*calibration_filter(&runs).unwrap().matrix(), SquareMatrix::identity(2));
        assert!(calibration_filter(&runs[..1]).is_err());
    }

    #[test]
    fn matrix_csv_round_trip() {
        let gf = build_g(0.013, 17, 2).unwrap();
        let mut buf = Vec::new();
        gf.write_csv(&mut buf).unwrap();
        let (meta, m) = read_matrix_csv(&buf[..]).unwrap();
        assert_eq!(m, gf.matrix());
        assert!(meta.contains(&("eps_g".to_string(), "0.013".to_string())));
        assert!(meta.contains(&("m".to_string(), "17".to_string())));
    }

    proptest! {
        #[test]
        fn gate_round_trip(raw in prop::collection::vec(0.05f64..1.0, 8), eps in 0.001f64..0.2, m in 1u32..20) {
            let p = interior(&raw);
            let gf = build_g(eps, m, 3).unwrap();
            prop_assume!(gf.condition_number() < 1e6);
            let back = gate_filter(&gf, &push_bitflip(&p, eps, m).unwrap()).unwrap();
            for (x, y) in back.values().iter().zip(p.values()) {
                prop_assert!((x - y).abs() < 1e-8);
            }
        }
    }
}
