use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{basis_index, basis_string, ProbVector};

/// Shot counts for `n_ensembles` independent blocks of `shots_per_ensemble`
/// shots. Counts are stored densely, indexed by basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotEnsemble {
    n_qubits: usize,
    shots_per_ensemble: u64,
    counts: Vec<Vec<u64>>,
    seed: u64,
}

/// Event whose per-ensemble frequency is the quantity of interest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Basis(String),
    AnyOf(Vec<String>),
}

impl Target {
    /// Basis indices in the event, validated against `n_qubits`.
    pub fn indices(&self, n_qubits: usize) -> Result<Vec<usize>> {
        match self {
            Target::Basis(s) => Ok(vec![basis_index(s, n_qubits)?]),
            Target::AnyOf(list) => {
                if list.is_empty() {
                    return Err(Error::invalid("target set is empty"));
                }
                let mut idx = list
                    .iter()
                    .map(|s| basis_index(s, n_qubits))
                    .collect::<Result<Vec<_>>>()?;
                idx.sort_unstable();
                idx.dedup();
                Ok(idx)
            }
        }
    }

    pub fn probability(&self, p: &ProbVector) -> Result<f64> {
        Ok(self.indices(p.n_qubits())?.iter().map(|&i| p.get(i)).sum())
    }
}

impl From<&str> for Target {
    fn from(s: &str) -> Self {
        Target::Basis(s.to_string())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    ensemble_id: usize,
    basis_string: String,
    count: u64,
}

impl ShotEnsemble {
    pub fn new(n_qubits: usize, counts: Vec<Vec<u64>>, seed: u64) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let Some(first) = counts.first() else {
            return Err(Error::invalid("shot ensemble needs at least one ensemble"));
        };
        let shots: u64 = first.iter().sum();
        if shots == 0 {
            return Err(Error::invalid("ensembles must contain at least one shot"));
        }
        for (k, c) in counts.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.len() });
            }
            let s: u64 = c.iter().sum();
            if s != shots {
                return Err(Error::invalid(format!(
                    "ensemble {k} has {s} shots, expected {shots}"
                )));
            }
        }
        Ok(Self { n_qubits, shots_per_ensemble: shots, counts, seed })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots_per_ensemble(&self) -> u64 {
        self.shots_per_ensemble
    }

    pub fn n_ensembles(&self) -> usize {
        self.counts.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counts(&self, ensemble: usize) -> &[u64] {
        &self.counts[ensemble]
    }

    pub fn frequencies(&self, ensemble: usize) -> ProbVector {
        ProbVector::from_counts(&self.counts[ensemble]).expect("ensemble has shots")
    }

    /// Distribution estimated from all shots of all ensembles.
    pub fn pooled(&self) -> ProbVector {
        let mut total = vec![0u64; 1 << self.n_qubits];
        for c in &self.counts {
            for (t, v) in total.iter_mut().zip(c) {
                *t += v;
            }
        }
        ProbVector::from_counts(&total).expect("ensemble has shots")
    }

    /// Per-ensemble `(hits, shots)` for the target event.
    pub fn target_counts(&self, target: &Target) -> Result<Vec<(u64, u64)>> {
        let idx = target.indices(self.n_qubits)?;
        Ok(self
            .counts
            .iter()
            .map(|c| (idx.iter().map(|&i| c[i]).sum(), self.shots_per_ensemble))
            .collect())
    }

    /// Per-ensemble `(zeros, shots)` on a single qubit.
    pub fn marginal_zero_counts(&self, qubit: usize) -> Result<Vec<(u64, u64)>> {
        if qubit >= self.n_qubits {
            return Err(Error::invalid(format!("qubit {qubit} out of range")));
        }
        Ok(self
            .counts
            .iter()
            .map(|c| {
                let zeros = c
                    .iter()
                    .enumerate()
                    .filter(|(x, _)| (x >> qubit) & 1 == 0)
                    .map(|(_, v)| v)
                    .sum();
                (zeros, self.shots_per_ensemble)
            })
            .collect())
    }

    /// Restrict to one qubit, summing over the others.
    pub fn marginal(&self, qubit: usize) -> Result<ShotEnsemble> {
        let counts = self
            .marginal_zero_counts(qubit)?
            .into_iter()
            .map(|(z, s)| vec![z, s - z])
            .collect();
        ShotEnsemble::new(1, counts, self.seed)
    }

    /// Rows `(ensemble_id, basis_string, count)` for nonzero counts.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (k, c) in self.counts.iter().enumerate() {
            for (x, &count) in c.iter().enumerate() {
                if count > 0 {
                    out.serialize(CountRow {
                        ensemble_id: k,
                        basis_string: basis_string(x, self.n_qubits),
                        count,
                    })?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Parse the CSV written by [`ShotEnsemble::write_csv`]. The width is
    /// taken from the basis strings; ensembles must be numbered `0..K`.
    pub fn read_csv<R: Read>(r: R, seed: u64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut rows: Vec<CountRow> = Vec::new();
        for row in rdr.deserialize() {
            rows.push(row?);
        }
        let Some(first) = rows.first() else {
            return Err(Error::invalid("ensemble CSV has no rows"));
        };
        let n_qubits = first.basis_string.len();
        if n_qubits == 0 || n_qubits > crate::linalg::MAX_QUBITS {
            return Err(Error::invalid(format!("bad basis string width {n_qubits}")));
        }
        let n_ens = rows.iter().map(|r| r.ensemble_id).max().unwrap_or(0) + 1;
        let mut counts = vec![vec![0u64; 1 << n_qubits]; n_ens];
        for row in &rows {
            let x = basis_index(&row.basis_string, n_qubits)?;
            counts[row.ensemble_id][x] += row.count;
        }
        ShotEnsemble::new(n_qubits, counts, seed)
    }
}

/// Per-ensemble empirical frequency of the target event.
pub fn ensemble_qoi(e: &ShotEnsemble, target: &Target) -> Result<Vec<f64>> {
    Ok(e
        .target_counts(target)?
        .into_iter()
        .map(|(h, s)| h as f64 / s as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qoi_all_on_target() {
        let e = ShotEnsemble::new(2, vec![vec![1024, 0, 0, 0]; 3], 0).unwrap();
        assert_eq!(ensemble_qoi(&e, &"00".into()).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn qoi_half() {
        let e = ShotEnsemble::new(1, vec![vec![512, 512]; 4], 0).unwrap();
        assert_eq!(ensemble_qoi(&e, &"0".into()).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn qoi_set_membership_matches_direct_count() {
        let counts: Vec<Vec<u64>> = (0..5u64)
            .map(|k| (0..16u64).map(|x| ((x + 3 * k) % 16 * 7) % 11 + 1).collect())
            .collect();
        let e = ShotEnsemble::new(4, counts.clone(), 0).unwrap();
        let set = ["0010", "0101", "0110", "1001", "1010", "1101"];
        let target = Target::AnyOf(set.iter().map(|s| s.to_string()).collect());
        let qoi = ensemble_qoi(&e, &target).unwrap();
        let opt = [2usize, 5, 6, 9, 10, 13];
        for (k, c) in counts.iter().enumerate() {
            let total: u64 = c.iter().sum();
            let hits: u64 = opt.iter().map(|&i| c[i]).sum();
            assert_eq!(qoi[k], hits as f64 / total as f64);
        }
    }

    #[test]
    fn rejects_unequal_ensembles() {
        assert!(ShotEnsemble::new(1, vec![vec![1, 1], vec![2, 1]], 0).is_err());
        assert!(ShotEnsemble::new(1, vec![], 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let e = ShotEnsemble::new(2, vec![vec![3, 0, 5, 2], vec![0, 10, 0, 0]], 9).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ensemble_id,basis_string,count\n0,00,3\n0,10,5\n"));
        assert_eq!(ShotEnsemble::read_csv(&buf[..], 9).unwrap(), e);
    }

    #[test]
    fn marginal_counts() {
        let e = ShotEnsemble::new(2, vec![vec![1, 2, 3, 4]], 0).unwrap();
        assert_eq!(e.marginal_zero_counts(0).unwrap(), vec![(4, 10)]);
        assert_eq!(e.marginal_zero_counts(1).unwrap(), vec![(3, 10)]);
    }
}
