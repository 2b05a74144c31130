use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::circuit::Circuit;
use super::ensemble::ShotEnsemble;
use super::state::{Pauli, StateVector};
use crate::error::{Error, Result};
use crate::linalg::ProbVector;
use crate::rng::{domain, stream};

/// Ground-truth noise used for synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Depolarizing probability applied to every qubit a gate touches.
    pub eps_g: f64,
    /// Per-qubit `(eps_m0, eps_m1)` readout flip probabilities.
    pub readout: Vec<(f64, f64)>,
}

impl NoiseSpec {
    pub fn noiseless(n_qubits: usize) -> Self {
        Self { eps_g: 0.0, readout: vec![(0.0, 0.0); n_qubits] }
    }

    pub fn uniform(n_qubits: usize, eps_g: f64, eps_m0: f64, eps_m1: f64) -> Self {
        Self { eps_g, readout: vec![(eps_m0, eps_m1); n_qubits] }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.eps_g) {
            return Err(Error::invalid(format!("eps_g = {} outside [0, 1)", self.eps_g)));
        }
        if self.readout.len() != n_qubits {
            return Err(Error::DimensionMismatch { expected: n_qubits, got: self.readout.len() });
        }
        for (i, &(e0, e1)) in self.readout.iter().enumerate() {
            if !(0.0..0.5).contains(&e0) || !(0.0..0.5).contains(&e1) {
                return Err(Error::invalid(format!(
                    "readout error ({e0}, {e1}) on qubit {i} outside [0, 0.5)"
                )));
            }
        }
        Ok(())
    }
}

/// Exact Born-rule distribution of the noiseless circuit.
pub fn simulate_ideal(circuit: &Circuit) -> ProbVector {
    let mut s = StateVector::zero(circuit.n_qubits());
    for g in circuit.gates() {
        s.apply(g);
    }
    let mut p = s.probabilities();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    ProbVector::new(p).expect("unitary evolution preserves the norm")
}

/// Prefix states are cached while `gates × 2^n` stays below this.
const PREFIX_CACHE_LIMIT: usize = 1 << 22;

struct Trajectories<'a> {
    circuit: &'a Circuit,
    /// (gate index, qubit) for every place a Pauli error may strike.
    slots: Vec<(usize, usize)>,
    p_error: f64,
    /// `prefix[g]` is the state before gate `g`, `prefix[len]` the final state.
    prefix: Option<Vec<StateVector>>,
    final_state: StateVector,
}

impl<'a> Trajectories<'a> {
    fn new(circuit: &'a Circuit, eps_g: f64) -> Self {
        let slots = circuit
            .gates()
            .iter()
            .enumerate()
            .flat_map(|(g, gate)| gate.qubits.iter().map(move |&q| (g, q)))
            .collect();
        let mut s = StateVector::zero(circuit.n_qubits());
        let cache = (circuit.gates().len() + 1) << circuit.n_qubits() <= PREFIX_CACHE_LIMIT;
        let mut prefix = cache.then(Vec::new);
        for g in circuit.gates() {
            if let Some(p) = prefix.as_mut() {
                p.push(s.clone());
            }
            s.apply(g);
        }
        if let Some(p) = prefix.as_mut() {
            p.push(s.clone());
        }
        Self { circuit, slots, p_error: 0.75 * eps_g, prefix, final_state: s }
    }

    /// Error positions follow a Bernoulli(p) process over the slots; sample
    /// the gaps geometrically instead of flipping a coin per slot.
    fn draw_errors<R: Rng>(&self, rng: &mut R, errors: &mut Vec<(usize, usize, Pauli)>) {
        errors.clear();
        if self.p_error <= 0.0 {
            return;
        }
        let log_q = (1.0 - self.p_error).ln();
        let mut pos = 0usize;
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let skip = (u.ln() / log_q).floor();
            if !skip.is_finite() || skip >= (self.slots.len() - pos) as f64 {
                return;
            }
            pos += skip as usize;
            let (g, q) = self.slots[pos];
            let pauli = match rng.random_range(0..3u8) {
                0 => Pauli::X,
                1 => Pauli::Y,
                _ => Pauli::Z,
            };
            errors.push((g, q, pauli));
            pos += 1;
            if pos >= self.slots.len() {
                return;
            }
        }
    }

    fn shot<R: Rng>(&self, rng: &mut R, errors: &mut Vec<(usize, usize, Pauli)>) -> usize {
        self.draw_errors(rng, errors);
        let Some(&(first_gate, _, _)) = errors.first() else {
            return self.final_state.sample_index(rng.random());
        };
        let gates = self.circuit.gates();
        let (mut state, start) = match &self.prefix {
            Some(p) => (p[first_gate].clone(), first_gate),
            None => (StateVector::zero(self.circuit.n_qubits()), 0),
        };
        let mut next = 0;
        for (g, gate) in gates.iter().enumerate().skip(start) {
            state.apply(gate);
            while next < errors.len() && errors[next].0 == g {
                state.apply_pauli(errors[next].1, errors[next].2);
                next += 1;
            }
        }
        state.sample_index(rng.random())
    }
}

/// Monte Carlo trajectories with depolarizing gate noise and readout flips.
///
/// After every gate each qubit it touches independently suffers X, Y or Z,
/// each with probability `eps_g / 4`. At readout qubit `i` reporting 0 flips
/// with probability `eps_m0,i` and reporting 1 flips with `eps_m1,i`.
/// Ensemble `k` draws from its own random stream, so the result depends only
/// on the arguments.
pub fn sample_noisy(
    circuit: &Circuit,
    noise: &NoiseSpec,
    shots: u64,
    ensembles: usize,
    seed: u64,
) -> Result<ShotEnsemble> {
    noise.validate(circuit.n_qubits())?;
    if shots == 0 || ensembles == 0 {
        return Err(Error::invalid("shots and ensembles must be positive"));
    }
    let n = circuit.n_qubits();
    let traj = Trajectories::new(circuit, noise.eps_g);
    let counts: Vec<Vec<u64>> = (0..ensembles)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, domain::SHOTS, k as u64);
            let mut counts = vec![0u64; 1 << n];
            let mut errors = Vec::new();
            for _ in 0..shots {
                let mut x = traj.shot(&mut rng, &mut errors);
                for (q, &(e0, e1)) in noise.readout.iter().enumerate() {
                    let flip = if (x >> q) & 1 == 0 { e0 } else { e1 };
                    if flip > 0.0 && rng.random::<f64>() < flip {
                        x ^= 1 << q;
                    }
                }
                counts[x] += 1;
            }
            counts
        })
        .collect();
    ShotEnsemble::new(n, counts, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::circuit::{Gate, GateKind};
    use crate::sim::library::LibraryCircuit;

    fn x_circuit(m: usize) -> Circuit {
        LibraryCircuit::RepeatedNot { m }.build().unwrap()
    }

    #[test]
    fn hadamard_is_uniform() {
        let c = Circuit::new(1, vec![Gate::one(GateKind::H, 0)], "h").unwrap();
        let p = simulate_ideal(&c);
        assert!((p.get(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn even_not_chain_returns_to_zero() {
        assert!((simulate_ideal(&x_circuit(200)).get(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_grover_hits_marked_state() {
        let c = LibraryCircuit::Grover2.build().unwrap();
        let e = sample_noisy(&c, &NoiseSpec::noiseless(2), 8192, 1, 1).unwrap();
        assert_eq!(e.counts(0)[3], 8192);
    }

    #[test]
    fn readout_flip_rate() {
        let c = x_circuit(1);
        let noise = NoiseSpec { eps_g: 0.0, readout: vec![(0.0, 0.1)] };
        let e = sample_noisy(&c, &noise, 100_000, 1, 3).unwrap();
        let p1 = e.pooled().get(1);
        let sigma = (0.9f64 * 0.1 / 1e5).sqrt();
        assert!((p1 - 0.9).abs() <= 3.0 * sigma, "p1 = {p1}");
    }

    #[test]
    fn gate_noise_matches_closed_form() {
        let c = x_circuit(200);
        let noise = NoiseSpec { eps_g: 0.01, readout: vec![(0.0, 0.0)] };
        let e = sample_noisy(&c, &noise, 100_000, 1, 11).unwrap();
        let expected = 0.5 + 0.5 * 0.99f64.powi(200);
        let sigma = (expected * (1.0 - expected) / 1e5).sqrt();
        let p0 = e.pooled().get(0);
        assert!((p0 - expected).abs() <= 3.0 * sigma, "p0 = {p0}, expected {expected}");
    }

    #[test]
    fn seed_determinism() {
        let c = LibraryCircuit::Grover2.build().unwrap();
        let noise = NoiseSpec::uniform(2, 0.02, 0.05, 0.08);
        let a = sample_noisy(&c, &noise, 500, 4, 77).unwrap();
        let b = sample_noisy(&c, &noise, 500, 4, 77).unwrap();
        let other = sample_noisy(&c, &noise, 500, 4, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_bad_noise() {
        let c = x_circuit(1);
        assert!(sample_noisy(&c, &NoiseSpec { eps_g: 1.0, readout: vec![(0.0, 0.0)] }, 10, 1, 0).is_err());
        assert!(sample_noisy(&c, &NoiseSpec { eps_g: 0.0, readout: vec![(0.5, 0.0)] }, 10, 1, 0).is_err());
        assert!(sample_noisy(&c, &NoiseSpec::noiseless(2), 10, 1, 0).is_err());
    }

    #[test]
    fn noiseless_converges_to_ideal() {
        let c = LibraryCircuit::Qaoa4 {
            gamma: vec![0.2 * std::f64::consts::PI, 0.4 * std::f64::consts::PI],
            beta: vec![0.15 * std::f64::consts::PI, 0.05 * std::f64::consts::PI],
        }
        .build()
        .unwrap();
        let e = sample_noisy(&c, &NoiseSpec::noiseless(4), 100_000, 1, 5).unwrap();
        assert!(e.pooled().total_variation(&simulate_ideal(&c)) < 0.02);
    }

    #[test]
    fn per_qubit_flip_rates_independent() {
        // |00> and readout only: each qubit's marginal flip rate is its own eps_m0
        let c = Circuit::new(2, vec![], "idle").unwrap();
        let noise = NoiseSpec { eps_g: 0.0, readout: vec![(0.05, 0.0), (0.2, 0.0)] };
        let e = sample_noisy(&c, &noise, 100_000, 1, 8).unwrap();
        for (q, rate) in [(0usize, 0.05f64), (1, 0.2)] {
            let p = e.pooled().marginal(q).unwrap().get(1);
            let sigma = (rate * (1.0 - rate) / 1e5).sqrt();
            assert!((p - rate).abs() <= 3.0 * sigma, "qubit {q}: {p}");
        }
        // joint flips factorize
        let p11 = e.pooled().get(3);
        let sigma = (0.01f64 * 0.99 / 1e5).sqrt();
        assert!((p11 - 0.01).abs() <= 3.0 * sigma);
    }
}
