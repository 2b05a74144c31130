use rand::Rng;
use serde::{Deserialize, Serialize};

use super::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::rng::{domain, stream};

/// Generators per random two-qubit Clifford element.
pub const CLIFFORD_WORD_LEN: usize = 10;

/// Max-Cut graph of the four-node QAOA example, as qubit pairs
/// (nodes 1–2, 2–3, 2–4, 3–4).
pub const QAOA4_EDGES: [(usize, usize); 4] = [(0, 1), (1, 2), (1, 3), (2, 3)];

/// Optimal cuts of [`QAOA4_EDGES`] (cut value 3).
pub const QAOA4_OPTIMAL: [&str; 6] = ["0010", "0101", "0110", "1001", "1010", "1101"];

/// Named circuits used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum LibraryCircuit {
    /// One H per qubit.
    HadamardLayer { n: usize },
    /// `m` X gates on a single qubit.
    RepeatedNot { m: usize },
    /// Two-qubit Grover search marking `|11⟩`.
    Grover2,
    /// QAOA Max-Cut on the four-node graph, one round per `(gamma, beta)` pair.
    Qaoa4 { gamma: Vec<f64>, beta: Vec<f64> },
    /// `length` random Clifford words followed by their inverse.
    RandomClifford2 { length: usize, seed: u64 },
    /// X gates preparing basis state `index`.
    BasisPrep { n: usize, index: usize },
}

impl LibraryCircuit {
    pub fn build(&self) -> Result<Circuit> {
        match self {
            LibraryCircuit::HadamardLayer { n } => {
                let gates = (0..*n).map(|q| Gate::one(GateKind::H, q)).collect();
                Circuit::new(*n, gates, format!("hadamard_layer({n})"))
            }
            LibraryCircuit::RepeatedNot { m } => {
                let gates = vec![Gate::one(GateKind::X, 0); *m];
                Circuit::new(1, gates, format!("repeated_not({m})"))
            }
            LibraryCircuit::Grover2 => Circuit::new(2, grover2_gates(), "grover2"),
            LibraryCircuit::Qaoa4 { gamma, beta } => qaoa4(gamma, beta),
            LibraryCircuit::RandomClifford2 { length, seed } => random_clifford2(*length, *seed),
            LibraryCircuit::BasisPrep { n, index } => {
                if *n == 0 || *index >= 1usize << n {
                    return Err(Error::invalid(format!("basis index {index} invalid for {n} qubits")));
                }
                let gates = (0..*n)
                    .filter(|q| (index >> q) & 1 == 1)
                    .map(|q| Gate::one(GateKind::X, q))
                    .collect();
                Circuit::new(*n, gates, format!("basis_prep({index})"))
            }
        }
    }
}

/// Build a named library circuit from loose parameters.
pub fn circuit_library(name: &str, params: &serde_json::Value) -> Result<Circuit> {
    let mut obj = match params {
        serde_json::Value::Object(m) => m.clone(),
        serde_json::Value::Null => serde_json::Map::new(),
        _ => return Err(Error::invalid("circuit parameters must be a JSON object")),
    };
    obj.insert("name".into(), serde_json::Value::String(name.into()));
    let lib: LibraryCircuit = serde_json::from_value(serde_json::Value::Object(obj))
        .map_err(|e| Error::invalid(format!("unknown circuit or bad parameters for {name:?}: {e}")))?;
    lib.build()
}

fn cz(a: usize, b: usize) -> [Gate; 3] {
    [Gate::one(GateKind::H, b), Gate::two(GateKind::Cnot, a, b), Gate::one(GateKind::H, b)]
}

fn grover2_gates() -> Vec<Gate> {
    let h = |q| Gate::one(GateKind::H, q);
    let x = |q| Gate::one(GateKind::X, q);
    let mut g = vec![h(0), h(1)];
    g.extend(cz(0, 1));
    g.extend([h(0), h(1), x(0), x(1)]);
    g.extend(cz(0, 1));
    g.extend([x(0), x(1), h(0), h(1)]);
    g
}

/// Cost layer `exp(-iγ C)` with `C = Σ (1 - Z_i Z_j)/2` is `RZZ(-γ)` per edge
/// up to global phase; the mixer `exp(-iβ Σ X)` is `RX(2β)` per qubit.
fn qaoa4(gamma: &[f64], beta: &[f64]) -> Result<Circuit> {
    if gamma.len() != beta.len() || gamma.is_empty() {
        return Err(Error::invalid("qaoa4 needs matching, nonempty gamma and beta lists"));
    }
    let mut gates: Vec<Gate> = (0..4).map(|q| Gate::one(GateKind::H, q)).collect();
    for (&g, &b) in gamma.iter().zip(beta) {
        for &(i, j) in &QAOA4_EDGES {
            gates.push(Gate::new(GateKind::Rzz(-g), vec![i, j])?);
        }
        for q in 0..4 {
            gates.push(Gate::new(GateKind::Rx(2.0 * b), vec![q])?);
        }
    }
    Circuit::new(4, gates, format!("qaoa4(p={})", gamma.len()))
}

fn random_clifford2(length: usize, seed: u64) -> Result<Circuit> {
    if length == 0 {
        return Err(Error::invalid("random_clifford2 needs length >= 1"));
    }
    let mut rng = stream(seed, domain::CLIFFORD, 0);
    let mut forward = Vec::with_capacity(length * CLIFFORD_WORD_LEN);
    for _ in 0..length * CLIFFORD_WORD_LEN {
        let g = match rng.random_range(0..6u8) {
            0 => Gate::one(GateKind::H, 0),
            1 => Gate::one(GateKind::H, 1),
            2 => Gate::one(GateKind::S, 0),
            3 => Gate::one(GateKind::S, 1),
            4 => Gate::two(GateKind::Cnot, 0, 1),
            _ => Gate::two(GateKind::Cnot, 1, 0),
        };
        forward.push(g);
    }
    let inverse: Vec<Gate> = forward.iter().rev().map(Gate::inverse).collect();
    forward.extend(inverse);
    Circuit::new(2, forward, format!("random_clifford2(length={length}, seed={seed})"))
}
