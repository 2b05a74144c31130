use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::MAX_QUBITS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    /// qubits = [control, target]
    Cnot,
    /// `exp(-i θ X / 2)`
    Rx(f64),
    /// `exp(-i θ Z / 2)`
    Rz(f64),
    /// `exp(-i θ Z⊗Z / 2)`
    Rzz(f64),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Rzz(_) => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::S => "S",
            GateKind::Sdg => "Sdg",
            GateKind::Cnot => "CNOT",
            GateKind::Rx(_) => "RX",
            GateKind::Rz(_) => "RZ",
            GateKind::Rzz(_) => "RZZ",
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            GateKind::Rx(t) | GateKind::Rz(t) | GateKind::Rzz(t) => Some(t),
            _ => None,
        }
    }

    pub fn inverse(&self) -> GateKind {
        match *self {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            GateKind::Rx(t) => GateKind::Rx(-t),
            GateKind::Rz(t) => GateKind::Rz(-t),
            GateKind::Rzz(t) => GateKind::Rzz(-t),
            other => other,
        }
    }

    fn parse(name: &str, theta: Option<f64>) -> Result<GateKind> {
        let need_theta = || {
            theta.ok_or_else(|| Error::invalid(format!("gate {name} requires a theta parameter")))
        };
        let kind = match name.to_ascii_uppercase().as_str() {
            "H" => GateKind::H,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "S" => GateKind::S,
            "SDG" => GateKind::Sdg,
            "CNOT" | "CX" => GateKind::Cnot,
            "RX" => GateKind::Rx(need_theta()?),
            "RZ" => GateKind::Rz(need_theta()?),
            "RZZ" => GateKind::Rzz(need_theta()?),
            _ => return Err(Error::invalid(format!("unsupported gate kind {name:?}"))),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateRecord", into = "GateRecord")]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::invalid(format!(
                "{} acts on {} qubit(s), got {:?}",
                kind.name(),
                kind.arity(),
                qubits
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::invalid(format!("{} qubits must be distinct", kind.name())));
        }
        if let Some(t) = kind.theta() {
            if !t.is_finite() {
                return Err(Error::invalid("rotation angle must be finite"));
            }
        }
        Ok(Self { kind, qubits })
    }

    pub(crate) fn one(kind: GateKind, q: usize) -> Self {
        Self { kind, qubits: vec![q] }
    }

    pub(crate) fn two(kind: GateKind, a: usize, b: usize) -> Self {
        Self { kind, qubits: vec![a, b] }
    }

    pub fn inverse(&self) -> Gate {
        Gate { kind: self.kind.inverse(), qubits: self.qubits.clone() }
    }
}

/// Wire form: `{"kind": str, "qubits": [int], "theta": float?}`.
#[derive(Serialize, Deserialize)]
struct GateRecord {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

impl TryFrom<GateRecord> for Gate {
    type Error = Error;

    fn try_from(r: GateRecord) -> Result<Self> {
        Gate::new(GateKind::parse(&r.kind, r.theta)?, r.qubits)
    }
}

impl From<Gate> for GateRecord {
    fn from(g: Gate) -> Self {
        GateRecord { kind: g.kind.name().to_string(), qubits: g.qubits, theta: g.kind.theta() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRecord")]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    label: String,
}

#[derive(Deserialize)]
struct CircuitRecord {
    n_qubits: usize,
    gates: Vec<Gate>,
    #[serde(default)]
    label: String,
}

impl TryFrom<CircuitRecord> for Circuit {
    type Error = Error;

    fn try_from(r: CircuitRecord) -> Result<Self> {
        Circuit::new(r.n_qubits, r.gates, r.label)
    }
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>, label: impl Into<String>) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::invalid(format!("circuit width must be in [1, {MAX_QUBITS}], got {n_qubits}")));
        }
        if let Some(g) = gates.iter().find(|g| g.qubits.iter().any(|&q| q >= n_qubits)) {
            return Err(Error::invalid(format!(
                "gate {} on {:?} is out of range for {n_qubits} qubits",
                g.kind.name(),
                g.qubits
            )));
        }
        Ok(Self { n_qubits, gates, label: label.into() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Gates that touch `qubit`; used as the default bit-flip layer count.
    pub fn gates_on(&self, qubit: usize) -> usize {
        self.gates.iter().filter(|g| g.qubits.contains(&qubit)).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let c = Circuit::new(
            2,
            vec![
                Gate::new(GateKind::H, vec![0]).unwrap(),
                Gate::new(GateKind::Cnot, vec![0, 1]).unwrap(),
                Gate::new(GateKind::Rzz(0.25), vec![0, 1]).unwrap(),
            ],
            "bell",
        )
        .unwrap();
        let json = c.to_json().unwrap();
        assert!(json.contains("\"theta\": 0.25"));
        assert_eq!(Circuit::from_json(&json).unwrap(), c);
    }

    #[test]
    fn json_rejects_bad_gates() {
        let unknown = r#"{"n_qubits": 1, "gates": [{"kind": "T", "qubits": [0]}], "label": ""}"#;
        assert!(Circuit::from_json(unknown).is_err());
        let out_of_range = r#"{"n_qubits": 1, "gates": [{"kind": "X", "qubits": [1]}], "label": ""}"#;
        assert!(Circuit::from_json(out_of_range).is_err());
        let no_theta = r#"{"n_qubits": 1, "gates": [{"kind": "RX", "qubits": [0]}], "label": ""}"#;
        assert!(Circuit::from_json(no_theta).is_err());
        let dup = r#"{"n_qubits": 2, "gates": [{"kind": "CNOT", "qubits": [1, 1]}], "label": ""}"#;
        assert!(Circuit::from_json(dup).is_err());
    }

    #[test]
    fn width_bounds() {
        assert!(Circuit::new(0, vec![], "").is_err());
        assert!(Circuit::new(11, vec![], "").is_err());
    }
}
