use num_complex::Complex64;

use super::circuit::{Gate, GateKind};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Single-qubit Pauli used for error injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone)]
pub(crate) struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Draw a basis index from `|ψ|²` given `u` uniform on [0, 1).
    pub fn sample_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                return i;
            }
        }
        // u landed in the rounding gap above the total; take the last state with support
        self.amps.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(0)
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn apply_x(&mut self, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    fn apply_phase(&mut self, q: usize, phase: Complex64) {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= phase;
            }
        }
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        match p {
            Pauli::X => self.apply_x(q),
            Pauli::Z => self.apply_phase(q, Complex64::new(-1.0, 0.0)),
            Pauli::Y => {
                // Y = i X Z
                self.apply_phase(q, Complex64::new(-1.0, 0.0));
                self.apply_x(q);
                self.amps.iter_mut().for_each(|a| *a *= Complex64::i());
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate) {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match gate.kind {
            GateKind::H => {
                let h = FRAC_1_SQRT_2;
                self.apply_1q(gate.qubits[0], [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]);
            }
            GateKind::X => self.apply_pauli(gate.qubits[0], Pauli::X),
            GateKind::Y => self.apply_pauli(gate.qubits[0], Pauli::Y),
            GateKind::Z => self.apply_pauli(gate.qubits[0], Pauli::Z),
            GateKind::S => self.apply_phase(gate.qubits[0], c(0.0, 1.0)),
            GateKind::Sdg => self.apply_phase(gate.qubits[0], c(0.0, -1.0)),
            GateKind::Rz(t) => {
                let q = gate.qubits[0];
                let (s, co) = (t / 2.0).sin_cos();
                self.apply_1q(q, [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]);
            }
            GateKind::Rx(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                self.apply_1q(gate.qubits[0], [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]);
            }
            GateKind::Cnot => {
                let (ctrl, tgt) = (1usize << gate.qubits[0], 1usize << gate.qubits[1]);
                for i in 0..self.amps.len() {
                    if i & ctrl != 0 && i & tgt == 0 {
                        self.amps.swap(i, i | tgt);
                    }
                }
            }
            GateKind::Rzz(t) => {
                let (a, b) = (gate.qubits[0], gate.qubits[1]);
                let (s, co) = (t / 2.0).sin_cos();
                let same = c(co, -s);
                let diff = c(co, s);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    let parity = ((i >> a) ^ (i >> b)) & 1;
                    *amp *= if parity == 0 { same } else { diff };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn y_matches_matrix() {
        // Y|0> = i|1>, Y|1> = -i|0>
        let mut s = StateVector::zero(1);
        s.apply_pauli(0, Pauli::Y);
        assert_abs_diff_eq!(s.amps[1].im, 1.0);
        s.apply_pauli(0, Pauli::Y);
        assert_abs_diff_eq!(s.amps[0].re, 1.0);
    }

    #[test]
    fn rx_pi_is_bit_flip() {
        let mut s = StateVector::zero(1);
        s.apply(&Gate::one(GateKind::Rx(std::f64::consts::PI), 0));
        assert_abs_diff_eq!(s.probabilities()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cnot_uses_control_then_target() {
        let mut s = StateVector::zero(2);
        s.apply(&Gate::one(GateKind::X, 0));
        s.apply(&Gate::two(GateKind::Cnot, 0, 1));
        assert_abs_diff_eq!(s.probabilities()[3], 1.0);
    }
}
