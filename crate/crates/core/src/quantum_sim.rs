//! Dense statevector simulator for the small gate set used by the feature maps.
//!
//! Basis indices are little-endian: qubit 0 is the least significant bit, so
//! the basis state `|q_{n-1} ... q_1 q_0>` lives at index `sum_k q_k 2^k`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{precondition, Error, Result};

/// Largest register the simulator accepts (4096 amplitudes).
pub const MAX_QUBITS: usize = 12;

/// Pauli axis of a single-qubit rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => f.write_str("X"),
            Axis::Y => f.write_str("Y"),
            Axis::Z => f.write_str("Z"),
        }
    }
}

/// A gate of the simulator's instruction set.
///
/// Rotations follow `R_a(theta) = exp(-i theta/2 sigma_a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateOp {
    Hadamard(usize),
    Rotation { axis: Axis, target: usize, angle: f64 },
    CNot { control: usize, target: usize },
}

pub type Matrix2 = [[Complex64; 2]; 2];

impl GateOp {
    pub fn rotation(axis: Axis, target: usize, angle: f64) -> Self {
        GateOp::Rotation {
            axis,
            target,
            angle,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::CNot { control, target }
    }

    /// True for single-qubit gates.
    pub fn is_local(&self) -> bool {
        !matches!(self, GateOp::CNot { .. })
    }

    /// The inverse gate. H and CNOT are self-inverse.
    pub fn adjoint(&self) -> Self {
        match *self {
            GateOp::Rotation {
                axis,
                target,
                angle,
            } => GateOp::Rotation {
                axis,
                target,
                angle: -angle,
            },
            other => other,
        }
    }

    /// 2x2 unitary of a single-qubit gate, `None` for CNOT.
    pub fn local_matrix(&self) -> Option<Matrix2> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match *self {
            GateOp::Hadamard(_) => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                Some([[h, h], [h, -h]])
            }
            GateOp::Rotation { axis, angle, .. } => {
                let (s, co) = (angle / 2.0).sin_cos();
                Some(match axis {
                    Axis::X => [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]],
                    Axis::Y => [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]],
                    Axis::Z => [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]],
                })
            }
            GateOp::CNot { .. } => None,
        }
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        let bad = |q: usize| q >= n_qubits;
        match *self {
            GateOp::Hadamard(t) | GateOp::Rotation { target: t, .. } if bad(t) => Err(precondition(
                format!("gate {self} targets qubit {t} on a {n_qubits}-qubit register"),
            )),
            GateOp::CNot { control, target } => {
                if bad(control) || bad(target) {
                    Err(precondition(format!(
                        "gate {self} out of range for {n_qubits} qubits"
                    )))
                } else if control == target {
                    Err(precondition(format!("CNOT control equals target ({control})")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateOp::Hadamard(t) => write!(f, "H q{t}"),
            GateOp::Rotation {
                axis,
                target,
                angle,
            } => write!(f, "R{axis}({angle:.6}) q{target}"),
            GateOp::CNot { control, target } => write!(f, "CNOT q{control}->q{target}"),
        }
    }
}

/// Pure state of `n_qubits` qubits stored as `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Config(format!(
                "n_qubits must lie in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(precondition(format!(
                "inner product of {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        gate.check(self.n_qubits)?;
        match *gate {
            GateOp::CNot { control, target } => {
                let (cm, tm) = (1usize << control, 1usize << target);
                for i in 0..self.amplitudes.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
            GateOp::Hadamard(target) | GateOp::Rotation { target, .. } => {
                let m = gate.local_matrix().expect("single-qubit gate");
                let tm = 1usize << target;
                for i in 0..self.amplitudes.len() {
                    if i & tm == 0 {
                        let (a, b) = (self.amplitudes[i], self.amplitudes[i | tm]);
                        self.amplitudes[i] = m[0][0] * a + m[0][1] * b;
                        self.amplitudes[i | tm] = m[1][0] * a + m[1][1] * b;
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies `ops` left to right.
    pub fn apply_all<'a>(&mut self, ops: impl IntoIterator<Item = &'a GateOp>) -> Result<()> {
        ops.into_iter().try_for_each(|g| self.apply(g))
    }
}

pub fn new_zero_state(n_qubits: usize) -> Result<Statevector> {
    Statevector::zero(n_qubits)
}

pub fn apply_gate(mut state: Statevector, gate: &GateOp) -> Result<Statevector> {
    state.apply(gate)?;
    Ok(state)
}

pub fn apply_circuit(mut state: Statevector, ops: &[GateOp]) -> Result<Statevector> {
    state.apply_all(ops)?;
    Ok(state)
}

/// `U|0^n>` for the circuit `ops`.
pub fn prepare(ops: &[GateOp], n_qubits: usize) -> Result<Statevector> {
    apply_circuit(Statevector::zero(n_qubits)?, ops)
}

/// `|<0^n| U_a^dagger U_b |0^n>|^2`, computed by running `ops_b` followed by the
/// reversed adjoint of `ops_a` and reading the probability of `0^n`.
pub fn fidelity_overlap(ops_a: &[GateOp], ops_b: &[GateOp], n_qubits: usize) -> Result<f64> {
    let mut state = prepare(ops_b, n_qubits)?;
    for g in ops_a.iter().rev() {
        state.apply(&g.adjoint())?;
    }
    Ok(state.amplitudes[0].norm_sqr().min(1.0))
}

/// Same quantity as [`fidelity_overlap`], computed as `|<psi_a|psi_b>|^2`
/// from the two prepared states.
pub fn fidelity_by_states(ops_a: &[GateOp], ops_b: &[GateOp], n_qubits: usize) -> Result<f64> {
    let a = prepare(ops_a, n_qubits)?;
    let b = prepare(ops_b, n_qubits)?;
    Ok(a.inner(&b)?.norm_sqr().min(1.0))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn approx(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    #[test]
    fn zero_state_layout() {
        for n in 1..=3 {
            let s = new_zero_state(n).unwrap();
            assert_eq!(s.amplitudes().len(), 1 << n);
            assert!(approx(s.amplitudes()[0], 1.0, 0.0));
            assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
        }
    }

    #[test]
    fn zero_state_rejects_bad_sizes() {
        assert!(matches!(new_zero_state(0), Err(Error::Config(_))));
        assert!(matches!(new_zero_state(13), Err(Error::Config(_))));
        assert!(new_zero_state(12).is_ok());
    }

    #[test]
    fn hadamard_on_zero() {
        let s = apply_gate(new_zero_state(1).unwrap(), &GateOp::Hadamard(0)).unwrap();
        assert!(approx(s.amplitudes()[0], FRAC_1_SQRT_2, 0.0));
        assert!(approx(s.amplitudes()[1], FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn rz_on_zero_is_phase() {
        let theta = 0.731;
        let s = apply_gate(
            new_zero_state(1).unwrap(),
            &GateOp::rotation(Axis::Z, 0, theta),
        )
        .unwrap();
        let expected = Complex64::from_polar(1.0, -theta / 2.0);
        assert!(approx(s.amplitudes()[0], expected.re, expected.im));
        assert!(approx(s.amplitudes()[1], 0.0, 0.0));
    }

    #[test]
    fn rx_ry_flip_at_pi() {
        let s = apply_gate(new_zero_state(1).unwrap(), &GateOp::rotation(Axis::X, 0, PI)).unwrap();
        assert!(approx(s.amplitudes()[1], 0.0, -1.0));
        let s = apply_gate(new_zero_state(1).unwrap(), &GateOp::rotation(Axis::Y, 0, PI)).unwrap();
        assert!(approx(s.amplitudes()[1], 1.0, 0.0));
    }

    #[test]
    fn cnot_truth_table() {
        // |01> (qubit 0 set) -> |11>
        let mut s = new_zero_state(2).unwrap();
        s.apply(&GateOp::rotation(Axis::X, 0, PI)).unwrap();
        let s = apply_gate(s, &GateOp::cnot(0, 1)).unwrap();
        assert!(s.amplitudes()[3].norm() > 1.0 - 1e-12);
        // control clear: no-op
        let s = apply_gate(new_zero_state(2).unwrap(), &GateOp::cnot(0, 1)).unwrap();
        assert!(approx(s.amplitudes()[0], 1.0, 0.0));
    }

    #[test]
    fn circuits() {
        let zero = new_zero_state(2).unwrap();
        assert_eq!(apply_circuit(zero.clone(), &[]).unwrap(), zero);

        let s = apply_circuit(
            new_zero_state(1).unwrap(),
            &[GateOp::Hadamard(0), GateOp::Hadamard(0)],
        )
        .unwrap();
        assert!(approx(s.amplitudes()[0], 1.0, 0.0));
        assert!(approx(s.amplitudes()[1], 0.0, 0.0));

        let bell = apply_circuit(zero, &[GateOp::Hadamard(0), GateOp::cnot(0, 1)]).unwrap();
        let a = bell.amplitudes();
        assert!(approx(a[0], FRAC_1_SQRT_2, 0.0) && approx(a[3], FRAC_1_SQRT_2, 0.0));
        assert!(approx(a[1], 0.0, 0.0) && approx(a[2], 0.0, 0.0));
    }

    #[test]
    fn invalid_indices_are_rejected() {
        let s = new_zero_state(2).unwrap();
        assert!(matches!(
            apply_gate(s.clone(), &GateOp::Hadamard(2)),
            Err(Error::Precondition(_))
        ));
        assert!(apply_gate(s.clone(), &GateOp::cnot(1, 1)).is_err());
        assert!(apply_gate(s, &GateOp::cnot(0, 5)).is_err());
        assert!(fidelity_overlap(&[GateOp::Hadamard(3)], &[], 2).is_err());
    }

    #[test]
    fn single_qubit_closed_form() {
        let map = |x: f64| vec![GateOp::Hadamard(0), GateOp::rotation(Axis::Z, 0, x)];
        assert!(fidelity_overlap(&map(0.0), &map(PI), 1).unwrap() < 1e-12);
        for (x1, x2) in [(0.3, 1.9), (-2.0, 0.5), (1.0, 1.0)] {
            let expected = ((x1 - x2) / 2.0f64).cos().powi(2);
            let got = fidelity_overlap(&map(x1), &map(x2), 1).unwrap();
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn both_fidelity_routes_agree() {
        let a = [
            GateOp::Hadamard(0),
            GateOp::rotation(Axis::Y, 1, 0.4),
            GateOp::cnot(0, 1),
            GateOp::rotation(Axis::X, 0, 1.3),
        ];
        let b = [
            GateOp::Hadamard(1),
            GateOp::cnot(1, 0),
            GateOp::rotation(Axis::Z, 0, -0.8),
        ];
        let f1 = fidelity_overlap(&a, &b, 2).unwrap();
        let f2 = fidelity_by_states(&a, &b, 2).unwrap();
        assert!((f1 - f2).abs() < 1e-12);
        assert!((fidelity_overlap(&a, &a, 2).unwrap() - 1.0).abs() < 1e-12);
    }
}
