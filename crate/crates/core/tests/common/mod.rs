//! Reference implementations used only by tests.

#![allow(dead_code)]

use num_complex::Complex64;
use qfmevo_core::nsga2::{dominates, Objectives};
use qfmevo_core::quantum_sim::{Axis, GateOp};
use rand::Rng;

pub type Dense = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn identity(dim: usize) -> Dense {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect()
}

fn local_2x2(gate: &GateOp) -> [[Complex64; 2]; 2] {
    match *gate {
        GateOp::Hadamard(_) => {
            let h = 1.0 / 2f64.sqrt();
            [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
        }
        GateOp::Rotation { axis, angle, .. } => {
            // exp(-i angle/2 sigma) = cos(angle/2) I - i sin(angle/2) sigma
            let (co, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            let sigma = match axis {
                Axis::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
                Axis::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
                Axis::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
            };
            let mut m = [[c(0.0, 0.0); 2]; 2];
            for r in 0..2 {
                for k in 0..2 {
                    let id = if r == k { co } else { 0.0 };
                    m[r][k] = c(id, 0.0) - c(0.0, s) * sigma[r][k];
                }
            }
            m
        }
        GateOp::CNot { .. } => unreachable!(),
    }
}

/// Full `2^n x 2^n` unitary of one gate.
pub fn gate_unitary(gate: &GateOp, n: usize) -> Dense {
    let dim = 1 << n;
    let mut u = vec![vec![c(0.0, 0.0); dim]; dim];
    match *gate {
        GateOp::CNot { control, target } => {
            for j in 0..dim {
                let i = if j >> control & 1 == 1 { j ^ (1 << target) } else { j };
                u[i][j] = c(1.0, 0.0);
            }
        }
        GateOp::Hadamard(t) | GateOp::Rotation { target: t, .. } => {
            let m = local_2x2(gate);
            for i in 0..dim {
                for j in 0..dim {
                    if (i ^ j) & !(1 << t) == 0 {
                        u[i][j] = m[i >> t & 1][j >> t & 1];
                    }
                }
            }
        }
    }
    u
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Product `U_last ... U_first`.
pub fn circuit_unitary(ops: &[GateOp], n: usize) -> Dense {
    ops.iter()
        .fold(identity(1 << n), |acc, g| matmul(&gate_unitary(g, n), &acc))
}

/// First column of the circuit unitary, i.e. `U|0^n>`.
pub fn oracle_state(ops: &[GateOp], n: usize) -> Vec<Complex64> {
    circuit_unitary(ops, n).iter().map(|row| row[0]).collect()
}

/// `|<0| U_a^dagger U_b |0>|^2` via explicit matrices.
pub fn oracle_fidelity(a: &[GateOp], b: &[GateOp], n: usize) -> f64 {
    let sa = oracle_state(a, n);
    let sb = oracle_state(b, n);
    sa.iter().zip(&sb).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

pub fn random_gate<R: Rng>(rng: &mut R, n: usize) -> GateOp {
    let axes = [Axis::X, Axis::Y, Axis::Z];
    match rng.gen_range(0..if n > 1 { 3 } else { 2 }) {
        0 => GateOp::Hadamard(rng.gen_range(0..n)),
        1 => GateOp::rotation(
            axes[rng.gen_range(0..3)],
            rng.gen_range(0..n),
            rng.gen_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI),
        ),
        _ => {
            let control = rng.gen_range(0..n);
            let mut target = rng.gen_range(0..n - 1);
            if target >= control {
                target += 1;
            }
            GateOp::cnot(control, target)
        }
    }
}

pub fn random_circuit<R: Rng>(rng: &mut R, n: usize, len: usize) -> Vec<GateOp> {
    (0..len).map(|_| random_gate(rng, n)).collect()
}

/// Front peeling by repeated full scans.
pub fn peel_fronts(pop: &[Objectives]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..pop.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&pop[j], &pop[i])))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

pub fn random_objectives<R: Rng>(rng: &mut R, n: usize) -> Vec<Objectives> {
    (0..n)
        .map(|_| Objectives {
            accuracy: rng.gen_range(0..21) as f64 / 20.0,
            local_gates: rng.gen_range(0..15),
            cnot_gates: rng.gen_range(0..10),
        })
        .collect()
}
