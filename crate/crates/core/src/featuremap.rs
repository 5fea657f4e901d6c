//! Genome encoding of parameterized feature-map circuits.
//!
//! A genome for `N` qubits holds `N + C(N,2) + 4` bits:
//!
//! ```text
//! [ rotation flags: N ][ axis: 2 ][ entanglement flags: C(N,2) ][ depth: 2 ]
//! ```
//!
//! The axis field maps `00 -> X`, `01 -> Y`, `10 -> Z`, `11 -> Z`. The depth
//! field is read most-significant bit first and offset by one, giving depths
//! 1 to 4. Entanglement flags enumerate pairs `(i, j)`, `i < j`, in
//! lexicographic order.
//!
//! One repetition of the bound circuit is a Hadamard on every qubit, a data
//! rotation `R_axis(x_k)` on each enabled qubit, and for each enabled pair the
//! ZZ block `CNOT(i,j) RZ_j(x_i x_j) CNOT(i,j)`. The repetition is emitted
//! `depth` times.

use std::fmt;
use std::str::FromStr;

use crate::error::{precondition, Error, Result};
use crate::quantum_sim::{Axis, GateOp, MAX_QUBITS};

/// Number of bits in a genome for `n_qubits` qubits.
pub fn genome_length(n_qubits: usize) -> usize {
    n_qubits + n_qubits * n_qubits.saturating_sub(1) / 2 + 4
}

/// All qubit pairs `(i, j)` with `i < j`, in lexicographic order.
pub fn qubit_pairs(n_qubits: usize) -> Vec<(usize, usize)> {
    (0..n_qubits)
        .flat_map(|i| (i + 1..n_qubits).map(move |j| (i, j)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Genome {
    n_qubits: usize,
    bits: Vec<bool>,
}

impl Genome {
    pub fn new(n_qubits: usize, bits: Vec<bool>) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Config(format!(
                "n_qubits must lie in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let expected = genome_length(n_qubits);
        if bits.len() != expected {
            return Err(precondition(format!(
                "genome for {n_qubits} qubits needs {expected} bits, got {}",
                bits.len()
            )));
        }
        Ok(Self { n_qubits, bits })
    }

    pub fn zeros(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, vec![false; genome_length(n_qubits)])
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn parse(text: &str, n_qubits: usize) -> Result<Self> {
        let bits = text
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(precondition(format!(
                    "genome strings contain only '0' and '1', found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_qubits, bits)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn decode(&self) -> FeatureMapTemplate {
        decode(self)
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Decoded circuit description of a genome.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMapTemplate {
    pub n_qubits: usize,
    pub rotation_enabled: Vec<bool>,
    pub rotation_axis: Axis,
    pub entangle_pairs: Vec<(usize, usize)>,
    pub depth: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct GateCounts {
    pub local: usize,
    pub cnot: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.local + self.cnot
    }
}

pub fn decode(genome: &Genome) -> FeatureMapTemplate {
    let n = genome.n_qubits;
    let bits = &genome.bits;
    let rotation_enabled = bits[..n].to_vec();
    let rotation_axis = match (bits[n], bits[n + 1]) {
        (false, false) => Axis::X,
        (false, true) => Axis::Y,
        (true, _) => Axis::Z,
    };
    let pair_bits = &bits[n + 2..bits.len() - 2];
    let entangle_pairs = qubit_pairs(n)
        .into_iter()
        .zip(pair_bits)
        .filter_map(|(p, &on)| on.then_some(p))
        .collect();
    let hi = bits[bits.len() - 2] as usize;
    let lo = bits[bits.len() - 1] as usize;
    FeatureMapTemplate {
        n_qubits: n,
        rotation_enabled,
        rotation_axis,
        entangle_pairs,
        depth: 2 * hi + lo + 1,
    }
}

impl FeatureMapTemplate {
    pub fn rotation_count(&self) -> usize {
        self.rotation_enabled.iter().filter(|&&on| on).count()
    }

    /// Gate sequence `U(x)` for one data point.
    pub fn bind(&self, x: &[f64]) -> Result<Vec<GateOp>> {
        if x.len() != self.n_qubits {
            return Err(precondition(format!(
                "feature map expects {} features, got {}",
                self.n_qubits,
                x.len()
            )));
        }
        let per_rep = self.n_qubits + self.rotation_count() + 3 * self.entangle_pairs.len();
        let mut ops = Vec::with_capacity(self.depth * per_rep);
        for _ in 0..self.depth {
            ops.extend((0..self.n_qubits).map(GateOp::Hadamard));
            for (k, _) in self.rotation_enabled.iter().enumerate().filter(|(_, on)| **on) {
                ops.push(GateOp::rotation(self.rotation_axis, k, x[k]));
            }
            for &(i, j) in &self.entangle_pairs {
                ops.push(GateOp::cnot(i, j));
                ops.push(GateOp::rotation(Axis::Z, j, x[i] * x[j]));
                ops.push(GateOp::cnot(i, j));
            }
        }
        Ok(ops)
    }

    pub fn gate_counts(&self) -> GateCounts {
        gate_counts(self)
    }
}

/// Local gates are Hadamards plus every rotation (including the RZ inside each
/// ZZ block); CNOTs are counted separately.
pub fn gate_counts(template: &FeatureMapTemplate) -> GateCounts {
    let pairs = template.entangle_pairs.len();
    GateCounts {
        local: template.depth * (template.n_qubits + template.rotation_count() + pairs),
        cnot: 2 * pairs * template.depth,
    }
}

pub fn bind(template: &FeatureMapTemplate, x: &[f64]) -> Result<Vec<GateOp>> {
    template.bind(x)
}

/// Symbolic layer-by-layer listing, one line per layer.
impl fmt::Display for FeatureMapTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axis = self.rotation_axis;
        for rep in 1..=self.depth {
            writeln!(f, "repetition {rep}/{}", self.depth)?;
            let h: Vec<String> = (0..self.n_qubits).map(|q| format!("H q{q}")).collect();
            writeln!(f, "  hadamard layer: {}", h.join(", "))?;
            let rot: Vec<String> = self
                .rotation_enabled
                .iter()
                .enumerate()
                .filter(|(_, on)| **on)
                .map(|(k, _)| format!("R{axis}(x{k}) q{k}"))
                .collect();
            if !rot.is_empty() {
                writeln!(f, "  rotation layer: {}", rot.join(", "))?;
            }
            for &(i, j) in &self.entangle_pairs {
                writeln!(
                    f,
                    "  entangle ({i},{j}): CNOT q{i}->q{j}, RZ(x{i}*x{j}) q{j}, CNOT q{i}->q{j}"
                )?;
            }
        }
        Ok(())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "X" => Ok(Axis::X),
            "Y" => Ok(Axis::Y),
            "Z" => Ok(Axis::Z),
            other => Err(Error::Config(format!("unknown rotation axis `{other}`"))),
        }
    }
}
