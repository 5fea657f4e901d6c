//! Quantum fidelity kernels and the classical comparison kernels.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{precondition, Error, Result};
use crate::featuremap::FeatureMapTemplate;
use crate::quantum_sim::{prepare, Statevector};

/// Real kernel matrix; square for Gram matrices, `test x train` for cross kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    values: Array2<f64>,
}

impl KernelMatrix {
    pub fn new(values: Array2<f64>) -> Self {
        Self { values }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    /// Sub-matrix on the given row and column index sets.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> KernelMatrix {
        KernelMatrix::new(Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| {
            self.values[[rows[i], cols[j]]]
        }))
    }

    /// Full matrix, row-major, one CSV line per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

fn check_columns(x: &ArrayView2<f64>, n_qubits: usize, what: &str) -> Result<()> {
    if x.ncols() != n_qubits {
        return Err(precondition(format!(
            "{what} has {} columns but the feature map acts on {n_qubits} qubits",
            x.ncols()
        )));
    }
    Ok(())
}

fn prepare_states(template: &FeatureMapTemplate, x: &ArrayView2<f64>) -> Result<Vec<Statevector>> {
    (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let row = x.row(i).to_vec();
            prepare(&template.bind(&row)?, template.n_qubits)
        })
        .collect()
}

fn overlap(a: &Statevector, b: &Statevector) -> f64 {
    a.inner(b).expect("same register size").norm_sqr().min(1.0)
}

/// Gram matrix `K_ij = |<phi(x_i)|phi(x_j)>|^2` over the rows of `x`.
///
/// Each row's state is prepared once; only the upper triangle is evaluated
/// and then mirrored so the result is exactly symmetric.
pub fn quantum_gram(template: &FeatureMapTemplate, x: ArrayView2<f64>) -> Result<KernelMatrix> {
    check_columns(&x, template.n_qubits, "data matrix")?;
    let states = prepare_states(template, &x)?;
    let n = states.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| overlap(&states[i], &states[j])).collect())
        .collect();
    let mut values = Array2::zeros((n, n));
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            values[[i, i + off]] = v;
            values[[i + off, i]] = v;
        }
    }
    Ok(KernelMatrix::new(values))
}

/// Cross kernel, entry `(i, j)` pairs test row `i` with train row `j`.
pub fn quantum_cross(
    template: &FeatureMapTemplate,
    x_test: ArrayView2<f64>,
    x_train: ArrayView2<f64>,
) -> Result<KernelMatrix> {
    check_columns(&x_test, template.n_qubits, "test matrix")?;
    check_columns(&x_train, template.n_qubits, "train matrix")?;
    let test = prepare_states(template, &x_test)?;
    let train = prepare_states(template, &x_train)?;
    let rows: Vec<Vec<f64>> = test
        .par_iter()
        .map(|t| train.iter().map(|s| overlap(t, s)).collect())
        .collect();
    Ok(KernelMatrix::new(Array2::from_shape_fn(
        (test.len(), train.len()),
        |(i, j)| rows[i][j],
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassicalKernel {
    Linear,
    Poly,
    Rbf,
    Sigmoid,
}

impl ClassicalKernel {
    pub const ALL: [ClassicalKernel; 4] = [
        ClassicalKernel::Linear,
        ClassicalKernel::Poly,
        ClassicalKernel::Rbf,
        ClassicalKernel::Sigmoid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClassicalKernel::Linear => "linear",
            ClassicalKernel::Poly => "poly",
            ClassicalKernel::Rbf => "rbf",
            ClassicalKernel::Sigmoid => "sigmoid",
        }
    }

    fn eval(&self, p: &KernelParams, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match self {
            ClassicalKernel::Linear => a.dot(&b),
            ClassicalKernel::Poly => (p.gamma * a.dot(&b) + p.coef0).powi(p.degree as i32),
            ClassicalKernel::Rbf => {
                let d2: f64 = a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum();
                (-p.gamma * d2).exp()
            }
            ClassicalKernel::Sigmoid => (p.gamma * a.dot(&b) + p.coef0).tanh(),
        }
    }
}

impl fmt::Display for ClassicalKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassicalKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassicalKernel::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown kernel `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    pub gamma: f64,
    pub degree: u32,
    pub coef0: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            degree: 3,
            coef0: 0.0,
        }
    }
}

impl KernelParams {
    /// `gamma = 1 / (n_features * var(X))` with variance over all entries;
    /// falls back to 1 for constant data.
    pub fn scale(x: ArrayView2<f64>) -> Self {
        let n = x.len() as f64;
        let gamma = if x.is_empty() {
            1.0
        } else {
            let mean = x.sum() / n;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if var > 0.0 {
                1.0 / (x.ncols() as f64 * var)
            } else {
                1.0
            }
        };
        Self {
            gamma,
            ..Self::default()
        }
    }
}

/// Classical kernel matrix between the rows of `a` and the rows of `b`.
pub fn classical_kernel(
    kind: ClassicalKernel,
    params: &KernelParams,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
) -> Result<KernelMatrix> {
    if !(params.gamma > 0.0) {
        return Err(Error::Config(format!(
            "kernel gamma must be positive, got {}",
            params.gamma
        )));
    }
    if a.ncols() != b.ncols() {
        return Err(precondition(format!(
            "kernel inputs have {} and {} features",
            a.ncols(),
            b.ncols()
        )));
    }
    Ok(KernelMatrix::new(Array2::from_shape_fn(
        (a.nrows(), b.nrows()),
        |(i, j)| kind.eval(params, a.row(i), b.row(j)),
    )))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use ndarray::array;

    use super::*;
    use crate::featuremap::Genome;
    use crate::quantum_sim::fidelity_overlap;

    fn one_qubit_hz() -> FeatureMapTemplate {
        Genome::parse("11000", 1).unwrap().decode()
    }

    #[test]
    fn identical_rows_give_unit_entry() {
        let t = Genome::parse("1111001110", 3).unwrap().decode();
        let x = array![[0.1, 0.5, 0.9], [0.1, 0.5, 0.9], [1.0, 2.0, 3.0]];
        let k = quantum_gram(&t, x.view()).unwrap();
        assert!((k.get(0, 1) - 1.0).abs() < 1e-10);
        assert_eq!(k.get(1, 2), k.get(2, 1));
    }

    #[test]
    fn orthogonal_single_qubit_states() {
        let x = array![[0.0], [PI]];
        let k = quantum_gram(&one_qubit_hz(), x.view()).unwrap();
        assert!(k.get(0, 1).abs() < 1e-10);
        assert!((k.get(0, 0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gram_matches_pairwise_fidelity() {
        let t = Genome::parse("1001101", 2).unwrap().decode();
        let x = array![[0.2, 1.1], [2.5, 0.4], [1.3, 3.0]];
        let k = quantum_gram(&t, x.view()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let a = t.bind(&x.row(i).to_vec()).unwrap();
                let b = t.bind(&x.row(j).to_vec()).unwrap();
                let f = fidelity_overlap(&a, &b, 2).unwrap();
                assert!((k.get(i, j) - f).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cross_of_train_with_itself_is_gram() {
        let t = Genome::parse("1110111", 2).unwrap().decode();
        let x = array![[0.2, 1.1], [2.5, 0.4], [1.3, 3.0], [0.0, 0.7]];
        let g = quantum_gram(&t, x.view()).unwrap();
        let c = quantum_cross(&t, x.view(), x.view()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.get(i, j) - c.get(i, j)).abs() < 1e-12);
            }
        }
        let one = quantum_cross(&t, x.slice(ndarray::s![2..3, ..]), x.view()).unwrap();
        assert!((one.get(0, 2) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        let t = one_qubit_hz();
        let x = array![[0.0, 1.0]];
        assert!(matches!(
            quantum_gram(&t, x.view()),
            Err(Error::Precondition(_))
        ));
        assert!(quantum_cross(&t, array![[0.0]].view(), x.view()).is_err());
    }

    #[test]
    fn classical_examples() {
        let p = KernelParams::default();
        let a = array![[1.0, 2.0]];
        let b = array![[3.0, 4.0]];
        let lin = classical_kernel(ClassicalKernel::Linear, &p, a.view(), b.view()).unwrap();
        assert_eq!(lin.get(0, 0), 11.0);
        let rbf = classical_kernel(ClassicalKernel::Rbf, &p, a.view(), a.view()).unwrap();
        assert_eq!(rbf.get(0, 0), 1.0);
        let u = array![[1.0, 1.0]];
        let v = array![[1.0, 1.0]];
        let poly = classical_kernel(ClassicalKernel::Poly, &p, u.view(), v.view()).unwrap();
        assert!((poly.get(0, 0) - 8.0).abs() < 1e-12);
        let sig = classical_kernel(ClassicalKernel::Sigmoid, &p, u.view(), v.view()).unwrap();
        assert!((sig.get(0, 0) - 2f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn classical_rejects_bad_gamma() {
        let p = KernelParams {
            gamma: 0.0,
            ..KernelParams::default()
        };
        let a = array![[1.0]];
        assert!(matches!(
            classical_kernel(ClassicalKernel::Rbf, &p, a.view(), a.view()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn scale_gamma() {
        let x = array![[0.0, 2.0], [2.0, 0.0]];
        // var of {0,2,2,0} is 1, two features
        assert!((KernelParams::scale(x.view()).gamma - 0.5).abs() < 1e-15);
        assert_eq!(KernelParams::scale(array![[1.0, 1.0]].view()).gamma, 1.0);
    }

    #[test]
    fn csv_dump_is_full_matrix() {
        let k = KernelMatrix::new(array![[1.0, 0.5], [0.5, 1.0]]);
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 2);
    }
}
