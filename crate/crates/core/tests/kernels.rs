mod common;

use nalgebra::DMatrix;
use ndarray::{Array2, Axis as NdAxis};
use proptest::prelude::*;
use qfmevo_core::featuremap::{genome_length, Genome};
use qfmevo_core::kernel::{classical_kernel, quantum_cross, quantum_gram, ClassicalKernel, KernelMatrix, KernelParams};
use qfmevo_core::quantum_sim::GateOp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_genome(rng: &mut ChaCha8Rng, n: usize) -> Genome {
    Genome::new(n, (0..genome_length(n)).map(|_| rng.gen_bool(0.5)).collect()).unwrap()
}

fn random_data(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(0.0..std::f64::consts::PI))
}

fn min_eigenvalue(k: &KernelMatrix) -> f64 {
    let n = k.rows();
    let m = DMatrix::from_fn(n, n, |i, j| k.get(i, j));
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn gram_matches_per_pair_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = random_genome(&mut rng, 2).decode();
    let x = random_data(&mut rng, 3, 2);
    let k = quantum_gram(&t, x.view()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let a = t.bind(&x.row(i).to_vec()).unwrap();
            let b = t.bind(&x.row(j).to_vec()).unwrap();
            assert!((k.get(i, j) - common::oracle_fidelity(&a, &b, 2)).abs() < 1e-10);
        }
    }
}

#[test]
fn cross_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = random_genome(&mut rng, 3).decode();
    let train = random_data(&mut rng, 4, 3);
    let test = random_data(&mut rng, 2, 3);
    let k = quantum_cross(&t, test.view(), train.view()).unwrap();
    assert_eq!((k.rows(), k.cols()), (2, 4));
    for i in 0..2 {
        for j in 0..4 {
            let a = t.bind(&test.row(i).to_vec()).unwrap();
            let b = t.bind(&train.row(j).to_vec()).unwrap();
            assert!((k.get(i, j) - common::oracle_fidelity(&a, &b, 3)).abs() < 1e-10);
        }
    }
}

#[test]
fn quantum_gram_is_valid_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let n = rng.gen_range(2..=5);
        let t = random_genome(&mut rng, n).decode();
        let x = random_data(&mut rng, 20, n);
        let k = quantum_gram(&t, x.view()).unwrap();
        for i in 0..20 {
            assert!((k.get(i, i) - 1.0).abs() < 1e-10);
            for j in 0..20 {
                assert_eq!(k.get(i, j), k.get(j, i));
                assert!((-1e-10..=1.0 + 1e-10).contains(&k.get(i, j)));
            }
        }
        assert!(min_eigenvalue(&k) >= -1e-8);
    }
}

#[test]
fn row_permutation_permutes_gram() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t = random_genome(&mut rng, 3).decode();
    let x = random_data(&mut rng, 8, 3);
    let perm = [3usize, 7, 0, 5, 1, 6, 2, 4];
    let k = quantum_gram(&t, x.view()).unwrap();
    let kp = quantum_gram(&t, x.select(NdAxis(0), &perm).view()).unwrap();
    for i in 0..8 {
        for j in 0..8 {
            assert!((kp.get(i, j) - k.get(perm[i], perm[j])).abs() < 1e-12);
        }
    }
}

#[test]
fn classical_grams() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random_data(&mut rng, 15, 4);
    let p = KernelParams::scale(x.view());
    let lin = classical_kernel(ClassicalKernel::Linear, &p, x.view(), x.view()).unwrap();
    let dot = x.dot(&x.t());
    assert!(lin.values().iter().zip(dot.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    let rbf = classical_kernel(ClassicalKernel::Rbf, &p, x.view(), x.view()).unwrap();
    assert!(min_eigenvalue(&rbf) >= -1e-8);
}

#[test]
fn cnot_free_genome_kernel_factorizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 3;
    let mut bits: Vec<bool> = (0..genome_length(n)).map(|_| rng.gen_bool(0.5)).collect();
    for b in &mut bits[n + 2..n + 2 + 3] {
        *b = false;
    }
    let t = Genome::new(n, bits).unwrap().decode();
    assert_eq!(t.gate_counts().cnot, 0);
    let x = random_data(&mut rng, 2, n);
    let k = quantum_gram(&t, x.view()).unwrap().get(0, 1);
    let mut product = 1.0;
    for q in 0..n {
        let mut one = t.clone();
        one.n_qubits = 1;
        one.rotation_enabled = vec![t.rotation_enabled[q]];
        let a = one.bind(&[x[[0, q]]]).unwrap();
        let b = one.bind(&[x[[1, q]]]).unwrap();
        product *= common::oracle_fidelity(&a, &b, 1);
    }
    assert!((k - product).abs() < 1e-10);
}

proptest! {
    #[test]
    fn bind_length_and_counts_agree(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_genome(&mut rng, n);
        let t = g.decode();
        prop_assert_eq!(&t, &g.clone().decode());
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let ops = t.bind(&x).unwrap();
        let pairs = t.entangle_pairs.len();
        prop_assert_eq!(ops.len(), t.depth * (n + t.rotation_count() + 3 * pairs));
        let counts = t.gate_counts();
        prop_assert_eq!(ops.iter().filter(|g| g.is_local()).count(), counts.local);
        prop_assert_eq!(ops.iter().filter(|g| matches!(g, GateOp::CNot { .. })).count(), counts.cnot);
        prop_assert!(t.entangle_pairs.iter().all(|&(i, j)| i < j && j < n));
        prop_assert!((1..=4).contains(&t.depth));
    }
}
