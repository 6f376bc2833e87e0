//! Monte-Carlo-free checks: exhaustive sums over the measurement ensemble
//! against dense linear algebra.

use replica_shadow::ensembles::{
    enumerate_single_qubit_cliffords, inverse_channel_snapshot, sample_global_clifford, Ensemble, UnitarySample,
};
use replica_shadow::oracle::{
    exact_fake_probability, exact_variance, exhaustive_expectation, exhaustive_single_copy, matrix_power,
    observation_one_sum, reduced_power, variance_bound, EstimatorMode,
};
use replica_shadow::replica::{enumerate_classes, f_product};
use replica_shadow::sampler::{decode_local, local_outcome_distribution, PreparedState};
use replica_shadow::tensor::{hermitian_eig, kron, ComplexMatrix};
use replica_shadow::{DensityMatrix, Observable, RngStream, C64};

fn random_state(seed: u64, dim: usize) -> DensityMatrix {
    DensityMatrix::random_mixed(dim, &mut RngStream::new(seed).rng()).unwrap()
}

fn random_unitary(seed: u64, dim: usize) -> ComplexMatrix {
    let h = random_state(seed ^ 0xabcdef, dim);
    let eig = hermitian_eig(h.matrix()).unwrap();
    ComplexMatrix::from_fn(dim, dim, |r, c| eig.vectors[c][r])
}

#[test]
fn exhaustive_snapshots_reproduce_the_power() {
    let cases = [(1usize, 2usize), (1, 3), (2, 2)];
    for seed in 0..5 {
        for &(n, t) in &cases {
            let rho = random_state(100 + seed, 1 << n);
            let target = matrix_power(&rho, t).unwrap();
            for mode in [EstimatorMode::Afrs, EstimatorMode::Multishot] {
                let got = exhaustive_expectation(&rho, t, &mode, Ensemble::LocalClifford).unwrap();
                assert!(got.max_abs_diff(&target) < 1e-10, "n={n} t={t} {mode:?}");
            }
            if n == 2 {
                let mode = EstimatorMode::Local(vec![0]);
                let got = exhaustive_expectation(&rho, t, &mode, Ensemble::LocalClifford).unwrap();
                let want = reduced_power(&rho, t, &[0]).unwrap();
                assert!(got.max_abs_diff(&want) < 1e-10, "local n={n} t={t}");
            }
        }
    }
}

// Blockwise phases only cancel in the complex product, so t = 3 is where
// taking real parts block by block would go wrong.
#[test]
fn local_snapshots_are_unbiased_at_three_replicas() {
    for seed in 0..3 {
        let rho = random_state(150 + seed, 4);
        for a in [vec![0], vec![1]] {
            let got =
                exhaustive_expectation(&rho, 3, &EstimatorMode::Local(a.clone()), Ensemble::LocalClifford).unwrap();
            let want = reduced_power(&rho, 3, &a).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-10, "A={a:?}");
        }
    }
}

#[test]
fn fake_probabilities_match_the_replica_sum() {
    let mut checked = 0;
    for seed in 0..20u64 {
        let n = 1 + (seed % 2) as usize;
        let t = 2 + (seed / 2 % 2) as usize;
        let dim = 1 << n;
        let rho = random_state(seed, dim);
        let v = random_unitary(seed, dim);
        for b in 0..dim {
            let lhs = observation_one_sum(&rho, &v, t, b).unwrap();
            let rhs = exact_fake_probability(&rho, &v, t, b).unwrap();
            assert!(
                (lhs - rhs).abs() < 1e-10,
                "seed={seed} n={n} t={t} b={b}: {lhs} vs {rhs}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

#[test]
fn local_channel_inverts_exactly() {
    for seed in 0..5 {
        for n in 1..=2 {
            let rho = random_state(200 + seed, 1 << n);
            let got = exhaustive_single_copy(&rho).unwrap();
            assert!(got.max_abs_diff(rho.matrix()) < 1e-10);
        }
    }
}

#[test]
fn global_channel_inverts_on_average() {
    let rho = random_state(9, 2);
    let stream = RngStream::new(31);
    let draws = 100_000;
    let mut sum = [[C64::new(0.0, 0.0); 2]; 2];
    let mut sq = [[0.0f64; 2]; 2];
    let mut rng = stream.rng();
    for _ in 0..draws {
        let v = sample_global_clifford(1, &mut rng).unwrap();
        let sigma = v.rotate_state(&rho).unwrap();
        let p0 = sigma.matrix()[(0, 0)].re;
        let b = if rand::Rng::random::<f64>(&mut rng) < p0 { 0 } else { 1 };
        let snap = inverse_channel_snapshot(&v, b).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                sum[r][c] += snap[(r, c)];
                sq[r][c] += snap[(r, c)].norm_sqr();
            }
        }
    }
    for r in 0..2 {
        for c in 0..2 {
            let mean = sum[r][c] / draws as f64;
            let var = sq[r][c] / draws as f64 - mean.norm_sqr();
            let sd = (var / draws as f64).sqrt();
            assert!(
                (mean - rho.matrix()[(r, c)]).norm() < 3.0 * sd + 1e-12,
                "entry ({r},{c})"
            );
        }
    }
}

/// `Σ_V Σ_b |V|⁻¹ ⟨b|VXV†|b⟩ · snapshot(V, b)`, i.e. the inverse channel
/// applied to the measurement channel of `X`, summed over the local group.
fn inverse_by_linearity(x: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let table = enumerate_single_qubit_cliffords();
    let dim = 1 << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    let total = table.len().pow(n as u32);
    for idx in 0..total {
        let digits: Vec<u8> = (0..n)
            .map(|q| ((idx / table.len().pow((n - 1 - q) as u32)) % table.len()) as u8)
            .collect();
        let v = UnitarySample::local_from_indices(digits).unwrap();
        let rotated = x.conjugate_by(&v.dense().unwrap()).unwrap();
        for b in 0..dim {
            let w = rotated[(b, b)] / total as f64;
            out = &out + &inverse_channel_snapshot(&v, b).unwrap().scale(w);
        }
    }
    out
}

fn hermitian(seed: u64, dim: usize) -> ComplexMatrix {
    let a = random_state(seed, dim).into_matrix();
    let b = random_state(seed + 1, dim).into_matrix();
    (&a - &b).scale_real(3.0)
}

#[test]
fn inverse_channel_is_self_adjoint() {
    for n in 1..=2 {
        let dim = 1 << n;
        for seed in 0..3 {
            let x = hermitian(300 + 2 * seed, dim);
            let y = hermitian(400 + 2 * seed, dim);
            // the per-qubit inverse 3X − tr(X)·I, applied factor by factor
            let inv = |m: &ComplexMatrix| -> ComplexMatrix {
                let mut out = m.clone();
                for q in 0..n {
                    let mut next = ComplexMatrix::zeros(dim, dim);
                    for r in 0..dim {
                        for c in 0..dim {
                            let bit = 1 << (n - 1 - q);
                            let mut v = out[(r, c)].scale(3.0);
                            if (r & bit) == (c & bit) {
                                v -= out[(r ^ (r & bit), c ^ (c & bit))] + out[(r | bit, c | bit)];
                            }
                            next[(r, c)] = v;
                        }
                    }
                    out = next;
                }
                out
            };
            let lhs = x.trace_product(&inv(&y)).unwrap();
            let rhs = inv(&x).trace_product(&y).unwrap();
            assert!((lhs - rhs).norm() < 1e-10);
            // snapshots extended by linearity undo the measurement channel
            let back = inverse_by_linearity(&x, n);
            assert!(back.max_abs_diff(&x) < 1e-10);
        }
    }
}

#[test]
fn moment_estimator_mean_is_the_moment() {
    for n in 1..=3 {
        let rho = random_state(500 + n as u64, 1 << n);
        let prepared = PreparedState::new(rho.clone()).unwrap();
        let id = UnitarySample::identity(n);
        for t in 2..=3 {
            let rotated = prepared.rotate(&id, t).unwrap();
            let blocks: Vec<Vec<usize>> = (0..n).map(|q| vec![q]).collect();
            let dist = local_outcome_distribution(&rotated, &blocks).unwrap();
            let mean: f64 = dist
                .iter()
                .enumerate()
                .map(|(i, p)| p * f_product(&decode_local(n, t, &blocks, i).unwrap()))
                .sum();
            let want = matrix_power(&rho, t).unwrap().trace().re;
            assert!((mean - want).abs() < 1e-10, "n={n} t={t}: {mean} vs {want}");
        }
    }
}

#[test]
fn exact_variances_respect_the_bound() {
    for seed in 0..5 {
        let rho = random_state(600 + seed, 2);
        for label in ["Z1", "X1", "I"] {
            let o = Observable::parse(label, 1).unwrap();
            for t in 2..=3 {
                let var = exact_variance(&rho, &o, t, &EstimatorMode::Afrs, Ensemble::LocalClifford).unwrap();
                let bound = variance_bound(&o, Ensemble::LocalClifford).unwrap();
                assert!(var <= bound + 1e-10, "{label} t={t}: {var} > {bound}");
            }
        }
    }
}

#[test]
fn class_sizes_partition_the_string_space() {
    for d in 2..=4 {
        for t in 1..=5 {
            let total: usize = enumerate_classes(d, t).unwrap().iter().map(|c| c.cardinality()).sum();
            assert_eq!(total, d.pow(t as u32));
        }
    }
}

#[test]
fn kron_of_states_is_a_state() {
    let a = random_state(1, 2);
    let b = random_state(2, 3);
    let ab = DensityMatrix::new(kron(a.matrix(), b.matrix()).unwrap()).unwrap();
    assert!((ab.purity() - a.purity() * b.purity()).abs() < 1e-12);
}
