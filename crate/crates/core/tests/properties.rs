use proptest::prelude::*;

use replica_shadow::compiler::{
    compile_r_many_qubit, compile_r_qudit, parse_circuit, simulate_exact, Circuit, Condition, Expr, Gate, Instruction,
    Wire,
};
use replica_shadow::ensembles::sample_local_clifford;
use replica_shadow::estimators::{median_of_means, partitioned_snapshot, SnapshotMode};
use replica_shadow::replica::{build_r, enumerate_classes, psi_state};
use replica_shadow::sampler::{outcome_probability, pair_table, PreparedState};
use replica_shadow::states::depolarize;
use replica_shadow::{DensityMatrix, Observable, RngStream};

fn state(seed: u64, dim: usize, rank: usize) -> DensityMatrix {
    DensityMatrix::random_with_rank(dim, rank.clamp(1, dim), &mut RngStream::new(seed).rng()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn purity_stays_in_range(seed in 0u64..10_000, n in 1usize..4, rank in 1usize..9) {
        let rho = state(seed, 1 << n, rank);
        let d = (1usize << n) as f64;
        prop_assert!(rho.purity() >= 1.0 / d - 1e-10 && rho.purity() <= 1.0 + 1e-10);
    }

    #[test]
    fn pair_table_is_a_distribution(seed in 0u64..10_000, n in 1usize..4, rank in 1usize..9) {
        let rho = state(seed, 1 << n, rank);
        let table = pair_table(&rho);
        prop_assert!(table.iter().all(|&p| p >= -1e-12));
        prop_assert!((table.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn outcome_probabilities_sum_to_one(seed in 0u64..10_000, t in 2usize..4) {
        let rho = state(seed, 2, 2);
        let prepared = PreparedState::new(rho).unwrap();
        let v = sample_local_clifford(1, &mut RngStream::new(seed + 1).rng()).unwrap();
        let rotated = prepared.rotate(&v, t).unwrap();
        let space = rotated.space();
        let mut total = 0.0;
        for x in 0..space.size() {
            let p = outcome_probability(&rotated, &space.outcome(x).unwrap()).unwrap();
            prop_assert!(p >= -1e-12);
            total += p;
        }
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn psi_rows_are_orthonormal(d in 2usize..4, t in 1usize..4) {
        let mut rows = Vec::new();
        for class in enumerate_classes(d, t).unwrap() {
            for k in 0..class.cardinality() {
                rows.push(psi_state(&class, k).unwrap());
            }
        }
        prop_assert_eq!(rows.len(), d.pow(t as u32));
        for (i, a) in rows.iter().enumerate() {
            for (j, b) in rows.iter().enumerate() {
                let dot: replica_shadow::C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot.re - want).abs() < 1e-10 && dot.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn depolarizing_keeps_states_valid(seed in 0u64..10_000, p in 0.0f64..=1.0) {
        let rho = depolarize(&state(seed, 4, 1), p).unwrap();
        prop_assert!(rho.matrix().is_hermitian(1e-12));
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        let eig = replica_shadow::tensor::hermitian_eig(rho.matrix()).unwrap();
        prop_assert!(eig.values.iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn local_pauli_values_are_bounded(seed in 0u64..10_000, label in prop::sample::select(vec!["Z1", "X2", "Y1*Z2", "X1*X2*X3"])) {
        let n = 3;
        let o = Observable::parse(label, n).unwrap();
        let prepared = PreparedState::new(state(seed, 1 << n, 3)).unwrap();
        let mut rng = RngStream::new(seed).rng();
        let v = sample_local_clifford(n, &mut rng).unwrap();
        let blocks = vec![(0..n).collect::<Vec<usize>>()];
        let snap = partitioned_snapshot(&prepared, &blocks, v, vec![true; n], 2, SnapshotMode::Afrs, &mut rng).unwrap();
        let bound = 3f64.powi(o.locality() as i32);
        prop_assert!(snap.value(&o).unwrap().abs() <= bound + 1e-9);
    }

    #[test]
    fn compiled_circuits_match_dense_r(seed in 0u64..10_000, which in 0usize..5) {
        let circuit = match which {
            0 => compile_r_qudit(2).unwrap(),
            1 => compile_r_qudit(3).unwrap(),
            2 => compile_r_qudit(4).unwrap(),
            3 => compile_r_many_qubit(2).unwrap(),
            _ => compile_r_many_qubit(3).unwrap(),
        };
        let din: usize = circuit.wires().iter().filter(|w| w.replica == 0).map(|w| w.input_dim).product();
        let rho = state(seed, din * din, din * din);
        let dist = simulate_exact(&circuit, &rho).unwrap();
        let want = rho.matrix().conjugate_by(&build_r(din, 2).unwrap()).unwrap().real_diagonal();
        let dims: Vec<usize> = circuit.wires().iter().map(|w| w.input_dim).collect();
        let mut tv = 0.0;
        let mut seen = 0.0;
        for (vals, p) in &dist.probs {
            let idx = vals.iter().zip(&dims).fold(0usize, |acc, (&v, &d)| acc * d + v as usize);
            tv += (p - want[idx]).abs();
            seen += want[idx];
        }
        tv += 1.0 - seen;
        prop_assert!(tv / 2.0 < 1e-10);
    }

    #[test]
    fn median_of_means_lies_between_batch_extremes(values in prop::collection::vec(-1e3f64..1e3, 10..200), r in 1usize..10) {
        let m = median_of_means(&values, r).unwrap();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
    }
}

fn gate_strategy(wires: usize) -> impl Strategy<Value = Gate> {
    let w = 0..wires;
    prop_oneof![
        w.clone().prop_map(Gate::H),
        w.clone().prop_map(Gate::X),
        (w.clone(), w.clone())
            .prop_filter("distinct wires", |(a, b)| a != b)
            .prop_map(|(control, target)| Gate::Cx { control, target }),
        (w, 0usize..3).prop_map(|(wire, c)| Gate::Uc { wire, c }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_format_round_trips(gates in prop::collection::vec((gate_strategy(3), any::<bool>()), 0..12), k in -5i64..5) {
        let wires = vec![Wire::new(0, 0, 2), Wire::new(0, 1, 2), Wire::new(1, 0, 2)];
        let mut ins = vec![Instruction::Measure { wire: 2, reg: "c".into() }];
        for (g, guarded) in gates {
            if g.wires().contains(&2) {
                continue;
            }
            ins.push(if guarded {
                Instruction::Controlled { condition: Condition::equals("c", 1).and("c", k), gate: g }
            } else {
                Instruction::Gate(g)
            });
        }
        ins.push(Instruction::Measure { wire: 0, reg: "a".into() });
        ins.push(Instruction::Assign {
            reg: "y".into(),
            expr: Expr::sub(Expr::xor(Expr::reg("a"), Expr::Const(k)), Expr::and(Expr::reg("c"), Expr::Const(-3))),
        });
        let circ = Circuit::new(wires, ins, vec!["y".into(), "c".into()]).unwrap();
        prop_assert_eq!(parse_circuit(&circ.to_text()).unwrap(), circ);
    }

    #[test]
    fn many_qubit_depth_is_bounded(n in 1usize..7, pattern in any::<u64>()) {
        let circ = compile_r_many_qubit(n).unwrap();
        let depth = circ.quantum_depth(|r| {
            r.strip_prefix('c').and_then(|i| i.parse::<usize>().ok()).map(|i| ((pattern >> i) & 1) as i64)
        });
        let l = (pattern & ((1u64 << n) - 1)).count_ones() as usize;
        prop_assert_eq!(depth, l + 1);
        prop_assert!(depth <= n + 1);
    }
}
