//! The acceptance suite. Every criterion prints one `criterion N: PASS|FAIL`
//! line on stderr (bypassing the test harness capture) before asserting.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand_distr::{Distribution, Pareto};

use replica_shadow::compiler::{
    compile_r_many_qubit, compile_r_qudit, compile_r_single_qubit, logical_hadamard_synthesis, logical_hadamard_target,
    verify_equivalence,
};
use replica_shadow::ensembles::Ensemble;
use replica_shadow::estimators::{
    afrs_estimate, local_afrs_estimate, median_of_means, mom_batch_size, vd_estimate, SnapshotMode, VdProtocol,
};
use replica_shadow::oracle::{
    exact_fake_probability, exact_nonlinear, exact_variance, exhaustive_expectation, matrix_power, observation_one_sum,
    reduced_power, variance_bound, EstimatorMode,
};
use replica_shadow::replica::enumerate_classes;
use replica_shadow::sampler::PreparedState;
use replica_shadow::states::{ghz_state, noisy_ghz};
use replica_shadow::tensor::{hermitian_eig, ComplexMatrix};
use replica_shadow::{DensityMatrix, Observable, RngStream};

fn report(criterion: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "\ncriterion {criterion:>2}: {verdict} {detail}");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn random_state(seed: u64, dim: usize) -> DensityMatrix {
    DensityMatrix::random_mixed(dim, &mut RngStream::new(seed).rng()).unwrap()
}

fn random_unitary(seed: u64, dim: usize) -> ComplexMatrix {
    let eig = hermitian_eig(random_state(seed ^ 0x5eed, dim).matrix()).unwrap();
    ComplexMatrix::from_fn(dim, dim, |r, c| eig.vectors[c][r])
}

#[test]
fn criterion_01_exhaustive_unbiasedness() {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        for (n, t) in [(1usize, 2usize), (1, 3), (2, 2)] {
            let rho = random_state(1000 + seed, 1 << n);
            let target = matrix_power(&rho, t).unwrap();
            for mode in [EstimatorMode::Afrs, EstimatorMode::Multishot] {
                let got = exhaustive_expectation(&rho, t, &mode, Ensemble::LocalClifford).unwrap();
                worst = worst.max(got.max_abs_diff(&target));
            }
            if n == 2 {
                let got =
                    exhaustive_expectation(&rho, t, &EstimatorMode::Local(vec![0]), Ensemble::LocalClifford).unwrap();
                worst = worst.max(got.max_abs_diff(&reduced_power(&rho, t, &[0]).unwrap()));
            }
        }
    }
    report(
        1,
        worst < 1e-10,
        format!("max entrywise deviation {worst:.2e} (tol 1e-10)"),
    );
}

#[test]
fn criterion_02_fake_probability_identity() {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for seed in 0..20u64 {
        let n = 1 + (seed % 2) as usize;
        let t = 2 + (seed / 2 % 2) as usize;
        let dim = 1 << n;
        let rho = random_state(2000 + seed, dim);
        let v = random_unitary(2000 + seed, dim);
        for b in 0..dim {
            let lhs = observation_one_sum(&rho, &v, t, b).unwrap();
            let rhs = exact_fake_probability(&rho, &v, t, b).unwrap();
            worst = worst.max((lhs - rhs).abs());
        }
        pairs += 1;
    }
    report(
        2,
        worst < 1e-10,
        format!("{pairs} (rho, V) pairs, max deviation {worst:.2e} (tol 1e-10)"),
    );
}

#[test]
fn criterion_03_compiler_equivalence() {
    let stream = RngStream::new(3);
    let mut cases = vec![("qubit".to_string(), compile_r_single_qubit())];
    for d in 2..=5 {
        cases.push((format!("d={d}"), compile_r_qudit(d).unwrap()));
    }
    for n in 2..=3 {
        cases.push((format!("n={n}"), compile_r_many_qubit(n).unwrap()));
    }
    let mut worst_tv: f64 = 0.0;
    let mut parts = Vec::new();
    for (i, (name, circuit)) in cases.iter().enumerate() {
        let rep = verify_equivalence(circuit, 20, &stream.split(i as u64)).unwrap();
        assert_eq!(rep.trials, 20);
        worst_tv = worst_tv.max(rep.tv);
        parts.push(format!("{name}:{:.1e}", rep.tv));
    }
    let mut worst_h: f64 = 0.0;
    for l in 1..=4 {
        let diff = logical_hadamard_synthesis(l)
            .unwrap()
            .max_abs_diff(&logical_hadamard_target(l).unwrap());
        worst_h = worst_h.max(diff);
    }
    report(
        3,
        worst_tv < 1e-10 && worst_h < 1e-10,
        format!(
            "TV [{}], logical H l<=4 deviation {worst_h:.1e} (tol 1e-10)",
            parts.join(" ")
        ),
    );
}

fn totient(mut k: usize) -> usize {
    let mut out = k;
    let mut p = 2;
    while p * p <= k {
        if k.is_multiple_of(p) {
            while k.is_multiple_of(p) {
                k /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if k > 1 {
        out -= out / k;
    }
    out
}

fn necklaces(d: usize, t: usize) -> usize {
    (1..=t)
        .filter(|k| t.is_multiple_of(*k))
        .map(|k| totient(k) * d.pow((t / k) as u32))
        .sum::<usize>()
        / t
}

#[test]
fn criterion_04_class_combinatorics() {
    let classes = enumerate_classes(2, 4).unwrap();
    let target = classes.iter().find(|c| c.representative_digits() == [0, 0, 1, 1]);
    let mut members: Vec<usize> = target.map(|c| c.members().to_vec()).unwrap_or_default();
    members.sort_unstable();
    // 0011, 0110, 1001, 1100 read with the first replica most significant
    let members_ok = members == [0b0011, 0b0110, 0b1001, 0b1100];
    let mut mismatches = Vec::new();
    for d in 2..=4 {
        for t in 1..=6 {
            let got = enumerate_classes(d, t).unwrap().len();
            if got != necklaces(d, t) {
                mismatches.push(format!("d={d} t={t}: {got} vs {}", necklaces(d, t)));
            }
        }
    }
    report(
        4,
        classes.len() == 6 && members_ok && mismatches.is_empty(),
        format!(
            "{} classes at d=2 t=4, [0011] members {members:?}, necklace mismatches {mismatches:?}",
            classes.len()
        ),
    );
}

#[test]
fn criterion_05_distilled_ghz_number() {
    let rho = noisy_ghz(5, 0.3).unwrap();
    let zz = Observable::parse("Z1*Z2", 5).unwrap();
    let oracle = exact_nonlinear(&zz, &rho, 2).unwrap() / exact_nonlinear(&Observable::identity(5), &rho, 2).unwrap();
    let oracle_ok = (oracle - 0.99444).abs() < 5e-6 && (oracle - 0.994).abs() < 5e-4;
    let prepared = PreparedState::new(rho).unwrap();
    let shots = 50_000;
    let mut within = 0;
    let mut errors = Vec::new();
    for seed in 0..20u64 {
        let est = vd_estimate(
            &prepared,
            &zz,
            2,
            VdProtocol::LocalAfrs,
            shots,
            shots,
            RngStream::new(seed),
        )
        .unwrap();
        let err = (est.ratio - 0.994).abs();
        if !est.degenerate && err <= 0.02 {
            within += 1;
        }
        errors.push(err);
    }
    errors.sort_by(f64::total_cmp);
    report(
        5,
        oracle_ok && within >= 18,
        format!(
            "oracle ratio {oracle:.5}; local-AFRS at M={shots}: {within}/20 seeds within 0.02 of 0.994 (need 18), \
             median |err| {:.4}, worst {:.4}",
            errors[10], errors[19]
        ),
    );
}

fn run_cli(args: &[&str]) -> i32 {
    let mut full = vec!["afrs"];
    full.extend_from_slice(args);
    replica_shadow_cli::run(full.iter().map(|s| s.to_string()))
}

fn read_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| {
            headers
                .iter()
                .zip(r.unwrap().iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

#[test]
fn criterion_06_scaling_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scaling.csv");
    let code = run_cli(&[
        "estimate",
        "--seed",
        "3",
        "--state",
        "ghz",
        "--n",
        "2,4,6,8",
        "--p",
        "0.3",
        "--t",
        "2",
        "--observable",
        "Z1*Z2",
        "--protocol",
        "AFRS",
        "--protocol",
        "LOCAL_AFRS",
        "--protocol",
        "OS",
        "--shots",
        "50",
        "--os-shots",
        "100",
        "--repetitions",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let mut rms = BTreeMap::new();
    for row in read_rows(&out).into_iter().filter(|r| r["row_kind"] == "summary") {
        let n: usize = row["n"].parse().unwrap();
        rms.insert((row["protocol"].clone(), n), row["error"].parse::<f64>().unwrap());
    }
    let growth = |p: &str| rms[&(p.to_string(), 8)] / rms[&(p.to_string(), 2)];
    let (afrs, local, os) = (growth("AFRS"), growth("LOCAL_AFRS"), growth("OS"));
    report(
        6,
        afrs <= 1.5 && local <= 1.5 && os >= 3.0,
        format!("RMS(n=8)/RMS(n=2): AFRS {afrs:.2}, LOCAL_AFRS {local:.2} (need <= 1.5), OS {os:.1} (need >= 3)"),
    );
}

/// Standard error of the sample variance, from the fourth central moment.
fn variance_std_err(values: &[f64], mean: f64, var: f64) -> f64 {
    let n = values.len() as f64;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    ((m4 - var * var).max(0.0) / n).sqrt()
}

#[test]
fn criterion_07_variance_bounds() {
    let mut violations = Vec::new();
    let mut checks = 0;
    // n = 1: the single-qubit Clifford group is both ensembles at once
    for seed in 0..5 {
        let rho = random_state(7000 + seed, 2);
        for label in ["I", "X1", "Y1", "Z1"] {
            let o = Observable::parse(label, 1).unwrap();
            for t in 2..=3 {
                for mode in [EstimatorMode::Afrs, EstimatorMode::Multishot] {
                    let var = exact_variance(&rho, &o, t, &mode, Ensemble::LocalClifford).unwrap();
                    for ens in [Ensemble::LocalClifford, Ensemble::GlobalClifford] {
                        let bound = variance_bound(&o, ens).unwrap();
                        checks += 1;
                        if var > bound + 1e-10 {
                            violations.push(format!("exact {label} t={t} {mode:?} {ens:?}: {var} > {bound}"));
                        }
                    }
                }
            }
        }
    }
    let shots = 100_000;
    let mut worst_ratio: f64 = 0.0;
    for n in 1..=3usize {
        let rho = DensityMatrix::random_with_rank(1 << n, 2, &mut RngStream::new(7100 + n as u64).rng()).unwrap();
        let prepared = PreparedState::new(rho).unwrap();
        let labels: Vec<&str> = ["I", "Z1", "X1*Y2", "Z1*Z2*Z3"].into_iter().take(n + 1).collect();
        for (i, label) in labels.iter().enumerate() {
            let o = Observable::parse(label, n).unwrap();
            for ens in [Ensemble::LocalClifford, Ensemble::GlobalClifford] {
                let stream = RngStream::new(7200).child(n as u64, i as u64).split(ens as u64);
                let est = afrs_estimate(&prepared, ens, 2, &o, shots, SnapshotMode::Afrs, stream).unwrap();
                let slack = 5.0 * variance_std_err(&est.values, est.mean, est.variance);
                let bound = variance_bound(&o, ens).unwrap();
                checks += 1;
                worst_ratio = worst_ratio.max(est.variance / bound);
                if est.variance > bound + slack {
                    violations.push(format!(
                        "sampled n={n} {label} {ens:?}: {} > {bound} + {slack}",
                        est.variance
                    ));
                }
            }
        }
    }
    report(
        7,
        violations.is_empty(),
        format!("{checks} checks, largest sampled var/bound {worst_ratio:.3}, violations {violations:?}"),
    );
}

#[test]
fn criterion_08_pure_state_identity() {
    let mut worst: f64 = 0.0;
    let mut shots_seen = 0;
    for n in 1..=4usize {
        let states = [
            ghz_state(n).unwrap(),
            DensityMatrix::random_with_rank(1 << n, 1, &mut RngStream::new(8000 + n as u64).rng()).unwrap(),
        ];
        for (s, rho) in states.into_iter().enumerate() {
            let prepared = PreparedState::new(rho).unwrap();
            let id = Observable::identity(n);
            for t in 2..=3 {
                let stream = RngStream::new(8100).child(n as u64, (s * 10 + t) as u64);
                let a = afrs_estimate(
                    &prepared,
                    Ensemble::LocalClifford,
                    t,
                    &id,
                    500,
                    SnapshotMode::Afrs,
                    stream.split(0),
                )
                .unwrap();
                let l = local_afrs_estimate(
                    &prepared,
                    &[0],
                    Ensemble::LocalClifford,
                    t,
                    &id,
                    500,
                    SnapshotMode::Afrs,
                    stream.split(1),
                )
                .unwrap();
                for v in a.values.iter().chain(&l.values) {
                    worst = worst.max((v - 1.0).abs());
                    shots_seen += 1;
                }
            }
        }
    }
    report(
        8,
        worst < 1e-12,
        format!("{shots_seen} shots, max |value - 1| = {worst:.1e}"),
    );
}

#[test]
fn criterion_09_multishot_gain() {
    let prepared = PreparedState::new(ghz_state(5).unwrap()).unwrap();
    let x1 = Observable::parse("X1", 5).unwrap();
    let shots = 100_000;
    let stream = RngStream::new(9);
    let single = afrs_estimate(
        &prepared,
        Ensemble::LocalClifford,
        2,
        &x1,
        shots,
        SnapshotMode::Afrs,
        stream,
    )
    .unwrap();
    let multi = afrs_estimate(
        &prepared,
        Ensemble::LocalClifford,
        2,
        &x1,
        shots,
        SnapshotMode::Multishot,
        stream,
    )
    .unwrap();
    let ratio = single.variance / multi.variance;
    report(
        9,
        (1.7..=2.3).contains(&ratio),
        format!(
            "Var AFRS {:.3} / Var multi-shot {:.3} = {ratio:.3} (need [1.7, 2.3])",
            single.variance, multi.variance
        ),
    );
}

#[test]
fn criterion_10_median_of_means() {
    // Pareto(1, 3): mean 1.5, variance 0.75, infinite third moment
    let dist = Pareto::new(1.0, 3.0).unwrap();
    let (mean, var, eps) = (1.5, 0.75, 0.25);
    let batch = mom_batch_size(var, eps);
    let trials = 1000;
    let mut rng = RngStream::new(10).rng();
    let mut parts = Vec::new();
    let mut pass = true;
    for r in [5usize, 9] {
        let mut failures = 0;
        for _ in 0..trials {
            let values: Vec<f64> = (0..r * batch).map(|_| dist.sample(&mut rng)).collect();
            if (median_of_means(&values, r).unwrap() - mean).abs() > eps {
                failures += 1;
            }
        }
        let rate = failures as f64 / trials as f64;
        let allowed = 2.0 * (-(r as f64) / 2.0).exp() + 0.02;
        pass &= rate <= allowed;
        parts.push(format!("R={r}: rate {rate:.3} <= {allowed:.3}"));
    }
    report(10, pass, format!("batch size {batch}, {}", parts.join(", ")));
}

/// CSV text with the `wall_time` column removed.
fn without_wall_time(path: &Path) -> String {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().clone();
    let skip = headers.iter().position(|h| h == "wall_time").unwrap();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let keep = |rec: &csv::StringRecord| -> Vec<String> {
        rec.iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, v)| v.to_string())
            .collect()
    };
    writer.write_record(keep(&headers)).unwrap();
    for rec in reader.records() {
        writer.write_record(keep(&rec.unwrap())).unwrap();
    }
    String::from_utf8(writer.into_inner().unwrap()).unwrap()
}

#[test]
fn criterion_11_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "experiment = \"repro\"\nstate = \"ghz\"\nt = 2\nobservables = [\"Z1*Z2\", \"X1\", \"I\"]\n\
         protocols = [\"AFRS\", \"LOCAL_AFRS\", \"MULTISHOT\", \"OS\"]\nshots = 60\nrepetitions = 3\n\
         [sweep]\nn = [2, 3]\np = [0.1, 0.3]\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (run, workers) in [(0, "1"), (1, "1"), (2, "8")] {
        let out = dir.path().join(format!("run{run}.csv"));
        let code = run_cli(&[
            "estimate",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "11",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        outputs.push(without_wall_time(&out));
    }
    let rows = outputs[0].lines().count() - 1;
    let same_runs = outputs[0] == outputs[1];
    let same_workers = outputs[0] == outputs[2];
    report(
        11,
        rows > 0 && same_runs && same_workers,
        format!("{rows} rows; repeat run identical: {same_runs}, workers 1 vs 8 identical: {same_workers}"),
    );
}
