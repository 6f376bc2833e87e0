//! The five subcommands. Each returns its rows; writing is left to the caller.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use replica_shadow::compiler::{
    compile_r_many_qubit, compile_r_qudit, compile_r_single_qubit, parse_circuit, verify_equivalence,
};
use replica_shadow::estimators::{
    afrs_estimate, local_afrs_estimate, median_of_means, moment_estimate, os_baseline, pilot_variances,
    plan_observables, rms_error, vd_estimate, Estimate, Protocol, SnapshotMode, VdProtocol,
};
use replica_shadow::oracle::exact_nonlinear;
use replica_shadow::rng::{purpose, RngStream};
use replica_shadow::sampler::PreparedState;
use replica_shadow::states::{depolarize, noisy_ghz, Observable};
use replica_shadow::tensor::ComplexMatrix;
use replica_shadow::{DensityMatrix, Error, Result, C64};

use crate::config::ExperimentConfig;
use crate::output::{PlanRow, ResultRow, VerifyRow, SCHEMA_VERSION};

/// Rows are accepted when the compiled circuit is this close to dense `R`.
pub const VERIFY_TOLERANCE: f64 = 1e-8;

struct Point {
    n: usize,
    p: f64,
    prepared: PreparedState,
    observables: Vec<Observable>,
    exact: Vec<Option<f64>>,
}

fn protocol_code(p: Protocol) -> u64 {
    match p {
        Protocol::Os => 0,
        Protocol::Afrs => 1,
        Protocol::LocalAfrs => 2,
        Protocol::Multishot => 3,
        Protocol::Vd => 4,
    }
}

fn load_state_file(path: &Path) -> Result<DensityMatrix> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        position: e.column(),
        message: format!("{}: {e}", path.display()),
    })?;
    let dim = rows.len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Argument("state matrix must be square".into()));
    }
    let data = rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect();
    DensityMatrix::new(ComplexMatrix::from_vec(dim, dim, data)?)
}

fn build_state(cfg: &ExperimentConfig, n: usize, p: f64, index: usize) -> Result<DensityMatrix> {
    if let Some(path) = &cfg.state_file {
        let rho = load_state_file(path)?;
        if rho.qubits() != Some(n) {
            return Err(Error::Argument(format!(
                "state file holds {} dimensions, sweep asks for n={n}",
                rho.dim()
            )));
        }
        return if p > 0.0 { depolarize(&rho, p) } else { Ok(rho) };
    }
    if n > 30 {
        return Err(Error::Size {
            what: "qubit register",
            requested: n as u128,
            cap: 30,
        });
    }
    match cfg.state.as_str() {
        "ghz" => noisy_ghz(n, p),
        "maximally_mixed" => DensityMatrix::maximally_mixed(1 << n),
        "random" => {
            let mut rng = RngStream::new(cfg.seed).child(purpose::POINT, index as u64).rng();
            depolarize(&DensityMatrix::random_mixed(1 << n, &mut rng)?, p)
        }
        other => Err(Error::Argument(format!("unknown state family {other:?}"))),
    }
}

/// Oracle value, or `None` when the dense computation exceeds its caps.
fn exact_or_none(value: Result<f64>) -> Result<Option<f64>> {
    match value {
        Ok(v) => Ok(Some(v)),
        Err(Error::Size { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn exact_ratio(o: &Observable, rho: &DensityMatrix, t: usize) -> Result<f64> {
    let n = o.qubits();
    Ok(exact_nonlinear(o, rho, t)? / exact_nonlinear(&Observable::identity(n), rho, t)?)
}

fn points(cfg: &ExperimentConfig, ratio: bool) -> Result<Vec<Point>> {
    let mut grid = Vec::new();
    for &n in &cfg.n {
        for &p in &cfg.p {
            grid.push((n, p));
        }
    }
    grid.into_iter()
        .enumerate()
        .map(|(index, (n, p))| {
            let rho = build_state(cfg, n, p, index)?;
            let observables = cfg
                .observables
                .iter()
                .map(|s| Observable::parse(s, n))
                .collect::<Result<Vec<_>>>()?;
            let exact = observables
                .iter()
                .map(|o| {
                    exact_or_none(if ratio {
                        exact_ratio(o, &rho, cfg.t)
                    } else {
                        exact_nonlinear(o, &rho, cfg.t)
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let prepared = PreparedState::new(rho)?;
            Ok(Point {
                n,
                p,
                prepared,
                observables,
                exact,
            })
        })
        .collect()
}

fn rep_stream(cfg: &ExperimentConfig, point: usize, rep: usize, protocol: Protocol, obs: usize) -> RngStream {
    RngStream::new(cfg.seed)
        .child(purpose::POINT, point as u64)
        .child(purpose::REPETITION, rep as u64)
        .child(purpose::PROTOCOL, protocol_code(protocol))
        .split(obs as u64)
}

fn base_row(
    cfg: &ExperimentConfig,
    command: &str,
    kind: &str,
    pt: &Point,
    obs: usize,
    protocol: Protocol,
) -> ResultRow {
    ResultRow {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment.clone(),
        command: command.into(),
        row_kind: kind.into(),
        n: pt.n,
        p: pt.p,
        t: cfg.t,
        observable: pt.observables[obs].label().to_string(),
        protocol: protocol.as_str().into(),
        repetition: None,
        shots: 0,
        estimate: f64::NAN,
        exact: pt.exact[obs],
        error: None,
        std_err: 0.0,
        degenerate: false,
        seed: cfg.seed,
        wall_time: 0.0,
    }
}

fn point_estimate(cfg: &ExperimentConfig, est: &Estimate) -> Result<f64> {
    match cfg.mom_batches {
        Some(r) => median_of_means(&est.values, r),
        None => Ok(est.mean),
    }
}

fn run_protocol(
    cfg: &ExperimentConfig,
    pt: &Point,
    obs: usize,
    protocol: Protocol,
    stream: RngStream,
) -> Result<(Estimate, usize)> {
    let o = &pt.observables[obs];
    let prep = &pt.prepared;
    match protocol {
        Protocol::Afrs => Ok((
            afrs_estimate(prep, cfg.ensemble, cfg.t, o, cfg.shots, SnapshotMode::Afrs, stream)?,
            cfg.shots,
        )),
        Protocol::Multishot => Ok((
            afrs_estimate(prep, cfg.ensemble, cfg.t, o, cfg.shots, SnapshotMode::Multishot, stream)?,
            cfg.shots,
        )),
        Protocol::LocalAfrs => {
            let subsystem = cfg.subsystem.clone().unwrap_or_else(|| o.support().to_vec());
            let est = if subsystem.is_empty() && o.support().is_empty() {
                moment_estimate(prep, cfg.t, cfg.shots, stream)?
            } else {
                local_afrs_estimate(
                    prep,
                    &subsystem,
                    cfg.ensemble,
                    cfg.t,
                    o,
                    cfg.shots,
                    SnapshotMode::Afrs,
                    stream,
                )?
            };
            Ok((est, cfg.shots))
        }
        Protocol::Os => Ok((
            os_baseline(prep, cfg.ensemble, cfg.t, o, cfg.os_shots, stream)?,
            cfg.os_shots,
        )),
        Protocol::Vd => Err(Error::Argument("VD ratios come from the vd command".into())),
    }
}

fn summary(
    cfg: &ExperimentConfig,
    command: &str,
    pt: &Point,
    obs: usize,
    protocol: Protocol,
    reps: &[&ResultRow],
) -> ResultRow {
    let estimates: Vec<f64> = reps.iter().map(|r| r.estimate).collect();
    let count = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / count;
    let spread = if estimates.len() > 1 {
        (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut row = base_row(cfg, command, "summary", pt, obs, protocol);
    row.shots = reps.first().map(|r| r.shots).unwrap_or(0);
    row.estimate = mean;
    row.error = pt.exact[obs].map(|x| rms_error(&estimates, x));
    row.std_err = spread;
    row.degenerate = reps.iter().any(|r| r.degenerate);
    row.wall_time = reps.iter().map(|r| r.wall_time).sum();
    row
}

/// Runs every (point, repetition) as an independent task and returns the
/// repetition rows of each point followed by its summaries.
fn sweep<F>(
    cfg: &ExperimentConfig,
    command: &str,
    pts: &[Point],
    protocols: &[Protocol],
    task: F,
) -> Result<Vec<ResultRow>>
where
    F: Fn(usize, &Point, usize, Protocol, usize) -> Result<Vec<ResultRow>> + Sync,
{
    let mut out = Vec::new();
    for (pi, pt) in pts.iter().enumerate() {
        let jobs: Vec<(usize, Protocol, usize)> = (0..cfg.repetitions)
            .flat_map(|rep| {
                protocols
                    .iter()
                    .flat_map(move |&pr| (0..pt.observables.len()).map(move |obs| (rep, pr, obs)))
            })
            .collect();
        let rows: Vec<Vec<ResultRow>> = jobs
            .par_iter()
            .map(|&(rep, pr, obs)| task(pi, pt, rep, pr, obs))
            .collect::<Result<_>>()?;
        let rows: Vec<ResultRow> = rows.into_iter().flatten().collect();
        out.extend(rows.iter().cloned());
        for &pr in protocols {
            for obs in 0..pt.observables.len() {
                let label = pt.observables[obs].label();
                let reps: Vec<&ResultRow> = rows
                    .iter()
                    .filter(|r| r.row_kind == "repetition" && r.protocol == pr.as_str() && r.observable == label)
                    .collect();
                out.push(summary(cfg, command, pt, obs, pr, &reps));
            }
        }
    }
    Ok(out)
}

/// Estimates `tr(Oρᵗ)` for each configured protocol.
pub fn cmd_estimate(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    estimate_like(cfg, "estimate")
}

/// `tr(ρᵗ)`: the observable list is forced to `I`.
pub fn cmd_moment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut cfg = cfg.clone();
    cfg.observables = vec!["I".into()];
    estimate_like(&cfg, "moment")
}

fn estimate_like(cfg: &ExperimentConfig, command: &str) -> Result<Vec<ResultRow>> {
    if cfg.protocols.is_empty() {
        return Err(Error::Argument("no protocols selected".into()));
    }
    let pts = points(cfg, false)?;
    sweep(cfg, command, &pts, &cfg.protocols, |pi, pt, rep, pr, obs| {
        let start = Instant::now();
        let (est, shots) = run_protocol(cfg, pt, obs, pr, rep_stream(cfg, pi, rep, pr, obs))?;
        let mut row = base_row(cfg, command, "repetition", pt, obs, pr);
        row.repetition = Some(rep);
        row.shots = shots;
        row.estimate = point_estimate(cfg, &est)?;
        row.error = pt.exact[obs].map(|x| (row.estimate - x).abs());
        row.std_err = est.std_err();
        row.wall_time = start.elapsed().as_secs_f64();
        Ok(vec![row])
    })
}

fn checkpoints(total: usize, count: usize) -> Vec<usize> {
    let mut cps: Vec<usize> = (1..=count).map(|k| (k * total).div_ceil(count).max(1)).collect();
    cps.dedup();
    cps
}

/// Distilled expectation `tr(Oρᵗ)/tr(ρᵗ)` with a convergence trace.
pub fn cmd_vd(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    if cfg.protocols.is_empty() {
        return Err(Error::Argument("no protocols selected".into()));
    }
    let pts = points(cfg, true)?;
    sweep(cfg, "vd", &pts, &cfg.protocols, |pi, pt, rep, pr, obs| {
        let start = Instant::now();
        let (vd, num_shots, den_shots) = match pr {
            Protocol::Afrs => (VdProtocol::Afrs(cfg.ensemble), cfg.shots, cfg.shots_den),
            Protocol::LocalAfrs => (VdProtocol::LocalAfrs, cfg.shots, cfg.shots_den),
            Protocol::Os => (VdProtocol::Os(cfg.ensemble), cfg.os_shots, cfg.t * cfg.shots_den),
            other => return Err(Error::Argument(format!("vd does not support {other}"))),
        };
        let o = &pt.observables[obs];
        let est = vd_estimate(
            &pt.prepared,
            o,
            cfg.t,
            vd,
            num_shots,
            den_shots,
            rep_stream(cfg, pi, rep, pr, obs),
        )?;
        let elapsed = start.elapsed().as_secs_f64();
        let num_values = est.numerator.shots();
        let cps = checkpoints(num_values, cfg.checkpoints);
        let per_value = num_shots / num_values.max(1);
        let mut rows = Vec::with_capacity(cps.len() + 1);
        for (&cp, (ratio, degenerate)) in cps.iter().zip(est.trace(&cps)) {
            let mut row = base_row(cfg, "vd", "checkpoint", pt, obs, pr);
            row.repetition = Some(rep);
            row.shots = cp * per_value;
            row.estimate = ratio;
            row.error = pt.exact[obs].map(|x| (ratio - x).abs());
            row.degenerate = degenerate;
            rows.push(row);
        }
        let mut row = base_row(cfg, "vd", "repetition", pt, obs, pr);
        row.repetition = Some(rep);
        row.shots = num_shots;
        row.estimate = est.ratio;
        row.error = pt.exact[obs].map(|x| (est.ratio - x).abs());
        let (n, d) = (&est.numerator, &est.denominator);
        row.std_err =
            (est.ratio.abs() * ((n.std_err() / n.mean).powi(2) + (d.std_err() / d.mean).powi(2)).sqrt()).abs();
        row.degenerate = est.degenerate;
        row.wall_time = elapsed;
        rows.push(row);
        Ok(rows)
    })
}

/// Partitions the observables and budgets each subset.
pub fn cmd_plan(cfg: &ExperimentConfig) -> Result<Vec<PlanRow>> {
    let start = Instant::now();
    let n = cfg.n[0];
    if cfg.observables.is_empty() {
        return Err(Error::Argument("plan needs at least one observable".into()));
    }
    let observables = cfg
        .observables
        .iter()
        .map(|s| Observable::parse(s, n))
        .collect::<Result<Vec<_>>>()?;
    let plan = plan_observables(&observables)?;
    let variances = match cfg.variance {
        Some(v) => vec![v; plan.k()],
        None => {
            let prepared = PreparedState::new(build_state(cfg, n, cfg.p[0], 0)?)?;
            pilot_variances(
                &prepared,
                &observables,
                &plan,
                cfg.t,
                cfg.pilot_shots,
                RngStream::new(cfg.seed),
            )?
        }
    };
    let budget = plan.budget(cfg.epsilon, cfg.delta, &variances)?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok(plan
        .subsets
        .iter()
        .enumerate()
        .map(|(k, subset)| PlanRow {
            schema_version: SCHEMA_VERSION,
            experiment: cfg.experiment.clone(),
            n,
            k: plan.k(),
            subset: k,
            observables: subset
                .observables
                .iter()
                .map(|&i| plan.labels[i].clone())
                .collect::<Vec<_>>()
                .join(";"),
            blocks: subset
                .blocks
                .iter()
                .map(|b| b.iter().map(|q| (q + 1).to_string()).collect::<Vec<_>>().join(","))
                .collect::<Vec<_>>()
                .join("|"),
            variance: variances[k],
            epsilon: budget.epsilon,
            delta: budget.delta,
            batches: budget.batches,
            batch_size: budget.batch_sizes[k],
            shots: budget.shots(k),
            total_shots: budget.total_shots(),
            total_bound: budget.total_bound,
            seed: cfg.seed,
            wall_time: elapsed,
        })
        .collect())
}

/// Compiles `R`, checks it against the dense matrix, and returns the report
/// together with the serialized circuit.
pub fn cmd_compile_verify(cfg: &ExperimentConfig, n_given: bool) -> Result<(VerifyRow, String)> {
    let start = Instant::now();
    if cfg.t != 2 {
        return Err(Error::Argument(format!(
            "circuit compilation covers t = 2 only (got t = {})",
            cfg.t
        )));
    }
    let mut n = cfg.n[0];
    let (kind, circuit, d) = match (cfg.d, n_given && n > 1) {
        _ if cfg.input.is_some() => {
            let path = cfg.input.as_deref().expect("checked above");
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
            let circuit = parse_circuit(&text)?;
            let first: Vec<_> = circuit.wires().iter().filter(|w| w.replica == 0).collect();
            n = first.len();
            let d = first.first().map_or(0, |w| w.input_dim);
            ("input", circuit, d)
        }
        (Some(d), false) => ("qudit", compile_r_qudit(d)?, d),
        (Some(d), true) if d != 2 => {
            return Err(Error::Argument(format!(
                "no compilation for {n} qudits of dimension {d}"
            )));
        }
        (_, true) => ("many_qubit", compile_r_many_qubit(n)?, 2),
        (None, false) => ("qubit", compile_r_single_qubit(), 2),
    };
    let report = verify_equivalence(&circuit, cfg.trials, &RngStream::new(cfg.seed))?;
    let row = VerifyRow {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment.clone(),
        circuit: kind.into(),
        d,
        n: if matches!(kind, "many_qubit" | "input") { n } else { 1 },
        trials: report.trials,
        tv: report.tv,
        max_dev: report.max_dev,
        max_depth: report.max_depth,
        passed: report.tv <= VERIFY_TOLERANCE,
        seed: cfg.seed,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((row, circuit.to_text()))
}
