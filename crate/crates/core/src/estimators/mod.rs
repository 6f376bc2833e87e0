//! Estimators built on replica snapshots, and the single-copy baseline.
//!
//! Every Monte-Carlo routine takes an [`RngStream`]; shot `i` draws from
//! `stream.child(SHOT, i)`, so results do not depend on the thread count.

mod plan;
mod shadow;
mod snapshot;
mod stats;

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use plan::{plan_observables, ObservablePlan, PlanBudget, PlanSubset};
pub use shadow::{product_value, validate_group_shots, ShadowSample};
pub use snapshot::{
    afrs_snapshot, basis_value, local_afrs_snapshot, multishot_snapshot, partitioned_snapshot, pauli_quadratic,
    snapshot, subsystem_partition, LocalSnapshot, Mapped, Snapshot, SnapshotMode,
};
pub use stats::{mean_and_variance, median_of_means, mom_batch_size, rms_error, Estimate};

use crate::ensembles::{sample_local_clifford, Ensemble, UnitarySample};
use crate::error::{arg, Error, Result};
use crate::replica::f_product;
use crate::rng::{purpose, RngStream};
use crate::sampler::{sample_outcome_local, PreparedState};
use crate::states::Observable;

/// Estimation protocols, as named in result files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    Os,
    Afrs,
    LocalAfrs,
    Multishot,
    Vd,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Os => "OS",
            Protocol::Afrs => "AFRS",
            Protocol::LocalAfrs => "LOCAL_AFRS",
            Protocol::Multishot => "MULTISHOT",
            Protocol::Vd => "VD",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "OS" => Ok(Protocol::Os),
            "AFRS" => Ok(Protocol::Afrs),
            "LOCAL_AFRS" => Ok(Protocol::LocalAfrs),
            "MULTISHOT" => Ok(Protocol::Multishot),
            "VD" => Ok(Protocol::Vd),
            _ => arg(format!("unknown protocol {s:?}")),
        }
    }
}

/// Run `count` independent shots in parallel, collecting in index order.
pub fn run_shots<T, F>(count: usize, stream: RngStream, shot: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| shot(&mut stream.child(purpose::SHOT, i as u64).rng()))
        .collect()
}

/// Mean of `tr(O·ρ̂ᵗ)` over stored snapshots.
pub fn estimate_observable(snapshots: &[Snapshot], o: &Observable) -> Result<Estimate> {
    let values = snapshots.iter().map(|s| s.value(o)).collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_values(values))
}

/// Whole-register estimate of `tr(Oρᵗ)`.
pub fn afrs_estimate(
    prepared: &PreparedState,
    ensemble: Ensemble,
    t: usize,
    o: &Observable,
    shots: usize,
    mode: SnapshotMode,
    stream: RngStream,
) -> Result<Estimate> {
    let values = run_shots(shots, stream, |rng| {
        snapshot(prepared, ensemble, t, mode, rng)?.value(o)
    })?;
    Ok(Estimate::from_values(values))
}

/// Blockwise estimate with the random unitary on `subsystem` only.
#[allow(clippy::too_many_arguments)]
pub fn local_afrs_estimate(
    prepared: &PreparedState,
    subsystem: &[usize],
    ensemble: Ensemble,
    t: usize,
    o: &Observable,
    shots: usize,
    mode: SnapshotMode,
    stream: RngStream,
) -> Result<Estimate> {
    let values = run_shots(shots, stream, |rng| {
        local_afrs_snapshot(prepared, subsystem, ensemble, t, mode, rng)?.value(o)
    })?;
    Ok(Estimate::from_values(values))
}

/// `tr(ρᵗ)` from `∏ᵢ Re f(xⁱ)` with every qubit its own block.
pub fn moment_estimate(prepared: &PreparedState, t: usize, shots: usize, stream: RngStream) -> Result<Estimate> {
    let n = prepared.qubits();
    let blocks: Vec<Vec<usize>> = (0..n).map(|q| vec![q]).collect();
    let id = UnitarySample::identity(n);
    prepared.rotate(&id, t)?;
    let values = run_shots(shots, stream, |rng| {
        let rotated = prepared.rotate(&id, t)?;
        Ok(f_product(&sample_outcome_local(&rotated, &blocks, rng)?))
    })?;
    Ok(Estimate::from_values(values))
}

/// Single-copy baseline: `shots` ordinary snapshots in disjoint `t`-groups.
pub fn os_baseline(
    prepared: &PreparedState,
    ensemble: Ensemble,
    t: usize,
    o: &Observable,
    shots: usize,
    stream: RngStream,
) -> Result<Estimate> {
    let groups = validate_group_shots(shots, t)?;
    let values = run_shots(groups, stream, |rng| {
        let group = (0..t)
            .map(|_| ShadowSample::draw(prepared, ensemble, rng))
            .collect::<Result<Vec<_>>>()?;
        product_value(o, &group)
    })?;
    Ok(Estimate::from_values(values))
}

/// Estimates for every planned observable. Subset `k` receives
/// `shots[k]` shots of a local Clifford on all qubits followed by the
/// blockwise measurement of its blocks.
pub fn estimate_plan(
    prepared: &PreparedState,
    observables: &[Observable],
    plan: &ObservablePlan,
    t: usize,
    shots: &[usize],
    mode: SnapshotMode,
    stream: RngStream,
) -> Result<Vec<Estimate>> {
    if observables.len() != plan.len() || shots.len() != plan.k() {
        return arg("plan, observables and shot counts disagree");
    }
    let n = prepared.qubits();
    let mut out: Vec<Option<Estimate>> = vec![None; observables.len()];
    for (k, subset) in plan.subsets.iter().enumerate() {
        let per_shot = run_shots(shots[k], stream.split(k as u64), |rng| {
            let v = sample_local_clifford(n, rng)?;
            let snap = partitioned_snapshot(prepared, &subset.blocks, v, vec![true; n], t, mode, rng)?;
            subset
                .observables
                .iter()
                .map(|&i| snap.value(&observables[i]))
                .collect::<Result<Vec<f64>>>()
        })?;
        for (col, &i) in subset.observables.iter().enumerate() {
            out[i] = Some(Estimate::from_values(per_shot.iter().map(|row| row[col]).collect()));
        }
    }
    Ok(out
        .into_iter()
        .map(|e| e.expect("every observable is planned"))
        .collect())
}

/// Largest per-observable sample variance in each subset, from a pilot run.
pub fn pilot_variances(
    prepared: &PreparedState,
    observables: &[Observable],
    plan: &ObservablePlan,
    t: usize,
    pilot_shots: usize,
    stream: RngStream,
) -> Result<Vec<f64>> {
    let est = estimate_plan(
        prepared,
        observables,
        plan,
        t,
        &vec![pilot_shots; plan.k()],
        SnapshotMode::Afrs,
        stream.split(purpose::PILOT),
    )?;
    Ok(plan
        .subsets
        .iter()
        .map(|s| s.observables.iter().map(|&i| est[i].variance).fold(0.0, f64::max))
        .collect())
}

/// How the two traces of a distilled expectation are estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VdProtocol {
    /// Whole-register snapshots for both traces.
    Afrs(Ensemble),
    /// Local Clifford on the observable's support for the numerator, the
    /// `∏ f` moment estimator for the denominator.
    LocalAfrs,
    /// Single-copy shadows in `t`-groups for both traces.
    Os(Ensemble),
}

impl VdProtocol {
    pub fn protocol(self) -> Protocol {
        match self {
            VdProtocol::Afrs(_) => Protocol::Afrs,
            VdProtocol::LocalAfrs => Protocol::LocalAfrs,
            VdProtocol::Os(_) => Protocol::Os,
        }
    }
}

/// `tr(Oρᵗ)/tr(ρᵗ)` from two independent shot sets.
#[derive(Clone, Debug, PartialEq)]
pub struct VdEstimate {
    pub numerator: Estimate,
    pub denominator: Estimate,
    pub ratio: f64,
    /// The denominator estimate was `≤ 0`; `ratio` is then meaningless.
    pub degenerate: bool,
}

impl VdEstimate {
    fn new(numerator: Estimate, denominator: Estimate) -> Self {
        let degenerate = denominator.mean.is_nan() || denominator.mean <= 0.0;
        VdEstimate {
            ratio: numerator.mean / denominator.mean,
            numerator,
            denominator,
            degenerate,
        }
    }

    /// Ratio of running means after each checkpoint; the same checkpoint
    /// indexes both shot sets proportionally to their sizes.
    pub fn trace(&self, checkpoints: &[usize]) -> Vec<(f64, bool)> {
        let nn = self.numerator.shots().max(1);
        let nd = self.denominator.shots();
        let num = self.numerator.running_means(checkpoints);
        let scaled: Vec<usize> = checkpoints.iter().map(|&c| (c * nd).div_ceil(nn)).collect();
        let den = self.denominator.running_means(&scaled);
        num.iter()
            .zip(den)
            .map(|(a, b)| (a / b, b.is_nan() || b <= 0.0))
            .collect()
    }
}

pub fn vd_estimate(
    prepared: &PreparedState,
    o: &Observable,
    t: usize,
    protocol: VdProtocol,
    shots_num: usize,
    shots_den: usize,
    stream: RngStream,
) -> Result<VdEstimate> {
    let n = prepared.qubits();
    let num_stream = stream.split(purpose::NUMERATOR);
    let den_stream = stream.split(purpose::DENOMINATOR);
    let id = Observable::identity(n);
    let (num, den) = match protocol {
        VdProtocol::Afrs(e) => (
            afrs_estimate(prepared, e, t, o, shots_num, SnapshotMode::Afrs, num_stream)?,
            afrs_estimate(prepared, e, t, &id, shots_den, SnapshotMode::Afrs, den_stream)?,
        ),
        VdProtocol::LocalAfrs => (
            local_afrs_estimate(
                prepared,
                o.support(),
                Ensemble::LocalClifford,
                t,
                o,
                shots_num,
                SnapshotMode::Afrs,
                num_stream,
            )?,
            moment_estimate(prepared, t, shots_den, den_stream)?,
        ),
        VdProtocol::Os(e) => (
            os_baseline(prepared, e, t, o, shots_num, num_stream)?,
            os_baseline(prepared, e, t, &id, shots_den, den_stream)?,
        ),
    };
    Ok(VdEstimate::new(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{ghz_vector, noisy_ghz, DensityMatrix};

    fn within(e: &Estimate, exact: f64, sigmas: f64) -> bool {
        (e.mean - exact).abs() <= sigmas * e.std_err() + 1e-12
    }

    #[test]
    fn protocol_names() {
        for p in [
            Protocol::Os,
            Protocol::Afrs,
            Protocol::LocalAfrs,
            Protocol::Multishot,
            Protocol::Vd,
        ] {
            assert_eq!(p.as_str().parse::<Protocol>().unwrap(), p);
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let p = PreparedState::new(noisy_ghz(3, 0.3).unwrap()).unwrap();
        let o = Observable::parse("Z1*Z2", 3).unwrap();
        let run = || {
            afrs_estimate(
                &p,
                Ensemble::LocalClifford,
                2,
                &o,
                300,
                SnapshotMode::Afrs,
                RngStream::new(5),
            )
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run)
            .unwrap();
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(run)
            .unwrap();
        assert_eq!(one.values, many.values);
    }

    #[test]
    fn moment_estimator_examples() {
        let pure = PreparedState::new(DensityMatrix::pure(&ghz_vector(4).unwrap()).unwrap()).unwrap();
        let e = moment_estimate(&pure, 2, 500, RngStream::new(1)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));

        let mixed = PreparedState::new(DensityMatrix::maximally_mixed(2).unwrap()).unwrap();
        let e = moment_estimate(&mixed, 2, 40_000, RngStream::new(2)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0 || v == -1.0));
        let neg = e.values.iter().filter(|&&v| v < 0.0).count() as f64 / 40_000.0;
        assert!((neg - 0.25).abs() < 0.01);
        assert!(within(&e, 0.5, 3.0));

        let ghz = PreparedState::new(noisy_ghz(3, 0.3).unwrap()).unwrap();
        let e = moment_estimate(&ghz, 2, 40_000, RngStream::new(3)).unwrap();
        assert!(within(&e, 0.55375, 3.0), "{}", e.mean);
    }

    #[test]
    fn os_baseline_rejects_bad_shot_counts() {
        let p = PreparedState::new(DensityMatrix::maximally_mixed(2).unwrap()).unwrap();
        let o = Observable::parse("Z1", 1).unwrap();
        assert!(os_baseline(&p, Ensemble::LocalClifford, 2, &o, 1, RngStream::new(1)).is_err());
        assert!(os_baseline(&p, Ensemble::LocalClifford, 2, &o, 3, RngStream::new(1)).is_err());
        assert_eq!(
            os_baseline(&p, Ensemble::LocalClifford, 2, &o, 4, RngStream::new(1))
                .unwrap()
                .shots(),
            2
        );
    }

    #[test]
    fn pure_state_vd_returns_the_plain_expectation() {
        let p = PreparedState::new(DensityMatrix::pure(&ghz_vector(3).unwrap()).unwrap()).unwrap();
        let o = Observable::parse("Z1*Z2", 3).unwrap();
        let v = vd_estimate(&p, &o, 2, VdProtocol::LocalAfrs, 20_000, 100, RngStream::new(4)).unwrap();
        assert!(!v.degenerate);
        assert_eq!(v.denominator.mean, 1.0);
        assert!((v.ratio - 1.0).abs() < 4.0 * v.numerator.std_err());
        let tr = v.trace(&[100, 20_000]);
        assert_eq!(tr.len(), 2);
        assert!((tr[1].0 - v.ratio).abs() < 1e-12);
    }

    #[test]
    fn degenerate_denominators_are_flagged() {
        let num = Estimate::from_values(vec![0.5]);
        let den = Estimate::from_values(vec![-1.0]);
        let v = VdEstimate::new(num, den);
        assert!(v.degenerate);
    }
}
