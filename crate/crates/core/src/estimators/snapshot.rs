//! Single-shot AFRS snapshots and their observable values.

use rand::Rng;

use crate::ensembles::{
    local_snapshot_factor, rotated_pauli_diagonal, sample_local_clifford, sample_unitary, Ensemble, UnitaryFactors,
    UnitarySample,
};
use crate::error::{arg, contract, Result};
use crate::replica::{f_product, f_value, map_outcome, mapping_distribution, ReplicaOutcome};
use crate::sampler::{sample_outcome_global, sample_outcome_local, PreparedState};
use crate::states::{Observable, ObservableKind, Pauli, PauliString};
use crate::tensor::{apply_1q, inner, ComplexMatrix, ProbabilityTable, C64};

/// How the replica outcome is turned into a single-copy basis string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SnapshotMode {
    /// One `b = x_j` with `j` uniform.
    Afrs,
    /// The exact average over `j`.
    Multishot,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mapped {
    Sampled(usize),
    Distribution(ProbabilityTable<usize>),
}

impl Mapped {
    fn draw<R: Rng + ?Sized>(x: &ReplicaOutcome, mode: SnapshotMode, rng: &mut R) -> Self {
        match mode {
            SnapshotMode::Afrs => Mapped::Sampled(map_outcome(x, rng)),
            SnapshotMode::Multishot => Mapped::Distribution(mapping_distribution(x)),
        }
    }

    /// `Σ_b Pr(b)·g(b)`.
    fn average(&self, mut g: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (b, w) in self.terms() {
            acc += w * g(b)?;
        }
        Ok(acc)
    }

    /// `(b, Pr(b))` pairs with non-zero weight.
    pub fn terms(&self) -> Vec<(usize, f64)> {
        match self {
            Mapped::Sampled(b) => vec![(*b, 1.0)],
            Mapped::Distribution(t) => t.iter().filter(|(_, w)| *w > 0.0).map(|(&b, w)| (b, w)).collect(),
        }
    }

    fn mode(&self) -> SnapshotMode {
        match self {
            Mapped::Sampled(_) => SnapshotMode::Afrs,
            Mapped::Distribution(_) => SnapshotMode::Multishot,
        }
    }
}

/// One whole-register shot: `Re f(x)·𝓜⁻¹(V†|b⟩⟨b|V)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    unitary: UnitarySample,
    outcome: ReplicaOutcome,
    f_re: f64,
    mapped: Mapped,
}

impl Snapshot {
    pub fn unitary(&self) -> &UnitarySample {
        &self.unitary
    }

    pub fn outcome(&self) -> &ReplicaOutcome {
        &self.outcome
    }

    pub fn f_re(&self) -> f64 {
        self.f_re
    }

    pub fn mapped(&self) -> &Mapped {
        &self.mapped
    }

    pub fn mode(&self) -> SnapshotMode {
        self.mapped.mode()
    }

    pub fn t(&self) -> usize {
        self.outcome.space().t()
    }

    /// `tr(O·ρ̂ᵗ)` for this shot.
    pub fn value(&self, o: &Observable) -> Result<f64> {
        if o.qubits() != self.unitary.qubits() {
            return arg("observable and snapshot registers differ");
        }
        if self.f_re == 0.0 {
            return Ok(0.0);
        }
        Ok(self.f_re * self.mapped.average(|b| basis_value(&self.unitary, b, o))?)
    }

    /// The dense reconstruction `ρ̂ᵗ`.
    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.unitary.qubits();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (b, w) in self.mapped.terms() {
            let m = crate::ensembles::inverse_channel_snapshot(&self.unitary, b)?;
            acc = &acc + &m.scale_real(w);
        }
        Ok(acc.scale_real(self.f_re))
    }
}

/// Draw `V`, then `x`, then the mapping, all from `rng`.
pub fn snapshot<R: Rng + ?Sized>(
    prepared: &PreparedState,
    ensemble: Ensemble,
    t: usize,
    mode: SnapshotMode,
    rng: &mut R,
) -> Result<Snapshot> {
    if ensemble == Ensemble::Identity {
        return arg("snapshots need a randomizing ensemble");
    }
    let unitary = sample_unitary(ensemble, prepared.qubits(), rng)?;
    let outcome = {
        let rotated = prepared.rotate(&unitary, t)?;
        sample_outcome_global(&rotated, rng)?
    };
    let f_re = f_value(&outcome);
    let mapped = Mapped::draw(&outcome, mode, rng);
    Ok(Snapshot {
        unitary,
        outcome,
        f_re,
        mapped,
    })
}

pub fn afrs_snapshot<R: Rng + ?Sized>(
    prepared: &PreparedState,
    ensemble: Ensemble,
    t: usize,
    rng: &mut R,
) -> Result<Snapshot> {
    snapshot(prepared, ensemble, t, SnapshotMode::Afrs, rng)
}

pub fn multishot_snapshot<R: Rng + ?Sized>(
    prepared: &PreparedState,
    ensemble: Ensemble,
    t: usize,
    rng: &mut R,
) -> Result<Snapshot> {
    snapshot(prepared, ensemble, t, SnapshotMode::Multishot, rng)
}

/// `⟨b|V·𝓜⁻¹(O)·V†|b⟩ = tr(O·𝓜⁻¹(V†|b⟩⟨b|V))`.
pub fn basis_value(unitary: &UnitarySample, b: usize, o: &Observable) -> Result<f64> {
    let n = unitary.qubits();
    match (unitary.factors(), o.kind()) {
        (UnitaryFactors::Identity, _) => contract("the identity ensemble has no inverse channel"),
        (UnitaryFactors::Local(idx), ObservableKind::Pauli(ps)) => Ok(local_pauli_value(idx, n, ps, b)),
        (UnitaryFactors::Local(idx), ObservableKind::Projector(g)) => {
            let table = crate::ensembles::enumerate_single_qubit_cliffords();
            let mut w = g.clone();
            for (q, &i) in idx.iter().enumerate() {
                let factor = local_snapshot_factor(&table[i as usize], (b >> (n - 1 - q)) & 1);
                apply_1q(&mut w, n, q, &factor);
            }
            Ok(inner(g, &w).re)
        }
        (UnitaryFactors::Local(_), ObservableKind::Dense(m)) => {
            let snap = crate::ensembles::inverse_channel_snapshot(unitary, b)?;
            Ok(m.trace_product(&snap)?.re)
        }
        (UnitaryFactors::Global(_), kind) => {
            let dim = (1usize << n) as f64;
            let u = unitary.adjoint_basis_vector(b);
            let quad = match kind {
                ObservableKind::Pauli(ps) => pauli_quadratic(ps, &u),
                ObservableKind::Projector(g) => inner(g, &u).norm_sqr(),
                ObservableKind::Dense(m) => m.expectation(&u)?.re,
            };
            Ok((dim + 1.0) * quad - o.trace()?)
        }
    }
}

/// `∏_{q∈supp} 3⟨b_q|U_q P_q U_q†|b_q⟩`.
fn local_pauli_value(idx: &[u8], n: usize, ps: &PauliString, b: usize) -> f64 {
    let mut v = 1.0;
    for (q, &p) in ps.letters().iter().enumerate() {
        if p == Pauli::I {
            continue;
        }
        let d = rotated_pauli_diagonal(idx[q] as usize, p, (b >> (n - 1 - q)) & 1);
        if d == 0.0 {
            return 0.0;
        }
        v *= 3.0 * d;
    }
    v
}

/// `⟨u|P|u⟩` without building `P`.
pub fn pauli_quadratic(ps: &PauliString, u: &[C64]) -> f64 {
    let n = ps.len();
    let (mut flip, mut sign, mut ys) = (0usize, 0usize, 0u32);
    for (q, &p) in ps.letters().iter().enumerate() {
        let bit = 1usize << (n - 1 - q);
        match p {
            Pauli::I => {}
            Pauli::X => flip |= bit,
            Pauli::Z => sign |= bit,
            Pauli::Y => {
                flip |= bit;
                sign |= bit;
                ys += 1;
            }
        }
    }
    // P|j⟩ = i^{#Y}·(−1)^{|j ∧ sign|}|j ⊕ flip⟩
    let mut acc = C64::new(0.0, 0.0);
    for (j, a) in u.iter().enumerate() {
        let term = u[j ^ flip].conj() * a;
        if (j & sign).count_ones() % 2 == 1 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    let phase = match ys % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    (acc * phase).re
}

/// A shot measured blockwise: `R` acts separately on each block of
/// `partition`, and `f` is the product of the per-block values.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSnapshot {
    partition: Vec<Vec<usize>>,
    unitary: UnitarySample,
    randomized: Vec<bool>,
    outcomes: Vec<ReplicaOutcome>,
    f_re_total: f64,
    mapped: Vec<Mapped>,
}

impl LocalSnapshot {
    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    pub fn unitary(&self) -> &UnitarySample {
        &self.unitary
    }

    pub fn outcomes(&self) -> &[ReplicaOutcome] {
        &self.outcomes
    }

    pub fn f_re_total(&self) -> f64 {
        self.f_re_total
    }

    pub fn mapped(&self) -> &[Mapped] {
        &self.mapped
    }

    /// Index of the block that contains all of `qubits`.
    pub fn block_of(&self, qubits: &[usize]) -> Option<usize> {
        self.partition
            .iter()
            .position(|blk| qubits.iter().all(|q| blk.contains(q)))
    }

    /// `tr(O·ρ̂ᵗ)` for an observable supported inside one block.
    pub fn value(&self, o: &Observable) -> Result<f64> {
        let n = self.unitary.qubits();
        if o.qubits() != n {
            return arg("observable and snapshot registers differ");
        }
        let support = o.support();
        if support.is_empty() && o.is_identity() {
            return Ok(self.f_re_total);
        }
        let Some(k) = self.block_of(support) else {
            return arg(format!("observable {o} straddles two measurement blocks"));
        };
        if let Some(q) = support.iter().find(|&&q| !self.randomized[q]) {
            return contract(format!("qubit {} carries no random unitary", q + 1));
        }
        if self.f_re_total == 0.0 {
            return Ok(0.0);
        }
        let block = &self.partition[k];
        let mut mean = match (self.unitary.factors(), o.kind()) {
            (UnitaryFactors::Local(idx), ObservableKind::Pauli(ps)) => {
                let m = block.len();
                self.mapped[k].average(|word| {
                    let mut v = 1.0;
                    for (pos, &q) in block.iter().enumerate() {
                        let p = ps.letters()[q];
                        if p == Pauli::I {
                            continue;
                        }
                        let bit = (word >> (m - 1 - pos)) & 1;
                        v *= 3.0 * rotated_pauli_diagonal(idx[q] as usize, p, bit);
                    }
                    Ok(v)
                })?
            }
            _ if block.len() == n && block.iter().enumerate().all(|(i, &q)| i == q) => {
                self.mapped[k].average(|b| basis_value(&self.unitary, b, o))?
            }
            _ => return arg("non-Pauli observables need the whole register as one block"),
        };
        mean *= self.f_re_total;
        Ok(mean)
    }
}

/// Measure `partition` blockwise after applying `unitary`. `randomized`
/// marks the qubits whose factor of `unitary` was drawn at random.
pub fn partitioned_snapshot<R: Rng + ?Sized>(
    prepared: &PreparedState,
    partition: &[Vec<usize>],
    unitary: UnitarySample,
    randomized: Vec<bool>,
    t: usize,
    mode: SnapshotMode,
    rng: &mut R,
) -> Result<LocalSnapshot> {
    let outcomes = {
        let rotated = prepared.rotate(&unitary, t)?;
        sample_outcome_local(&rotated, partition, rng)?
    };
    let f_re_total = f_product(&outcomes);
    let mapped = outcomes.iter().map(|x| Mapped::draw(x, mode, rng)).collect();
    Ok(LocalSnapshot {
        partition: partition.to_vec(),
        unitary,
        randomized,
        outcomes,
        f_re_total,
        mapped,
    })
}

/// `A` as one block followed by the singletons of its complement.
pub fn subsystem_partition(n: usize, subsystem: &[usize]) -> Result<Vec<Vec<usize>>> {
    let mut a = subsystem.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.len() != subsystem.len() {
        return arg("subsystem lists a qubit twice");
    }
    if a.iter().any(|&q| q >= n) {
        return arg("subsystem qubit outside the register");
    }
    let mut blocks = Vec::new();
    if !a.is_empty() {
        blocks.push(a.clone());
    }
    blocks.extend((0..n).filter(|q| !a.contains(q)).map(|q| vec![q]));
    Ok(blocks)
}

/// One local-AFRS shot: random unitary on `A`, identity elsewhere.
pub fn local_afrs_snapshot<R: Rng + ?Sized>(
    prepared: &PreparedState,
    subsystem: &[usize],
    ensemble: Ensemble,
    t: usize,
    mode: SnapshotMode,
    rng: &mut R,
) -> Result<LocalSnapshot> {
    let n = prepared.qubits();
    let partition = subsystem_partition(n, subsystem)?;
    let in_a: Vec<bool> = (0..n).map(|q| subsystem.contains(&q)).collect();
    let unitary = match ensemble {
        Ensemble::Identity => UnitarySample::identity(n),
        Ensemble::LocalClifford if subsystem.is_empty() => UnitarySample::identity(n),
        Ensemble::LocalClifford => {
            let draw = sample_local_clifford(n, rng)?;
            let idx = draw.local_indices().expect("local draw");
            let kept = (0..n).map(|q| if in_a[q] { idx[q] } else { 0 }).collect();
            UnitarySample::local_from_indices(kept)?
        }
        Ensemble::GlobalClifford if subsystem.len() == n => sample_unitary(ensemble, n, rng)?,
        Ensemble::GlobalClifford => {
            return arg("a global Clifford on a proper subsystem is not supported; use local_clifford")
        }
    };
    let randomized = if ensemble == Ensemble::Identity {
        vec![false; n]
    } else {
        in_a
    };
    partitioned_snapshot(prepared, &partition, unitary, randomized, t, mode, rng)
}
