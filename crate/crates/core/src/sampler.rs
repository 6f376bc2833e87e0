//! Drawing replica outcomes `x` from `Pr(x|V) = ⟨Ψ_x|(VρV†)^{⊗t}|Ψ_x⟩`
//! using a single-copy description of the state.
//!
//! Two routes are available. For `t = 2` the whole `d²` table follows from
//! the entries of `σ = VρV†`:
//!
//! | outcome  | probability                |
//! |----------|----------------------------|
//! | `a = b`  | `σ_aa²`                    |
//! | `a < b`  | `σ_aa σ_bb + |σ_ab|²`      |
//! | `a > b`  | `σ_aa σ_bb − |σ_ab|²`      |
//!
//! For any `t` we can instead write `ρ = Σ p_k |φ_k⟩⟨φ_k|`, draw `t`
//! eigenvector labels independently, and measure the product vector
//! `R(V|φ_{k₁}⟩ ⊗ … ⊗ V|φ_{k_t}⟩)` in the computational basis. Only that one
//! `dᵗ` vector is ever stored.

use std::cell::OnceCell;
use std::f64::consts::PI;

use rand::Rng;

use crate::ensembles::UnitarySample;
use crate::error::{arg, Result};
use crate::replica::{apply_r, apply_r_gathered, ReplicaOutcome, ReplicaSpace};
use crate::states::DensityMatrix;
use crate::tensor::{check_vector_len, hermitian_eig, sample_discrete, sample_index, ProbabilityTable, C64, ZERO};

/// Eigenvalues below this are dropped before spectral sampling.
pub const SPECTRUM_FLOOR: f64 = 1e-12;

/// Which route [`sample_outcome_global`] takes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplingPath {
    /// Closed-form table for `t = 2`, spectral otherwise.
    #[default]
    Auto,
    ClosedForm,
    Spectral,
}

/// A state together with its spectral decomposition, computed once and
/// reused for every shot.
#[derive(Clone, Debug)]
pub struct PreparedState {
    rho: DensityMatrix,
    n: usize,
    weights: Vec<f64>,
    vectors: Vec<Vec<C64>>,
}

impl PreparedState {
    pub fn new(rho: DensityMatrix) -> Result<Self> {
        let n = match rho.qubits() {
            Some(n) if n >= 1 => n,
            _ => return arg(format!("state dimension {} is not a qubit register", rho.dim())),
        };
        let eig = hermitian_eig(rho.matrix())?;
        let mut weights = Vec::new();
        let mut vectors = Vec::new();
        for (k, &p) in eig.values.iter().enumerate() {
            if p > SPECTRUM_FLOOR {
                weights.push(p);
                vectors.push(eig.vectors[k].clone());
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(PreparedState {
            rho,
            n,
            weights,
            vectors,
        })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn is_pure(&self) -> bool {
        self.weights.len() == 1
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.weights
    }

    /// Attach a sampled unitary and a replica count.
    pub fn rotate<'a>(&'a self, unitary: &'a UnitarySample, t: usize) -> Result<RotatedState<'a>> {
        if unitary.qubits() != self.n {
            return arg(format!(
                "unitary acts on {} qubits, state on {}",
                unitary.qubits(),
                self.n
            ));
        }
        if t == 0 {
            return arg("replica count must be at least 1");
        }
        check_vector_len("replica register", (1u128 << self.n).saturating_pow(t as u32))?;
        Ok(RotatedState {
            prepared: self,
            unitary,
            t,
            sigma: OnceCell::new(),
        })
    }

    /// `t` eigenvector labels drawn from the spectrum.
    fn draw_labels<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Vec<usize> {
        (0..t).map(|_| sample_index(&self.weights, 1.0, rng)).collect()
    }
}

/// `σ = VρV†` viewed through `t` replicas.
#[derive(Debug)]
pub struct RotatedState<'a> {
    prepared: &'a PreparedState,
    unitary: &'a UnitarySample,
    t: usize,
    sigma: OnceCell<DensityMatrix>,
}

impl RotatedState<'_> {
    pub fn qubits(&self) -> usize {
        self.prepared.n
    }

    pub fn dim(&self) -> usize {
        1 << self.prepared.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn unitary(&self) -> &UnitarySample {
        self.unitary
    }

    /// The replica space of the whole register.
    pub fn space(&self) -> ReplicaSpace {
        ReplicaSpace::new(self.dim(), self.t).expect("size checked in rotate")
    }

    /// `VρV†`, computed on first use.
    pub fn sigma(&self) -> &DensityMatrix {
        self.sigma.get_or_init(|| {
            self.unitary
                .rotate_state(&self.prepared.rho)
                .expect("register sizes checked in rotate")
        })
    }

    /// `V|φ_k⟩` for each label.
    fn rotated_vectors(&self, labels: &[usize]) -> Vec<Vec<C64>> {
        labels
            .iter()
            .map(|&k| {
                let mut v = self.prepared.vectors[k].clone();
                self.unitary.apply(&mut v);
                v
            })
            .collect()
    }
}

/// An ordinary single-copy measurement: `b` drawn from `⟨b|VρV†|b⟩`.
pub fn sample_single_copy<R: Rng + ?Sized>(
    prepared: &PreparedState,
    unitary: &UnitarySample,
    rng: &mut R,
) -> Result<usize> {
    if unitary.qubits() != prepared.n {
        return arg("unitary and state act on different registers");
    }
    let k = sample_index(&prepared.weights, 1.0, rng);
    let mut v = prepared.vectors[k].clone();
    unitary.apply(&mut v);
    Ok(sample_amplitudes(&v, rng))
}

/// `⟨Ψ_x|σ^{⊗t}|Ψ_x⟩` from the entries of `σ` alone.
pub fn outcome_probability(state: &RotatedState, x: &ReplicaOutcome) -> Result<f64> {
    let space = state.space();
    if x.space() != space {
        return arg("outcome belongs to a different replica space");
    }
    let sigma = state.sigma().matrix();
    let orbit = space.orbit(x.representative());
    let card = orbit.len();
    let digits: Vec<Vec<usize>> = orbit.iter().map(|&m| space.digits(m)).collect();
    let mut total = ZERO;
    for (r, dr) in digits.iter().enumerate() {
        for (rp, drp) in digits.iter().enumerate() {
            let angle = 2.0 * PI * (x.k() as f64) * (rp as f64 - r as f64) / card as f64;
            let mut prod = C64::from_polar(1.0, angle);
            for j in 0..space.t() {
                prod *= sigma[(dr[j], drp[j])];
            }
            total += prod;
        }
    }
    Ok(total.re / card as f64)
}

/// The full `t = 2` outcome table, indexed by `a·d + b`.
pub fn pair_table(sigma: &DensityMatrix) -> Vec<f64> {
    let d = sigma.dim();
    let m = sigma.matrix();
    let diag = m.real_diagonal();
    let mut w = vec![0.0; d * d];
    for a in 0..d {
        w[a * d + a] = diag[a] * diag[a];
        for b in a + 1..d {
            let base = diag[a] * diag[b];
            let off = m[(a, b)].norm_sqr();
            w[a * d + b] = base + off;
            w[b * d + a] = base - off;
        }
    }
    w
}

/// Draw one outcome for the whole register.
pub fn sample_outcome_global<R: Rng + ?Sized>(state: &RotatedState, rng: &mut R) -> Result<ReplicaOutcome> {
    sample_outcome_global_via(state, SamplingPath::Auto, rng)
}

pub fn sample_outcome_global_via<R: Rng + ?Sized>(
    state: &RotatedState,
    path: SamplingPath,
    rng: &mut R,
) -> Result<ReplicaOutcome> {
    let space = state.space();
    let closed = match path {
        SamplingPath::Auto => state.t == 2,
        SamplingPath::ClosedForm => {
            if state.t != 2 {
                return arg("the closed-form table exists only for t = 2");
            }
            true
        }
        SamplingPath::Spectral => false,
    };
    if closed {
        let table = ProbabilityTable::indexed(pair_table(state.sigma()))?;
        let x = *sample_discrete(&table, rng)?;
        return space.outcome(x);
    }
    let labels = state.prepared.draw_labels(state.t, rng);
    let vectors = state.rotated_vectors(&labels);
    let mut joint = product_vector(&vectors);
    apply_r(&space, &mut joint);
    let x = sample_amplitudes(&joint, rng);
    space.outcome(x)
}

fn product_vector(parts: &[Vec<C64>]) -> Vec<C64> {
    let mut out = vec![C64::new(1.0, 0.0)];
    for p in parts {
        let mut next = Vec::with_capacity(out.len() * p.len());
        for a in &out {
            next.extend(p.iter().map(|b| a * b));
        }
        out = next;
    }
    out
}

fn sample_amplitudes<R: Rng + ?Sized>(amps: &[C64], rng: &mut R) -> usize {
    let weights: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let total = weights.iter().sum();
    sample_index(&weights, total, rng)
}

/// Check that `blocks` partitions `0..n`.
pub fn validate_partition(n: usize, blocks: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; n];
    for block in blocks {
        if block.is_empty() {
            return arg("partition contains an empty block");
        }
        for &q in block {
            if q >= n {
                return arg(format!("qubit {q} outside an {n}-qubit register"));
            }
            if seen[q] {
                return arg(format!("qubit {q} appears in two blocks"));
            }
            seen[q] = true;
        }
    }
    if let Some(q) = seen.iter().position(|s| !s) {
        return arg(format!("qubit {q} is not covered by the partition"));
    }
    Ok(())
}

/// The joint index uses `n·t` bits, replica-major: replica `r`, qubit `q`
/// sits at bit `(t−1−r)·n + (n−1−q)`. For a block of `m` qubits the local
/// string `x₁…x_t` (each `xᵣ` an `m`-bit word, first block qubit most
/// significant) is scattered onto those positions.
struct BlockLayout {
    space: ReplicaSpace,
    offsets: Vec<usize>,
    mask: usize,
}

impl BlockLayout {
    fn new(n: usize, t: usize, block: &[usize]) -> Result<Self> {
        let m = block.len();
        let space = ReplicaSpace::new(1 << m, t)?;
        let mut positions = Vec::with_capacity(m * t);
        for r in 0..t {
            for &q in block {
                positions.push((t - 1 - r) * n + (n - 1 - q));
            }
        }
        // positions[0] is the most significant bit of the block string
        let bits = positions.len();
        let offsets = (0..space.size())
            .map(|s| {
                positions
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (s >> (bits - 1 - i)) & 1 == 1)
                    .map(|(_, &p)| 1usize << p)
                    .sum()
            })
            .collect();
        let mask = positions.iter().map(|&p| 1usize << p).sum();
        Ok(BlockLayout { space, offsets, mask })
    }

    fn apply(&self, joint: &mut [C64], scratch: &mut Vec<C64>, buf: &mut Vec<C64>) {
        for base in 0..joint.len() {
            if base & self.mask != 0 {
                continue;
            }
            buf.clear();
            buf.extend(self.offsets.iter().map(|&o| joint[base + o]));
            apply_r_gathered(&self.space, buf, scratch);
            for (&o, v) in self.offsets.iter().zip(buf.iter()) {
                joint[base + o] = *v;
            }
        }
    }

    fn decode(&self, index: usize) -> Result<ReplicaOutcome> {
        let s = self
            .offsets
            .iter()
            .position(|&o| index & self.mask == o)
            .expect("offsets cover every bit pattern");
        self.space.outcome(s)
    }
}

/// Draw one outcome per block of `partition`, measuring the product basis
/// `⊗_blocks Ψ` on `t` replicas.
pub fn sample_outcome_local<R: Rng + ?Sized>(
    state: &RotatedState,
    partition: &[Vec<usize>],
    rng: &mut R,
) -> Result<Vec<ReplicaOutcome>> {
    let n = state.qubits();
    let t = state.t;
    validate_partition(n, partition)?;
    if partition.len() == 1 && partition[0].iter().enumerate().all(|(i, &q)| i == q) {
        let labels = state.prepared.draw_labels(t, rng);
        let mut joint = product_vector(&state.rotated_vectors(&labels));
        apply_r(&state.space(), &mut joint);
        return Ok(vec![state.space().outcome(sample_amplitudes(&joint, rng))?]);
    }
    let layouts = partition
        .iter()
        .map(|b| BlockLayout::new(n, t, b))
        .collect::<Result<Vec<_>>>()?;
    let labels = state.prepared.draw_labels(t, rng);
    let mut joint = product_vector(&state.rotated_vectors(&labels));
    let (mut scratch, mut buf) = (Vec::new(), Vec::new());
    for layout in &layouts {
        layout.apply(&mut joint, &mut scratch, &mut buf);
    }
    let index = sample_amplitudes(&joint, rng);
    layouts.iter().map(|l| l.decode(index)).collect()
}

/// Exact joint distribution of [`sample_outcome_local`], indexed like the
/// joint register. Exponential in `n·t`; meant for checks.
pub fn local_outcome_distribution(state: &RotatedState, partition: &[Vec<usize>]) -> Result<Vec<f64>> {
    let n = state.qubits();
    let t = state.t;
    validate_partition(n, partition)?;
    let layouts = partition
        .iter()
        .map(|b| BlockLayout::new(n, t, b))
        .collect::<Result<Vec<_>>>()?;
    let mut dist = vec![0.0; 1 << (n * t)];
    let rank = state.prepared.rank();
    let (mut scratch, mut buf) = (Vec::new(), Vec::new());
    let mut labels = vec![0usize; t];
    loop {
        let weight: f64 = labels.iter().map(|&k| state.prepared.weights[k]).product();
        let mut joint = product_vector(&state.rotated_vectors(&labels));
        for layout in &layouts {
            layout.apply(&mut joint, &mut scratch, &mut buf);
        }
        for (p, a) in dist.iter_mut().zip(&joint) {
            *p += weight * a.norm_sqr();
        }
        // odometer over label tuples
        let mut pos = t;
        loop {
            if pos == 0 {
                return Ok(dist);
            }
            pos -= 1;
            labels[pos] += 1;
            if labels[pos] < rank {
                break;
            }
            labels[pos] = 0;
        }
    }
}

/// Per-block outcomes for a joint index, in partition order.
pub fn decode_local(n: usize, t: usize, partition: &[Vec<usize>], index: usize) -> Result<Vec<ReplicaOutcome>> {
    validate_partition(n, partition)?;
    partition
        .iter()
        .map(|b| BlockLayout::new(n, t, b)?.decode(index))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_global_clifford, sample_local_clifford};
    use crate::replica::{build_r, enumerate_classes, f_product, f_value, psi_state};
    use crate::rng::RngStream;
    use crate::tensor::{kron, ComplexMatrix};

    fn prepared(n: usize, seed: u64) -> PreparedState {
        let rho = DensityMatrix::random_mixed(1 << n, &mut RngStream::new(seed).rng()).unwrap();
        PreparedState::new(rho).unwrap()
    }

    /// ⟨Ψ|σ^{⊗t}|Ψ⟩ with σ^{⊗t} built densely.
    fn dense_probability(sigma: &DensityMatrix, t: usize, psi: &[C64]) -> f64 {
        let mut big = ComplexMatrix::identity(1);
        for _ in 0..t {
            big = kron(&big, sigma.matrix()).unwrap();
        }
        big.expectation(psi).unwrap().re
    }

    #[test]
    fn closed_form_matches_dense_expansion() {
        let mut rng = RngStream::new(3).rng();
        for trial in 0..20 {
            let n = 1 + trial % 3;
            let p = prepared(n, 100 + trial as u64);
            let v = sample_local_clifford(n, &mut rng).unwrap();
            let st = p.rotate(&v, 2).unwrap();
            let table = pair_table(st.sigma());
            let d = 1 << n;
            for class in enumerate_classes(d, 2).unwrap() {
                for k in 0..class.cardinality() {
                    let x = class.members()[k];
                    let dense = dense_probability(st.sigma(), 2, &psi_state(&class, k).unwrap());
                    assert!((table[x] - dense).abs() < 1e-10);
                    let general = outcome_probability(&st, &st.space().outcome(x).unwrap()).unwrap();
                    assert!((general - dense).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn general_formula_matches_dense_for_three_replicas() {
        let p = prepared(2, 7);
        let v = sample_global_clifford(2, &mut RngStream::new(1).rng()).unwrap();
        let st = p.rotate(&v, 3).unwrap();
        let mut total = 0.0;
        for class in enumerate_classes(4, 3).unwrap() {
            for k in 0..class.cardinality() {
                let x = st.space().outcome(class.members()[k]).unwrap();
                let got = outcome_probability(&st, &x).unwrap();
                let want = dense_probability(st.sigma(), 3, &psi_state(&class, k).unwrap());
                assert!((got - want).abs() < 1e-10);
                assert!(got >= -1e-12);
                total += got;
            }
        }
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_form_examples() {
        let zero = DensityMatrix::pure(&[C64::new(1.0, 0.0), ZERO]).unwrap();
        let p = PreparedState::new(zero).unwrap();
        let id = UnitarySample::identity(1);
        let st = p.rotate(&id, 2).unwrap();
        assert_eq!(pair_table(st.sigma()), vec![1.0, 0.0, 0.0, 0.0]);

        let mixed = PreparedState::new(DensityMatrix::maximally_mixed(2).unwrap()).unwrap();
        let st = mixed.rotate(&id, 2).unwrap();
        for w in pair_table(st.sigma()) {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    #[test]
    fn both_global_paths_agree() {
        let p = prepared(1, 11);
        let v = sample_local_clifford(1, &mut RngStream::new(2).rng()).unwrap();
        let st = p.rotate(&v, 2).unwrap();
        let draws = 100_000;
        let mut a = vec![0.0; 4];
        let mut b = vec![0.0; 4];
        let mut rng = RngStream::new(5).rng();
        for _ in 0..draws {
            a[sample_outcome_global_via(&st, SamplingPath::ClosedForm, &mut rng)
                .unwrap()
                .string()] += 1.0;
            b[sample_outcome_global_via(&st, SamplingPath::Spectral, &mut rng)
                .unwrap()
                .string()] += 1.0;
        }
        a.iter_mut().chain(b.iter_mut()).for_each(|x| *x /= draws as f64);
        assert!(tv(&a, &b) < 0.01);
    }

    #[test]
    fn sampled_frequencies_match_exact_probabilities() {
        for (n, t) in [(1, 2), (2, 2), (1, 3), (2, 3)] {
            let p = prepared(n, 20 + (n * t) as u64);
            let v = sample_local_clifford(n, &mut RngStream::new(9).rng()).unwrap();
            let st = p.rotate(&v, t).unwrap();
            let space = st.space();
            let draws = 100_000;
            let mut counts = vec![0usize; space.size()];
            let mut rng = RngStream::new(n as u64 * 10 + t as u64).rng();
            for _ in 0..draws {
                counts[sample_outcome_global(&st, &mut rng).unwrap().string()] += 1;
            }
            for (x, &c) in counts.iter().enumerate() {
                let q = outcome_probability(&st, &space.outcome(x).unwrap()).unwrap();
                let sd = (draws as f64 * q * (1.0 - q)).sqrt().max(1.0);
                assert!((c as f64 - draws as f64 * q).abs() < 4.0 * sd, "n={n} t={t} x={x}");
            }
        }
    }

    #[test]
    fn pure_states_always_land_in_the_symmetric_sector() {
        let mut rng = RngStream::new(8).rng();
        let psi = crate::states::ghz_vector(3).unwrap();
        let p = PreparedState::new(DensityMatrix::pure(&psi).unwrap()).unwrap();
        assert!(p.is_pure());
        for _ in 0..2000 {
            let v = sample_local_clifford(3, &mut rng).unwrap();
            let st = p.rotate(&v, 2).unwrap();
            assert_eq!(f_value(&sample_outcome_global(&st, &mut rng).unwrap()), 1.0);
        }
    }

    #[test]
    fn whole_register_block_matches_global() {
        let p = prepared(2, 31);
        let v = sample_local_clifford(2, &mut RngStream::new(4).rng()).unwrap();
        let st = p.rotate(&v, 2).unwrap();
        let local = local_outcome_distribution(&st, &[vec![0, 1]]).unwrap();
        let global = pair_table(st.sigma());
        assert!(tv(&local, &global) < 1e-12);
    }

    #[test]
    fn block_transform_matches_dense_kron_of_r() {
        // blocks {0},{1} on two qubits: the transform is R ⊗ R on the
        // interleaved register (a¹ b¹)(a² b²); check against a dense build
        let p = prepared(2, 41);
        let v = sample_local_clifford(2, &mut RngStream::new(6).rng()).unwrap();
        let st = p.rotate(&v, 2).unwrap();
        let dist = local_outcome_distribution(&st, &[vec![0], vec![1]]).unwrap();

        let r = build_r(2, 2).unwrap();
        let rr = kron(&r, &r).unwrap();
        // permutation from (q0 r0, q0 r1, q1 r0, q1 r1) to replica-major (r0 q0, r0 q1, r1 q0, r1 q1)
        let perm = |i: usize| {
            let bits = [(i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1];
            (bits[0] << 3) | (bits[2] << 2) | (bits[1] << 1) | bits[3]
        };
        let sig2 = kron(st.sigma().matrix(), st.sigma().matrix()).unwrap();
        let permuted = ComplexMatrix::from_fn(16, 16, |a, b| sig2[(perm(a), perm(b))]);
        let out = permuted.conjugate_by(&rr).unwrap();
        for i in 0..16 {
            assert!((out[(i, i)].re - dist[perm(i)]).abs() < 1e-10);
        }
    }

    #[test]
    fn product_states_factorize_over_singletons() {
        let mut rng = RngStream::new(12).rng();
        let a = DensityMatrix::random_mixed(2, &mut rng).unwrap();
        let b = DensityMatrix::random_mixed(2, &mut rng).unwrap();
        let ab = DensityMatrix::new(kron(a.matrix(), b.matrix()).unwrap()).unwrap();
        let p = PreparedState::new(ab).unwrap();
        let id = UnitarySample::identity(2);
        let st = p.rotate(&id, 2).unwrap();
        let joint = local_outcome_distribution(&st, &[vec![0], vec![1]]).unwrap();
        let pa = pair_table(&a);
        let pb = pair_table(&b);
        let blocks = [vec![0], vec![1]];
        for (i, &q) in joint.iter().enumerate() {
            let xs = decode_local(2, 2, &blocks, i).unwrap();
            assert!((q - pa[xs[0].string()] * pb[xs[1].string()]).abs() < 1e-12);
        }
    }

    #[test]
    fn product_of_f_values_estimates_purity() {
        let p = prepared(2, 51);
        let purity = p.rho().purity();
        let id = UnitarySample::identity(2);
        let st = p.rotate(&id, 2).unwrap();
        let blocks = [vec![0], vec![1]];
        // exact mean from the joint table
        let dist = local_outcome_distribution(&st, &blocks).unwrap();
        let exact: f64 = dist
            .iter()
            .enumerate()
            .map(|(i, q)| q * f_product(&decode_local(2, 2, &blocks, i).unwrap()))
            .sum();
        assert!((exact - purity).abs() < 1e-10);

        let shots = 100_000;
        let mut rng = RngStream::new(77).rng();
        let vals: Vec<f64> = (0..shots)
            .map(|_| f_product(&sample_outcome_local(&st, &blocks, &mut rng).unwrap()))
            .collect();
        let mean = vals.iter().sum::<f64>() / shots as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (shots - 1) as f64;
        assert!((mean - purity).abs() < 3.0 * (var / shots as f64).sqrt() + 1e-3);
    }

    #[test]
    fn partitions_are_validated() {
        assert!(validate_partition(3, &[vec![0, 1], vec![2]]).is_ok());
        assert!(validate_partition(3, &[vec![0, 1]]).is_err());
        assert!(validate_partition(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(validate_partition(3, &[vec![0, 1, 2], vec![]]).is_err());
        assert!(validate_partition(2, &[vec![0, 5]]).is_err());
    }

    #[test]
    fn mismatched_register_is_rejected() {
        let p = prepared(2, 1);
        let v = UnitarySample::identity(3);
        assert!(p.rotate(&v, 2).is_err());
    }
}
