//! Random unitary ensembles and the matching shadow inverse channels.
//!
//! * local Clifford: `V = ⊗ᵢ Uᵢ` with each `Uᵢ` uniform over the 24
//!   single-qubit Cliffords; `M⁻¹(V†|b⟩⟨b|V) = ⊗ᵢ (3Uᵢ†|bᵢ⟩⟨bᵢ|Uᵢ − I)`.
//! * global Clifford: `V` uniform over the `n`-qubit Clifford group;
//!   `M⁻¹(V†|b⟩⟨b|V) = (2ⁿ + 1)V†|b⟩⟨b|V − I`.
//! * identity: `V = I`, no inverse channel.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{arg, contract, Error, Result};
use crate::states::{DensityMatrix, Pauli};
use crate::tensor::{
    apply_1q, c, conjugate_local, kron, mat2_dagger, mat2_mul, ComplexMatrix, Mat2, C64, ONE, TOL, ZERO,
};

/// Largest register for dense global Clifford sampling.
pub const MAX_GLOBAL_CLIFFORD_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ensemble {
    LocalClifford,
    GlobalClifford,
    Identity,
}

impl Ensemble {
    pub fn as_str(self) -> &'static str {
        match self {
            Ensemble::LocalClifford => "local_clifford",
            Ensemble::GlobalClifford => "global_clifford",
            Ensemble::Identity => "identity",
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ensemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local_clifford" => Ok(Ensemble::LocalClifford),
            "global_clifford" => Ok(Ensemble::GlobalClifford),
            "identity" => Ok(Ensemble::Identity),
            other => arg(format!("unknown ensemble {other:?}")),
        }
    }
}

/// Rotation by `angle` about the (unnormalized) axis, `exp(−iθ n̂·σ/2)`.
fn rotation(axis: [f64; 3], angle: f64) -> Mat2 {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let (nx, ny, nz) = (axis[0] / norm, axis[1] / norm, axis[2] / norm);
    let (co, si) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    // cos I − i sin (nx X + ny Y + nz Z)
    [
        [c(co, -si * nz), c(-si * ny, -si * nx)],
        [c(si * ny, -si * nx), c(co, si * nz)],
    ]
}

fn build_cliffords() -> Vec<Mat2> {
    use std::f64::consts::PI;
    let mut out = vec![[[ONE, ZERO], [ZERO, ONE]]];
    // π about x, y, z
    for axis in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        out.push(rotation(axis, PI));
    }
    // ±π/2 about x, y, z
    for axis in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        out.push(rotation(axis, PI / 2.0));
        out.push(rotation(axis, -PI / 2.0));
    }
    // π about the six face diagonals
    for axis in [
        [1.0, 1.0, 0.0],
        [1.0, -1.0, 0.0],
        [0.0, 1.0, 1.0],
        [0.0, 1.0, -1.0],
        [1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0],
    ] {
        out.push(rotation(axis, PI));
    }
    // ±2π/3 about the four body diagonals
    for axis in [[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0]] {
        out.push(rotation(axis, 2.0 * PI / 3.0));
        out.push(rotation(axis, -2.0 * PI / 3.0));
    }
    out
}

/// The 24 single-qubit Cliffords (mod phase) in canonical order: identity;
/// π rotations about x, y, z; ±π/2 about x, y, z; π about the face
/// diagonals xy, x−y, yz, y−z, xz, x−z; ±2π/3 about the body diagonals
/// (1,1,1), (1,1,−1), (1,−1,1), (−1,1,1).
pub fn enumerate_single_qubit_cliffords() -> &'static [Mat2] {
    static TABLE: OnceLock<Vec<Mat2>> = OnceLock::new();
    TABLE.get_or_init(build_cliffords)
}

/// Whether `a = e^{iφ} b` for some phase.
pub fn equal_up_to_phase(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    // pick the largest entry of b to fix the phase
    let mut best = (0, 0);
    for r in 0..2 {
        for col in 0..2 {
            if b[r][col].norm() > b[best.0][best.1].norm() {
                best = (r, col);
            }
        }
    }
    let bb = b[best.0][best.1];
    if bb.norm() < tol {
        return false;
    }
    let phase = a[best.0][best.1] / bb;
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    (0..2).all(|r| (0..2).all(|col| (a[r][col] - phase * b[r][col]).norm() < tol))
}

/// Index of `u` in the canonical table, up to phase.
pub fn clifford_index(u: &Mat2) -> Option<usize> {
    enumerate_single_qubit_cliffords()
        .iter()
        .position(|w| equal_up_to_phase(u, w, 1e-9))
}

/// `⟨b|U P U†|b⟩` for every (Clifford, Pauli, bit): each is 0 or ±1.
fn conjugation_table() -> &'static [[[i8; 2]; 4]] {
    static TABLE: OnceLock<Vec<[[i8; 2]; 4]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        enumerate_single_qubit_cliffords()
            .iter()
            .map(|u| {
                let mut row = [[0i8; 2]; 4];
                for (pi, p) in Pauli::ALL.iter().enumerate() {
                    let m = mat2_mul(&mat2_mul(u, &p.matrix()), &mat2_dagger(u));
                    for b in 0..2 {
                        row[pi][b] = m[b][b].re.round() as i8;
                    }
                }
                row
            })
            .collect()
    })
}

/// `⟨b|U P U†|b⟩` for the Clifford with table index `u`.
pub fn rotated_pauli_diagonal(u: usize, p: Pauli, b: usize) -> f64 {
    let pi = Pauli::ALL.iter().position(|&q| q == p).expect("pauli");
    conjugation_table()[u][pi][b] as f64
}

#[derive(Clone, Debug, PartialEq)]
pub enum UnitaryFactors {
    /// Indices into [`enumerate_single_qubit_cliffords`], one per qubit.
    Local(Vec<u8>),
    Global(ComplexMatrix),
    Identity,
}

/// A sampled random unitary `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitarySample {
    ensemble: Ensemble,
    n: usize,
    factors: UnitaryFactors,
}

impl UnitarySample {
    pub fn identity(n: usize) -> Self {
        UnitarySample {
            ensemble: Ensemble::Identity,
            n,
            factors: UnitaryFactors::Identity,
        }
    }

    /// A local Clifford from explicit table indices.
    pub fn local_from_indices(indices: Vec<u8>) -> Result<Self> {
        if indices.iter().any(|&i| i as usize >= 24) {
            return arg("single-qubit Clifford index out of range");
        }
        Ok(UnitarySample {
            ensemble: Ensemble::LocalClifford,
            n: indices.len(),
            factors: UnitaryFactors::Local(indices),
        })
    }

    /// A global sample wrapping an arbitrary dense unitary.
    pub fn global_from_matrix(v: ComplexMatrix) -> Result<Self> {
        if !v.is_square() || !v.rows().is_power_of_two() || !v.is_unitary(TOL) {
            return arg("global sample needs a 2ⁿ×2ⁿ unitary");
        }
        let n = v.rows().trailing_zeros() as usize;
        Ok(UnitarySample {
            ensemble: Ensemble::GlobalClifford,
            n,
            factors: UnitaryFactors::Global(v),
        })
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn factors(&self) -> &UnitaryFactors {
        &self.factors
    }

    pub fn local_indices(&self) -> Option<&[u8]> {
        match &self.factors {
            UnitaryFactors::Local(v) => Some(v),
            _ => None,
        }
    }

    /// The `i`-th single-qubit factor of a local sample.
    pub fn local_factor(&self, i: usize) -> Option<&'static Mat2> {
        self.local_indices()
            .map(|idx| &enumerate_single_qubit_cliffords()[idx[i] as usize])
    }

    pub fn dense(&self) -> Result<ComplexMatrix> {
        crate::tensor::check_dense_dim("dense unitary", 1usize << self.n)?;
        Ok(match &self.factors {
            UnitaryFactors::Identity => ComplexMatrix::identity(1 << self.n),
            UnitaryFactors::Global(v) => v.clone(),
            UnitaryFactors::Local(idx) => {
                let table = enumerate_single_qubit_cliffords();
                let mut m = ComplexMatrix::identity(1);
                for &i in idx {
                    m = kron(&m, &ComplexMatrix::from_mat2(&table[i as usize]))?;
                }
                m
            }
        })
    }

    /// `ψ ↦ Vψ` in place.
    pub fn apply(&self, psi: &mut [C64]) {
        match &self.factors {
            UnitaryFactors::Identity => {}
            UnitaryFactors::Local(idx) => {
                let table = enumerate_single_qubit_cliffords();
                for (q, &i) in idx.iter().enumerate() {
                    apply_1q(psi, self.n, q, &table[i as usize]);
                }
            }
            UnitaryFactors::Global(v) => {
                let out = v.mul_vec(psi).expect("dimension checked by caller");
                psi.copy_from_slice(&out);
            }
        }
    }

    /// `σ = VρV†`.
    pub fn rotate_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != 1 << self.n {
            return arg("state and unitary act on different registers");
        }
        Ok(DensityMatrix::from_trusted(match &self.factors {
            UnitaryFactors::Identity => rho.matrix().clone(),
            UnitaryFactors::Local(idx) => {
                let table = enumerate_single_qubit_cliffords();
                let factors: Vec<Mat2> = idx.iter().map(|&i| table[i as usize]).collect();
                conjugate_local(rho.matrix(), &factors)
            }
            UnitaryFactors::Global(v) => rho.matrix().conjugate_by(v)?,
        }))
    }

    /// `V†|b⟩`.
    pub fn adjoint_basis_vector(&self, b: usize) -> Vec<C64> {
        let dim = 1usize << self.n;
        match &self.factors {
            UnitaryFactors::Identity => {
                let mut v = vec![ZERO; dim];
                v[b] = ONE;
                v
            }
            // row b of V, conjugated
            UnitaryFactors::Global(v) => v.row(b).iter().map(|z| z.conj()).collect(),
            UnitaryFactors::Local(idx) => {
                let table = enumerate_single_qubit_cliffords();
                let mut v = vec![ONE];
                for (q, &i) in idx.iter().enumerate() {
                    let u = &table[i as usize];
                    let bit = (b >> (self.n - 1 - q)) & 1;
                    let col = [u[bit][0].conj(), u[bit][1].conj()];
                    v = v.iter().flat_map(|a| [a * col[0], a * col[1]]).collect();
                }
                v
            }
        }
    }
}

pub fn sample_local_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitarySample> {
    if n == 0 {
        return arg("need at least one qubit");
    }
    let idx = (0..n).map(|_| rng.random_range(0..24u8)).collect();
    UnitarySample::local_from_indices(idx)
}

/// A uniformly random `n`-qubit Clifford, densified.
///
/// The symplectic part is drawn pair by pair: `v` uniform over the non-zero
/// vectors of the current subspace, `w` uniform over those with
/// `⟨v, w⟩ = 1`, after which the space shrinks to the symplectic complement
/// of `span(v, w)`. Sign bits are uniform. The dense unitary is fixed by the
/// images `X'ᵢ = ±P(vᵢ)`, `Z'ᵢ = ±P(wᵢ)`: its first column is the joint
/// `+1` eigenvector of the `Z'ᵢ` and `V|x⟩ = ∏ X'ᵢ^{xᵢ} V|0⟩`.
pub fn sample_global_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitarySample> {
    if n == 0 {
        return arg("need at least one qubit");
    }
    if n > MAX_GLOBAL_CLIFFORD_QUBITS {
        return Err(Error::Size {
            what: "global Clifford qubits",
            requested: n as u128,
            cap: MAX_GLOBAL_CLIFFORD_QUBITS as u128,
        });
    }
    let tableau = SymplecticTableau::random(n, rng);
    let v = tableau.densify()?;
    Ok(UnitarySample {
        ensemble: Ensemble::GlobalClifford,
        n,
        factors: UnitaryFactors::Global(v),
    })
}

pub fn sample_unitary<R: Rng + ?Sized>(ensemble: Ensemble, n: usize, rng: &mut R) -> Result<UnitarySample> {
    match ensemble {
        Ensemble::LocalClifford => sample_local_clifford(n, rng),
        Ensemble::GlobalClifford => sample_global_clifford(n, rng),
        Ensemble::Identity => Ok(UnitarySample::identity(n)),
    }
}

/// A Hermitian Pauli `±i^{x·z} X^x Z^z`; bit `n−1−q` belongs to qubit `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SignedPauli {
    x: u64,
    z: u64,
    negative: bool,
}

impl SignedPauli {
    fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; psi.len()];
        let y_count = (self.x & self.z).count_ones();
        let mut phase = match y_count % 4 {
            0 => c(1.0, 0.0),
            1 => c(0.0, 1.0),
            2 => c(-1.0, 0.0),
            _ => c(0.0, -1.0),
        };
        if self.negative {
            phase = -phase;
        }
        for (j, a) in psi.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            let s = if (self.z & j as u64).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            out[j ^ self.x as usize] = a * phase * s;
        }
        out
    }
}

fn symplectic(a: (u64, u64), b: (u64, u64)) -> bool {
    ((a.0 & b.1).count_ones() + (a.1 & b.0).count_ones()) % 2 == 1
}

struct SymplecticTableau {
    n: usize,
    x_images: Vec<SignedPauli>,
    z_images: Vec<SignedPauli>,
}

impl SymplecticTableau {
    fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut basis: Vec<(u64, u64)> = (0..n).flat_map(|q| [(1u64 << q, 0), (0, 1u64 << q)]).collect();
        let combine = |basis: &[(u64, u64)], rng: &mut R| {
            let mut v = (0u64, 0u64);
            for b in basis {
                if rng.random::<bool>() {
                    v = (v.0 ^ b.0, v.1 ^ b.1);
                }
            }
            v
        };
        let mut x_images = Vec::with_capacity(n);
        let mut z_images = Vec::with_capacity(n);
        for _ in 0..n {
            let v = loop {
                let v = combine(&basis, rng);
                if v != (0, 0) {
                    break v;
                }
            };
            let w = loop {
                let w = combine(&basis, rng);
                if symplectic(v, w) {
                    break w;
                }
            };
            x_images.push(SignedPauli {
                x: v.0,
                z: v.1,
                negative: rng.random(),
            });
            z_images.push(SignedPauli {
                x: w.0,
                z: w.1,
                negative: rng.random(),
            });
            let projected: Vec<(u64, u64)> = basis
                .iter()
                .map(|&u| {
                    let mut p = u;
                    if symplectic(u, w) {
                        p = (p.0 ^ v.0, p.1 ^ v.1);
                    }
                    if symplectic(u, v) {
                        p = (p.0 ^ w.0, p.1 ^ w.1);
                    }
                    p
                })
                .collect();
            basis = independent_subset(projected);
        }
        SymplecticTableau { n, x_images, z_images }
    }

    fn densify(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.n;
        let project = |mut psi: Vec<C64>| {
            for z in &self.z_images {
                let zp = z.apply(&psi);
                for (a, b) in psi.iter_mut().zip(&zp) {
                    *a = (*a + b) * 0.5;
                }
            }
            psi
        };
        let threshold = 0.5 / dim as f64;
        let mut ground = None;
        for k in 0..dim {
            let mut e = vec![ZERO; dim];
            e[k] = ONE;
            let p = project(e);
            let nrm = crate::tensor::norm_sqr(&p);
            if nrm > threshold {
                let s = 1.0 / nrm.sqrt();
                ground = Some(p.into_iter().map(|z| z * s).collect::<Vec<_>>());
                break;
            }
        }
        let ground = match ground {
            Some(g) => g,
            None => return contract("stabilizer projection vanished"),
        };
        // columns[x] = X'^{x} |ground⟩, built from the highest set bit
        let mut columns: Vec<Vec<C64>> = Vec::with_capacity(dim);
        columns.push(ground);
        for x in 1..dim {
            let high = usize::BITS - 1 - x.leading_zeros();
            let qubit = self.n - 1 - high as usize;
            let prev = x ^ (1 << high);
            let col = self.x_images[qubit].apply(&columns[prev]);
            columns.push(col);
        }
        Ok(ComplexMatrix::from_fn(dim, dim, |r, col| columns[col][r]))
    }
}

/// A basis of the span of `vectors`, chosen from among them.
fn independent_subset(vectors: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    let mut pivots: Vec<(u128, (u64, u64))> = Vec::new();
    let mut out = Vec::new();
    for v in vectors {
        let mut key = ((v.0 as u128) << 64) | v.1 as u128;
        for (p, _) in &pivots {
            let top = 127 - p.leading_zeros();
            if (key >> top) & 1 == 1 {
                key ^= p;
            }
        }
        if key != 0 {
            // keep pivots reduced so each has a unique leading bit
            let top = 127 - key.leading_zeros();
            for (p, _) in pivots.iter_mut() {
                if (*p >> top) & 1 == 1 {
                    *p ^= key;
                }
            }
            pivots.push((key, v));
            pivots.sort_by_key(|&(key, _)| std::cmp::Reverse(key));
            out.push(v);
        }
    }
    out
}

/// `M⁻¹(V†|b⟩⟨b|V)` as a dense matrix.
pub fn inverse_channel_snapshot(sample: &UnitarySample, b: usize) -> Result<ComplexMatrix> {
    let n = sample.n;
    if b >= 1 << n {
        return arg(format!("basis string {b} outside an {n}-qubit register"));
    }
    match &sample.factors {
        UnitaryFactors::Identity => contract("the identity ensemble has no inverse channel"),
        UnitaryFactors::Local(_) => {
            let mut m = ComplexMatrix::identity(1);
            for q in 0..n {
                let factor = local_snapshot_factor(sample.local_factor(q).unwrap(), (b >> (n - 1 - q)) & 1);
                m = kron(&m, &ComplexMatrix::from_mat2(&factor))?;
            }
            Ok(m)
        }
        UnitaryFactors::Global(_) => {
            let dim = 1usize << n;
            let u = sample.adjoint_basis_vector(b);
            let mut m = ComplexMatrix::outer(&u, &u).scale_real(dim as f64 + 1.0);
            for i in 0..dim {
                m[(i, i)] -= ONE;
            }
            Ok(m)
        }
    }
}

/// `3U†|b⟩⟨b|U − I`.
pub fn local_snapshot_factor(u: &Mat2, bit: usize) -> Mat2 {
    let col = [u[bit][0].conj(), u[bit][1].conj()];
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            out[r][k] = col[r] * col[k].conj() * 3.0;
        }
        out[r][r] -= ONE;
    }
    out
}
