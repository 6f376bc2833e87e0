//! Benchmark states and observables.
//!
//! User-facing qubit labels are 1-based (`Z1*Z2`); everything stored here is
//! 0-based.

use std::fmt;

use rand::Rng;

use crate::error::{arg, contract, Error, Result};
use crate::tensor::{c, check_dense_dim, hermitian_eig, kron, ComplexMatrix, Mat2, C64, I, ONE, TOL, ZERO};

/// A valid density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates the matrix; fails with a contract error if it is not a state.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() < 2 {
            return arg("a density matrix must be square with dimension at least 2");
        }
        check_dense_dim("density matrix", matrix.rows())?;
        if !matrix.is_hermitian(TOL) {
            return contract("density matrix is not Hermitian");
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > TOL {
            return contract(format!("density matrix trace is {tr}, expected 1"));
        }
        let eig = hermitian_eig(&matrix)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -TOL {
            return contract(format!("density matrix has negative eigenvalue {min:e}"));
        }
        Ok(DensityMatrix { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = crate::tensor::norm_sqr(psi).sqrt();
        if norm == 0.0 {
            return arg("cannot build a state from the zero vector");
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        check_dense_dim("density matrix", v.len())?;
        Ok(DensityMatrix {
            matrix: ComplexMatrix::outer(&v, &v),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim < 2 {
            return arg("dimension must be at least 2");
        }
        check_dense_dim("density matrix", dim)?;
        Ok(DensityMatrix {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        })
    }

    /// A random full-rank mixed state `GG†/tr(GG†)` with complex Gaussian-like `G`.
    pub fn random_mixed<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        Self::random_with_rank(dim, dim, rng)
    }

    pub fn random_with_rank<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<Self> {
        if dim < 2 || rank == 0 {
            return arg("need dim >= 2 and rank >= 1");
        }
        check_dense_dim("density matrix", dim)?;
        let mut gauss = || {
            // Box-Muller
            let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            c(
                r * (2.0 * std::f64::consts::PI * u2).cos(),
                r * (2.0 * std::f64::consts::PI * u2).sin(),
            )
        };
        let g = ComplexMatrix::from_fn(dim, rank, |_, _| gauss());
        let m = g.matmul(&g.dagger())?;
        let tr = m.trace().re;
        let mut m = m.scale_real(1.0 / tr);
        // scrub rounding asymmetry
        m = (&m + &m.dagger()).scale_real(0.5);
        Ok(DensityMatrix { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of qubits if the dimension is a power of two.
    pub fn qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).expect("square").re
    }

    /// `U ρ U†`, trusted to stay a state.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        DensityMatrix { matrix }
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_vector(n: usize) -> Result<Vec<C64>> {
    if n == 0 {
        return arg("GHZ state needs at least one qubit");
    }
    if n >= usize::BITS as usize {
        return Err(Error::Size {
            what: "GHZ qubits",
            requested: n as u128,
            cap: crate::tensor::MAX_VECTOR_LEN.trailing_zeros() as u128,
        });
    }
    crate::tensor::check_vector_len("GHZ vector", 1u128 << n)?;
    let dim = 1usize << n;
    let mut v = vec![ZERO; dim];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    v[0] = c(s, 0.0);
    v[dim - 1] = c(s, 0.0);
    Ok(v)
}

pub fn ghz_state(n: usize) -> Result<DensityMatrix> {
    let v = ghz_vector(n)?;
    check_dense_dim("GHZ density matrix", v.len())?;
    DensityMatrix::pure(&v)
}

/// `(1 − p) ρ + p I/d`.
pub fn depolarize(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return arg(format!("depolarizing strength {p} outside [0, 1]"));
    }
    let d = rho.dim();
    let mut m = rho.matrix.scale_real(1.0 - p);
    for i in 0..d {
        m[(i, i)] += c(p / d as f64, 0.0);
    }
    Ok(DensityMatrix { matrix: m })
}

/// `(1 − p)|GHZ⟩⟨GHZ| + p I/d` on `n` qubits.
pub fn noisy_ghz(n: usize, p: f64) -> Result<DensityMatrix> {
    depolarize(&ghz_state(n)?, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat2 {
        match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(ch: char) -> Option<Self> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

/// A tensor product of single-qubit Paulis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        PauliString { letters }
    }

    pub fn identity(n: usize) -> Self {
        PauliString {
            letters: vec![Pauli::I; n],
        }
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Letters restricted to `qubits`, in that order.
    pub fn restrict(&self, qubits: &[usize]) -> PauliString {
        PauliString {
            letters: qubits.iter().map(|&q| self.letters[q]).collect(),
        }
    }

    pub fn dense(&self) -> Result<ComplexMatrix> {
        let mut m = ComplexMatrix::identity(1);
        for p in &self.letters {
            m = kron(&m, &ComplexMatrix::from_mat2(&p.matrix()))?;
        }
        Ok(m)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObservableKind {
    Pauli(PauliString),
    Dense(ComplexMatrix),
    /// `|ψ⟩⟨ψ|`, kept as the vector.
    Projector(Vec<C64>),
}

/// A Hermitian observable on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    kind: ObservableKind,
    n: usize,
    support: Vec<usize>,
    label: String,
}

impl Observable {
    pub fn pauli(letters: &str, n: usize) -> Result<Self> {
        if letters.chars().count() != n {
            return arg(format!("Pauli string {letters:?} does not have {n} letters"));
        }
        let mut ps = Vec::with_capacity(n);
        for (i, ch) in letters.chars().enumerate() {
            match Pauli::from_letter(ch) {
                Some(p) => ps.push(p),
                None => return arg(format!("invalid Pauli letter {ch:?} at position {}", i + 1)),
            }
        }
        Ok(Self::from_pauli_string(PauliString::new(ps)))
    }

    pub fn from_pauli_string(ps: PauliString) -> Self {
        let n = ps.len();
        let support = ps.support();
        let label = label_for(&ps);
        Observable {
            kind: ObservableKind::Pauli(ps),
            n,
            support,
            label,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_pauli_string(PauliString::identity(n))
    }

    pub fn dense(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_hermitian(TOL) {
            return contract("observable matrix is not Hermitian");
        }
        let d = matrix.rows();
        if !d.is_power_of_two() || d < 2 {
            return arg("dense observables must act on qubits");
        }
        let n = d.trailing_zeros() as usize;
        Ok(Observable {
            kind: ObservableKind::Dense(matrix),
            n,
            support: (0..n).collect(),
            label: "dense".into(),
        })
    }

    pub fn projector(psi: &[C64], label: impl Into<String>) -> Result<Self> {
        let d = psi.len();
        if !d.is_power_of_two() || d < 2 {
            return arg("projector vectors must live on qubits");
        }
        let norm = crate::tensor::norm_sqr(psi).sqrt();
        if norm == 0.0 {
            return arg("zero projector vector");
        }
        let n = d.trailing_zeros() as usize;
        Ok(Observable {
            kind: ObservableKind::Projector(psi.iter().map(|z| z / norm).collect()),
            n,
            support: (0..n).collect(),
            label: label.into(),
        })
    }

    pub fn ghz_projector(n: usize) -> Result<Self> {
        Self::projector(&ghz_vector(n)?, "GHZ-proj")
    }

    /// Parses `Z1*Z2`, `X3`, `I`, or `GHZ-proj` for an `n`-qubit register.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let trimmed = spec.trim();
        let lead = spec.len() - spec.trim_start().len();
        if trimmed.is_empty() {
            return Err(Error::Parse {
                position: 0,
                message: "empty observable".into(),
            });
        }
        if trimmed == "GHZ-proj" {
            return Self::ghz_projector(n);
        }
        if trimmed == "I" {
            return Ok(Self::identity(n));
        }
        let mut letters = vec![Pauli::I; n];
        let mut pos = lead;
        for term in trimmed.split('*') {
            let mut chars = term.chars();
            let letter = chars.next().and_then(Pauli::from_letter);
            let letter = match letter {
                Some(p) if p != Pauli::I => p,
                _ => {
                    return Err(Error::Parse {
                        position: pos,
                        message: format!("expected X, Y or Z at start of term {term:?}"),
                    })
                }
            };
            let digits = chars.as_str();
            let q: usize = digits.parse().map_err(|_| Error::Parse {
                position: pos + 1,
                message: format!("expected a 1-based qubit index, found {digits:?}"),
            })?;
            if q == 0 || q > n {
                return Err(Error::Parse {
                    position: pos + 1,
                    message: format!("qubit {q} outside 1..={n}"),
                });
            }
            if letters[q - 1] != Pauli::I {
                return Err(Error::Parse {
                    position: pos + 1,
                    message: format!("qubit {q} appears twice"),
                });
            }
            letters[q - 1] = letter;
            pos += term.len() + 1;
        }
        Ok(Self::from_pauli_string(PauliString::new(letters)))
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Non-trivially acted-on qubits, 0-based and sorted.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn as_pauli(&self) -> Option<&PauliString> {
        match &self.kind {
            ObservableKind::Pauli(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(&self.kind, ObservableKind::Pauli(p) if p.weight() == 0)
    }

    /// Pauli weight; the support size for other kinds.
    pub fn locality(&self) -> usize {
        self.support.len()
    }

    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        check_dense_dim("observable", self.dim())?;
        match &self.kind {
            ObservableKind::Pauli(p) => p.dense(),
            ObservableKind::Dense(m) => Ok(m.clone()),
            ObservableKind::Projector(v) => Ok(ComplexMatrix::outer(v, v)),
        }
    }

    pub fn trace(&self) -> Result<f64> {
        Ok(match &self.kind {
            ObservableKind::Pauli(p) if p.weight() == 0 => self.dim() as f64,
            ObservableKind::Pauli(_) => 0.0,
            ObservableKind::Dense(m) => m.trace().re,
            ObservableKind::Projector(_) => 1.0,
        })
    }

    /// `tr(O²)`.
    pub fn frobenius_sq(&self) -> Result<f64> {
        Ok(match &self.kind {
            ObservableKind::Pauli(_) => self.dim() as f64,
            ObservableKind::Dense(m) => m.trace_product(m)?.re,
            ObservableKind::Projector(_) => 1.0,
        })
    }

    /// `‖O‖∞`.
    pub fn operator_norm(&self) -> Result<f64> {
        Ok(match &self.kind {
            ObservableKind::Pauli(_) | ObservableKind::Projector(_) => 1.0,
            ObservableKind::Dense(m) => {
                let e = hermitian_eig(m)?;
                e.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
            }
        })
    }

    /// `tr(O ρ)`.
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.dim() != self.dim() {
            return arg("observable and state dimensions differ");
        }
        Ok(match &self.kind {
            ObservableKind::Projector(v) => rho.matrix().expectation(v)?.re,
            _ => self.to_dense()?.trace_product(rho.matrix())?.re,
        })
    }

    /// The observable restricted to `qubits` (which must cover its support).
    pub fn restrict(&self, qubits: &[usize]) -> Result<Observable> {
        if !self.support.iter().all(|q| qubits.contains(q)) {
            return arg(format!(
                "observable {} is not supported inside the chosen subsystem",
                self.label
            ));
        }
        if qubits.len() == self.n && qubits.iter().enumerate().all(|(i, &q)| i == q) {
            return Ok(self.clone());
        }
        match &self.kind {
            ObservableKind::Pauli(p) => {
                let mut o = Self::from_pauli_string(p.restrict(qubits));
                o.label = self.label.clone();
                Ok(o)
            }
            _ => arg("only Pauli observables can be restricted to a subsystem"),
        }
    }
}

fn label_for(ps: &PauliString) -> String {
    let terms: Vec<String> = ps
        .letters()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != Pauli::I)
        .map(|(i, p)| format!("{}{}", p.letter(), i + 1))
        .collect();
    if terms.is_empty() {
        "I".into()
    } else {
        terms.join("*")
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}
