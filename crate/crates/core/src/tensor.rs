//! Dense complex linear algebra and exact discrete sampling.
//!
//! Matrices are row-major. Qubit registers use big-endian ordering: qubit 0
//! is the most significant bit of a basis index.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{arg, contract, Error, Result};

pub type C64 = Complex64;

/// A 2×2 complex matrix, `m[row][col]`.
pub type Mat2 = [[C64; 2]; 2];

/// Exactness tolerance for identities that hold algebraically.
pub const TOL: f64 = 1e-10;
/// Eigensolver residual tolerance.
pub const EIG_TOL: f64 = 1e-8;
/// Largest dense matrix dimension.
pub const MAX_DENSE_DIM: usize = 1 << 13;
/// Largest state vector length.
pub const MAX_VECTOR_LEN: usize = 1 << 26;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn check_dense_dim(what: &'static str, dim: usize) -> Result<()> {
    if dim > MAX_DENSE_DIM {
        return Err(Error::Size {
            what,
            requested: dim as u128,
            cap: MAX_DENSE_DIM as u128,
        });
    }
    Ok(())
}

pub(crate) fn check_vector_len(what: &'static str, len: u128) -> Result<()> {
    if len > MAX_VECTOR_LEN as u128 {
        return Err(Error::Size {
            what,
            requested: len,
            cap: MAX_VECTOR_LEN as u128,
        });
    }
    Ok(())
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(16) {
            write!(f, "  ")?;
            for col in 0..self.cols.min(16) {
                let z = self[(r, col)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return arg("matrix dimensions must be positive");
        }
        if data.len() != rows * cols {
            return arg(format!("entry count {} does not match {}x{}", data.len(), rows, cols));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for col in 0..cols {
                data.push(f(r, col));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        m
    }

    pub fn from_mat2(m: &Mat2) -> Self {
        Self::from_fn(2, 2, |r, col| m[r][col])
    }

    /// `|v⟩⟨w|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |r, col| v[r] * w[col].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, col)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, col| self[(col, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return arg(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return arg("vector length does not match matrix columns");
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &[C64]) -> Result<C64> {
        let mv = self.mul_vec(v)?;
        Ok(v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum())
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<C64> {
        if self.cols != other.rows || self.rows != other.cols {
            return arg("trace_product needs compatible shapes");
        }
        let mut acc = ZERO;
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[r * self.cols + k] * other.data[k * other.cols + r];
            }
        }
        Ok(acc)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| (r..self.cols).all(|col| (self[(r, col)] - self[(col, r)].conj()).norm() <= tol))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        match self.dagger().matmul(self) {
            Ok(p) => p.max_abs_diff(&Self::identity(self.cols)) <= tol,
            Err(_) => false,
        }
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        u.matmul(self)?.matmul(&u.dagger())
    }

    pub fn real_diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, col): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + col]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + col]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in matrix product")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(col)) => (r, col),
        _ => {
            return Err(Error::Size {
                what: "kron dimension",
                requested: u128::MAX,
                cap: MAX_DENSE_DIM as u128,
            })
        }
    };
    check_dense_dim("kron dimension", rows.max(cols))?;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let s = a[(ar, ac)];
            if s == ZERO {
                continue;
            }
            for br in 0..b.rows {
                let dst = (ar * b.rows + br) * cols + ac * b.cols;
                let src = br * b.cols;
                for bc in 0..b.cols {
                    out.data[dst + bc] = s * b.data[src + bc];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a vector sequence.
pub fn kron_vectors(parts: &[&[C64]]) -> Result<Vec<C64>> {
    let len = parts.iter().map(|p| p.len() as u128).product::<u128>();
    check_vector_len("kron vector", len)?;
    let mut out = vec![ONE];
    for p in parts {
        let mut next = Vec::with_capacity(out.len() * p.len());
        for a in &out {
            for b in p.iter() {
                next.push(a * b);
            }
        }
        out = next;
    }
    Ok(out)
}

/// Partial trace keeping the subsystems listed in `keep` (0-based, in the
/// order of `dims`).
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows != total {
        return arg(format!(
            "subsystem dims multiply to {} but matrix is {}x{}",
            total, m.rows, m.cols
        ));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if let Some(&k) = keep_sorted.iter().find(|&&k| k >= dims.len()) {
        return arg(format!("keep index {} out of range for {} subsystems", k, dims.len()));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep_sorted.contains(i)).collect();
    let kept_dim: usize = keep_sorted.iter().map(|&i| dims[i]).product();
    let traced_dim: usize = traced.iter().map(|&i| dims[i]).product();

    // strides of each subsystem in the full index
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offset = |sel: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &s in sel.iter().rev() {
            off += (idx % dims[s]) * strides[s];
            idx /= dims[s];
        }
        off
    };
    let kept_off: Vec<usize> = (0..kept_dim).map(|i| offset(&keep_sorted, i)).collect();
    let traced_off: Vec<usize> = (0..traced_dim).map(|i| offset(&traced, i)).collect();

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for (r, &ro) in kept_off.iter().enumerate() {
        for (col, &co) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &to in &traced_off {
                acc += m[(ro + to, co + to)];
            }
            out[(r, col)] = acc;
        }
    }
    Ok(out)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<C64>>,
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<Eigen> {
    if !m.is_hermitian(TOL) {
        return contract("hermitian_eig needs a Hermitian matrix");
    }
    let n = m.rows;
    let dm = nalgebra::DMatrix::from_fn(n, n, |r, col| m[(r, col)]);
    let eig = nalgebra::SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    Ok(Eigen { values, vectors })
}

/// Apply a 2×2 unitary to `qubit` of an `n`-qubit state vector.
pub fn apply_1q(state: &mut [C64], n: usize, qubit: usize, u: &Mat2) {
    debug_assert_eq!(state.len(), 1 << n);
    let bit = 1usize << (n - 1 - qubit);
    for i in 0..state.len() {
        if i & bit == 0 {
            let a = state[i];
            let b = state[i | bit];
            state[i] = u[0][0] * a + u[0][1] * b;
            state[i | bit] = u[1][0] * a + u[1][1] * b;
        }
    }
}

/// `ρ ↦ (⊗ᵢ uᵢ) ρ (⊗ᵢ uᵢ)†` for an `n`-qubit density matrix.
pub fn conjugate_local(rho: &ComplexMatrix, factors: &[Mat2]) -> ComplexMatrix {
    let n = factors.len();
    let dim = 1usize << n;
    assert_eq!(rho.rows(), dim);
    let mut out = rho.clone();
    // left action on columns
    let mut col = vec![ZERO; dim];
    for j in 0..dim {
        for (i, v) in col.iter_mut().enumerate() {
            *v = out[(i, j)];
        }
        for (q, u) in factors.iter().enumerate() {
            apply_1q(&mut col, n, q, u);
        }
        for (i, v) in col.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    // right action: rows transform by conj(u)
    let conj: Vec<Mat2> = factors
        .iter()
        .map(|u| [[u[0][0].conj(), u[0][1].conj()], [u[1][0].conj(), u[1][1].conj()]])
        .collect();
    for i in 0..dim {
        let row = &mut out.data[i * dim..(i + 1) * dim];
        for (q, u) in conj.iter().enumerate() {
            apply_1q(row, n, q, u);
        }
    }
    out
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for col in 0..2 {
            out[r][col] = a[r][0] * b[0][col] + a[r][1] * b[1][col];
        }
    }
    out
}

pub fn mat2_dagger(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// A normalized distribution over labelled outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable<L = usize> {
    weights: Vec<f64>,
    labels: Vec<L>,
}

/// Weights strictly below this are treated as an upstream bug.
pub const NEGATIVE_WEIGHT_FLOOR: f64 = -1e-12;

impl<L> ProbabilityTable<L> {
    /// Clips weights in `(-1e-12, 0)` to zero and normalizes.
    pub fn new(weights: Vec<f64>, labels: Vec<L>) -> Result<Self> {
        if weights.len() != labels.len() {
            return arg("weights and labels differ in length");
        }
        if weights.is_empty() {
            return arg("empty probability table");
        }
        let mut weights = weights;
        for w in weights.iter_mut() {
            if !w.is_finite() {
                return contract("non-finite probability weight");
            }
            if *w <= NEGATIVE_WEIGHT_FLOOR {
                return contract(format!("negative probability weight {w:e}"));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return contract("probability table has zero total mass");
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(ProbabilityTable { weights, labels })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&L, f64)> {
        self.labels.iter().zip(self.weights.iter().copied())
    }
}

impl ProbabilityTable<usize> {
    /// Weights over the labels `0..n`.
    pub fn indexed(weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).collect();
        Self::new(weights, labels)
    }
}

/// Draw a label from `table`.
pub fn sample_discrete<'a, L, R: Rng + ?Sized>(table: &'a ProbabilityTable<L>, rng: &mut R) -> Result<&'a L> {
    if table.is_empty() {
        return arg("cannot sample an empty table");
    }
    Ok(&table.labels[sample_index(&table.weights, 1.0, rng)])
}

/// Index drawn with probability `weights[i] / total`; zero-weight entries
/// are never returned.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}
