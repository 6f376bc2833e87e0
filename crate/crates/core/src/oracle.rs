//! Exact reference values for small systems.
//!
//! Everything here is dense and RNG-free: `ρᵗ` by repeated products, replica
//! outcome distributions from the dense `R` acting on `σ^{⊗t}`, and estimator
//! moments by summing over every local Clifford, every outcome and every
//! mapping choice. None of the sampling code paths are reused.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::ensembles::{enumerate_single_qubit_cliffords, Ensemble};
use crate::error::{arg, Error, Result};
use crate::replica::{build_r, ReplicaSpace};
use crate::states::{DensityMatrix, Observable};
use crate::tensor::{check_dense_dim, kron, partial_trace, ComplexMatrix, Mat2, C64, ONE};

/// Largest register for exhaustive local-Clifford enumeration.
pub const MAX_EXHAUSTIVE_QUBITS: usize = 2;
/// Largest replica count for exhaustive enumeration.
pub const MAX_EXHAUSTIVE_REPLICAS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMethod {
    DensePower,
    ExhaustiveEnumeration,
    ClosedFormTable,
}

impl fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMethod::DensePower => "DENSE_POWER",
            OracleMethod::ExhaustiveEnumeration => "EXHAUSTIVE_ENUMERATION",
            OracleMethod::ClosedFormTable => "CLOSED_FORM_TABLE",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleValue {
    Real(f64),
    Matrix(ComplexMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub quantity: String,
    pub value: OracleValue,
    pub method: OracleMethod,
}

impl OracleReport {
    pub fn real(&self) -> Option<f64> {
        match self.value {
            OracleValue::Real(v) => Some(v),
            OracleValue::Matrix(_) => None,
        }
    }
}

/// Which estimator an exhaustive sum describes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EstimatorMode {
    Afrs,
    Multishot,
    /// Random unitary and inverse channel on `A` only, blockwise `R`.
    Local(Vec<usize>),
}

/// `ρᵗ` by repeated multiplication.
pub fn matrix_power(rho: &DensityMatrix, t: usize) -> Result<ComplexMatrix> {
    if t == 0 {
        return arg("t must be at least 1");
    }
    check_dense_dim("matrix power", rho.dim())?;
    let mut m = rho.matrix().clone();
    for _ in 1..t {
        m = m.matmul(rho.matrix())?;
    }
    Ok(m)
}

/// `tr(O·ρᵗ)`.
pub fn exact_nonlinear(o: &Observable, rho: &DensityMatrix, t: usize) -> Result<f64> {
    if o.dim() != rho.dim() {
        return arg("observable and state dimensions differ");
    }
    Ok(o.to_dense()?.trace_product(&matrix_power(rho, t)?)?.re)
}

pub fn exact_nonlinear_report(o: &Observable, rho: &DensityMatrix, t: usize) -> Result<OracleReport> {
    Ok(OracleReport {
        quantity: format!("tr({}·rho^{t})", o.label()),
        value: OracleValue::Real(exact_nonlinear(o, rho, t)?),
        method: OracleMethod::DensePower,
    })
}

/// `⟨b|V ρᵗ V†|b⟩`.
pub fn exact_fake_probability(rho: &DensityMatrix, v: &ComplexMatrix, t: usize, b: usize) -> Result<f64> {
    if v.rows() != rho.dim() || b >= rho.dim() {
        return arg("unitary, state and basis index disagree");
    }
    let m = matrix_power(rho, t)?.conjugate_by(v)?;
    Ok(m[(b, b)].re)
}

fn tensor_power(m: &ComplexMatrix, t: usize) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::identity(1);
    for _ in 0..t {
        out = kron(&out, m)?;
    }
    Ok(out)
}

/// `Pr(x|V)` for every replica string, from the dense `R`.
pub fn exact_outcome_distribution(sigma: &ComplexMatrix, t: usize) -> Result<Vec<f64>> {
    let d = sigma.rows();
    let r = build_r(d, t)?;
    let rotated = tensor_power(sigma, t)?.conjugate_by(&r)?;
    Ok(rotated.real_diagonal())
}

/// `(k, |[z]|)` of a string by direct rotation search.
fn shift_index(digits: &[usize]) -> (usize, usize) {
    let t = digits.len();
    let rot = |s: usize| -> Vec<usize> { (0..t).map(|j| digits[(j + s) % t]).collect() };
    let card = (1..=t)
        .find(|&s| rot(s) == digits)
        .expect("t-fold rotation is the identity");
    let min_shift = (0..card).min_by_key(|&s| rot(s)).expect("non-empty orbit");
    // digits = τ^k(z) with z = τ^{min_shift}(digits), so k = card − min_shift
    ((card - min_shift) % card, card)
}

/// `Re f(x) = cos(2πk/|[z]|)` by rotation search.
pub fn exact_f(digits: &[usize]) -> f64 {
    exact_f_phase(digits).re
}

/// The full eigenvalue `f(x) = e^{2πik/|[z]|}`.
pub fn exact_f_phase(digits: &[usize]) -> C64 {
    let (k, card) = shift_index(digits);
    C64::from_polar(1.0, 2.0 * PI * k as f64 / card as f64)
}

/// `Σ_x f(x)·Pr(b|x)·Pr(x|V)` with every factor computed densely.
pub fn observation_one_sum(rho: &DensityMatrix, v: &ComplexMatrix, t: usize, b: usize) -> Result<f64> {
    let d = rho.dim();
    let sigma = rho.matrix().conjugate_by(v)?;
    let dist = exact_outcome_distribution(&sigma, t)?;
    let space = ReplicaSpace::new(d, t)?;
    let mut acc = 0.0;
    for (x, p) in dist.iter().enumerate() {
        let digits = space.digits(x);
        let count = digits.iter().filter(|&&c| c == b).count();
        if count > 0 {
            acc += exact_f(&digits) * count as f64 / t as f64 * p;
        }
    }
    Ok(acc)
}

/// `3U†|b⟩⟨b|U − I` computed from scratch.
fn local_inverse(u: &Mat2, bit: usize) -> ComplexMatrix {
    let um = ComplexMatrix::from_mat2(u);
    let mut proj = ComplexMatrix::zeros(2, 2);
    proj[(bit, bit)] = ONE;
    let m = um.dagger().matmul(&proj).expect("2x2").matmul(&um).expect("2x2");
    &m.scale_real(3.0) - &ComplexMatrix::identity(2)
}

/// `⊗ᵢ(3Uᵢ†|bᵢ⟩⟨bᵢ|Uᵢ − I)` for a register of `factors.len()` qubits.
fn local_inverse_snapshot(factors: &[&Mat2], b: usize) -> ComplexMatrix {
    let m = factors.len();
    let mut out = ComplexMatrix::identity(1);
    for (q, u) in factors.iter().enumerate() {
        out = kron(&out, &local_inverse(u, (b >> (m - 1 - q)) & 1)).expect("tiny");
    }
    out
}

/// Every tuple of `m` single-qubit Clifford indices.
fn clifford_tuples(m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..24).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

fn embed_local(n: usize, subsystem: &[usize], idx: &[usize]) -> Result<ComplexMatrix> {
    let table = enumerate_single_qubit_cliffords();
    let mut out = ComplexMatrix::identity(1);
    for q in 0..n {
        let f = match subsystem.iter().position(|&a| a == q) {
            Some(pos) => ComplexMatrix::from_mat2(&table[idx[pos]]),
            None => ComplexMatrix::identity(2),
        };
        out = kron(&out, &f)?;
    }
    Ok(out)
}

/// One term of an exhaustive sum: probability, `Re f`, and the mapped
/// strings on the measured subsystem (uniform over replicas).
struct Branch {
    p: f64,
    f: f64,
    words: Vec<usize>,
}

/// Outcome branches of the blockwise measurement with `A` as one block and
/// singletons elsewhere (or the whole register as one block).
fn branches(sigma: &ComplexMatrix, n: usize, t: usize, subsystem: &[usize]) -> Result<Vec<Branch>> {
    let blocks: Vec<Vec<usize>> = if subsystem.len() == n {
        vec![(0..n).collect()]
    } else {
        let mut b = vec![subsystem.to_vec()];
        b.extend((0..n).filter(|q| !subsystem.contains(q)).map(|q| vec![q]));
        b.retain(|blk| !blk.is_empty());
        b
    };
    // block-major order: blocks in turn, replicas in turn, block qubits in turn
    let mut order = Vec::new();
    for blk in &blocks {
        for r in 0..t {
            for &q in blk {
                order.push((r, q));
            }
        }
    }
    let bits = n * t;
    let perm = |i: usize| -> usize {
        order.iter().enumerate().fold(0usize, |acc, (pos, &(r, q))| {
            let bit = (i >> (bits - 1 - pos)) & 1;
            acc | (bit << ((t - 1 - r) * n + (n - 1 - q)))
        })
    };
    let big = tensor_power(sigma, t)?;
    let dim = 1usize << bits;
    let permuted = ComplexMatrix::from_fn(dim, dim, |a, b| big[(perm(a), perm(b))]);
    let mut u = ComplexMatrix::identity(1);
    for blk in &blocks {
        u = kron(&u, &build_r(1 << blk.len(), t)?)?;
    }
    let dist = permuted.conjugate_by(&u)?.real_diagonal();

    let mut out = Vec::new();
    for (i, &p) in dist.iter().enumerate() {
        if p.abs() < 1e-15 {
            continue;
        }
        let mut offset = bits;
        let mut f = ONE;
        let mut words = Vec::new();
        for (bi, blk) in blocks.iter().enumerate() {
            let m = blk.len();
            offset -= m * t;
            let local = (i >> offset) & ((1 << (m * t)) - 1);
            let digits: Vec<usize> = (0..t).map(|r| (local >> ((t - 1 - r) * m)) & ((1 << m) - 1)).collect();
            f *= exact_f_phase(&digits);
            if bi == 0 && subsystem.len() == m && !subsystem.is_empty() {
                words = digits;
            }
        }
        out.push(Branch { p, f: f.re, words });
    }
    Ok(out)
}

fn check_enumerable(rho: &DensityMatrix, t: usize, ensemble: Ensemble) -> Result<usize> {
    if ensemble != Ensemble::LocalClifford {
        return arg("exhaustive enumeration is only available for the local Clifford ensemble");
    }
    let n = rho
        .qubits()
        .ok_or_else(|| Error::Argument("state is not a qubit register".into()))?;
    if n > MAX_EXHAUSTIVE_QUBITS || t > MAX_EXHAUSTIVE_REPLICAS || t == 0 {
        return Err(Error::Size {
            what: "exhaustive enumeration",
            requested: (n * 100 + t) as u128,
            cap: (MAX_EXHAUSTIVE_QUBITS * 100 + MAX_EXHAUSTIVE_REPLICAS) as u128,
        });
    }
    Ok(n)
}

fn subsystem_of(mode: &EstimatorMode, n: usize) -> Result<Vec<usize>> {
    match mode {
        EstimatorMode::Afrs | EstimatorMode::Multishot => Ok((0..n).collect()),
        EstimatorMode::Local(a) => {
            let mut a = a.clone();
            a.sort_unstable();
            a.dedup();
            if a.iter().any(|&q| q >= n) || a.is_empty() {
                return arg("local mode needs a non-empty subsystem inside the register");
            }
            Ok(a)
        }
    }
}

/// Probability, `Re f` and per-replica snapshots of one branch.
type BranchTerm = (f64, f64, Vec<ComplexMatrix>);

/// For every `(V, x)` branch: probability, `f`, and the per-replica
/// snapshots `𝓜⁻¹(V†|b_j⟩⟨b_j|V)` on the subsystem.
fn for_each_branch(rho: &DensityMatrix, t: usize, subsystem: &[usize]) -> Result<Vec<BranchTerm>> {
    let n = rho.qubits().expect("checked");
    let table = enumerate_single_qubit_cliffords();
    let tuples = clifford_tuples(subsystem.len());
    let weight = 1.0 / tuples.len() as f64;
    let per_v: Vec<Result<Vec<BranchTerm>>> = tuples
        .par_iter()
        .map(|idx| {
            let v = embed_local(n, subsystem, idx)?;
            let sigma = rho.matrix().conjugate_by(&v)?;
            let factors: Vec<&Mat2> = idx.iter().map(|&i| &table[i]).collect();
            Ok(branches(&sigma, n, t, subsystem)?
                .into_iter()
                .map(|br| {
                    let snaps = br.words.iter().map(|&b| local_inverse_snapshot(&factors, b)).collect();
                    (br.p * weight, br.f, snaps)
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for chunk in per_v {
        out.extend(chunk?);
    }
    Ok(out)
}

/// `E[ρ̂ᵗ]` summed over every local Clifford, outcome and mapping choice.
/// For [`EstimatorMode::Local`] the result lives on the subsystem.
pub fn exhaustive_expectation(
    rho: &DensityMatrix,
    t: usize,
    mode: &EstimatorMode,
    ensemble: Ensemble,
) -> Result<ComplexMatrix> {
    let n = check_enumerable(rho, t, ensemble)?;
    let a = subsystem_of(mode, n)?;
    let dim = 1usize << a.len();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for (p, f, snaps) in for_each_branch(rho, t, &a)? {
        // both AFRS and multi-shot average the snapshot uniformly over replicas
        for s in snaps {
            acc = &acc + &s.scale_real(p * f / t as f64);
        }
    }
    Ok(acc)
}

/// `tr_Ā(ρᵗ)`, the target of the local estimator.
pub fn reduced_power(rho: &DensityMatrix, t: usize, subsystem: &[usize]) -> Result<ComplexMatrix> {
    let n = rho
        .qubits()
        .ok_or_else(|| Error::Argument("state is not a qubit register".into()))?;
    let mut keep = subsystem.to_vec();
    keep.sort_unstable();
    partial_trace(&matrix_power(rho, t)?, &vec![2; n], &keep)
}

/// `E[ρ̂]` of the ordinary single-copy shadow, summed exhaustively.
pub fn exhaustive_single_copy(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let n = check_enumerable(rho, 1, Ensemble::LocalClifford)?;
    let table = enumerate_single_qubit_cliffords();
    let tuples = clifford_tuples(n);
    let dim = 1usize << n;
    let mut acc = ComplexMatrix::zeros(dim, dim);
    let all: Vec<usize> = (0..n).collect();
    for idx in &tuples {
        let v = embed_local(n, &all, idx)?;
        let sigma = rho.matrix().conjugate_by(&v)?;
        let factors: Vec<&Mat2> = idx.iter().map(|&i| &table[i]).collect();
        for b in 0..dim {
            let p = sigma[(b, b)].re / tuples.len() as f64;
            acc = &acc + &local_inverse_snapshot(&factors, b).scale_real(p);
        }
    }
    Ok(acc)
}

/// `Var(ô)` of the per-shot estimator of `tr(Oρᵗ)`, summed exhaustively.
pub fn exact_variance(
    rho: &DensityMatrix,
    o: &Observable,
    t: usize,
    mode: &EstimatorMode,
    ensemble: Ensemble,
) -> Result<f64> {
    let n = check_enumerable(rho, t, ensemble)?;
    let a = subsystem_of(mode, n)?;
    let oa = o.restrict(&a)?.to_dense()?;
    let (mut first, mut second) = (0.0, 0.0);
    for (p, f, snaps) in for_each_branch(rho, t, &a)? {
        let vals: Vec<f64> = snaps
            .iter()
            .map(|s| oa.trace_product(s).map(|z| z.re))
            .collect::<Result<_>>()?;
        let mean = vals.iter().sum::<f64>() / t as f64;
        first += p * f * mean;
        second += match mode {
            EstimatorMode::Multishot => p * f * f * mean * mean,
            _ => p * f * f * vals.iter().map(|v| v * v).sum::<f64>() / t as f64,
        };
    }
    Ok(second - first * first)
}

/// `‖O₀‖²_sh + ‖O‖∞²` with `4^ω‖O‖∞²` (local) or `3·tr(O²)` (global).
pub fn variance_bound(o: &Observable, ensemble: Ensemble) -> Result<f64> {
    let norm = o.operator_norm()?;
    match ensemble {
        Ensemble::LocalClifford => Ok(4f64.powi(o.locality() as i32) * norm * norm + norm * norm),
        Ensemble::GlobalClifford => Ok(3.0 * o.frobenius_sq()? + norm * norm),
        Ensemble::Identity => arg("the identity ensemble has no shadow norm"),
    }
}
