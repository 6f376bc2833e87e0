//! Cyclic classes of replica strings and the shift-diagonal measurement basis.
//!
//! A replica string `x = (x₁, …, x_t)` with `xⱼ ∈ 0..d` is encoded as the
//! base-`d` integer with `x₁` most significant. The cyclic shift `τ` moves `x₁`
//! to the end, `τ(x₁x₂…x_t) = x₂…x_t x₁`, matching `S_t|x⟩ = |τ(x)⟩`.
//!
//! Each class `[z]` (orbit of `τ`, represented by its smallest member `z`)
//! carries `|[z]|` Fourier states
//!
//! ```text
//! |Ψ_k⟩ = |[z]|^{-1/2} Σ_r exp(2πi·rk/|[z]|) |τʳ(z)⟩,
//! ```
//!
//! which are simultaneous eigenvectors of `S_t` (eigenvalue
//! `exp(−2πi·k/|[z]|)`) and of every symmetric single-replica projector sum
//! `Q_b`. The unitary `R = Σ |τᵏ(z)⟩⟨Ψ_k|` rotates this basis onto the
//! computational basis, so the outcome `x = τᵏ(z)` labels `Ψ_k` of `[z]`.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{arg, Error, Result};
use crate::tensor::{c, check_dense_dim, check_vector_len, ComplexMatrix, ProbabilityTable, C64, ZERO};

/// Largest `dᵗ` that [`enumerate_classes`] will materialize.
pub const MAX_ENUMERATION: u128 = 1 << 20;

fn checked_pow(d: usize, t: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..t {
        acc = acc.checked_mul(d as u128)?;
    }
    Some(acc)
}

/// String-space geometry for `t` replicas of a `d`-level system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReplicaSpace {
    d: usize,
    t: usize,
    size: usize,
    top: usize,
}

impl ReplicaSpace {
    pub fn new(d: usize, t: usize) -> Result<Self> {
        if d < 2 || t < 1 {
            return arg(format!("replica space needs d >= 2 and t >= 1 (got d={d}, t={t})"));
        }
        let size = checked_pow(d, t).ok_or(Error::Size {
            what: "replica string space",
            requested: u128::MAX,
            cap: crate::tensor::MAX_VECTOR_LEN as u128,
        })?;
        check_vector_len("replica string space", size)?;
        let size = size as usize;
        Ok(ReplicaSpace {
            d,
            t,
            size,
            top: size / d,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `dᵗ`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// `τ(x)`.
    pub fn rotate(&self, x: usize) -> usize {
        (x % self.top) * self.d + x / self.top
    }

    pub fn digits(&self, mut x: usize) -> Vec<usize> {
        let mut out = vec![0; self.t];
        for j in (0..self.t).rev() {
            out[j] = x % self.d;
            x /= self.d;
        }
        out
    }

    pub fn encode(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.t {
            return arg(format!(
                "replica string has {} digits, expected {}",
                digits.len(),
                self.t
            ));
        }
        let mut x = 0;
        for &dg in digits {
            if dg >= self.d {
                return arg(format!("digit {dg} out of range for d={}", self.d));
            }
            x = x * self.d + dg;
        }
        Ok(x)
    }

    /// The orbit `z, τ(z), τ²(z), …` starting at `x`.
    pub fn orbit(&self, x: usize) -> Vec<usize> {
        let mut members = vec![x];
        let mut y = self.rotate(x);
        while y != x {
            members.push(y);
            y = self.rotate(y);
        }
        members
    }

    /// Class data for `x` without any table.
    pub fn outcome(&self, x: usize) -> Result<ReplicaOutcome> {
        if x >= self.size {
            return arg(format!("string {x} outside B({}, {})", self.d, self.t));
        }
        let orbit = self.orbit(x);
        let (pos, &rep) = orbit
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| v)
            .expect("orbit is non-empty");
        let card = orbit.len();
        // orbit[pos] = z = τ^pos(x), so x = τ^(card - pos)(z)
        let k = (card - pos) % card;
        Ok(ReplicaOutcome {
            space: *self,
            x,
            representative: rep,
            cardinality: card,
            k,
        })
    }
}

/// An equivalence class `[z]` of strings under cyclic shift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicClass {
    space: ReplicaSpace,
    /// `members[r] = τʳ(z)`.
    members: Vec<usize>,
}

impl CyclicClass {
    pub fn space(&self) -> ReplicaSpace {
        self.space
    }

    pub fn representative(&self) -> usize {
        self.members[0]
    }

    pub fn representative_digits(&self) -> Vec<usize> {
        self.space.digits(self.members[0])
    }

    pub fn cardinality(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.contains(&x)
    }
}

/// A measured replica string together with its class position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplicaOutcome {
    space: ReplicaSpace,
    x: usize,
    representative: usize,
    cardinality: usize,
    k: usize,
}

impl ReplicaOutcome {
    pub fn space(&self) -> ReplicaSpace {
        self.space
    }

    pub fn string(&self) -> usize {
        self.x
    }

    pub fn digits(&self) -> Vec<usize> {
        self.space.digits(self.x)
    }

    pub fn representative(&self) -> usize {
        self.representative
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    /// Rotation index with `τᵏ(z) = x`.
    pub fn k(&self) -> usize {
        self.k
    }
}

/// All classes of `B(d, t)` ordered by representative.
pub fn enumerate_classes(d: usize, t: usize) -> Result<Vec<CyclicClass>> {
    let space = ReplicaSpace::new(d, t)?;
    if space.size() as u128 > MAX_ENUMERATION {
        return Err(Error::Size {
            what: "class enumeration",
            requested: space.size() as u128,
            cap: MAX_ENUMERATION,
        });
    }
    let mut seen = vec![false; space.size()];
    let mut classes = Vec::new();
    for x in 0..space.size() {
        if seen[x] {
            continue;
        }
        let members = space.orbit(x);
        for &m in &members {
            seen[m] = true;
        }
        classes.push(CyclicClass { space, members });
    }
    Ok(classes)
}

/// The basis state `Ψ_k` of `class`, as a vector over `B(d, t)`.
pub fn psi_state(class: &CyclicClass, k: usize) -> Result<Vec<C64>> {
    let card = class.cardinality();
    if k >= card {
        return arg(format!("k={k} out of range for a class of size {card}"));
    }
    let mut v = vec![ZERO; class.space.size()];
    let norm = 1.0 / (card as f64).sqrt();
    for (r, &m) in class.members.iter().enumerate() {
        let phase = 2.0 * PI * ((r * k) % card) as f64 / card as f64;
        v[m] = c(norm * phase.cos(), norm * phase.sin());
    }
    Ok(v)
}

/// Dense `R = Σ_[z] Σ_k |τᵏ(z)⟩⟨Ψ_k|`.
pub fn build_r(d: usize, t: usize) -> Result<ComplexMatrix> {
    let space = ReplicaSpace::new(d, t)?;
    check_dense_dim("R matrix", space.size())?;
    let mut r = ComplexMatrix::zeros(space.size(), space.size());
    for class in enumerate_classes(d, t)? {
        let card = class.cardinality();
        for k in 0..card {
            let psi = psi_state(&class, k)?;
            let row = class.members[k];
            for &m in &class.members {
                r[(row, m)] = psi[m].conj();
            }
        }
    }
    Ok(r)
}

/// `amps ↦ R·amps` without forming `R`; `amps` is indexed by replica string.
pub fn apply_r(space: &ReplicaSpace, amps: &mut [C64]) {
    assert_eq!(amps.len(), space.size());
    let mut scratch = Vec::new();
    apply_r_gathered(space, amps, &mut scratch);
}

/// `R` on a buffer indexed by replica string, reusing `scratch`.
pub(crate) fn apply_r_gathered(space: &ReplicaSpace, amps: &mut [C64], scratch: &mut Vec<C64>) {
    if space.t() == 1 {
        return;
    }
    if space.t() == 2 {
        // classes {ab, ba}: Ψ₀ = (|ab⟩+|ba⟩)/√2 → |ab⟩, Ψ₁ = (|ab⟩−|ba⟩)/√2 → |ba⟩
        let d = space.d();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for a in 0..d {
            for b in (a + 1)..d {
                let ab = a * d + b;
                let ba = b * d + a;
                let (u, v) = (amps[ab], amps[ba]);
                amps[ab] = (u + v) * s;
                amps[ba] = (u - v) * s;
            }
        }
        return;
    }
    for x in 0..space.size() {
        let orbit = space.orbit(x);
        if orbit.iter().any(|&m| m < x) {
            continue;
        }
        let card = orbit.len();
        if card == 1 {
            continue;
        }
        scratch.clear();
        scratch.extend(orbit.iter().map(|&m| amps[m]));
        let norm = 1.0 / (card as f64).sqrt();
        for k in 0..card {
            let mut acc = ZERO;
            for (r, a) in scratch.iter().enumerate() {
                let phase = -2.0 * PI * ((r * k) % card) as f64 / card as f64;
                acc += a * c(phase.cos(), phase.sin());
            }
            amps[orbit[k]] = acc * norm;
        }
    }
}

/// `Re f(x) = cos(2πk/|[z]|)`.
pub fn f_value(x: &ReplicaOutcome) -> f64 {
    f_product(std::slice::from_ref(x))
}

/// `Re ∏ⱼ f(xʲ)` for blockwise outcomes of the same `t`. Class sizes divide
/// `t`, so the phases add up in whole steps of `2π/t` and cancelling phases
/// give exactly 1.
pub fn f_product(outcomes: &[ReplicaOutcome]) -> f64 {
    let Some(first) = outcomes.first() else {
        return 1.0;
    };
    let t = first.space.t();
    let steps = outcomes.iter().map(|x| x.k * (t / x.cardinality)).sum::<usize>() % t;
    if steps == 0 {
        return 1.0;
    }
    (2.0 * PI * steps as f64 / t as f64).cos()
}

/// `b = xⱼ` with `j` uniform over the `t` replicas.
pub fn map_outcome<R: Rng + ?Sized>(x: &ReplicaOutcome, rng: &mut R) -> usize {
    let digits = x.digits();
    digits[rng.random_range(0..digits.len())]
}

/// `Pr(b|x)` = (occurrences of `b` in `x`) / `t`, labels ascending.
pub fn mapping_distribution(x: &ReplicaOutcome) -> ProbabilityTable<usize> {
    let mut digits = x.digits();
    let t = digits.len() as f64;
    digits.sort_unstable();
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for dg in digits {
        if labels.last() == Some(&dg) {
            *weights.last_mut().unwrap() += 1.0 / t;
        } else {
            labels.push(dg);
            weights.push(1.0 / t);
        }
    }
    ProbabilityTable::new(weights, labels).expect("counts are a valid table")
}

/// Dense shift operator `S_t|x⟩ = |τ(x)⟩`.
pub fn shift_operator(d: usize, t: usize) -> Result<ComplexMatrix> {
    let space = ReplicaSpace::new(d, t)?;
    check_dense_dim("shift operator", space.size())?;
    let mut s = ComplexMatrix::zeros(space.size(), space.size());
    for x in 0..space.size() {
        s[(space.rotate(x), x)] = c(1.0, 0.0);
    }
    Ok(s)
}

/// Dense `Q_b = t⁻¹ Σᵢ |b⟩⟨b|ᵢ ⊗ I` (diagonal in the string basis).
pub fn q_operator(d: usize, t: usize, b: usize) -> Result<ComplexMatrix> {
    let space = ReplicaSpace::new(d, t)?;
    check_dense_dim("Q operator", space.size())?;
    if b >= d {
        return arg("b out of range");
    }
    let diag: Vec<f64> = (0..space.size())
        .map(|x| space.digits(x).iter().filter(|&&v| v == b).count() as f64 / t as f64)
        .collect();
    Ok(ComplexMatrix::from_real_diag(&diag))
}
