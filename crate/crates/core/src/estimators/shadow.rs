//! The single-copy shadow baseline: `tr(O ρ̂₁ρ̂₂⋯ρ̂_t)` over disjoint groups
//! of `t` ordinary snapshots.

use rand::Rng;

use crate::ensembles::{
    enumerate_single_qubit_cliffords, local_snapshot_factor, sample_unitary, Ensemble, UnitaryFactors, UnitarySample,
};
use crate::error::{arg, contract, Result};
use crate::sampler::{sample_single_copy, PreparedState};
use crate::states::{Observable, ObservableKind};
use crate::tensor::{apply_1q, mat2_mul, ComplexMatrix, Mat2, ONE};

/// One ordinary shadow shot `(V, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowSample {
    pub unitary: UnitarySample,
    pub b: usize,
}

impl ShadowSample {
    pub fn draw<R: Rng + ?Sized>(prepared: &PreparedState, ensemble: Ensemble, rng: &mut R) -> Result<Self> {
        if ensemble == Ensemble::Identity {
            return arg("shadows need a randomizing ensemble");
        }
        let unitary = sample_unitary(ensemble, prepared.qubits(), rng)?;
        let b = sample_single_copy(prepared, &unitary, rng)?;
        Ok(ShadowSample { unitary, b })
    }

    fn local_factors(&self) -> Option<Vec<Mat2>> {
        let table = enumerate_single_qubit_cliffords();
        let n = self.unitary.qubits();
        self.unitary.local_indices().map(|idx| {
            idx.iter()
                .enumerate()
                .map(|(q, &i)| local_snapshot_factor(&table[i as usize], (self.b >> (n - 1 - q)) & 1))
                .collect()
        })
    }

    /// `M ← M·ρ̂`.
    fn right_multiply(&self, m: &mut ComplexMatrix) -> Result<()> {
        let n = self.unitary.qubits();
        let dim = 1usize << n;
        match self.unitary.factors() {
            UnitaryFactors::Identity => contract("the identity ensemble has no inverse channel"),
            UnitaryFactors::Local(_) => {
                // (M A)ᵀ = Aᵀ Mᵀ: apply each transposed factor to every row
                let factors = self.local_factors().expect("local sample");
                for r in 0..dim {
                    let row = &mut m.as_mut_slice()[r * dim..(r + 1) * dim];
                    for (q, f) in factors.iter().enumerate() {
                        let ft = [[f[0][0], f[1][0]], [f[0][1], f[1][1]]];
                        apply_1q(row, n, q, &ft);
                    }
                }
                Ok(())
            }
            UnitaryFactors::Global(_) => {
                // M((d+1)|u⟩⟨u| − I) = (d+1)(Mu)⟨u| − M
                let u = self.unitary.adjoint_basis_vector(self.b);
                let mu = m.mul_vec(&u)?;
                let scale = dim as f64 + 1.0;
                for r in 0..dim {
                    for c in 0..dim {
                        m[(r, c)] = mu[r] * u[c].conj() * scale - m[(r, c)];
                    }
                }
                Ok(())
            }
        }
    }
}

/// `Re tr(O ρ̂₁⋯ρ̂_t)`.
pub fn product_value(o: &Observable, group: &[ShadowSample]) -> Result<f64> {
    let n = o.qubits();
    if group.iter().any(|s| s.unitary.qubits() != n) {
        return arg("observable and shadow registers differ");
    }
    if group.is_empty() {
        return arg("empty shadow group");
    }
    if let (ObservableKind::Pauli(ps), Some(first)) = (o.kind(), group[0].local_factors()) {
        if let Some(rest) = group[1..].iter().map(|s| s.local_factors()).collect::<Option<Vec<_>>>() {
            let mut total = ONE;
            for (q, &p) in ps.letters().iter().enumerate() {
                let mut acc = mat2_mul(&p.matrix(), &first[q]);
                for f in &rest {
                    acc = mat2_mul(&acc, &f[q]);
                }
                total *= acc[0][0] + acc[1][1];
            }
            return Ok(total.re);
        }
    }
    let mut m = o.to_dense()?;
    for s in group {
        s.right_multiply(&mut m)?;
    }
    Ok(m.trace().re)
}

/// Check the shot count for grouping into disjoint `t`-tuples.
pub fn validate_group_shots(shots: usize, t: usize) -> Result<usize> {
    if t == 0 {
        return arg("replica count must be at least 1");
    }
    if shots < t {
        return arg(format!("{shots} shots cannot form a group of {t}"));
    }
    if !shots.is_multiple_of(t) {
        return arg(format!("{shots} shots do not split into groups of {t}"));
    }
    Ok(shots / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{inverse_channel_snapshot, sample_global_clifford, sample_local_clifford};
    use crate::rng::RngStream;

    fn dense_product(o: &Observable, group: &[ShadowSample]) -> f64 {
        let mut m = o.to_dense().unwrap();
        for s in group {
            m = m.matmul(&inverse_channel_snapshot(&s.unitary, s.b).unwrap()).unwrap();
        }
        m.trace().re
    }

    #[test]
    fn fast_products_match_dense() {
        let mut rng = RngStream::new(3).rng();
        for n in 1..=3 {
            let obs = [
                Observable::parse("Z1", n).unwrap(),
                Observable::identity(n),
                Observable::ghz_projector(n).unwrap(),
            ];
            for t in 1..=3 {
                for _ in 0..4 {
                    let local: Vec<ShadowSample> = (0..t)
                        .map(|_| ShadowSample {
                            unitary: sample_local_clifford(n, &mut rng).unwrap(),
                            b: rng.random_range(0..1 << n),
                        })
                        .collect();
                    let global: Vec<ShadowSample> = (0..t)
                        .map(|_| ShadowSample {
                            unitary: sample_global_clifford(n, &mut rng).unwrap(),
                            b: rng.random_range(0..1 << n),
                        })
                        .collect();
                    for o in &obs {
                        for g in [&local, &global] {
                            let got = product_value(o, g).unwrap();
                            assert!((got - dense_product(o, g)).abs() < 1e-8, "{o} n={n} t={t}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn group_shot_validation() {
        assert_eq!(validate_group_shots(10, 2).unwrap(), 5);
        assert!(validate_group_shots(1, 2).is_err());
        assert!(validate_group_shots(5, 2).is_err());
        assert_eq!(validate_group_shots(3, 1).unwrap(), 3);
    }

    #[test]
    fn identity_shadows_are_rejected() {
        let p = PreparedState::new(crate::states::DensityMatrix::maximally_mixed(2).unwrap()).unwrap();
        assert!(ShadowSample::draw(&p, Ensemble::Identity, &mut RngStream::new(1).rng()).is_err());
        let s = ShadowSample {
            unitary: UnitarySample::identity(1),
            b: 0,
        };
        assert!(product_value(&Observable::ghz_projector(1).unwrap(), &[s]).is_err());
    }
}
