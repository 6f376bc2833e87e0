//! Classical shadows for non-linear functionals `tr(Oρᵗ)` estimated from a
//! single copy of `ρ` per shot, by sampling from the fake distribution that
//! `t` replicas measured in the cyclic-shift eigenbasis would produce.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`] dense complex linear algebra and discrete sampling,
//! * [`states`] density matrices, GHZ preparation, observables,
//! * [`ensembles`] random local and global Cliffords and inverse channels,
//! * [`replica`] cyclic classes, the `Ψ` basis and the transform `R`,
//! * [`sampler`] single-copy sampling of replica outcomes,
//! * [`estimators`] snapshots, mean estimates and the baselines,
//! * [`compiler`] circuits implementing `R` with mid-circuit measurement,
//! * [`oracle`] exact reference values for tests and verification.

pub mod compiler;
pub mod ensembles;
pub mod error;
pub mod estimators;
pub mod oracle;
pub mod replica;
pub mod rng;
pub mod sampler;
pub mod states;
pub mod tensor;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use states::{DensityMatrix, Observable};
pub use tensor::{ComplexMatrix, C64};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/replica-basis.md")]
    mod replica_basis {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
}
