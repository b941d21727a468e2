//! Numerical laboratory for the massless Nelson model at finite cutoffs:
//! truncated Fock spaces over periodic momentum lattices, sparse
//! second-quantized operators, dressing transformations, scalar integrals,
//! Krylov time propagation, and the verification experiments tying them
//! together.

pub mod error;
pub mod experiments;
pub mod ham;
pub mod integrals;
pub mod ops;
pub mod propagate;
pub mod quad;
pub mod space;
pub mod sparse;

pub use error::{Error, Result};
pub use ham::{PhysParams, ScalarSource};
pub use ops::{FormFactor, LadderKind, Particle, ShiftSign, SmearedKind};
pub use space::{
    build_box_modes, build_radial_modes, enumerate_fock, FockBasis, Mode, ModeGrid,
    ParticleLattice, TensorBasis,
};
pub use sparse::SparseOperator;
pub use propagate::{deviation, DensePropagator, KrylovOptions, SimState};
pub use integrals::ScalarResult;
