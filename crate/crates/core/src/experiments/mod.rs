//! Verification suites tying operators, Hamiltonians and integrals back to
//! the model's structural identities: the dressing identity, cancellation
//! of the effective potential, removal of subleading terms, energy
//! sandwiches and trajectory bounds, the vacuum-sector self-energy, and
//! the weak-coupling convergence sweep.

pub mod cancel;
pub mod common;
pub mod energy;
pub mod gross;
pub mod removal;
pub mod selfenergy;
pub mod sweep;

pub use cancel::{cancellation_sweep, verify_cancellation, CancelReport};
pub use common::{basis_hash, gaussian_state, loglog_slope, sobolev_norm, SweepRecord, ToySpec};
pub use energy::{verify_energy_sandwich, EnergyReport};
pub use gross::{verify_gross_identity, GrossReport};
pub use removal::{removal_sweep, verify_removal, RemovalReport};
pub use selfenergy::{selfenergy_sweep, SelfEnergyReport};
pub use sweep::{sweep_theorem, TheoremReport};
