//! Dense complex linear algebra and n-qubit state construction.
//!
//! Qubit 1 is always the leftmost tensor factor and the most significant bit of
//! a basis index; every other module relies on this ordering.

mod eigen;
mod matrix;
mod random;
mod state;

pub use eigen::{eigh, reconstruct, sqrt_psd};
pub use matrix::{kron, kron_all, pauli, ComplexMatrix, I, ONE, ZERO};
pub use random::{
    random_mixed, random_pure, random_sl2c, random_su2, rng_from_seed, sample_mixed, sample_pure, sample_sl2c,
    sample_su2,
};
pub use state::{named_state, partial_trace, DensityMatrix, NamedState, PureState};
