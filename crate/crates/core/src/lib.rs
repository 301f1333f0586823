//! Multi-qubit generalized Stokes tensors and the Minkowskian scalar built from them.
//!
//! The scalar `S²₍ₙ₎` is invariant under local `SL(2,C)` filtering (equivalently,
//! `O₀(1,3)` transformations on each tensor leg) and reduces to familiar
//! entanglement quantities for small `n`: the linearized entropy for one qubit,
//! the tangle for two-qubit pure states, and a concurrence plus three-tangle sum
//! for pairs inside three-qubit pure states.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod measures;
pub mod qstate;
pub mod slocc;
pub mod stokes;

pub use error::{Error, Result};
