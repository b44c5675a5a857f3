//! Numerical construction of the self-similar, gravity-free and surface-tension-free
//! corner-crest water wave.
//!
//! The wave is encoded by a real density `g` on the line, the fixed point of a
//! nonlinear operator built from a Riemann-mapping ansatz and the Hilbert
//! transform. This crate contains everything that is pure computation:
//!
//! * [`grid`]: log-graded symmetric meshes and power-law aware quadrature,
//! * [`hilbert`]: the principal-value Hilbert transform on those meshes,
//! * [`system`]: the operator `T` and its intermediate quantities,
//! * [`solver`]: damped, projected, continued fixed-point iteration,
//! * [`profile`]: reconstruction of the interface, velocity and acceleration,
//! * [`verify`]: a machine-checkable battery of the analytic bounds.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fit;
pub mod grid;
pub mod hilbert;
pub mod interp;
#[cfg(test)]
mod oracle;
pub mod profile;
pub mod solver;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, GridSpec};
pub use hilbert::{hilbert_transform, TailModel};
pub use profile::{reconstruct_profile, Normalization, SelfSimilarWave, WaveProfile};
pub use solver::{solve_fixed_point, SolveReport, SolverOptions};
pub use system::{apply_t, Parameters, SystemState};
pub use verify::{CheckRecord, VerificationReport};
