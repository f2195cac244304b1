//! Simulation and verification of state-dependent regime-switching diffusions.
//!
//! A regime-switching diffusion is a pair `(X(t), Λ(t))` where `X` solves an SDE
//! whose coefficients depend on a discrete regime `Λ ∈ {1, …, N}`, and `Λ` jumps
//! with rates `q_ij(X(t))`. Switching is realized through a marked Poisson drive
//! and a table of consecutive intervals on `[0, M)` (see [`skorokhod`]), which lets
//! different schemes share one source of randomness path by path.
//!
//! Modules:
//! - [`model`]: coefficients, rate functions, assumption checks and derived constants.
//! - [`skorokhod`]: interval tables, the jump function, Poisson drives, switch paths.
//! - [`dominate`]: the state-independent dominating chain and spectral decay bounds.
//! - [`integrate`]: the Euler–Maruyama scheme, strong error and switching mismatch.
//! - [`couple`]: reflection coupling, meeting times, coupling-time quadrature bound.
//! - [`measure`]: the `ρ` metric and exact empirical Wasserstein distances.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]

pub mod couple;
pub mod dominate;
mod error;
pub mod integrate;
pub mod linalg;
pub mod measure;
pub mod model;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod skorokhod;
pub mod stats;

pub use error::{Error, Result};
pub use model::{RegimeSet, RsdpModel};
