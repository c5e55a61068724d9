//! Fisher-information diagnostics for the anisotropic XY spin-1/2 chain with
//! Dzyaloshinskii–Moriya interaction, in the thermodynamic limit at zero
//! temperature.
//!
//! The computation is layered:
//!
//! - [`chain`]: magnetization and the `G_k` coefficients (adaptive quadrature,
//!   analytic parameter derivatives).
//! - [`correlations`]: `S^x_r`, `S^y_r`, `S^z_r` from Toeplitz determinants.
//! - [`states`]: single-spin and two-spin (X-shaped) reduced density matrices.
//! - [`fisher`]: single-parameter classical and quantum Fisher information.
//! - [`multiparam`]: SLDs, the QFI matrix over `(J, γ, D)`, Uhlmann matrix,
//!   scalar bounds.
//! - [`oracle`]: exact diagonalization of finite periodic chains and dense
//!   reference solvers.
//! - [`scan`]: parameter sweeps producing CSV/JSON records.

pub mod chain;
pub mod correlations;
pub mod error;
pub mod exec;
pub mod fisher;
pub mod multiparam;
pub mod oracle;
pub mod quadrature;
pub mod scan;
pub mod states;

pub use chain::{ChainParams, ParameterTag, QuadratureConfig};
pub use correlations::Separation;
pub use error::{Error, Result};
