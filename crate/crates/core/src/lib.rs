//! Pseudospectral variational toolkit for a planar Schrödinger system whose
//! kinetic part is local in `x` (a second derivative) and nonlocal in `y`
//! (a fractional Laplacian of order `s ∈ (0, 1)`).
//!
//! The crate provides, in dependency order:
//!
//! * [`grid`] — periodic grids on centered rectangles, real fields, FFT
//!   transforms and quadrature;
//! * [`operators`] — the diagonal Fourier operators (`k1²`, `|k2|^{2s}`,
//!   `1 + k1² + |k2|^{2s}`), anisotropic Sobolev norms, and independent
//!   real-space quadrature cross-checks;
//! * [`weights`] — the admissible coupling weights `h(x, y)` with analytic
//!   gradients and hypothesis validators;
//! * [`model`] — exponent bookkeeping for the two-component system (critical
//!   exponents `2(1+s)/(1−s)`, regime classification);
//! * [`energy`] — the coupled energy functional, its L² gradient, the
//!   constraint functional, fiber maps and the manifold projection;
//! * [`solver`] — projected, preconditioned descent on the constraint
//!   manifold with multistart, symmetrization and radial averaging;
//! * [`analysis`] — Sobolev-quotient estimation, an anisotropic
//!   Gagliardo–Nirenberg checker, coupling-strength scans and the crossing
//!   estimator;
//! * [`pohozaev`] — scaling identities for converged critical-regime
//!   solutions and the non-existence probe built on them;
//! * [`io`] — binary field snapshots and CSV export.

pub mod analysis;
pub mod energy;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod operators;
pub mod pohozaev;
pub mod solver;
pub mod util;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{Field, Grid2D, SpectralField};
pub use model::{ModelParams, Pair, Regime};
