//! Numerical laboratory for 1+1-dimensional evolutionary systems of changing
//! type.
//!
//! A system `(∂ₜM + N + A) v = F` on `(0, 1)` couples a state `u` with a flux
//! `w`. The diagonal coefficients `M` and `N` alternate on `n` periodic cells
//! between a hyperbolic phase (`M = 1`, `N = 0`) and an elliptic or parabolic
//! phase, and `A = −[[0, ∂ₓ,₀], [∂ₓ, 0]]` is skew-adjoint. This crate
//! discretizes `A` exactly skew on a staggered grid, integrates the resulting
//! differential-algebraic system with a θ-scheme, solves the averaged
//! (homogenized) limit systems, and measures weak convergence and decay.
//!
//! Modules, bottom-up:
//!
//! - [`material`]: periodic indicator coefficient and its weak-* mean.
//! - [`grid`]: staggered grid, skew operator, assembled discrete systems.
//! - [`banded`]: banded LU with partial pivoting.
//! - [`integrator`]: time grids, forcing, the θ-scheme.
//! - [`problems`]: problem catalogue and second-order limit oracles.
//! - [`analysis`]: norms, pairings, decay fits, spectra, junction diagnostics.
//! - [`experiment`]: config parsing, experiment runners, CSV/JSON/SVG output.

pub mod analysis;
pub mod banded;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod integrator;
pub mod material;
pub mod problems;
pub mod profile;

pub use error::{LabError, Result};
pub use grid::{DiscreteSystem, StaggeredGrid};
pub use integrator::{Bump, ForcingSpec, SpaceTimeField, TimeGrid};
pub use material::{CoefficientField, Family, MaterialLayout, Sampling};
pub use problems::ProblemKind;
pub use profile::SpatialProfile;
