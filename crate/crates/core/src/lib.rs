//! Numerical checks for 2-positive bisectional curvature.
//!
//! The crate has two halves. The algebraic half ([`spectra`], [`quadric`],
//! [`pseudoindex`]) evaluates the curvature tensor of the complex
//! hyperquadric `Q^n = SO(n+2)/(SO(n)×SO(2))` in closed form and through
//! independent oracles, and checks the integer degree chain for rational
//! curves. The analytic half ([`sphere_mesh`], [`ym_lattice`]) runs a
//! gauge-covariant lattice Yang-Mills gradient flow for unitary bundles over
//! the round 2-sphere and monitors convergence, splitting-type integrality,
//! degree conservation and the 2-positivity maximum principle.

pub mod error;
pub mod linalg;
pub mod pseudoindex;
pub mod quadric;
pub mod spectra;
pub mod sphere_mesh;
pub mod ym_lattice;

pub use error::{Error, Result};
pub use num_complex::Complex64;
