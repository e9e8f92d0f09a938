//! Resonances of one-dimensional semiclassical Schrödinger operators
//! `(hD)² + V` with compactly supported piecewise-smooth potentials.
//!
//! A resonance is a complex energy `z` at which `(P − z)u = 0` admits a
//! nontrivial solution that is outgoing at both ends of the support of `V`:
//! `hDu(0) = −z^{1/2}u(0)` and `hDu(L) = z^{1/2}u(L)`. The crate computes
//! them at three fidelity tiers:
//!
//! * closed-form first-order asymptotics driven by Bohr–Sommerfeld
//!   quantization of the action integral ([`asymptotic::predict`]),
//! * a Newton solve of the quantization condition with exact complex phase
//!   integrals ([`asymptotic::solve_qc`]),
//! * exact shooting of the outgoing ODE combined with argument-principle
//!   root certification in the complex window ([`rootfind::locate_all`]).
//!
//! Supporting machinery: truncated Taylor (jet) arithmetic, the WKB
//! exponential-series recursion with endpoint identities, adaptive
//! Gauss–Kronrod quadrature for action/period/phase integrals, and the 1D
//! classical flow with interface classification for resonance-free gap
//! reports.

pub mod asymptotic;
pub mod dynamics;
mod error;
pub mod jet;
mod ode;
pub mod potential;
pub mod quadrature;
pub mod rootfind;
pub mod shooting;
pub mod tolerances;
pub mod wkb;

pub use error::{Error, Result};
pub use potential::{Piece, PieceForm, Potential, Side};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
