//! Spectral toolkit for the diffusion pencil
//!
//! ```text
//! -y'' + [2 lambda p(x) + q(x)] y = lambda^2 delta(x) y,   x in [0, pi] \ {a1, a2}
//! y'(0) = 0,  y(pi) = 0
//! y(a_i + 0)  = alpha_i y(a_i - 0)
//! y'(a_i + 0) = y'(a_i - 0) / alpha_i + i lambda gamma_i y(a_i - 0)
//! ```
//!
//! with a two-piece weight `delta = alpha^2` on `(0, pi/2)` and `beta^2` on
//! `(pi/2, pi)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] - problem definition, potentials, file format.
//! * [`forward`] - shooting through the jump points, the characteristic
//!   function `Delta(lambda) = phi(pi, lambda)` and its lambda-derivative.
//! * [`asymptotics`] - the closed-form leading term `phi0` / `Delta0` and
//!   eigenvalue estimates derived from it.
//! * [`spectrum`] - root refinement, spectrum assembly and argument-principle
//!   audits.
//! * [`verify`] - the mismatch functional `U(lambda)`, the Green-type identity
//!   and a Picard checker for homogeneous Volterra systems.
//! * [`inverse`] - half-inverse reconstruction by Levenberg-Marquardt.
//!
//! Everything except [`inverse`] is generic over the real scalar type
//! (`f32` or `f64`) through [`Real`]; the aliases at the crate root pin the
//! common `f64` instantiations.

// `!(x > 0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod forward;
pub mod inverse;
pub mod model;
pub mod quadrature;
pub mod scalar;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub use num_complex::Complex;

/// Complex number over `f64`.
pub type C64 = Complex<f64>;

pub type ProblemSpec64 = model::ProblemSpec<f64>;
pub type ProblemSpec32 = model::ProblemSpec<f32>;
pub type Potentials64 = model::Potentials<f64>;
pub type Profile64 = model::Profile<f64>;
pub type JumpCondition64 = model::JumpCondition<f64>;
pub type PiecewiseWeight64 = model::PiecewiseWeight<f64>;
pub type State64 = model::State<f64>;
pub type IntegratorSettings64 = forward::IntegratorSettings<f64>;
pub type Spectrum64 = spectrum::Spectrum<f64>;
pub type SpectrumEntry64 = spectrum::SpectrumEntry<f64>;
pub type VolterraProblem64 = verify::VolterraProblem<f64>;
