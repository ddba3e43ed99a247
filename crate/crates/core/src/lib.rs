//! Numerical solvers for the positive-temperature Bogoliubov-Dirac-Fock
//! mean-field model of the electron-positron field.
//!
//! Units are hbar = c = m = 1 throughout. The unitary Fourier convention
//! `f^(k) = (2 pi)^(-3/2) \int f(x) e^{-ik.x} dx` is fixed by
//! [`radial::FOURIER_PREFACTOR`].

pub mod checks;
pub mod dense;
pub mod entropy;
pub mod error;
pub mod momentum;
pub mod params;
pub mod quadrature;
pub mod radial;
pub mod screening;
pub mod vacuum;
pub mod lattice;

pub use error::{Error, Result};
pub use params::ModelParams;
