//! Fourier conventions, radial profiles and charge densities, the Coulomb
//! pairing and radial Fourier inversion.
//!
//! The unitary convention f^(k) = (2 pi)^(-3/2) \int f(x) e^{-ik.x} dx is
//! used everywhere; in it 1/|x| has transform sqrt(2/pi) / |k|^2 and
//! D(f, g) = \int\int f(x) g(y) / |x - y| = 4 pi \int f^ g^ / |k|^2.

mod density;
mod profile;
mod spline;
mod transform;

pub use density::{ChargeDensity, ChargeDensitySpec};
pub use profile::{fd_weights, RadialProfile};
pub use spline::CubicSpline;
pub use transform::{
    coulomb_pairing, decay_bound_check, decay_coefficient, radial_inverse_fourier,
    radial_sine_transform, DecayCheck, DecayCoefficients, RadialFourier, SineTable, DERIVATIVE_NOISE_TOL,
};

/// (2 pi)^(-3/2), the prefactor of the unitary three-dimensional transform.
pub const FOURIER_PREFACTOR: f64 = 0.063_493_635_934_240_97;

/// Human-readable statement of the Fourier convention.
pub fn fourier_convention() -> &'static str {
    "f^(k) = (2 pi)^(-3/2) \\int f(x) exp(-i k.x) dx (unitary)"
}
