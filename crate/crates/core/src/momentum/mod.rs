//! Dirac-matrix algebra, free momentum symbols, spectral projectors and the
//! radial quadrature grids shared by the solvers.

mod dirac;
mod grid;

pub use dirac::{
    dirac_symbol, dirac_symbol_in, energy, projector_overlap_trace, spectral_projectors,
    spectral_projectors_in, DiracMatrix, DiracRepresentation, Momentum,
};
pub use grid::{make_radial_grid, RadialGrid};
