//! Problem setups shared by the benchmarks.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tbdf_core::entropy::{random_with_spectrum, HermitianMatrix};
use tbdf_core::lattice::{build_reference, BoxConfig, BoxDensity, BoxMode, BoxReference};
use tbdf_core::radial::ChargeDensity;
use tbdf_core::{ModelParams, Result};

pub fn params() -> ModelParams {
    ModelParams::new(0.3, 1.0, 1.0).expect("valid parameters")
}

/// Reduced-mode box reference and a Gaussian external charge.
pub fn box_problem(length: f64, charge: f64) -> Result<(BoxReference, BoxDensity)> {
    let p = params();
    let config = Arc::new(BoxConfig::new(length, p.lambda)?);
    let reference = build_reference(config.clone(), p, BoxMode::Reduced, None)?;
    let nu = BoxDensity::from_radial(config, &ChargeDensity::gaussian(charge, 1.0)?);
    Ok((reference, nu))
}

/// Pair of random states of size n with spectra inside (-1/2, 1/2).
pub fn state_pair(n: usize, seed: u64) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g0 = random_with_spectrum(n, -0.45, 0.45, &mut rng)?;
    let g = random_with_spectrum(n, -0.5, 0.5, &mut rng)?;
    Ok((g, g0))
}
