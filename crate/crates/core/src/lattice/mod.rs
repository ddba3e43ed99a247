//! Finite periodic box: plane waves (2 pi / L) Z^3 inside the cutoff ball,
//! the reduced and full free energies and their self-consistent solutions.

mod operators;
mod scf;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entropy::{g_beta, HermitianMatrix, Spectrum};
use crate::error::{Error, Result};
use crate::momentum::{dirac_symbol, DiracMatrix, Momentum};
use crate::params::ModelParams;
use crate::radial::{ChargeDensity, FOURIER_PREFACTOR};
use crate::vacuum::VacuumSolution;

pub use operators::{
    coulomb_energy, density_of, exchange_energy, exchange_matrix, free_energy, free_energy_gradient,
    hartree_matrix, mean_field_operator, EnergyTerms,
};
pub use scf::{
    charge_screening_check, coercivity_terms, lattice_response_kernel, orbit_spread, random_admissible_state, scf_run, scf_solve, shell_ratios,
    uniqueness_condition, ChargeReport, IterationRecord, ScfDiagnostics, ScfOptions, ShellRatio,
    UniquenessCondition,
};

/// Default cap on the matrix dimension 4M.
pub const DEFAULT_MAX_DIM: usize = 4096;

pub type LatticeVector = [i32; 3];

/// Which functional a box computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxMode {
    Reduced,
    Full,
}

/// Plane-wave modes p in (2 pi / L) Z^3 with |p| <= lambda, and all difference
/// vectors p - q of pairs of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxConfig {
    length: f64,
    lambda: f64,
    modes: Vec<LatticeVector>,
    mode_index: HashMap<LatticeVector, usize>,
    differences: Vec<LatticeVector>,
    difference_index: HashMap<LatticeVector, usize>,
}

impl BoxConfig {
    pub fn new(length: f64, lambda: f64) -> Result<Self> {
        Self::with_max_dim(length, lambda, DEFAULT_MAX_DIM)
    }

    pub fn with_max_dim(length: f64, lambda: f64, max_dim: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!("box length must be > 0, got {length}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff must be > 0, got {lambda}")));
        }
        let step = 2.0 * PI / length;
        let reach = (lambda / step).floor() as i32;
        let mut modes = Vec::new();
        for i in -reach..=reach {
            for j in -reach..=reach {
                for k in -reach..=reach {
                    let n2 = (i * i + j * j + k * k) as f64;
                    if n2 * step * step <= lambda * lambda * (1.0 + 1e-12) {
                        modes.push([i, j, k]);
                    }
                }
            }
        }
        let dim = 4 * modes.len();
        if dim > max_dim {
            return Err(Error::InvalidParameter(format!(
                "box with L = {length} has dimension {dim} above the maximum {max_dim}"
            )));
        }
        let mode_index: HashMap<_, _> = modes.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let mut differences: Vec<LatticeVector> = Vec::new();
        let mut difference_index = HashMap::new();
        for p in &modes {
            for q in &modes {
                let k = sub(*p, *q);
                difference_index.entry(k).or_insert_with(|| {
                    differences.push(k);
                    differences.len() - 1
                });
            }
        }
        Ok(Self {
            length,
            lambda,
            modes,
            mode_index,
            differences,
            difference_index,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    /// 2 pi / L.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn modes(&self) -> &[LatticeVector] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        4 * self.modes.len()
    }

    pub fn mode_index(&self, m: &LatticeVector) -> Option<usize> {
        self.mode_index.get(m).copied()
    }

    pub fn momentum(&self, m: &LatticeVector) -> Momentum {
        let s = self.spacing();
        Momentum::new(m[0] as f64 * s, m[1] as f64 * s, m[2] as f64 * s)
    }

    pub fn differences(&self) -> &[LatticeVector] {
        &self.differences
    }

    pub fn difference_index(&self, k: &LatticeVector) -> Option<usize> {
        self.difference_index.get(k).copied()
    }

    /// 4 pi / |k|^2 for a nonzero lattice vector.
    pub fn coulomb_multiplier(&self, k: &LatticeVector) -> f64 {
        let k2 = self.momentum(k).norm_squared();
        if k2 == 0.0 {
            0.0
        } else {
            4.0 * PI / k2
        }
    }
}

pub(crate) fn sub(a: LatticeVector, b: LatticeVector) -> LatticeVector {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn neg(a: LatticeVector) -> LatticeVector {
    [-a[0], -a[1], -a[2]]
}

/// Fourier coefficients c_k of a periodic density on the difference set of a
/// box, indexed like [`BoxConfig::differences`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDensity {
    config: Arc<BoxConfig>,
    coeffs: Vec<Complex64>,
}

impl BoxDensity {
    pub fn zero(config: Arc<BoxConfig>) -> Self {
        let n = config.differences().len();
        Self {
            config,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_coefficients(config: Arc<BoxConfig>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != config.differences().len() {
            return Err(Error::DimensionMismatch {
                expected: config.differences().len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { config, coeffs })
    }

    /// Periodization of a Gaussian of charge z and width sigma:
    /// c_k = z exp(-sigma^2 k^2 / 2) / L^3.
    pub fn gaussian(config: Arc<BoxConfig>, charge: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!("width must be > 0, got {width}")));
        }
        let vol = config.volume();
        let coeffs = config
            .differences()
            .iter()
            .map(|k| {
                let k2 = config.momentum(k).norm_squared();
                Complex64::new(charge * (-0.5 * width * width * k2).exp() / vol, 0.0)
            })
            .collect();
        Ok(Self { config, coeffs })
    }

    /// Periodization of a radial density: c_k = (2 pi)^{3/2} nu^(|k|) / L^3.
    pub fn from_radial(config: Arc<BoxConfig>, nu: &ChargeDensity) -> Self {
        let vol = config.volume();
        let coeffs = config
            .differences()
            .iter()
            .map(|k| Complex64::new(nu.hat(config.momentum(k).norm()) / (FOURIER_PREFACTOR * vol), 0.0))
            .collect();
        Self { config, coeffs }
    }

    pub fn config(&self) -> &Arc<BoxConfig> {
        &self.config
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, k: &LatticeVector) -> Complex64 {
        self.config
            .difference_index(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    /// Total charge L^3 c_0.
    pub fn total_charge(&self) -> f64 {
        self.config.volume() * self.get(&[0, 0, 0]).re
    }

    /// max |c_{-k} - conj(c_k)|.
    pub fn hermitian_defect(&self) -> f64 {
        self.config
            .differences()
            .iter()
            .map(|k| (self.get(&neg(*k)) - self.get(k).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Position-space value sum_k c_k e^{ik.x}.
    pub fn position_value(&self, x: &Momentum) -> Complex64 {
        self.config
            .differences()
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| c * Complex64::from_polar(1.0, self.config.momentum(k).dot(x)))
            .sum()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_config(&self.config, &other.config)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self {
            config: self.config.clone(),
            coeffs,
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            config: self.config.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

pub(crate) fn same_config(a: &Arc<BoxConfig>, b: &Arc<BoxConfig>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::InvalidParameter("objects belong to different boxes".into()))
    }
}

/// A renormalized density matrix on the box, ordered as (mode, spinor).
#[derive(Debug, Clone)]
pub struct BoxState {
    pub gamma: HermitianMatrix,
    pub params: ModelParams,
    pub config: Arc<BoxConfig>,
}

impl BoxState {
    pub fn new(gamma: HermitianMatrix, params: ModelParams, config: Arc<BoxConfig>) -> Result<Self> {
        if gamma.nrows() != config.dim() || gamma.ncols() != config.dim() {
            return Err(Error::DimensionMismatch {
                expected: config.dim(),
                got: gamma.nrows(),
            });
        }
        crate::entropy::check_hermitian(&gamma)?;
        Ok(Self { gamma, params, config })
    }

    /// The 4x4 block gamma(p, q) for mode indices i, j.
    pub fn block(&self, i: usize, j: usize) -> DiracMatrix {
        DiracMatrix::from_fn(|a, b| self.gamma[(4 * i + a, 4 * j + b)])
    }

    pub fn difference(&self, other: &BoxState) -> Result<HermitianMatrix> {
        same_config(&self.config, &other.config)?;
        Ok(&self.gamma - &other.gamma)
    }
}

/// Reference state of a box computation: gamma_ref = g_beta(D_ref) with a
/// block-diagonal D_ref.
#[derive(Debug, Clone)]
pub struct BoxReference {
    pub state: BoxState,
    pub dirac: HermitianMatrix,
    pub mode: BoxMode,
    /// Spectrum of gamma_ref, from its 4x4 blocks.
    pub spectrum: Spectrum,
    /// |D_ref|.
    pub abs_dirac: HermitianMatrix,
    /// Sup-norm mismatch between g_beta(D_ref) and the interpolated vacuum
    /// profiles (zero for the reduced reference).
    pub interpolation_defect: f64,
}

impl BoxReference {
    fn assemble(state: BoxState, dirac: HermitianMatrix, mode: BoxMode, interpolation_defect: f64) -> Result<Self> {
        let spectrum = Spectrum::of_block_diagonal(&state.gamma, 4)?;
        let abs_dirac = Spectrum::of_block_diagonal(&dirac, 4)?.apply(f64::abs);
        Ok(Self {
            state,
            dirac,
            mode,
            spectrum,
            abs_dirac,
            interpolation_defect,
        })
    }
}

fn block_diagonal(config: &BoxConfig, mut f: impl FnMut(&Momentum) -> DiracMatrix) -> HermitianMatrix {
    let n = config.dim();
    let mut m = DMatrix::zeros(n, n);
    for (i, mode) in config.modes().iter().enumerate() {
        let b = f(&config.momentum(mode));
        for a in 0..4 {
            for c in 0..4 {
                m[(4 * i + a, 4 * i + c)] = b[(a, c)];
            }
        }
    }
    m
}

/// Per-block Fermi map of a 4x4 symbol D = d1 alpha.p + d0 beta, whose
/// eigenvalues are +-||D|| with ||D||^2 = d1^2 p^2 + d0^2.
fn thermal_block(d: &DiracMatrix, norm: f64, beta: f64) -> DiracMatrix {
    d * Complex64::new(g_beta(norm, beta) / norm, 0.0)
}

/// Free reference (blocks g_beta(D0(p))) or interacting reference (blocks
/// g_beta(D_vacuum(p)) with the vacuum's effective symbol interpolated at |p|).
pub fn build_reference(
    config: Arc<BoxConfig>,
    params: ModelParams,
    mode: BoxMode,
    vacuum: Option<&VacuumSolution>,
) -> Result<BoxReference> {
    params.validate()?;
    if (config.lambda() - params.lambda).abs() > 1e-12 * params.lambda {
        return Err(Error::InvalidParameter(format!(
            "box cutoff {} differs from model cutoff {}",
            config.lambda(),
            params.lambda
        )));
    }
    let beta = params.beta;
    match mode {
        BoxMode::Reduced => {
            let dirac = block_diagonal(&config, dirac_symbol);
            let gamma = block_diagonal(&config, |p| {
                thermal_block(&dirac_symbol(p), crate::momentum::energy(p.norm()), beta)
            });
            BoxReference::assemble(BoxState::new(gamma, params, config)?, dirac, mode, 0.0)
        }
        BoxMode::Full => {
            let vac = vacuum.ok_or_else(|| {
                Error::InvalidParameter("the full-mode reference needs an interacting vacuum".into())
            })?;
            if vac.params != params {
                return Err(Error::InvalidParameter(
                    "vacuum was computed for different parameters".into(),
                ));
            }
            if !vac.diagnostics.converged {
                return Err(Error::NotConverged {
                    iterations: vac.diagnostics.iterations,
                    residual: vac.diagnostics.residual,
                });
            }
            let mut defect: f64 = 0.0;
            let mut blocks = Vec::with_capacity(config.mode_count());
            for m in config.modes() {
                let p = config.momentum(m);
                let d = vac.dirac.matrix_at(&p)?;
                let r = p.norm();
                let (d0, d1) = (vac.dirac.d0.try_eval(r)?, vac.dirac.d1.try_eval(r)?);
                let norm = (d1 * d1 * r * r + d0 * d0).sqrt();
                let g = thermal_block(&d, norm, beta);
                let interp = vac.coefficients.matrix_at(&p)?;
                defect = defect.max((g - interp).camax());
                blocks.push((d, g));
            }
            let mut it = blocks.iter();
            let dirac = block_diagonal(&config, |_| it.next().expect("one block per mode").0);
            let mut it = blocks.iter();
            let gamma = block_diagonal(&config, |_| it.next().expect("one block per mode").1);
            BoxReference::assemble(BoxState::new(gamma, params, config)?, dirac, mode, defect)
        }
    }
}
