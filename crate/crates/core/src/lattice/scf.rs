use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::operators::{coulomb_energy, density_of, free_energy, mean_field_operator, EnergyTerms};
use super::{same_config, sub, LatticeVector, BoxConfig, BoxDensity, BoxMode, BoxReference, BoxState};
use crate::dense::matmul;
use crate::entropy::{g_beta, random_with_spectrum, rel_entropy_log_spectral, trace_product, HermitianMatrix, Spectrum};
use crate::error::{Error, Result};
use crate::momentum::energy;
use crate::params::{ModelParams, ALPHA_MAX};
use crate::screening::{fermi_ratio_same, ResponseKernel};

/// Controls of the damped box iteration. `mixing = None` selects 0.6 in
/// reduced mode and 0.3 in full mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScfOptions {
    pub mixing: Option<f64>,
    pub tol: f64,
    pub max_iterations: usize,
    /// Halve the step while the free energy increases (at most this many times).
    pub max_backtracks: usize,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self {
            mixing: None,
            tol: 1e-9,
            max_iterations: 500,
            max_backtracks: 12,
        }
    }
}

impl ScfOptions {
    pub fn mixing_for(&self, mode: BoxMode) -> f64 {
        self.mixing.unwrap_or(match mode {
            BoxMode::Reduced => 0.6,
            BoxMode::Full => 0.3,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub free_energy: f64,
    pub residual: f64,
    pub mixing: f64,
}

/// Outcome of a box iteration.
#[derive(Debug, Clone, Serialize)]
pub struct ScfDiagnostics {
    pub mode: BoxMode,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub energy: EnergyTerms,
    /// -(alpha/2) D(nu, nu).
    pub lower_bound: f64,
    /// T H(gamma, ref) - tr[|D_ref| (gamma - ref)^2].
    pub coercivity_margin: f64,
    /// 1/2 - max |eigenvalue of gamma|.
    pub spectral_gap: f64,
    /// Number of accepted steps that raised the free energy by more than 1e-10.
    pub descent_violations: usize,
    /// Full mode with the uniqueness condition satisfied: smallest eigenvalue
    /// of |D_gamma| - |D0| / d.
    pub operator_bound_margin: Option<f64>,
    pub history: Vec<IterationRecord>,
}

fn thermal_state(d: &HermitianMatrix, beta: f64) -> Result<HermitianMatrix> {
    Ok(Spectrum::of(d)?.apply(|x| g_beta(x, beta)))
}

fn frobenius(m: &HermitianMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Damped fixed-point iteration gamma <- (1 - m) gamma + m g_beta(D_gamma)
/// from `start` (the reference when `None`). Returns the last iterate even
/// when the tolerance is not reached.
pub fn scf_run(
    reference: &BoxReference,
    nu: &BoxDensity,
    opts: &ScfOptions,
    start: Option<HermitianMatrix>,
) -> Result<(BoxState, ScfDiagnostics)> {
    let params = reference.state.params;
    let mode = reference.mode;
    if mode == BoxMode::Full || params.alpha > 0.0 {
        params.validate_interacting()?;
    }
    let mixing = opts.mixing_for(mode);
    if !(mixing > 0.0 && mixing <= 1.0) {
        return Err(Error::InvalidParameter(format!("mixing must lie in (0, 1], got {mixing}")));
    }
    same_config(&reference.state.config, nu.config())?;
    if reference.interpolation_defect >= opts.tol / 10.0 {
        return Err(Error::Constraint(format!(
            "reference interpolation defect {:e} is not below tol / 10",
            reference.interpolation_defect
        )));
    }
    let config = reference.state.config.clone();
    let mut gamma = BoxState::new(
        start.unwrap_or_else(|| reference.state.gamma.clone()),
        params,
        config.clone(),
    )?;
    let beta = params.beta;
    let mut energy = free_energy(&gamma, nu, reference, mode)?.total;
    let mut history = Vec::new();
    let mut descent_violations = 0;
    let mut iterations = 0;
    let mut residual;
    loop {
        let d = mean_field_operator(&gamma, nu, reference, mode)?;
        let target = thermal_state(&d, beta)?;
        let step = &target - &gamma.gamma;
        residual = frobenius(&step);
        history.push(IterationRecord {
            iteration: iterations,
            free_energy: energy,
            residual,
            mixing,
        });
        if residual < opts.tol || iterations >= opts.max_iterations {
            break;
        }
        let mut m = mixing;
        let mut backtracks = 0;
        let (next, next_energy) = loop {
            let cand = BoxState::new(&gamma.gamma + &step * Complex64::new(m, 0.0), params, config.clone())?;
            let e = free_energy(&cand, nu, reference, mode)?.total;
            if e <= energy + 1e-10 * energy.abs().max(1e-12) || backtracks >= opts.max_backtracks {
                break (cand, e);
            }
            m *= 0.5;
            backtracks += 1;
        };
        if next_energy > energy + 1e-10 {
            descent_violations += 1;
        }
        if let Some(last) = history.last_mut() {
            last.mixing = m;
        }
        gamma = next;
        energy = next_energy;
        iterations += 1;
    }
    let converged = residual < opts.tol;
    let terms = free_energy(&gamma, nu, reference, mode)?;
    let q = gamma.difference(&reference.state)?;
    let coercivity_margin = terms.entropy - trace_product(&matmul(&q, &q), &reference.abs_dirac);
    let spec = Spectrum::of(&gamma.gamma)?;
    let spectral_gap = 0.5 - spec.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let d_nu = coulomb_energy(nu, nu)?;
    let operator_bound_margin = if mode == BoxMode::Full {
        let cond = uniqueness_condition(&params, d_nu);
        match (cond.satisfied, cond.d) {
            (true, Some(d)) => Some(operator_bound(&gamma, nu, reference, d)?),
            _ => None,
        }
    } else {
        None
    };
    let diagnostics = ScfDiagnostics {
        mode,
        iterations,
        residual,
        converged,
        energy: terms,
        lower_bound: -0.5 * params.alpha * d_nu,
        coercivity_margin,
        spectral_gap,
        descent_violations,
        operator_bound_margin,
        history,
    };
    Ok((gamma, diagnostics))
}

/// Like [`scf_run`] but failing on non-convergence.
pub fn scf_solve(
    reference: &BoxReference,
    nu: &BoxDensity,
    opts: &ScfOptions,
    start: Option<HermitianMatrix>,
) -> Result<(BoxState, ScfDiagnostics)> {
    let (state, diag) = scf_run(reference, nu, opts, start)?;
    if !diag.converged {
        return Err(Error::NotConverged {
            iterations: diag.iterations,
            residual: diag.residual,
        });
    }
    Ok((state, diag))
}

/// Smallest eigenvalue of |D_gamma| - |D0| / d.
fn operator_bound(gamma: &BoxState, nu: &BoxDensity, reference: &BoxReference, d: f64) -> Result<f64> {
    let dg = mean_field_operator(gamma, nu, reference, reference.mode)?;
    let abs_dg = Spectrum::of(&dg)?.apply(f64::abs);
    let config = &gamma.config;
    let mut m = abs_dg;
    for (i, mode) in config.modes().iter().enumerate() {
        let e = energy(config.momentum(mode).norm());
        for a in 0..4 {
            m[(4 * i + a, 4 * i + a)] -= Complex64::new(e / d, 0.0);
        }
    }
    Ok(Spectrum::of(&m)?.values[0])
}

/// The constant d of the uniqueness criterion for the full functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessCondition {
    /// 1 - alpha (pi/2 sqrt((alpha/2)/(1 - alpha pi/4)) + pi^{1/6} 2^{11/6}) D(nu,nu)^{1/2}.
    pub bracket: f64,
    pub d: Option<f64>,
    /// alpha pi d / 4.
    pub coupling: Option<f64>,
    pub satisfied: bool,
}

pub fn uniqueness_condition(params: &ModelParams, d_nu_nu: f64) -> UniquenessCondition {
    let a = params.alpha;
    let inner = if a < ALPHA_MAX {
        PI / 2.0 * ((a / 2.0) / (1.0 - a * PI / 4.0)).sqrt() + PI.powf(1.0 / 6.0) * 2f64.powf(11.0 / 6.0)
    } else {
        f64::INFINITY
    };
    let bracket = 1.0 - a * inner * d_nu_nu.max(0.0).sqrt();
    let bracket = if bracket.is_nan() { f64::NEG_INFINITY } else { bracket };
    if bracket > 0.0 {
        let d = 1.0 / bracket;
        let coupling = a * PI * d / 4.0;
        UniquenessCondition {
            bracket,
            d: Some(d),
            coupling: Some(coupling),
            satisfied: (0.0..=1.0).contains(&coupling),
        }
    } else {
        UniquenessCondition {
            bracket,
            d: None,
            coupling: None,
            satisfied: false,
        }
    }
}

/// Induced versus external charge of a converged reduced-mode state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChargeReport {
    /// L^3 c_0(gamma - ref).
    pub induced_charge: f64,
    /// L^3 nu_0.
    pub external_charge: f64,
    pub relative_mismatch: f64,
    /// c_k / nu_k averaged over the smallest nonzero shell, the box proxy of
    /// the k -> 0 limit.
    pub first_shell_ratio: Option<f64>,
}

pub fn charge_screening_check(state: &BoxState, reference: &BoxReference, nu: &BoxDensity) -> Result<ChargeReport> {
    let q = state.difference(&reference.state)?;
    let rho = density_of(&q, &state.config);
    let induced = rho.total_charge();
    let external = nu.total_charge();
    let relative_mismatch = if external == 0.0 {
        induced.abs()
    } else {
        ((induced - external) / external).abs()
    };
    let config = &state.config;
    let norm2 = |k: &LatticeVector| k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    let shell: Vec<f64> = config
        .differences()
        .iter()
        .filter(|k| norm2(k) == 1 && nu.get(k).norm() > 1e-300)
        .map(|k| (rho.get(k) / nu.get(k)).re)
        .collect();
    let first_shell_ratio = (!shell.is_empty()).then(|| shell.iter().sum::<f64>() / shell.len() as f64);
    Ok(ChargeReport {
        induced_charge: induced,
        external_charge: external,
        relative_mismatch,
        first_shell_ratio,
    })
}

/// Box analog of the polarization kernel: -(4 pi / L^3) sum over mode pairs
/// (p, p - k) of tr[P_s(p) P_s'(p - k)] times the divided difference of
/// g_beta between the energies s E(p) and s' E(p - k).
pub fn lattice_response_kernel(config: &BoxConfig, beta: f64, k: &LatticeVector) -> f64 {
    let mut acc = 0.0;
    for m in config.modes() {
        let q = sub(*m, *k);
        if config.mode_index(&q).is_none() {
            continue;
        }
        let (p, q) = (config.momentum(m), config.momentum(&q));
        let (ep, eq) = (energy(p.norm()), energy(q.norm()));
        let overlap = (p.dot(&q) + 1.0) / (ep * eq);
        for s in [-1.0, 1.0] {
            for t in [-1.0, 1.0] {
                // (g(a) - g(b)) / (a - b) = -fermi_ratio_same(a, b)
                acc -= (1.0 + s * t * overlap) * fermi_ratio_same(beta, s * ep, t * eq);
            }
        }
    }
    -4.0 * PI * acc / config.volume()
}

/// Shell-averaged induced density c_k(Q) / nu_k compared with the linear
/// prediction alpha C(|k|) / (|k|^2 + alpha C(|k|)), for the continuum
/// kernel and for its box analog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellRatio {
    pub norm_squared: i32,
    pub k: f64,
    pub members: usize,
    pub ratio: f64,
    pub predicted: f64,
    pub relative_error: f64,
    pub lattice_predicted: f64,
    pub lattice_error: f64,
}

pub fn shell_ratios(
    state: &BoxState,
    reference: &BoxReference,
    nu: &BoxDensity,
    kernel: &ResponseKernel,
) -> Result<Vec<ShellRatio>> {
    let q = state.difference(&reference.state)?;
    let rho = density_of(&q, &state.config);
    let config = &state.config;
    let alpha = state.params.alpha;
    let s = config.spacing();
    let beta = state.params.beta;
    // per shell: sum of c_k / nu_k, sum of box-kernel predictions, member count
    let mut shells: BTreeMap<i32, (f64, f64, usize)> = BTreeMap::new();
    for k in config.differences() {
        let n2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let v = nu.get(k);
        if n2 == 0 || v.norm() < 1e-300 {
            continue;
        }
        if (n2 as f64).sqrt() * s > 2.0 * config.lambda() {
            continue;
        }
        let kk = (n2 as f64).sqrt() * s;
        let cl = alpha * lattice_response_kernel(config, beta, k);
        let e = shells.entry(n2).or_insert((0.0, 0.0, 0));
        e.0 += (rho.get(k) / v).re;
        e.1 += cl / (kk * kk + cl);
        e.2 += 1;
    }
    Ok(shells
        .into_iter()
        .map(|(n2, (sum, lattice_sum, count))| {
            let k = (n2 as f64).sqrt() * s;
            let c = alpha * kernel.at(k);
            let predicted = c / (k * k + c);
            let lattice_predicted = lattice_sum / count as f64;
            let ratio = sum / count as f64;
            ShellRatio {
                norm_squared: n2,
                k,
                members: count,
                ratio,
                predicted,
                relative_error: ((ratio - predicted) / predicted).abs(),
                lattice_predicted,
                lattice_error: ((ratio - lattice_predicted) / lattice_predicted).abs(),
            }
        })
        .collect())
}

/// Largest spread of the coefficients over the orbits of the cubic point
/// group (sign changes and permutations of the lattice indices).
pub fn orbit_spread(rho: &BoxDensity) -> f64 {
    let mut orbits: BTreeMap<[i32; 3], Vec<Complex64>> = BTreeMap::new();
    for (k, c) in rho.config().differences().iter().zip(rho.coefficients()) {
        let mut key = [k[0].abs(), k[1].abs(), k[2].abs()];
        key.sort_unstable();
        orbits.entry(key).or_default().push(*c);
    }
    orbits
        .values()
        .map(|cs| {
            let first = cs[0];
            cs.iter().map(|c| (c - first).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Random state with spectrum uniform in [-bound, bound] and random eigenvectors.
pub fn random_admissible_state<R: Rng + ?Sized>(
    config: &Arc<BoxConfig>,
    bound: f64,
    rng: &mut R,
) -> Result<HermitianMatrix> {
    if !(bound > 0.0 && bound < 0.5) {
        return Err(Error::InvalidParameter(format!("spectral bound must lie in (0, 1/2), got {bound}")));
    }
    random_with_spectrum(config.dim(), -bound, bound, rng)
}

/// T H(gamma, ref) and tr[|D_ref| (gamma - ref)^2] for a box state.
pub fn coercivity_terms(state: &BoxState, reference: &BoxReference) -> Result<(f64, f64)> {
    let q = state.difference(&reference.state)?;
    let h = rel_entropy_log_spectral(&state.gamma, &reference.spectrum)?;
    Ok((state.params.temperature() * h, trace_product(&matmul(&q, &q), &reference.abs_dirac)))
}
