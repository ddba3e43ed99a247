//! Seeded randomized invariant suites shared by the command-line `check`
//! driver and the test harness.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entropy::{
    entropy_expansion_identity, hermitize, klein_margin, random_with_spectrum, rel_entropy_int,
    rel_entropy_log, trace_product, HermitianMatrix,
};
use crate::error::Result;
use crate::lattice::{
    build_reference, coercivity_terms, coulomb_energy, density_of, free_energy, free_energy_gradient,
    random_admissible_state, BoxConfig, BoxDensity, BoxMode, BoxReference, BoxState,
};
use crate::params::ModelParams;
use crate::radial::RadialProfile;
use crate::vacuum::{
    random_admissible_start, solve_interacting_vacuum, vacuum_energy_gap, VacuumCoefficients, VacuumModel,
    VacuumOptions, VacuumSolution,
};

/// Tolerances of the suites.
pub const ENTROPY_FORMS_TOL: f64 = 1e-8;
pub const KLEIN_SLACK: f64 = 1e-12;
pub const EXPANSION_TOL: f64 = 1e-9;
pub const VACUUM_GAP_SLACK: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckOptions {
    pub seed: u64,
    /// Harness self-test: shrink the entropy side of the Klein inequality by
    /// a factor 4 so that the suite must report failures.
    pub inject_klein_fault: bool,
}

/// Outcome of one suite. `worst` is the smallest normalized margin over all
/// cases (a case passes iff its margin is >= 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub seed: u64,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
    pub first_failure: Option<usize>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub suites: Vec<CheckOutcome>,
    pub passed: bool,
}

impl CheckReport {
    pub fn failed(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.suites.iter().filter(|s| !s.passed)
    }
}

/// Per-suite seed derived from the run seed and the suite name.
pub fn suite_seed(seed: u64, name: &str) -> u64 {
    name.bytes()
        .fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

struct Tally {
    name: &'static str,
    seed: u64,
    cases: usize,
    failures: usize,
    worst: f64,
    first_failure: Option<usize>,
}

impl Tally {
    fn new(name: &'static str, seed: u64) -> Self {
        Self {
            name,
            seed: suite_seed(seed, name),
            cases: 0,
            failures: 0,
            worst: f64::INFINITY,
            first_failure: None,
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn record(&mut self, margin: f64) {
        if !(margin >= 0.0) {
            self.failures += 1;
            self.first_failure.get_or_insert(self.cases);
        }
        self.worst = if margin.is_nan() { f64::NAN } else { self.worst.min(margin) };
        self.cases += 1;
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name.to_string(),
            seed: self.seed,
            cases: self.cases,
            failures: self.failures,
            worst: self.worst,
            first_failure: self.first_failure,
            passed: self.failures == 0 && self.cases > 0,
        }
    }
}

/// Log and integral forms of the relative entropy on random pairs, n in 2..=12,
/// reference spectrum in [-0.45, 0.45]. Margin: 1 - |log - int| / (tol (1 + |H|)).
pub fn entropy_representations(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("entropy_representations", seed);
    let mut rng = t.rng();
    for _ in 0..cases {
        let n = rng.random_range(2..=12);
        let g0 = random_with_spectrum(n, -0.45, 0.45, &mut rng)?;
        let g = random_with_spectrum(n, -0.5, 0.5, &mut rng)?;
        let a = rel_entropy_log(&g, &g0)?;
        let b = rel_entropy_int(&g, &g0, Default::default())?;
        t.record(1.0 - (a - b).abs() / (ENTROPY_FORMS_TOL * (1.0 + a.abs())));
    }
    Ok(t.finish())
}

fn random_hermitian<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> HermitianMatrix {
    hermitize(DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
    }))
}

/// T H(gamma, g_beta(H0)) >= max{tr[(gamma - gamma0)^2 |H0|], 2T tr[(gamma - gamma0)^2]}
/// on random (gamma, H0, beta). Margin: lhs - rhs + slack.
pub fn klein_coercivity(seed: u64, cases: usize, inject_fault: bool) -> Result<CheckOutcome> {
    let mut t = Tally::new("klein_coercivity", seed);
    let mut rng = t.rng();
    for _ in 0..cases {
        let n = rng.random_range(2..=10);
        let beta = rng.random_range(0.2..5.0);
        let h0 = random_with_spectrum(n, -4.0, 4.0, &mut rng)?;
        let g = random_with_spectrum(n, -0.5, 0.5, &mut rng)?;
        let (mut lhs, rhs) = klein_margin(&g, &h0, beta)?;
        if inject_fault {
            lhs *= 0.25;
        }
        t.record(lhs - rhs + KLEIN_SLACK);
    }
    Ok(t.finish())
}

/// Three-point expansion of the relative entropy on random interior triples.
/// Margin: 1 - residual / tol.
pub fn entropy_expansion(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("entropy_expansion", seed);
    let mut rng = t.rng();
    for _ in 0..cases {
        let n = rng.random_range(2..=10);
        let gp = random_with_spectrum(n, -0.5, 0.5, &mut rng)?;
        let g = random_with_spectrum(n, -0.45, 0.45, &mut rng)?;
        let g0 = random_with_spectrum(n, -0.45, 0.45, &mut rng)?;
        t.record(1.0 - entropy_expansion_identity(&gp, &g, &g0)? / EXPANSION_TOL);
    }
    Ok(t.finish())
}

/// Energy gap and Klein bound of the interacting vacuum on random admissible
/// states gamma = (1 - t) vacuum + t random.
pub fn vacuum_energy_gaps(seed: u64, vacuum: &VacuumSolution, cases: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("vacuum_energy_gap", seed);
    let mut rng = t.rng();
    for _ in 0..cases {
        let start = random_admissible_start(vacuum.coefficients.grid(), &mut rng)?;
        let s = rng.random_range(0.01..1.0);
        let g = vacuum.coefficients.combine(1.0 - s, &start, s)?;
        let gap = vacuum_energy_gap(&g, vacuum)?;
        t.record(gap.margin().min(gap.klein_margin()) + VACUUM_GAP_SLACK);
    }
    Ok(t.finish())
}

/// Central finite differences of the vacuum energy per volume along smooth
/// cosine directions. Margin: 1 - |fd - an| / (tol |an|).
pub fn vacuum_gradient(seed: u64, model: &VacuumModel, cases: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("vacuum_gradient", seed);
    let mut rng = t.rng();
    let grid = model.grid().clone();
    let lambda = grid.end();
    let h = 1e-4;
    for _ in 0..cases {
        let g = random_admissible_start(&grid, &mut rng)?;
        let mut smooth = || {
            let c: Vec<f64> = (0..4).map(|_| rng.random_range(-0.01..0.01)).collect();
            RadialProfile::from_fn(grid.clone(), move |r| {
                c.iter()
                    .enumerate()
                    .map(|(k, a)| a * (k as f64 * std::f64::consts::PI * r / lambda).cos())
                    .sum()
            })
        };
        let dir = VacuumCoefficients::new(smooth()?, smooth()?)?;
        let (g0, g1) = model.energy_gradient(&g)?;
        let ep = model.energy_per_volume(&g.combine(1.0, &dir, h)?)?;
        let em = model.energy_per_volume(&g.combine(1.0, &dir, -h)?)?;
        let fd = (ep - em) / (2.0 * h);
        let an: f64 = g0
            .iter()
            .zip(dir.f0.values())
            .chain(g1.iter().zip(dir.f1.values()))
            .map(|(a, b)| a * b)
            .sum();
        t.record(1.0 - (fd - an).abs() / (GRADIENT_TOL * an.abs()));
    }
    Ok(t.finish())
}

/// Box free energy above -(alpha/2) D(nu, nu) and coercivity
/// T H(gamma, ref) >= tr[|D_ref| (gamma - ref)^2] on random states.
pub fn box_bounds(
    name: &'static str,
    seed: u64,
    reference: &BoxReference,
    nu: &BoxDensity,
    cases: usize,
) -> Result<CheckOutcome> {
    let mut t = Tally::new(name, seed);
    let mut rng = t.rng();
    let config = reference.state.config.clone();
    let params = reference.state.params;
    let bound = -0.5 * params.alpha * coulomb_energy(nu, nu)?;
    for _ in 0..cases {
        let b = rng.random_range(0.05..0.499);
        let g = random_admissible_state(&config, b, &mut rng)?;
        let state = BoxState::new(g, params, config.clone())?;
        let f = free_energy(&state, nu, reference, reference.mode)?.total;
        let (th, weighted) = coercivity_terms(&state, reference)?;
        t.record((f - bound).min(th - weighted + KLEIN_SLACK));
    }
    Ok(t.finish())
}

/// Central finite differences of the box free energy against the trace
/// pairing with its gradient. Margin: 1 - |fd - an| / (tol |an|).
pub fn box_gradient(
    name: &'static str,
    seed: u64,
    reference: &BoxReference,
    nu: &BoxDensity,
    cases: usize,
) -> Result<CheckOutcome> {
    let mut t = Tally::new(name, seed);
    let mut rng = t.rng();
    let config = reference.state.config.clone();
    let params = reference.state.params;
    let h = 1e-4;
    for _ in 0..cases {
        let g = random_admissible_state(&config, 0.4, &mut rng)?;
        let dir = random_hermitian(config.dim(), 0.01, &mut rng);
        let state = BoxState::new(g.clone(), params, config.clone())?;
        let grad = free_energy_gradient(&state, nu, reference, reference.mode)?;
        let an = trace_product(&grad, &dir);
        let at = |s: f64| -> Result<f64> {
            let st = BoxState::new(&g + &dir * Complex64::new(s, 0.0), params, config.clone())?;
            Ok(free_energy(&st, nu, reference, reference.mode)?.total)
        };
        let fd = (at(h)? - at(-h)?) / (2.0 * h);
        t.record(1.0 - (fd - an).abs() / (GRADIENT_TOL * an.abs()));
    }
    Ok(t.finish())
}

/// D(rho, rho) >= 0 for densities of random Hermitian operators.
pub fn coulomb_positivity(seed: u64, config: &Arc<BoxConfig>, cases: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("coulomb_positivity", seed);
    let mut rng = t.rng();
    for _ in 0..cases {
        let rho = density_of(&random_hermitian(config.dim(), 1.0, &mut rng), config);
        t.record(coulomb_energy(&rho, &rho)?);
    }
    Ok(t.finish())
}

/// All suites at their default sizes.
pub fn run_all(opts: CheckOptions) -> Result<CheckReport> {
    let seed = opts.seed;
    let mut suites = vec![
        entropy_representations(seed, 500)?,
        klein_coercivity(seed, 500, opts.inject_klein_fault)?,
        entropy_expansion(seed, 100)?,
    ];
    let vac_opts = VacuumOptions {
        tol: 1e-13,
        ..Default::default()
    };
    let vacuum = solve_interacting_vacuum(&ModelParams::new(0.5, 1.0, 1.0)?, &vac_opts)?;
    suites.push(vacuum_energy_gaps(seed, &vacuum, 50)?);
    suites.push(vacuum_gradient(seed, &VacuumModel::new(vacuum.params)?, 20)?);

    let params = ModelParams::new(0.3, 1.0, 1.0)?;
    let box_vacuum = solve_interacting_vacuum(&params, &vac_opts)?;
    let config = Arc::new(BoxConfig::new(8.0, 1.0)?);
    let nu = BoxDensity::gaussian(config.clone(), 1.0, 1.0)?;
    let reduced = build_reference(config.clone(), params, BoxMode::Reduced, None)?;
    let full = build_reference(config.clone(), params, BoxMode::Full, Some(&box_vacuum))?;
    suites.push(box_bounds("box_bounds_reduced", seed, &reduced, &nu, 100)?);
    suites.push(box_bounds("box_bounds_full", seed, &full, &nu, 100)?);
    suites.push(box_gradient("box_gradient_reduced", seed, &reduced, &nu, 20)?);
    suites.push(box_gradient("box_gradient_full", seed, &full, &nu, 20)?);
    suites.push(coulomb_positivity(seed, &config, 100)?);
    let passed = suites.iter().all(|s| s.passed);
    Ok(CheckReport { seed, suites, passed })
}
