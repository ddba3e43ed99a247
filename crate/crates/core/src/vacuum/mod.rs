//! The translation-invariant free vacuum: the reduced vacuum in closed form
//! and the interacting vacuum by radial self-consistent iteration.

mod exchange;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::entropy::{fermi_logit, rel_entropy_log, scalar_s};
use crate::error::{Error, Result};
use crate::momentum::{energy, DiracMatrix, DiracRepresentation, Momentum, RadialGrid};
use crate::params::ModelParams;
use crate::radial::RadialProfile;

pub use exchange::{kernel_scalar, kernel_vector, phi, ExchangeOperator};

/// (2 pi)^-3.
const INV_VOLUME: f64 = 1.0 / (8.0 * PI * PI * PI);
/// Round-off allowed above ||gamma(p)|| = 1/2.
const NORM_ROUNDOFF: f64 = 1e-14;
/// Slack used when checking the closed inequalities of a converged vacuum.
const BOUND_SLACK: f64 = 1e-12;

/// Default radial grid on [0, lambda]: 4 panels of 24 nodes, refined near 0 and lambda.
pub fn vacuum_grid(lambda: f64) -> Result<RadialGrid> {
    RadialGrid::graded(lambda, &[0.15, 0.5, 0.85], 24)
}

/// gamma(p) = f1(|p|) alpha.p + f0(|p|) beta.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumCoefficients {
    pub f0: RadialProfile,
    pub f1: RadialProfile,
}

/// D(p) = d1(|p|) alpha.p + d0(|p|) beta.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveDirac {
    pub d0: RadialProfile,
    pub d1: RadialProfile,
}

fn two_coefficient_matrix(rep: DiracRepresentation, p: &Momentum, c1: f64, c0: f64) -> DiracMatrix {
    let [a1, a2, a3, b] = rep.generators();
    let z = |x: f64| Complex64::new(x, 0.0);
    (a1 * z(p.x) + a2 * z(p.y) + a3 * z(p.z)) * z(c1) + b * z(c0)
}

fn check_same_grid(a: &RadialProfile, b: &RadialProfile) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::InvalidParameter("coefficient profiles live on different grids".into()));
    }
    Ok(())
}

impl VacuumCoefficients {
    pub fn new(f0: RadialProfile, f1: RadialProfile) -> Result<Self> {
        check_same_grid(&f0, &f1)?;
        Ok(Self { f0, f1 })
    }

    pub fn from_fn<F0, F1>(grid: &RadialGrid, f0: F0, f1: F1) -> Result<Self>
    where
        F0: FnMut(f64) -> f64,
        F1: FnMut(f64) -> f64,
    {
        Self::new(
            RadialProfile::from_fn(grid.clone(), f0)?,
            RadialProfile::from_fn(grid.clone(), f1)?,
        )
    }

    pub fn grid(&self) -> &RadialGrid {
        self.f0.grid()
    }

    /// Matrix norm ||gamma(p)|| = sqrt(f1^2 p^2 + f0^2) at every node.
    pub fn norms(&self) -> Vec<f64> {
        self.grid()
            .nodes()
            .iter()
            .zip(self.f0.values().iter().zip(self.f1.values()))
            .map(|(&p, (&f0, &f1))| (f1 * f1 * p * p + f0 * f0).sqrt())
            .collect()
    }

    /// Largest nodal value of max(f0, f1); negative for a strictly negative pair.
    pub fn max_coefficient(&self) -> f64 {
        self.f0
            .values()
            .iter()
            .chain(self.f1.values())
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The 4x4 matrix gamma(p), interpolating the profiles at |p|.
    pub fn matrix_at(&self, p: &Momentum) -> Result<DiracMatrix> {
        self.matrix_at_in(DiracRepresentation::Standard, p)
    }

    pub fn matrix_at_in(&self, rep: DiracRepresentation, p: &Momentum) -> Result<DiracMatrix> {
        let r = p.norm();
        Ok(two_coefficient_matrix(rep, p, self.f1.try_eval(r)?, self.f0.try_eval(r)?))
    }

    /// Nodewise combination a * self + b * other.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_same_grid(&self.f0, &other.f0)?;
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()
        };
        Self::new(
            RadialProfile::new(self.grid().clone(), mix(self.f0.values(), other.f0.values()))?,
            RadialProfile::new(self.grid().clone(), mix(self.f1.values(), other.f1.values()))?,
        )
    }

    /// Rejects states with ||gamma(p)|| > 1/2 at some node.
    pub fn check_admissible(&self) -> Result<()> {
        match self.norms().into_iter().find(|&n| n > 0.5 + NORM_ROUNDOFF) {
            Some(n) => Err(Error::OutOfRange(n)),
            None => Ok(()),
        }
    }
}

impl EffectiveDirac {
    pub fn grid(&self) -> &RadialGrid {
        self.d0.grid()
    }

    /// ||D(p)|| = sqrt(d1^2 p^2 + d0^2) at every node.
    pub fn norms(&self) -> Vec<f64> {
        self.grid()
            .nodes()
            .iter()
            .zip(self.d0.values().iter().zip(self.d1.values()))
            .map(|(&p, (&d0, &d1))| (d1 * d1 * p * p + d0 * d0).sqrt())
            .collect()
    }

    pub fn matrix_at(&self, p: &Momentum) -> Result<DiracMatrix> {
        self.matrix_at_in(DiracRepresentation::Standard, p)
    }

    pub fn matrix_at_in(&self, rep: DiracRepresentation, p: &Momentum) -> Result<DiracMatrix> {
        let r = p.norm();
        Ok(two_coefficient_matrix(rep, p, self.d1.try_eval(r)?, self.d0.try_eval(r)?))
    }

    /// The thermal state g_beta(D): both coefficients scaled by
    /// -tanh(beta ||D|| / 2) / (2 ||D||).
    pub fn thermal_state(&self, beta: f64) -> Result<VacuumCoefficients> {
        let norms = self.norms();
        let c: Vec<f64> = norms.iter().map(|&n| thermal_factor(n, beta)).collect();
        let scale = |d: &[f64]| -> Vec<f64> { d.iter().zip(&c).map(|(d, c)| d * c).collect() };
        VacuumCoefficients::new(
            RadialProfile::new(self.grid().clone(), scale(self.d0.values()))?,
            RadialProfile::new(self.grid().clone(), scale(self.d1.values()))?,
        )
    }
}

/// -tanh(beta n / 2) / (2 n).
fn thermal_factor(n: f64, beta: f64) -> f64 {
    -(0.5 * beta * n).tanh() / (2.0 * n)
}

/// Lower bound (e^{1/T} - 1) / (2 (1 + e^{1/T})) = tanh(beta/2)/2 on ||gamma(p)||
/// for any state solving the self-consistent equation.
pub fn norm_lower_bound(beta: f64) -> f64 {
    0.5 * (0.5 * beta).tanh()
}

/// f0 = f1 = -tanh(beta E / 2) / (2E) on the default vacuum grid.
pub fn reduced_vacuum(params: &ModelParams) -> Result<VacuumCoefficients> {
    reduced_vacuum_on(&vacuum_grid(params.lambda)?, params)
}

pub fn reduced_vacuum_on(grid: &RadialGrid, params: &ModelParams) -> Result<VacuumCoefficients> {
    params.validate()?;
    let beta = params.beta;
    let f = |p: f64| thermal_factor(energy(p), beta);
    VacuumCoefficients::from_fn(grid, f, f)
}

/// Exchange functional on a fixed radial grid for given parameters.
#[derive(Debug, Clone)]
pub struct VacuumModel {
    params: ModelParams,
    exchange: ExchangeOperator,
}

impl VacuumModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        Self::on_grid(params, &vacuum_grid(params.lambda)?)
    }

    pub fn on_grid(params: ModelParams, grid: &RadialGrid) -> Result<Self> {
        params.validate()?;
        if (grid.end() - params.lambda).abs() > 1e-12 * params.lambda {
            return Err(Error::InvalidParameter(format!(
                "grid ends at {} but the cutoff is {}",
                grid.end(),
                params.lambda
            )));
        }
        Ok(Self {
            params,
            exchange: ExchangeOperator::new(grid)?,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &RadialGrid {
        self.exchange.grid()
    }

    pub fn exchange_operator(&self) -> &ExchangeOperator {
        &self.exchange
    }

    fn check_grid(&self, gamma: &VacuumCoefficients) -> Result<()> {
        if gamma.grid() != self.grid() {
            return Err(Error::InvalidParameter("state lives on a different grid".into()));
        }
        Ok(())
    }

    /// D_gamma = D0 - (alpha / (2 pi^2)) int gamma(q) / |p - q|^2 dq.
    pub fn exchange_shift(&self, gamma: &VacuumCoefficients) -> Result<EffectiveDirac> {
        self.check_grid(gamma)?;
        let (x0, x1) = self.exchange.apply(gamma.f0.values(), gamma.f1.values());
        let c = self.params.alpha / (2.0 * PI * PI);
        let d = |x: Vec<f64>| -> Vec<f64> { x.into_iter().map(|x| 1.0 - c * x).collect() };
        Ok(EffectiveDirac {
            d0: RadialProfile::new(self.grid().clone(), d(x0))?,
            d1: RadialProfile::new(self.grid().clone(), d(x1))?,
        })
    }

    /// Free energy per unit volume
    /// (2 pi)^-3 [ int tr(D0 gamma) - alpha/(2 pi)^2 iint tr(gamma gamma')/|p-q|^2 - T S(gamma) ].
    pub fn energy_per_volume(&self, gamma: &VacuumCoefficients) -> Result<f64> {
        self.check_grid(gamma)?;
        gamma.check_admissible()?;
        let grid = self.grid();
        let (f0, f1) = (gamma.f0.values(), gamma.f1.values());
        let norms = gamma.norms();
        let t = self.params.temperature();
        let mut local = 0.0;
        for (i, (&p, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            let kinetic = 4.0 * (f1[i] * p * p + f0[i]);
            let entropy = 4.0 * scalar_s(norms[i]);
            local += w * p * p * (kinetic - t * entropy);
        }
        let exchange = 4.0 * self.exchange.bilinear(f0, f1, f0, f1);
        let c = self.params.alpha / (4.0 * PI * PI);
        Ok(INV_VOLUME * 4.0 * PI * (local - c * exchange))
    }

    /// Gradient of [`energy_per_volume`](Self::energy_per_volume) with respect
    /// to the nodal values of (f0, f1).
    pub fn energy_gradient(&self, gamma: &VacuumCoefficients) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.exchange_shift(gamma)?;
        let grid = self.grid();
        let norms = gamma.norms();
        let t = self.params.temperature();
        let n = grid.len();
        let mut g0 = vec![0.0; n];
        let mut g1 = vec![0.0; n];
        for i in 0..n {
            let p = grid.nodes()[i];
            let w = grid.weights()[i];
            let norm = norms[i];
            if norm >= 0.5 {
                return Err(Error::OutOfRange(norm));
            }
            let f = if norm > 0.0 { fermi_logit(norm) / norm } else { 4.0 };
            let scale = INV_VOLUME * 4.0 * PI * w * p * p * 4.0;
            g0[i] = scale * (d.d0.values()[i] + t * f * gamma.f0.values()[i]);
            g1[i] = scale * p * p * (d.d1.values()[i] + t * f * gamma.f1.values()[i]);
        }
        Ok((g0, g1))
    }

    /// Exchange energy (alpha/(2 pi)^5) iint tr(delta(p) delta(q)) / |p-q|^2 dp dq.
    pub fn exchange_energy(&self, delta: &VacuumCoefficients) -> Result<f64> {
        self.check_grid(delta)?;
        let (f0, f1) = (delta.f0.values(), delta.f1.values());
        let c = self.params.alpha / (4.0 * PI * PI);
        Ok(INV_VOLUME * 4.0 * PI * c * 4.0 * self.exchange.bilinear(f0, f1, f0, f1))
    }

    /// (2 pi)^-3 int tr[w(p) delta(p)^2] dp for a radial scalar weight.
    fn weighted_square(&self, delta: &VacuumCoefficients, weight: &[f64]) -> f64 {
        let grid = self.grid();
        let (f0, f1) = (delta.f0.values(), delta.f1.values());
        let mut acc = 0.0;
        for (i, (&p, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            let sq = 4.0 * (f1[i] * f1[i] * p * p + f0[i] * f0[i]);
            acc += w * p * p * weight[i] * sq;
        }
        INV_VOLUME * 4.0 * PI * acc
    }

    /// Relative entropy per unit volume (2 pi)^-3 int tr f(gamma(p), gamma0(p)) dp.
    pub fn relative_entropy(&self, gamma: &VacuumCoefficients, gamma0: &VacuumCoefficients) -> Result<f64> {
        self.check_grid(gamma)?;
        self.check_grid(gamma0)?;
        let grid = self.grid();
        let mut acc = 0.0;
        for (i, (&p, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            let axis = Momentum::new(0.0, 0.0, p);
            let rep = DiracRepresentation::Standard;
            let a = two_coefficient_matrix(rep, &axis, gamma.f1.values()[i], gamma.f0.values()[i]);
            let b = two_coefficient_matrix(rep, &axis, gamma0.f1.values()[i], gamma0.f0.values()[i]);
            let a = DMatrix::from_iterator(4, 4, a.iter().copied());
            let b = DMatrix::from_iterator(4, 4, b.iter().copied());
            acc += w * p * p * rel_entropy_log(&a, &b)?;
        }
        Ok(INV_VOLUME * 4.0 * PI * acc)
    }

    /// Largest violation of the first-order conditions
    /// d + T F(||gamma||) f = 0 over the nodes and both components. Nodes
    /// with ||gamma|| within 1e-8 of 1/2 are skipped: the logarithm of
    /// 1/2 - ||gamma|| is not resolved there in double precision.
    pub fn stationarity(&self, gamma: &VacuumCoefficients) -> Result<f64> {
        let d = self.exchange_shift(gamma)?;
        let t = self.params.temperature();
        let mut worst: f64 = 0.0;
        for (i, &norm) in gamma.norms().iter().enumerate() {
            if norm > 0.5 + NORM_ROUNDOFF {
                return Err(Error::OutOfRange(norm));
            }
            if norm > 0.5 - 1e-8 {
                continue;
            }
            let f = if norm > 0.0 { fermi_logit(norm) / norm } else { 4.0 };
            let r0 = d.d0.values()[i] + t * f * gamma.f0.values()[i];
            let r1 = d.d1.values()[i] + t * f * gamma.f1.values()[i];
            worst = worst.max(r0.abs()).max(r1.abs());
        }
        Ok(worst)
    }

    /// Sup-norm residual of gamma - g_beta(D_gamma) over both coefficients.
    pub fn residual(&self, gamma: &VacuumCoefficients) -> Result<f64> {
        let target = self.exchange_shift(gamma)?.thermal_state(self.params.beta)?;
        Ok(sup_difference(gamma, &target))
    }

    /// Damped fixed-point iteration from `start`. Never fails on
    /// non-convergence; the outcome is recorded in the diagnostics.
    pub fn iterate(&self, start: VacuumCoefficients, opts: &VacuumOptions) -> Result<VacuumSolution> {
        self.params.validate_interacting()?;
        opts.validate()?;
        self.check_grid(&start)?;
        start.check_admissible()?;
        let m = opts.mixing;
        let mut gamma = start;
        let mut history = Vec::new();
        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        while iterations < opts.max_iterations {
            let target = self.exchange_shift(&gamma)?.thermal_state(self.params.beta)?;
            residual = sup_difference(&gamma, &target);
            history.push(residual);
            if residual < opts.tol {
                break;
            }
            gamma = gamma.combine(1.0 - m, &target, m)?;
            iterations += 1;
        }
        let converged = residual < opts.tol;
        let dirac = self.exchange_shift(&gamma)?;
        let diagnostics = self.diagnostics(&gamma, &dirac, iterations, residual, converged, history)?;
        Ok(VacuumSolution {
            params: self.params,
            coefficients: gamma,
            dirac,
            diagnostics,
        })
    }

    fn diagnostics(
        &self,
        gamma: &VacuumCoefficients,
        dirac: &EffectiveDirac,
        iterations: usize,
        residual: f64,
        converged: bool,
        history: Vec<f64>,
    ) -> Result<VacuumDiagnostics> {
        let norms = gamma.norms();
        let dnorms = dirac.norms();
        let nodes = self.grid().nodes();
        let dirac_margin = nodes
            .iter()
            .zip(&dnorms)
            .map(|(&p, &n)| n - energy(p))
            .fold(f64::INFINITY, f64::min);
        let min_d = dirac
            .d0
            .values()
            .iter()
            .chain(dirac.d1.values())
            .copied()
            .fold(f64::INFINITY, f64::min);
        let norm_min = norms.iter().copied().fold(f64::INFINITY, f64::min);
        let norm_max = norms.iter().copied().fold(0.0, f64::max);
        Ok(VacuumDiagnostics {
            iterations,
            residual,
            converged,
            energy: self.energy_per_volume(gamma)?,
            epsilon: -gamma.max_coefficient(),
            half_gap: dnorms
                .iter()
                .map(|&n| 1.0 / (1.0 + (self.params.beta * n).exp()))
                .fold(f64::INFINITY, f64::min),
            norm_min,
            norm_max,
            norm_lower_bound: norm_lower_bound(self.params.beta),
            min_d,
            dirac_margin,
            stationarity: self.stationarity(gamma)?,
            residual_history: history,
        })
    }
}

fn sup_difference(a: &VacuumCoefficients, b: &VacuumCoefficients) -> f64 {
    a.f0.values()
        .iter()
        .zip(b.f0.values())
        .chain(a.f1.values().iter().zip(b.f1.values()))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Controls of the damped self-consistent iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct VacuumOptions {
    pub mixing: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for VacuumOptions {
    fn default() -> Self {
        Self {
            mixing: 0.5,
            tol: 1e-10,
            max_iterations: 500,
        }
    }
}

impl VacuumOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mixing must lie in (0, 1], got {}",
                self.mixing
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Measured properties of an iterate of the vacuum equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VacuumDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub energy: f64,
    /// Largest epsilon with f0, f1 <= -epsilon at every node.
    pub epsilon: f64,
    /// 1/2 - max ||g_beta(D_gamma)(p)|| = min 1/(1 + e^{beta ||D(p)||}), which
    /// equals the gap of the iterate up to the residual.
    pub half_gap: f64,
    pub norm_min: f64,
    pub norm_max: f64,
    pub norm_lower_bound: f64,
    /// min over nodes of d0 and d1.
    pub min_d: f64,
    /// min over nodes of ||D(p)|| - E(p).
    pub dirac_margin: f64,
    pub stationarity: f64,
    pub residual_history: Vec<f64>,
}

impl VacuumDiagnostics {
    /// Names of the violated bounds of a converged vacuum.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.epsilon > 0.0) {
            out.push(format!("coefficients not strictly negative (epsilon = {:e})", self.epsilon));
        }
        if !(self.half_gap > 0.0) {
            out.push(format!("norm reaches 1/2 (gap {:e})", self.half_gap));
        }
        if self.min_d < 1.0 - BOUND_SLACK {
            out.push(format!("d0 or d1 below 1 (min {})", self.min_d));
        }
        if self.dirac_margin < -BOUND_SLACK {
            out.push(format!("||D(p)|| below E(p) (margin {:e})", self.dirac_margin));
        }
        if self.norm_min < self.norm_lower_bound - BOUND_SLACK {
            out.push(format!(
                "||gamma(p)|| = {} below the bound {}",
                self.norm_min, self.norm_lower_bound
            ));
        }
        out
    }
}

/// Converged (or last) iterate with its effective Dirac operator.
#[derive(Debug, Clone)]
pub struct VacuumSolution {
    pub params: ModelParams,
    pub coefficients: VacuumCoefficients,
    pub dirac: EffectiveDirac,
    pub diagnostics: VacuumDiagnostics,
}

/// D_gamma on the default grid.
pub fn exchange_shift(gamma: &VacuumCoefficients, params: &ModelParams) -> Result<EffectiveDirac> {
    VacuumModel::on_grid(*params, gamma.grid())?.exchange_shift(gamma)
}

/// Free energy per unit volume of a two-coefficient state.
pub fn energy_per_volume(gamma: &VacuumCoefficients, params: &ModelParams) -> Result<f64> {
    VacuumModel::on_grid(*params, gamma.grid())?.energy_per_volume(gamma)
}

/// Solves the interacting vacuum equation from the reduced vacuum. Fails on
/// non-convergence and on any violated bound of the converged state.
pub fn solve_interacting_vacuum(params: &ModelParams, opts: &VacuumOptions) -> Result<VacuumSolution> {
    let model = VacuumModel::new(*params)?;
    let start = reduced_vacuum_on(model.grid(), params)?;
    let sol = model.iterate(start, opts)?;
    sol.check()?;
    Ok(sol)
}

impl VacuumSolution {
    /// Error unless converged with every bound satisfied.
    pub fn check(&self) -> Result<()> {
        let d = &self.diagnostics;
        if !d.converged {
            return Err(Error::NotConverged {
                iterations: d.iterations,
                residual: d.residual,
            });
        }
        let v = d.violations();
        if !v.is_empty() {
            return Err(Error::Constraint(v.join("; ")));
        }
        Ok(())
    }
}

/// Random state of the two-coefficient form with f0, f1 < 0 and
/// ||gamma(p)|| <= 0.475: f = -a(p) / (2E(p)) with smooth a in [0.05, 0.95].
pub fn random_admissible_start<R: Rng + ?Sized>(grid: &RadialGrid, rng: &mut R) -> Result<VacuumCoefficients> {
    let lambda = grid.end();
    let profile = |rng: &mut R| {
        let base: f64 = rng.random_range(0.2..0.8);
        let terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|k| {
                (
                    rng.random_range(-0.05..0.05),
                    (k + 1) as f64 * PI / lambda,
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        move |p: f64| {
            let a = base + terms.iter().map(|(c, f, ph)| c * (f * p + ph).cos()).sum::<f64>();
            -a.clamp(0.05, 0.95) / (2.0 * energy(p))
        }
    };
    let a0 = profile(rng);
    let a1 = profile(rng);
    VacuumCoefficients::from_fn(grid, a0, a1)
}

/// Terms of the lower bound on T_T(gamma) - T_T(vacuum).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyGap {
    /// T_T(gamma) - T_T(vacuum).
    pub energy_gap: f64,
    /// (1 - pi alpha / 4) (2 pi)^-3 int tr[||D(p)|| (gamma - vacuum)^2].
    pub coercive_bound: f64,
    /// T times the relative entropy per unit volume.
    pub relative_entropy: f64,
    /// (2 pi)^-3 int tr[||D(p)|| (gamma - vacuum)^2].
    pub klein_bound: f64,
}

impl EnergyGap {
    pub fn margin(&self) -> f64 {
        self.energy_gap - self.coercive_bound
    }

    pub fn klein_margin(&self) -> f64 {
        self.relative_entropy - self.klein_bound
    }
}

/// Compares the energy of `gamma` with the interacting vacuum.
pub fn vacuum_energy_gap(gamma: &VacuumCoefficients, vacuum: &VacuumSolution) -> Result<EnergyGap> {
    let params = vacuum.params;
    let model = VacuumModel::on_grid(params, vacuum.coefficients.grid())?;
    let delta = gamma.combine(1.0, &vacuum.coefficients, -1.0)?;
    let dnorms = vacuum.dirac.norms();
    let klein_bound = model.weighted_square(&delta, &dnorms);
    let energy_gap = model.energy_per_volume(gamma)? - model.energy_per_volume(&vacuum.coefficients)?;
    Ok(EnergyGap {
        energy_gap,
        coercive_bound: (1.0 - PI * params.alpha / 4.0) * klein_bound,
        relative_entropy: params.temperature() * model.relative_entropy(gamma, &vacuum.coefficients)?,
        klein_bound,
    })
}

/// The chain exchange(delta) <= (pi alpha/4) int tr[|p| delta^2]
/// <= (pi alpha/4) int tr[||D(p)|| delta^2], each per unit volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KatoChain {
    pub exchange: f64,
    pub momentum_bound: f64,
    pub dirac_bound: f64,
}

impl KatoChain {
    pub fn holds(&self, slack: f64) -> bool {
        self.exchange <= self.momentum_bound + slack && self.momentum_bound <= self.dirac_bound + slack
    }
}

pub fn kato_chain(delta: &VacuumCoefficients, vacuum: &VacuumSolution) -> Result<KatoChain> {
    let params = vacuum.params;
    let model = VacuumModel::on_grid(params, vacuum.coefficients.grid())?;
    let c = PI * params.alpha / 4.0;
    let momenta: Vec<f64> = model.grid().nodes().to_vec();
    Ok(KatoChain {
        exchange: model.exchange_energy(delta)?,
        momentum_bound: c * model.weighted_square(delta, &momenta),
        dirac_bound: c * model.weighted_square(delta, &vacuum.dirac.norms()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(alpha: f64) -> ModelParams {
        ModelParams::new(alpha, 1.0, 1.0).unwrap()
    }

    #[test]
    fn reduced_vacuum_closed_form() {
        let v = reduced_vacuum(&params(0.0)).unwrap();
        let p0 = v.f0.eval(0.0);
        assert!((p0 + 0.5 * 0.5f64.tanh()).abs() < 1e-13, "{p0}");
        let cold = reduced_vacuum(&ModelParams::new(0.0, 50.0, 1.0).unwrap()).unwrap();
        for (&p, &f) in cold.grid().nodes().iter().zip(cold.f0.values()) {
            assert!((f + 0.5 / energy(p)).abs() < 1e-10);
        }
    }

    #[test]
    fn reduced_spectrum_at_cutoff() {
        let v = reduced_vacuum(&params(0.0)).unwrap();
        let m = v.matrix_at(&Momentum::new(0.6, 0.0, 0.8)).unwrap();
        let m = DMatrix::from_iterator(4, 4, m.iter().copied());
        let ev = m.symmetric_eigenvalues();
        let e = energy(1.0);
        let expected = 0.5 - (-e).exp() / (1.0 + (-e).exp());
        for x in ev.iter() {
            assert!((x.abs() - expected).abs() < 1e-12, "{x} {expected}");
        }
    }

    #[test]
    fn no_exchange_without_coupling() {
        let model = VacuumModel::new(params(0.0)).unwrap();
        let v = reduced_vacuum_on(model.grid(), model.params()).unwrap();
        let d = model.exchange_shift(&v).unwrap();
        assert!(d.d0.values().iter().chain(d.d1.values()).all(|&x| x == 1.0));
    }

    #[test]
    fn maximal_entropy_state_energy() {
        let model = VacuumModel::new(params(0.7)).unwrap();
        let zero = VacuumCoefficients::from_fn(model.grid(), |_| 0.0, |_| 0.0).unwrap();
        let e = model.energy_per_volume(&zero).unwrap();
        let exact = -(2f64.ln()) * 4.0 * (4.0 * PI / 3.0) * INV_VOLUME;
        assert!((e - exact).abs() < 1e-14, "{e} {exact}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let model = VacuumModel::new(params(0.5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_admissible_start(model.grid(), &mut rng).unwrap();
        let (g0, g1) = model.energy_gradient(&g).unwrap();
        let n = model.grid().len();
        let d0: Vec<f64> = (0..n).map(|_| rng.random_range(-0.01..0.01)).collect();
        let d1: Vec<f64> = (0..n).map(|_| rng.random_range(-0.01..0.01)).collect();
        let dir = VacuumCoefficients::new(
            RadialProfile::new(model.grid().clone(), d0.clone()).unwrap(),
            RadialProfile::new(model.grid().clone(), d1.clone()).unwrap(),
        )
        .unwrap();
        let h = 1e-4;
        let ep = model.energy_per_volume(&g.combine(1.0, &dir, h).unwrap()).unwrap();
        let em = model.energy_per_volume(&g.combine(1.0, &dir, -h).unwrap()).unwrap();
        let fd = (ep - em) / (2.0 * h);
        let an: f64 = g0.iter().zip(&d0).chain(g1.iter().zip(&d1)).map(|(a, b)| a * b).sum();
        assert!((fd - an).abs() < 2e-6 * an.abs(), "{fd} {an}");
    }

    #[test]
    fn interacting_vacuum_converges_with_bounds() {
        let sol = solve_interacting_vacuum(&params(0.5), &VacuumOptions::default()).unwrap();
        let d = &sol.diagnostics;
        assert!(d.min_d >= 1.0 && d.epsilon > 0.0 && d.dirac_margin >= 0.0);
        assert!(d.stationarity < 1e-8, "{}", d.stationarity);
        let reduced = reduced_vacuum(&params(0.5)).unwrap();
        assert!(d.energy < energy_per_volume(&reduced, &params(0.5)).unwrap());
    }

    #[test]
    fn zero_coupling_fixed_point_in_one_step() {
        let model = VacuumModel::new(params(0.0)).unwrap();
        let start = reduced_vacuum_on(model.grid(), model.params()).unwrap();
        let sol = model.iterate(start.clone(), &VacuumOptions::default()).unwrap();
        assert_eq!(sol.diagnostics.iterations, 0);
        assert_eq!(sol.coefficients, start);
    }

    #[test]
    fn gap_vanishes_at_vacuum() {
        let sol = solve_interacting_vacuum(&params(0.3), &VacuumOptions::default()).unwrap();
        let gap = vacuum_energy_gap(&sol.coefficients, &sol).unwrap();
        assert!(gap.energy_gap.abs() < 1e-15 && gap.coercive_bound == 0.0);
        assert!(gap.relative_entropy.abs() < 1e-14);
    }
}
