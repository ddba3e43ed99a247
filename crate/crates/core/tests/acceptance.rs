//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! quantities of every sub-check underneath. Sub-checks marked `known` are
//! reported but do not fail the run.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbdf_core::checks;
use tbdf_core::entropy::{fermi_map, random_with_spectrum, trace_product, Spectrum};
use tbdf_core::lattice::*;
use tbdf_core::momentum::energy;
use tbdf_core::quadrature::GaussLegendre;
use tbdf_core::radial::{decay_bound_check, decay_coefficient, ChargeDensity};
use tbdf_core::screening::*;
use tbdf_core::vacuum::{random_admissible_start, solve_interacting_vacuum, VacuumModel, VacuumOptions, VacuumSolution};
use tbdf_core::{ModelParams, Result};

const SEED: u64 = 20240601;

struct Check {
    name: String,
    passed: bool,
    known: bool,
    detail: String,
}

struct Criterion {
    checks: Vec<Check>,
}

impl Criterion {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            known: false,
            detail,
        });
    }

    fn known(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            known: true,
            detail,
        });
    }

    fn outcome(&mut self, o: &checks::CheckOutcome) {
        self.check(
            &o.name,
            o.passed,
            format!("{} cases, {} failures, worst margin {:.3e}", o.cases, o.failures, o.worst),
        );
    }
}

fn params(alpha: f64, beta: f64) -> Result<ModelParams> {
    ModelParams::new(alpha, beta, 1.0)
}

fn tight_vacuum(alpha: f64) -> Result<VacuumSolution> {
    let opts = VacuumOptions {
        tol: 1e-13,
        ..Default::default()
    };
    solve_interacting_vacuum(&params(alpha, 1.0)?, &opts)
}

fn induced(state: &BoxState, reference: &BoxReference) -> Result<BoxDensity> {
    Ok(density_of(&state.difference(&reference.state)?, &state.config))
}

fn sup_distance(a: &BoxDensity, b: &BoxDensity) -> f64 {
    a.config().volume()
        * a.coefficients()
            .iter()
            .zip(b.coefficients())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
}

fn entropy_forms() -> Result<Criterion> {
    let mut c = Criterion::new();
    c.outcome(&checks::entropy_representations(SEED, 500)?);
    Ok(c)
}

fn klein() -> Result<Criterion> {
    let mut c = Criterion::new();
    c.outcome(&checks::klein_coercivity(SEED, 500, false)?);
    // The unscaled variant max{tr[X^2 |H0|], 2 tr X^2} holds only for beta <= 1.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut hot, mut cold) = (0, 0);
    for _ in 0..500 {
        let n = rng.random_range(2..=10);
        let beta = rng.random_range(0.2..5.0);
        let h0 = random_with_spectrum(n, -4.0, 4.0, &mut rng)?;
        let g = random_with_spectrum(n, -0.5, 0.5, &mut rng)?;
        let (lhs, _) = tbdf_core::entropy::klein_margin(&g, &h0, beta)?;
        let x = &g - &fermi_map(&h0, beta)?;
        let x2 = &x * &x;
        let weighted = trace_product(&x2, &Spectrum::of(&h0)?.apply(f64::abs));
        if lhs < weighted.max(2.0 * x2.trace().re) - checks::KLEIN_SLACK {
            if beta <= 1.0 {
                hot += 1;
            } else {
                cold += 1;
            }
        }
    }
    c.known(
        "unscaled 2 tr X^2 form",
        hot + cold == 0,
        format!("violations: {hot} with beta <= 1, {cold} with beta > 1"),
    );
    Ok(c)
}

fn free_vacuum_closed_form() -> Result<Criterion> {
    let mut c = Criterion::new();
    for beta in [1.0, 50.0] {
        let sol = solve_interacting_vacuum(&params(0.0, beta)?, &VacuumOptions::default())?;
        let coef = &sol.coefficients;
        let mut err = 0.0f64;
        let mut zero_t = 0.0f64;
        for (i, &r) in coef.grid().nodes().iter().enumerate() {
            let e = energy(r);
            let exact = -(0.5 * beta * e).tanh() / (2.0 * e);
            err = err.max((coef.f0.values()[i] - exact).abs()).max((coef.f1.values()[i] - exact).abs());
            zero_t = zero_t
                .max((coef.f0.values()[i] + 0.5 / e).abs())
                .max((coef.f1.values()[i] + 0.5 / e).abs());
        }
        c.check(
            &format!("closed form, beta = {beta}"),
            err <= 1e-12,
            format!("max nodal error {err:.3e} over {} nodes", coef.grid().len()),
        );
        if beta == 50.0 {
            c.check("zero-temperature limit", zero_t <= 1e-10, format!("max |f + 1/(2E)| {zero_t:.3e}"));
        }
    }
    Ok(c)
}

fn interacting_vacuum() -> Result<Criterion> {
    let mut c = Criterion::new();
    let p = params(0.5, 1.0)?;
    let sol = solve_interacting_vacuum(&p, &VacuumOptions::default())?;
    let d = &sol.diagnostics;
    c.check(
        "convergence",
        d.converged && d.residual < 1e-10,
        format!("residual {:.3e} after {} iterations", d.residual, d.iterations),
    );
    c.check("d0, d1 >= 1", d.min_d >= 1.0, format!("min d {:.6}", d.min_d));
    c.check("||D(p)|| >= E(p)", d.dirac_margin >= 0.0, format!("min margin {:.3e}", d.dirac_margin));
    c.check("f0, f1 <= -eps", d.epsilon > 0.0, format!("eps {:.6}", d.epsilon));
    let bound = (1f64.exp() - 1.0) / (2.0 * (1.0 + 1f64.exp()));
    c.check(
        "||gamma(p)|| lower bound",
        d.norm_min >= bound,
        format!("min norm {:.6} vs {bound:.6}", d.norm_min),
    );
    let model = VacuumModel::new(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut all_converged = true;
    for _ in 0..5 {
        let start = random_admissible_start(model.grid(), &mut rng)?;
        let other = model.iterate(start, &VacuumOptions::default())?;
        all_converged &= other.diagnostics.converged;
        let a = &other.coefficients;
        let b = &sol.coefficients;
        for (x, y) in a.f0.values().iter().zip(b.f0.values()).chain(a.f1.values().iter().zip(b.f1.values())) {
            worst = worst.max((x - y).abs());
        }
    }
    c.check(
        "5-start uniqueness",
        all_converged && worst <= 1e-9,
        format!("max nodal spread {worst:.3e}"),
    );
    Ok(c)
}

fn gradients() -> Result<Criterion> {
    let mut c = Criterion::new();
    c.outcome(&checks::vacuum_gradient(SEED, &VacuumModel::new(params(0.5, 1.0)?)?, 20)?);
    let p = params(0.3, 1.0)?;
    let vac = tight_vacuum(0.3)?;
    let config = Arc::new(BoxConfig::new(8.0, 1.0)?);
    let nu = BoxDensity::gaussian(config.clone(), 1.0, 1.0)?;
    let reduced = build_reference(config.clone(), p, BoxMode::Reduced, None)?;
    let full = build_reference(config, p, BoxMode::Full, Some(&vac))?;
    c.outcome(&checks::box_gradient("box_gradient_reduced", SEED, &reduced, &nu, 20)?);
    c.outcome(&checks::box_gradient("box_gradient_full", SEED, &full, &nu, 20)?);
    Ok(c)
}

/// (8 beta / pi) \int_1^{E(Lambda)} t sqrt(t^2 - 1) n(t) n(-t) dt with t = cosh u.
fn c1_at_zero_oracle(beta: f64, lambda: f64) -> f64 {
    let rule = GaussLegendre::new(40);
    let u_max = energy(lambda).acosh();
    let panels = 16;
    let h = u_max / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        acc += rule.integrate(i as f64 * h, (i + 1) as f64 * h, |u| {
            let t = u.cosh();
            let s = u.sinh();
            let occ = 1.0 / ((1.0 + (-beta * t).exp()) * (1.0 + (beta * t).exp()));
            t * s * s * occ
        });
    }
    8.0 * beta / PI * acc
}

fn polarization() -> Result<Criterion> {
    let mut c = Criterion::new();
    let opts = ResponseOptions::default();
    for beta in [1.0, 2.0] {
        let p = params(0.3, beta)?;
        let mut worst = 0.0f64;
        for i in 1..=20 {
            let k = 2.0 * p.lambda * i as f64 / 21.0;
            let direct = response_direct(k, &p, opts)?;
            let (c1, c2) = response_reduced(k, &p, opts)?;
            worst = worst.max((direct - (c1 + c2)).abs() / direct);
        }
        c.check(
            &format!("direct vs reduced, beta = {beta}"),
            worst <= 1e-6,
            format!("max relative difference {worst:.3e} on 20 k-points"),
        );
        let edge = 2.0 * p.lambda;
        let at_edge = response_direct(edge, &p, opts)?.abs();
        let (r1, r2) = response_reduced(edge, &p, opts)?;
        let h = 1e-8;
        let slope = (response_direct(edge, &p, opts)? - response_direct(edge - h, &p, opts)?) / h;
        c.check(
            &format!("cutoff, beta = {beta}"),
            at_edge < 1e-8 && (r1 + r2).abs() < 1e-8 && slope.abs() < 1e-8,
            format!("C(2L) = {at_edge:.1e}, reduced {:.1e}, C'(2L) ~ {slope:.3e}", r1 + r2),
        );
        let ours = c1_at_zero(&p);
        let oracle = c1_at_zero_oracle(beta, p.lambda);
        c.check(
            &format!("C1(0), beta = {beta}"),
            (ours - oracle).abs() <= 1e-10,
            format!("{ours:.15} vs oracle {oracle:.15}"),
        );
    }
    Ok(c)
}

fn debye() -> Result<Criterion> {
    let mut c = Criterion::new();
    let p = params(0.3, 1.0)?;
    let kernel = ResponseKernel::new(&p)?;
    let ks = build_screening_kernels(&p, &kernel)?;
    let nu = ChargeDensity::gaussian(1.0, 1.0)?;
    let res = linear_screen(&nu, &p, &ks, ScreeningOptions::default())?;
    let rep = debye_report(&res, DebyeOptions::default())?;
    c.check(
        "sum rule",
        (rep.sum_rule_ratio - 1.0).abs() < 1e-14,
        format!("rho_tot^(0) / nu^(0) = {}", rep.sum_rule_ratio),
    );
    c.check(
        "integrated charge",
        rep.charge_relative_error <= 1e-4,
        format!(
            "{:.8} vs {} (relative {:.2e}, radius {})",
            rep.integrated_charge, rep.external_charge, rep.charge_relative_error, rep.charge_radius
        ),
    );
    c.check(
        "x|V| tail",
        rep.tail_ratio < 1e-3,
        format!("x|V(x)| at 50 / at 1 = {:.3e}", rep.tail_ratio),
    );
    c.check(
        "decay exponent",
        rep.decay_exponent > 2.0,
        format!("fitted exponent {:.3} on [10, 40]", rep.decay_exponent),
    );
    let xs: Vec<f64> = (0..=180).map(|i| 5.0 + 0.25 * i as f64).collect();
    for (name, b) in [("b1", ks.b1hat()), ("b2", ks.b2hat())] {
        let coeffs = decay_coefficient(b)?;
        let d = decay_bound_check(b, &coeffs, &xs)?;
        c.check(
            &format!("{name} decay envelope"),
            d.sup_x4.is_finite() && d.within(0.1),
            format!("sup x^4|{name}| = {:.4e}, max |{name}| / envelope = {:.4}", d.sup_x4, d.max_ratio),
        );
    }
    Ok(c)
}

fn reduced_box() -> Result<Criterion> {
    let mut c = Criterion::new();
    let opts = ScfOptions::default();
    let p = params(0.3, 1.0)?;

    let config = Arc::new(BoxConfig::new(12.0, 1.0)?);
    let r = build_reference(config.clone(), p, BoxMode::Reduced, None)?;
    let zero = BoxDensity::zero(config.clone());
    let (state, diag) = scf_solve(&r, &zero, &opts, None)?;
    let dist = (&state.gamma - &r.state.gamma).camax();
    c.check(
        "nu = 0",
        diag.iterations <= 2 && diag.residual < opts.tol && diag.energy.total.abs() < 1e-12 && dist < 1e-12,
        format!(
            "{} iterations, F = {:.1e}, |gamma - ref| = {dist:.1e}",
            diag.iterations, diag.energy.total
        ),
    );

    let nu = BoxDensity::gaussian(config.clone(), 1.0, 1.0)?;
    let (base, diag) = scf_solve(&r, &nu, &opts, None)?;
    let path_min = diag.history.iter().map(|h| h.free_energy).fold(f64::INFINITY, f64::min);
    c.check(
        "lower bound on path, L = 12",
        path_min >= diag.lower_bound,
        format!("min F on path {path_min:.6e} >= {:.6e}", diag.lower_bound),
    );
    let rho = induced(&base, &r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let start = random_admissible_state(&config, 0.45, &mut rng)?;
        let (other, _) = scf_solve(&r, &nu, &opts, Some(start))?;
        worst = worst.max(sup_distance(&induced(&other, &r)?, &rho));
    }
    c.check("5-start uniqueness", worst <= 1e-6, format!("sup L^3 |delta c_k| = {worst:.3e}"));

    let weak = params(0.05, 1.0)?;
    let config = Arc::new(BoxConfig::new(24.0, 1.0)?);
    let r = build_reference(config.clone(), weak, BoxMode::Reduced, None)?;
    let nu = BoxDensity::gaussian(config, 1.0, 1.0)?;
    let (state, _) = scf_solve(&r, &nu, &opts, None)?;
    let shells = shell_ratios(&state, &r, &nu, &ResponseKernel::new(&weak)?)?;
    let first: Vec<&ShellRatio> = shells.iter().take(3).collect();
    let worst = first.iter().map(|s| s.relative_error.abs()).fold(0.0, f64::max);
    c.check(
        "weak-coupling shells, L = 24",
        first.len() == 3 && worst <= 0.1,
        format!(
            "relative errors {:?}",
            first.iter().map(|s| format!("{:.4}", s.relative_error)).collect::<Vec<_>>()
        ),
    );

    let mut mismatches = Vec::new();
    let mut shell = Vec::new();
    for l in [8.0, 12.0, 16.0] {
        let config = Arc::new(BoxConfig::new(l, 1.0)?);
        let r = build_reference(config.clone(), p, BoxMode::Reduced, None)?;
        let nu = BoxDensity::gaussian(config, 1.0, 1.0)?;
        let (state, _) = scf_solve(&r, &nu, &opts, None)?;
        let report = charge_screening_check(&state, &r, &nu)?;
        mismatches.push(report.relative_mismatch);
        shell.push(report.first_shell_ratio.unwrap_or(f64::NAN));
    }
    let improving = mismatches.windows(2).all(|w| w[1] < w[0]);
    c.known(
        "charge match, L = 8, 12, 16",
        improving && mismatches.iter().all(|&m| m <= 0.1),
        format!("relative mismatch {mismatches:.4?}, first-shell ratio {shell:.4?}"),
    );
    Ok(c)
}

fn full_box() -> Result<Criterion> {
    let mut c = Criterion::new();
    let vac = tight_vacuum(0.3)?;
    let config = Arc::new(BoxConfig::new(12.0, 1.0)?);
    let r = build_reference(config.clone(), vac.params, BoxMode::Full, Some(&vac))?;
    let nu = BoxDensity::gaussian(config.clone(), 0.2, 1.0)?;
    let opts = ScfOptions::default();
    let (base, diag) = scf_solve(&r, &nu, &opts, None)?;
    c.check(
        "fixed point",
        diag.residual < opts.tol,
        format!("residual {:.3e} after {} iterations", diag.residual, diag.iterations),
    );
    c.check(
        "lower bound",
        diag.energy.total >= diag.lower_bound,
        format!("F = {:.6e} >= {:.6e}", diag.energy.total, diag.lower_bound),
    );
    let cond = uniqueness_condition(&vac.params, coulomb_energy(&nu, &nu)?);
    c.check(
        "uniqueness condition",
        cond.satisfied,
        format!("bracket {:.4}, d {:?}, coupling {:?}", cond.bracket, cond.d, cond.coupling),
    );
    if cond.satisfied {
        let rho = induced(&base, &r)?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let start = random_admissible_state(&config, 0.45, &mut rng)?;
            let (other, _) = scf_solve(&r, &nu, &opts, Some(start))?;
            worst = worst.max(sup_distance(&induced(&other, &r)?, &rho));
        }
        c.check("3-start uniqueness", worst <= 1e-6, format!("sup L^3 |delta c_k| = {worst:.3e}"));
        let margin = diag.operator_bound_margin.unwrap_or(f64::NEG_INFINITY);
        c.check("|D_gamma| >= |D0| / d", margin >= 0.0, format!("spectral margin {margin:.4e}"));
    }
    Ok(c)
}

fn expansion() -> Result<Criterion> {
    let mut c = Criterion::new();
    c.outcome(&checks::entropy_expansion(SEED, 100)?);
    Ok(c)
}

type Runner = fn() -> Result<Criterion>;

fn main() -> ExitCode {
    let criteria: [(&str, f64, Runner); 10] = [
        ("entropy representation equivalence", 10.0, entropy_forms),
        ("Klein coercivity", 10.0, klein),
        ("free vacuum closed form", 60.0, free_vacuum_closed_form),
        ("interacting vacuum", 60.0, interacting_vacuum),
        ("gradient consistency", 120.0, gradients),
        ("polarization kernel", 300.0, polarization),
        ("linearized screening", 300.0, debye),
        ("box solver, reduced mode", 600.0, reduced_box),
        ("box solver, full mode", 900.0, full_box),
        ("entropy expansion identity", 60.0, expansion),
    ];
    let mut unexpected = 0;
    for (i, (title, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let mut result = run().unwrap_or_else(|e| {
            let mut c = Criterion::new();
            c.check("run", false, format!("error: {e}"));
            c
        });
        let secs = t.elapsed().as_secs_f64();
        result.check("runtime", secs < *budget, format!("{secs:.2} s (budget {budget} s)"));
        let passed = result.checks.iter().all(|c| c.passed);
        println!("criterion {:2} {} {title}", i + 1, if passed { "PASS" } else { "FAIL" });
        for c in &result.checks {
            let tag = match (c.passed, c.known) {
                (true, _) => "ok",
                (false, true) => "FAIL (known)",
                (false, false) => "FAIL",
            };
            println!("    {tag:12} {}: {}", c.name, c.detail);
            if !c.passed && !c.known {
                unexpected += 1;
            }
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    }
}
