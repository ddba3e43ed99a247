use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use tbdf_core::checks::{self, CheckOptions};
use tbdf_core::lattice::{
    build_reference, charge_screening_check, coulomb_energy, density_of, scf_run, shell_ratios, uniqueness_condition,
    BoxConfig, BoxDensity, BoxMode, ChargeReport, EnergyTerms, UniquenessCondition,
};
use tbdf_core::radial::{decay_bound_check, decay_coefficient, radial_inverse_fourier, RadialProfile};
use tbdf_core::screening::{
    build_screening_kernels, c1_at_zero, debye_report, linear_screen, response_direct_parts, response_reduced,
    ResponseKernel, ScreeningOptions,
};
use tbdf_core::vacuum::{reduced_vacuum_on, solve_interacting_vacuum, VacuumModel, VacuumOptions};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Output;

/// One-line summaries printed after a successful run.
pub type Summary = Vec<String>;

pub fn free_vacuum(cfg: &RunConfig, out: &mut Output) -> Result<Summary, CliError> {
    let p = cfg.params()?;
    let model = VacuumModel::new(p)?;
    let start = reduced_vacuum_on(model.grid(), &p)?;
    let sol = model.iterate(start, &cfg.vacuum)?;
    let c = &sol.coefficients;
    let d = &sol.dirac;
    let rows = c.grid().nodes().iter().enumerate().map(|(i, &r)| {
        vec![r, c.f0.values()[i], c.f1.values()[i], d.d0.values()[i], d.d1.values()[i]]
    });
    out.csv("vacuum_profiles.csv", &["r", "f0", "f1", "d0", "d1"], rows)?;
    out.json("vacuum_diagnostics.json", "diagnostics", &sol.diagnostics)?;
    sol.check()?;
    let g = &sol.diagnostics;
    Ok(vec![
        format!("converged in {} iterations, residual {:e}", g.iterations, g.residual),
        format!("energy per volume {:e}", g.energy),
        format!("epsilon {:e}, min d {}, min ||gamma|| {}", g.epsilon, g.min_d, g.norm_min),
    ])
}

#[derive(Serialize)]
struct KFailure {
    k: f64,
    route: &'static str,
    error: String,
}

#[derive(Serialize)]
struct DecaySummary {
    max_envelope_ratio: f64,
    sup_x4: f64,
    fourth_order: bool,
    endpoint_value: f64,
    endpoint_slope: f64,
}

#[derive(Serialize)]
struct ResponseReport {
    c1_at_zero: f64,
    /// max |direct - reduced| / direct over the sampled k > 0.
    max_relative_difference: f64,
    cutoff_value: f64,
    cutoff_slope: f64,
    failures: Vec<KFailure>,
    b1_decay: Option<DecaySummary>,
    b2_decay: Option<DecaySummary>,
}

fn decay_summary(bhat: &RadialProfile, xs: &[f64]) -> Result<DecaySummary, CliError> {
    let c = decay_coefficient(bhat)?;
    let d = decay_bound_check(bhat, &c, xs)?;
    Ok(DecaySummary {
        max_envelope_ratio: d.max_ratio,
        sup_x4: d.sup_x4,
        fourth_order: c.fourth_order(1e-8),
        endpoint_value: c.endpoint_value,
        endpoint_slope: c.endpoint_slope,
    })
}

fn sample_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

pub fn response(cfg: &RunConfig, out: &mut Output) -> Result<Summary, CliError> {
    let p = cfg.params()?;
    let rc = &cfg.response;
    let q = rc.quadrature();
    let edge = 2.0 * p.lambda;
    let ks: Vec<f64> = (0..rc.samples).map(|i| edge * i as f64 / (rc.samples - 1) as f64).collect();
    let samples: Vec<_> = ks
        .par_iter()
        .map(|&k| {
            let direct = response_direct_parts(k, &p, q);
            let reduced = if k > 0.0 { Some(response_reduced(k, &p, q)) } else { None };
            (k, direct, reduced)
        })
        .collect();
    let kernel = ResponseKernel::compute(&p, rc.panels, rc.order, rc.route, q)?;
    let screening = if p.alpha > 0.0 {
        Some(build_screening_kernels(&p, &kernel)?)
    } else {
        None
    };

    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (k, direct, reduced) in samples {
        let (d1, d2) = direct.unwrap_or_else(|e| {
            failures.push(KFailure { k, route: "direct", error: e.to_string() });
            (f64::NAN, f64::NAN)
        });
        let (r1, r2) = match reduced {
            Some(Ok(v)) => v,
            Some(Err(e)) => {
                failures.push(KFailure { k, route: "reduced", error: e.to_string() });
                (f64::NAN, f64::NAN)
            }
            None => (f64::NAN, f64::NAN),
        };
        let (c, r) = (d1 + d2, r1 + r2);
        let rel = if c > 0.0 { (c - r).abs() / c } else { f64::NAN };
        if rel.is_finite() {
            worst = worst.max(rel);
        }
        let (b1, b2) = screening.as_ref().map_or((f64::NAN, f64::NAN), |s| (s.b1(k), s.b2(k)));
        rows.push(vec![k, d1, d2, c, r1, r2, r, rel, kernel.at(k), b1, b2]);
    }
    out.csv(
        "response.csv",
        &[
            "k", "c1_direct", "c2_direct", "c_direct", "c1_reduced", "c2_reduced", "c_reduced",
            "relative_difference", "c_tabulated", "b1_hat", "b2_hat",
        ],
        rows,
    )?;

    let (mut b1_decay, mut b2_decay) = (None, None);
    if let Some(s) = &screening {
        let xs = sample_range(rc.x_start, rc.x_end, rc.x_step);
        let values: Vec<Vec<f64>> = xs
            .par_iter()
            .map(|&x| Ok(vec![x, radial_inverse_fourier(s.b1hat(), x)?, radial_inverse_fourier(s.b2hat(), x)?]))
            .collect::<Result<_, tbdf_core::Error>>()?;
        out.csv("screening_kernels.csv", &["x", "b1", "b2"], values)?;
        b1_decay = Some(decay_summary(s.b1hat(), &xs)?);
        b2_decay = Some(decay_summary(s.b2hat(), &xs)?);
    }

    let h = 1e-8 * p.lambda;
    let (e1, e2) = response_direct_parts(edge, &p, q)?;
    let (s1, s2) = response_direct_parts(edge - h, &p, q)?;
    let report = ResponseReport {
        c1_at_zero: c1_at_zero(&p),
        max_relative_difference: worst,
        cutoff_value: e1 + e2,
        cutoff_slope: (e1 + e2 - s1 - s2) / h,
        failures,
        b1_decay,
        b2_decay,
    };
    out.json("response_report.json", "report", &report)?;
    if !report.failures.is_empty() {
        return Err(CliError::Other(format!(
            "quadrature failed at {} k-point(s); see response_report.json",
            report.failures.len()
        )));
    }
    Ok(vec![
        format!("C1(0) = {:e}", report.c1_at_zero),
        format!("direct vs reduced: max relative difference {:e}", worst),
        format!("C(2 lambda) = {:e}, slope {:e}", report.cutoff_value, report.cutoff_slope),
    ])
}

pub fn screen(cfg: &RunConfig, out: &mut Output) -> Result<Summary, CliError> {
    let p = cfg.params()?;
    if !(p.alpha > 0.0) {
        return Err(CliError::Validation("screening needs alpha > 0".into()));
    }
    let rc = &cfg.response;
    let kernel = ResponseKernel::compute(&p, rc.panels, rc.order, rc.route, rc.quadrature())?;
    let kernels = build_screening_kernels(&p, &kernel)?;
    let nu = cfg.screen.nu.build()?;
    let opts = ScreeningOptions {
        x_max: cfg.screen.x_max.max(cfg.screen.report.x_end),
        charge_radius: cfg.screen.charge_radius,
    };
    let res = linear_screen(&nu, &p, &kernels, opts)?;
    let rep = debye_report(&res, cfg.screen.report)?;
    out.csv(
        "screen.csv",
        &["x", "rho_tot", "v", "x_v"],
        rep.table.iter().map(|r| r.to_vec()),
    )?;
    let mut summary = serde_json::to_value(&rep)?;
    if let Some(obj) = summary.as_object_mut() {
        obj.remove("table");
    }
    out.json("screen_report.json", "report", &summary)?;
    Ok(vec![
        format!(
            "charge sum rule: rho_tot^(0) / nu^(0) = {}; integrated charge {} vs {} (relative error {:e})",
            rep.sum_rule_ratio, rep.integrated_charge, rep.external_charge, rep.charge_relative_error
        ),
        format!("tail ratio {:e}, decay exponent {}", rep.tail_ratio, rep.decay_exponent),
    ])
}

#[derive(Serialize)]
struct BoxBounds {
    mode: BoxMode,
    length: f64,
    mode_count: usize,
    dimension: usize,
    converged: bool,
    iterations: usize,
    residual: f64,
    energy: EnergyTerms,
    lower_bound: f64,
    lower_bound_margin: f64,
    coercivity_margin: f64,
    spectral_gap: f64,
    descent_violations: usize,
    operator_bound_margin: Option<f64>,
    interpolation_defect: f64,
    charge: Option<ChargeReport>,
}

#[derive(Serialize)]
struct BoxUniqueness {
    coulomb_self_energy: f64,
    condition: UniquenessCondition,
}

pub fn box_run(cfg: &RunConfig, out: &mut Output) -> Result<Summary, CliError> {
    let p = cfg.params()?;
    let bc = &cfg.box_;
    let config = Arc::new(BoxConfig::new(bc.length, p.lambda)?);
    let vacuum = match bc.mode {
        BoxMode::Full => {
            let opts = VacuumOptions {
                tol: bc.vacuum_tol,
                ..cfg.vacuum
            };
            Some(solve_interacting_vacuum(&p, &opts)?)
        }
        BoxMode::Reduced => None,
    };
    let reference = build_reference(config.clone(), p, bc.mode, vacuum.as_ref())?;
    let nu = BoxDensity::from_radial(config.clone(), &bc.nu.build()?);
    let (state, diag) = scf_run(&reference, &nu, &bc.scf, None)?;

    out.csv(
        "box_iterations.csv",
        &["iteration", "free_energy", "residual", "mixing"],
        diag.history
            .iter()
            .map(|h| vec![h.iteration as f64, h.free_energy, h.residual, h.mixing]),
    )?;

    let rc = &cfg.response;
    let kernel = ResponseKernel::compute(&p, rc.panels, rc.order, rc.route, rc.quadrature())?;
    let shells = shell_ratios(&state, &reference, &nu, &kernel)?;
    let rho = density_of(&state.difference(&reference.state)?, &config);
    let vol = config.volume();
    let mut sums: BTreeMap<i32, (f64, f64)> = BTreeMap::new();
    for k in config.differences() {
        let n2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let e = sums.entry(n2).or_insert((0.0, 0.0));
        e.0 += vol * rho.get(k).re;
        e.1 += vol * nu.get(k).re;
    }
    let rows = shells.iter().map(|s| {
        let (induced, external) = sums[&s.norm_squared];
        let m = s.members as f64;
        vec![
            s.norm_squared as f64,
            s.k,
            m,
            induced / m,
            external / m,
            s.ratio,
            s.predicted,
            s.lattice_predicted,
        ]
    });
    out.csv(
        "box_shells.csv",
        &["norm_squared", "k", "members", "induced", "external", "ratio", "predicted", "lattice_predicted"],
        rows,
    )?;

    let charge = match bc.mode {
        BoxMode::Reduced => Some(charge_screening_check(&state, &reference, &nu)?),
        BoxMode::Full => None,
    };
    let bounds = BoxBounds {
        mode: bc.mode,
        length: bc.length,
        mode_count: config.mode_count(),
        dimension: config.dim(),
        converged: diag.converged,
        iterations: diag.iterations,
        residual: diag.residual,
        energy: diag.energy,
        lower_bound: diag.lower_bound,
        lower_bound_margin: diag.energy.total - diag.lower_bound,
        coercivity_margin: diag.coercivity_margin,
        spectral_gap: diag.spectral_gap,
        descent_violations: diag.descent_violations,
        operator_bound_margin: diag.operator_bound_margin,
        interpolation_defect: reference.interpolation_defect,
        charge,
    };
    out.json("box_bounds.json", "bounds", &bounds)?;
    let d_nu_nu = coulomb_energy(&nu, &nu)?;
    let uniqueness = BoxUniqueness {
        coulomb_self_energy: d_nu_nu,
        condition: uniqueness_condition(&p, d_nu_nu),
    };
    out.json("box_uniqueness.json", "uniqueness", &uniqueness)?;

    if !diag.converged {
        return Err(CliError::NotConverged(format!(
            "box iteration stopped after {} iterations with residual {:e}",
            diag.iterations, diag.residual
        )));
    }
    let mut broken = Vec::new();
    if bounds.lower_bound_margin < 0.0 {
        broken.push(format!("free energy below -(alpha/2) D(nu, nu) by {:e}", -bounds.lower_bound_margin));
    }
    if bounds.coercivity_margin < -checks::KLEIN_SLACK {
        broken.push(format!("coercivity margin {:e}", bounds.coercivity_margin));
    }
    if !(bounds.spectral_gap > 0.0) {
        broken.push(format!("spectral gap {:e}", bounds.spectral_gap));
    }
    if let Some(m) = bounds.operator_bound_margin.filter(|&m| m < 0.0) {
        broken.push(format!("operator bound margin {m:e}"));
    }
    if !broken.is_empty() {
        return Err(CliError::Invariant(broken.join("; ")));
    }
    let mut summary = vec![
        format!(
            "{:?} mode, L = {}, {} modes: converged in {} iterations, residual {:e}",
            bc.mode,
            bc.length,
            config.mode_count(),
            diag.iterations,
            diag.residual
        ),
        format!("free energy {:e} (lower bound {:e})", diag.energy.total, diag.lower_bound),
        format!(
            "uniqueness condition {}",
            if uniqueness.condition.satisfied { "satisfied" } else { "not satisfied" }
        ),
    ];
    if let Some(c) = bounds.charge {
        summary.push(format!(
            "induced charge {:e} vs external {} (first-shell ratio {:?})",
            c.induced_charge, c.external_charge, c.first_shell_ratio
        ));
    }
    Ok(summary)
}

pub fn check(cfg: &RunConfig, inject_klein_fault: bool, out: &mut Output) -> Result<Summary, CliError> {
    let report = checks::run_all(CheckOptions {
        seed: cfg.seed,
        inject_klein_fault,
    })?;
    out.json("check_report.json", "report", &report)?;
    let lines: Vec<String> = report
        .suites
        .iter()
        .map(|s| {
            format!(
                "{} {}: {} cases, {} failures, worst margin {:e}, seed {}",
                if s.passed { "PASS" } else { "FAIL" },
                s.name,
                s.cases,
                s.failures,
                s.worst,
                s.seed
            )
        })
        .collect();
    if !report.passed {
        for l in &lines {
            eprintln!("{l}");
        }
        let failed: Vec<String> = report
            .failed()
            .map(|s| format!("{} (seed {}, first failing case {:?})", s.name, s.seed, s.first_failure))
            .collect();
        return Err(CliError::Invariant(format!("failed suites: {}", failed.join(", "))));
    }
    Ok(lines)
}
