use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kernel::ResponseKernel;
use crate::error::{Error, Result};
use crate::momentum::RadialGrid;
use crate::params::ModelParams;
use crate::quadrature::GaussLegendre;
use crate::radial::{ChargeDensity, RadialProfile, SineTable, FOURIER_PREFACTOR};

/// b1^(r) = r^2 / (r^2 + alpha C(r)) and b2^(r) = 1 / (r^2 + alpha C(r)) on
/// [0, 2 Lambda]. They are only applied to densities whose transforms are
/// supported in the ball of radius 2 Lambda; outside it both evaluate to 0.
#[derive(Debug, Clone)]
pub struct ScreeningKernels {
    alpha: f64,
    response: ResponseKernel,
    b1hat: RadialProfile,
    b2hat: RadialProfile,
}

pub fn build_screening_kernels(params: &ModelParams, response: &ResponseKernel) -> Result<ScreeningKernels> {
    params.validate()?;
    if !(params.alpha > 0.0) {
        return Err(Error::InvalidParameter(
            "screening kernels need alpha > 0".into(),
        ));
    }
    let rp = response.params();
    if rp.beta != params.beta || rp.lambda != params.lambda {
        return Err(Error::InvalidParameter(
            "response kernel computed for different (beta, lambda)".into(),
        ));
    }
    let alpha = params.alpha;
    let grid = kernel_grid(alpha * response.at(0.0), 2.0 * params.lambda, response.grid().order())?;
    let b1hat = RadialProfile::from_fn(grid.clone(), |r| {
        r * r / (r * r + alpha * response.at(r))
    })?;
    let b2hat = RadialProfile::from_fn(grid, |r| 1.0 / (r * r + alpha * response.at(r)))?;
    Ok(ScreeningKernels {
        alpha,
        response: response.clone(),
        b1hat,
        b2hat,
    })
}

/// Panels graded toward 0 on the scale sqrt(alpha C(0)) of the
/// Lorentzian-like variation of b1^ and b2^.
fn kernel_grid(alpha_c0: f64, end: f64, order: usize) -> Result<RadialGrid> {
    let scale = alpha_c0.sqrt();
    let mut bps = vec![0.0];
    let mut b = 0.5 * scale;
    while b < 0.6 * end {
        bps.push(b);
        b *= 2.0;
    }
    let last = *bps.last().expect("non-empty");
    let rest = ((end - last) / (0.25 * end)).ceil().max(1.0) as usize;
    for i in 1..=rest {
        bps.push(last + (end - last) * i as f64 / rest as f64);
    }
    RadialGrid::from_breakpoints(&bps, order.max(8))
}

impl ScreeningKernels {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn response(&self) -> &ResponseKernel {
        &self.response
    }

    pub fn end(&self) -> f64 {
        self.b1hat.end()
    }

    /// Always true: the flat continuations beyond 2 Lambda are never used.
    pub fn truncated(&self) -> bool {
        true
    }

    pub fn b1hat(&self) -> &RadialProfile {
        &self.b1hat
    }

    pub fn b2hat(&self) -> &RadialProfile {
        &self.b2hat
    }

    /// b1^(r) from the interpolated C; exactly 0 at r = 0.
    pub fn b1(&self, r: f64) -> f64 {
        if !(0.0..=self.end()).contains(&r) {
            return 0.0;
        }
        let d = r * r + self.alpha * self.response.at(r);
        r * r / d
    }

    pub fn b2(&self, r: f64) -> f64 {
        if !(0.0..=self.end()).contains(&r) {
            return 0.0;
        }
        1.0 / (r * r + self.alpha * self.response.at(r))
    }

    /// alpha C(r) / (r^2 + alpha C(r)) = 1 - b1^(r) inside the ball.
    pub fn screening_fraction(&self, r: f64) -> f64 {
        if !(0.0..=self.end()).contains(&r) {
            return 0.0;
        }
        let ac = self.alpha * self.response.at(r);
        ac / (r * r + ac)
    }
}

/// Evaluation ranges for the position-space outputs of [`linear_screen`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreeningOptions {
    /// Largest |x| at which rho_tot and V are tabulated.
    pub x_max: f64,
    /// Radius of the ball used for the charge integral of rho_tot.
    pub charge_radius: f64,
}

impl Default for ScreeningOptions {
    fn default() -> Self {
        Self {
            x_max: 60.0,
            charge_radius: 200.0,
        }
    }
}

/// Linearized response to an external density nu.
#[derive(Debug, Clone)]
pub struct ScreeningResult {
    params: ModelParams,
    nu: ChargeDensity,
    kernels: ScreeningKernels,
    opts: ScreeningOptions,
    rho_hat: RadialProfile,
    rho_tot_hat: RadialProfile,
    v_hat: RadialProfile,
    rho_table: SineTable,
    rho_table_far: SineTable,
    induced_table: SineTable,
    response_charge: f64,
    external_charge: f64,
}

/// rho^ = -b1^ nu^, rho_tot^ = nu^ + rho^ = nu^ alpha C / (k^2 + alpha C) and
/// V^ = -4 pi b2^ nu^ on |k| <= 2 Lambda.
///
/// In position space V is evaluated as the bare potential of -nu (exact, all
/// k) plus the induced part 4 pi rho_tot^ / k^2, which is supported in the
/// ball since C vanishes beyond 2 Lambda; the sum is the potential of
/// rho_tot - nu without truncating the bare Coulomb tail.
pub fn linear_screen(
    nu: &ChargeDensity,
    params: &ModelParams,
    kernels: &ScreeningKernels,
    opts: ScreeningOptions,
) -> Result<ScreeningResult> {
    params.validate()?;
    if !(params.alpha > 0.0) || (params.alpha - kernels.alpha()).abs() > 0.0 {
        return Err(Error::InvalidParameter(
            "linear screening needs alpha > 0 matching the kernels".into(),
        ));
    }
    if !(opts.x_max > 0.0 && opts.charge_radius > 0.0) {
        return Err(Error::InvalidParameter("screening ranges must be positive".into()));
    }
    let grid = kernels.b1hat().grid().clone();
    let rho_hat = RadialProfile::from_fn(grid.clone(), |r| -kernels.b1(r) * nu.hat(r))?;
    let rho_tot_hat =
        RadialProfile::from_fn(grid.clone(), |r| kernels.screening_fraction(r) * nu.hat(r))?;
    let v_hat = RadialProfile::from_fn(grid.clone(), |r| -4.0 * PI * kernels.b2(r) * nu.hat(r))?;
    let end = grid.end();
    let breaks = grid.breakpoints();
    let rho_tot = |r: f64| kernels.screening_fraction(r) * nu.hat(r);
    let rho_table = SineTable::new(rho_tot, 0.0, end, breaks, opts.x_max);
    let rho_table_far = SineTable::with_phase(
        rho_tot,
        0.0,
        end,
        breaks,
        opts.charge_radius.max(opts.x_max),
        2.0 * PI,
    );
    let induced_table = SineTable::new(
        |r| 4.0 * PI * rho_tot(r) / (r * r),
        0.0,
        end,
        breaks,
        opts.x_max,
    );
    let response_charge = rho_tot(0.0) / FOURIER_PREFACTOR;
    let external_charge = nu.hat(0.0) / FOURIER_PREFACTOR;
    Ok(ScreeningResult {
        params: *params,
        nu: nu.clone(),
        kernels: kernels.clone(),
        opts,
        rho_hat,
        rho_tot_hat,
        v_hat,
        rho_table,
        rho_table_far,
        induced_table,
        response_charge,
        external_charge,
    })
}

impl ScreeningResult {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn nu(&self) -> &ChargeDensity {
        &self.nu
    }

    pub fn options(&self) -> &ScreeningOptions {
        &self.opts
    }

    pub fn kernels(&self) -> &ScreeningKernels {
        &self.kernels
    }

    /// rho_tot^(r) evaluated from the kernel (not the tabulated profile).
    pub fn rho_tot_hat_at(&self, r: f64) -> f64 {
        self.kernels.screening_fraction(r) * self.nu.hat(r)
    }

    pub fn rho_hat(&self) -> &RadialProfile {
        &self.rho_hat
    }

    pub fn rho_tot_hat(&self) -> &RadialProfile {
        &self.rho_tot_hat
    }

    pub fn v_hat(&self) -> &RadialProfile {
        &self.v_hat
    }

    /// (2 pi)^(3/2) rho_tot^(0).
    pub fn response_charge(&self) -> f64 {
        self.response_charge
    }

    /// (2 pi)^(3/2) nu^(0).
    pub fn external_charge(&self) -> f64 {
        self.external_charge
    }

    pub fn rho_tot(&self, x: f64) -> Result<f64> {
        self.rho_table.eval(x.abs())
    }

    /// Potential of -nu alone (the unscreened comparison).
    pub fn potential_bare(&self, x: f64) -> f64 {
        -self.nu.coulomb_potential(x.abs())
    }

    /// Screened potential V(x), the electrostatic potential of rho_tot - nu.
    pub fn potential(&self, x: f64) -> Result<f64> {
        Ok(self.potential_bare(x) + self.induced_table.eval(x.abs())?)
    }

    /// Inverse transform of the truncated V^ alone; differs from
    /// [`potential`](Self::potential) by the bare Coulomb modes beyond 2 Lambda.
    pub fn potential_truncated(&self, x: f64) -> Result<f64> {
        crate::radial::radial_inverse_fourier(&self.v_hat, x)
    }

    /// 4 pi \int_0^X x^2 rho_tot(x) dx by Gauss panels in x.
    pub fn charge_in_ball(&self, radius: f64) -> Result<f64> {
        let end = self.rho_tot_hat.end();
        let rule = GaussLegendre::new(16);
        let max_len = PI / end;
        let m = (radius / max_len).ceil().max(1.0) as usize;
        let h = radius / m as f64;
        let mut acc = 0.0;
        for j in 0..m {
            let lo = j as f64 * h;
            for (x, w) in rule.mapped(lo, lo + h) {
                acc += w * x * x * self.rho_table_far.eval(x)?;
            }
        }
        Ok(4.0 * PI * acc)
    }

    /// The same ball charge from the k-space window
    /// 4 pi sqrt(2/pi) \int r rho^(r) [sin(rX)/r^2 - X cos(rX)/r] dr.
    pub fn charge_in_ball_window(&self, radius: f64) -> f64 {
        let rule = GaussLegendre::new(24);
        let end = self.rho_tot_hat.end();
        let max_len = (PI / (4.0 * radius)).min(end);
        let m = (end / max_len).ceil() as usize;
        let h = end / m as f64;
        let mut acc = 0.0;
        for j in 0..m {
            let lo = j as f64 * h;
            acc += rule.integrate(lo, lo + h, |r| {
                let t = r * radius;
                // sin(t)/r - X cos(t) with t = r X, expanded for small t
                let win = if t < 1e-3 {
                    radius * t * t / 3.0 * (1.0 - t * t / 10.0)
                } else {
                    t.sin() / r - radius * t.cos()
                };
                self.rho_tot_hat_at(r) * win
            });
        }
        4.0 * PI * (2.0 / PI).sqrt() * acc
    }

    /// 4 pi \int_0^X x^2 |rho_tot(x) - nu(x)| dx.
    pub fn abs_difference_integral(&self, radius: f64) -> Result<f64> {
        let rule = GaussLegendre::new(16);
        let end = self.rho_tot_hat.end();
        let max_len = PI / (4.0 * end);
        let radius = radius.min(self.rho_table_far.x_max());
        let m = (radius / max_len).ceil().max(1.0) as usize;
        let h = radius / m as f64;
        let mut acc = 0.0;
        for j in 0..m {
            let lo = j as f64 * h;
            for (x, w) in rule.mapped(lo, lo + h) {
                acc += w * x * x * (self.rho_table_far.eval(x)? - self.nu.position(x)).abs();
            }
        }
        Ok(4.0 * PI * acc)
    }
}

/// Sampled screening diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebyeReport {
    /// Rows (x, rho_tot(x), V(x), x V(x)).
    pub table: Vec<[f64; 4]>,
    /// rho_tot^(0) / nu^(0), equal to 1 by construction of the kernel.
    pub sum_rule_ratio: f64,
    pub external_charge: f64,
    /// 4 pi \int_0^X x^2 rho_tot from position-space quadrature.
    pub integrated_charge: f64,
    /// Same quantity from the k-space ball window.
    pub integrated_charge_window: f64,
    pub charge_radius: f64,
    /// |integrated_charge - external_charge| / |external_charge|.
    pub charge_relative_error: f64,
    /// 4 pi \int_0^X x^2 |rho_tot - nu|.
    pub abs_difference_integral: f64,
    /// x|V(x)| at the last sample over its value at the first.
    pub tail_ratio: f64,
    /// Decay exponent of |V| from a log-log fit of windowed maxima.
    pub decay_exponent: f64,
    pub fit_range: (f64, f64),
    /// x|V_bare(x)| at the last sample: the unscreened contrast (tends to |Z|).
    pub bare_tail: f64,
}

/// Parameters of [`debye_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DebyeOptions {
    pub x_start: f64,
    pub x_end: f64,
    pub step: f64,
    pub fit_start: f64,
    pub fit_end: f64,
}

impl Default for DebyeOptions {
    fn default() -> Self {
        Self {
            x_start: 1.0,
            x_end: 50.0,
            step: 0.25,
            fit_start: 10.0,
            fit_end: 40.0,
        }
    }
}

/// Least-squares slope of y against x.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn debye_report(result: &ScreeningResult, opts: DebyeOptions) -> Result<DebyeReport> {
    if !(opts.x_start > 0.0 && opts.x_end > opts.x_start && opts.step > 0.0) {
        return Err(Error::InvalidParameter("invalid report range".into()));
    }
    if !(opts.fit_start > 0.0 && opts.fit_end > opts.fit_start) {
        return Err(Error::InvalidParameter("invalid fit range".into()));
    }
    let n = ((opts.x_end - opts.x_start) / opts.step).round() as usize;
    let mut table = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = opts.x_start + i as f64 * opts.step;
        let v = result.potential(x)?;
        table.push([x, result.rho_tot(x)?, v, x * v]);
    }
    let first = table.first().expect("non-empty")[3].abs();
    let last = table.last().expect("non-empty")[3].abs();
    let tail_ratio = if first > 0.0 { last / first } else { 0.0 };

    // |V| oscillates with wavelength about pi / Lambda; fit window maxima.
    let window = PI / result.params().lambda;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut a = opts.fit_start;
    while a + window <= opts.fit_end + 1e-12 {
        let mut peak = 0.0f64;
        for j in 0..=64 {
            let x = a + window * j as f64 / 64.0;
            peak = peak.max(result.potential(x)?.abs());
        }
        if peak > 0.0 {
            lx.push((a + 0.5 * window).ln());
            ly.push(peak.ln());
        }
        a += window;
    }
    let decay_exponent = if lx.len() >= 2 {
        -fit_slope(&lx, &ly)
    } else {
        f64::INFINITY
    };

    let radius = result.options().charge_radius;
    let integrated_charge = result.charge_in_ball(radius)?;
    let integrated_charge_window = result.charge_in_ball_window(radius);
    let z = result.external_charge();
    let charge_relative_error = if z != 0.0 {
        (integrated_charge - z).abs() / z.abs()
    } else {
        integrated_charge.abs()
    };
    let sum_rule_ratio = if z != 0.0 {
        result.response_charge() / z
    } else {
        0.0
    };
    Ok(DebyeReport {
        table,
        sum_rule_ratio,
        external_charge: z,
        integrated_charge,
        integrated_charge_window,
        charge_radius: radius,
        charge_relative_error,
        abs_difference_integral: result.abs_difference_integral(radius)?,
        tail_ratio,
        decay_exponent,
        fit_range: (opts.fit_start, opts.fit_end),
        bare_tail: opts.x_end * result.potential_bare(opts.x_end).abs(),
    })
}
