use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentum::{energy, RadialGrid};
use crate::params::ModelParams;
use crate::quadrature::GaussLegendre;
use crate::radial::RadialProfile;

/// Z_Lambda(r) = (E(Lambda) - E(Lambda - r)) / r on [0, 2 Lambda], written as
/// (2 Lambda - r) / (E(Lambda) + E(Lambda - r)) so that r = 0 needs no limit.
pub fn zeta_lambda(r: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(0.0..=2.0 * lambda).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "zeta_lambda needs 0 <= r <= 2 lambda, got r = {r}, lambda = {lambda}"
        )));
    }
    Ok((2.0 * lambda - r) / (energy(lambda) + energy(lambda - r)))
}

/// w(k, z) = sqrt((1 + k^2 (1 - z^2) / 4) / (1 - z^2)) for 0 <= z < 1.
pub fn w_kernel(k: f64, z: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::InvalidParameter(format!("w_kernel needs 0 <= z < 1, got {z}")));
    }
    let s = 1.0 - z * z;
    Ok(((1.0 + 0.25 * k * k * s) / s).sqrt())
}

/// Fermi occupation n(x) = 1 / (1 + e^{beta x}).
fn occ(beta: f64, x: f64) -> f64 {
    let t = beta * x;
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// (e^{beta a} - e^{beta b}) / ((a - b)(1 + e^{beta a})(1 + e^{beta b})),
/// with the limit beta n(a) n(-a) on the diagonal.
pub fn fermi_ratio_same(beta: f64, a: f64, b: f64) -> f64 {
    let d = a - b;
    let q = if d == 0.0 { beta } else { (beta * d).exp_m1() / d };
    occ(beta, a) * occ(beta, -b) * q
}

/// (e^{beta a} - e^{-beta b}) / ((a + b)(1 + e^{beta a})(1 + e^{-beta b})).
pub fn fermi_ratio_opposite(beta: f64, a: f64, b: f64) -> f64 {
    (occ(beta, -a) * occ(beta, -b) - occ(beta, a) * occ(beta, b)) / (a + b)
}

/// Quadrature orders of the two routes to C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResponseOptions {
    /// Gauss-Legendre nodes per direction and region in the lens integral.
    pub direct_order: usize,
    /// Gauss-Legendre nodes per direction in the reduced integrals.
    pub reduced_order: usize,
}

impl Default for ResponseOptions {
    fn default() -> Self {
        Self {
            direct_order: 48,
            reduced_order: 48,
        }
    }
}

fn check_k(k: f64, params: &ModelParams) -> Result<()> {
    params.validate()?;
    if !(0.0..=2.0 * params.lambda).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside [0, 2 lambda]"
        )));
    }
    Ok(())
}

/// (C1(k), C2(k)) from the lens integral over {|p +- k/2| <= Lambda},
/// reduced to (s = |p|, c = cos theta) with exact lens bounds.
pub fn response_direct_parts(k: f64, params: &ModelParams, opts: ResponseOptions) -> Result<(f64, f64)> {
    check_k(k, params)?;
    let lam = params.lambda;
    let beta = params.beta;
    if k >= 2.0 * lam {
        return Ok((0.0, 0.0));
    }
    let rule = GaussLegendre::new(opts.direct_order);
    let q2 = 0.25 * k * k;
    let point = |s: f64, c: f64| -> (f64, f64) {
        let a = energy((s * s + q2 + s * k * c).max(0.0).sqrt());
        let b = energy((s * s + q2 - s * k * c).max(0.0).sqrt());
        let overlap = (s * s - q2 + 1.0) / (a * b);
        (
            fermi_ratio_same(beta, a, b) * (1.0 + overlap),
            fermi_ratio_opposite(beta, a, b) * (1.0 - overlap),
        )
    };
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    let s_mid = lam - 0.5 * k;
    let s_max = (lam * lam - q2).sqrt();
    // region where the whole c-range is inside the lens
    if s_mid > 0.0 {
        for (s, ws) in rule.mapped(0.0, s_mid) {
            for (c, wc) in rule.mapped(0.0, 1.0) {
                let (f1, f2) = point(s, c);
                let w = ws * wc * s * s;
                c1 += w * f1;
                c2 += w * f2;
            }
        }
    }
    if k > 0.0 {
        for (s, ws) in rule.mapped(s_mid.max(0.0), s_max) {
            let c_max = ((lam * lam - s * s - q2) / (s * k)).clamp(0.0, 1.0);
            for (c, wc) in rule.mapped(0.0, c_max) {
                let (f1, f2) = point(s, c);
                let w = ws * wc * s * s;
                c1 += w * f1;
                c2 += w * f2;
            }
        }
    }
    // 2 pi from the azimuth, 2 from c -> -c symmetry, 1/pi^2 overall.
    let pref = 4.0 * PI / (PI * PI);
    Ok((pref * c1, pref * c2))
}

/// C(k) = C1(k) + C2(k) from the lens integral.
pub fn response_direct(k: f64, params: &ModelParams, opts: ResponseOptions) -> Result<f64> {
    let (a, b) = response_direct_parts(k, params, opts)?;
    Ok(a + b)
}

/// (C1(k), C2(k)) from the reduced two-dimensional integrals in (z, v).
pub fn response_reduced(k: f64, params: &ModelParams, opts: ResponseOptions) -> Result<(f64, f64)> {
    check_k(k, params)?;
    if k <= 0.0 {
        return Err(Error::InvalidParameter(
            "reduced formulas need k > 0".into(),
        ));
    }
    let lam = params.lambda;
    let beta = params.beta;
    let el = energy(lam);
    let zk = zeta_lambda(k, lam)?;
    if zk <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let q2 = 0.25 * k * k;
    let rule = GaussLegendre::new(opts.reduced_order);
    let sinhc = |v: f64| if v == 0.0 { beta } else { (beta * v).sinh() / v };
    // e^{beta w} / ((1 + e^{beta (w + v)})(1 + e^{beta (w - v)})) = e^{beta v} n(w + v) n(v - w)
    let pair = |w: f64, v: f64| (beta * v).exp() * occ(beta, w + v) * occ(beta, v - w);
    let mut a1 = 0.0;
    let mut a2 = 0.0;
    for (z, wz) in rule.mapped(0.0, zk) {
        let w = w_kernel(k, z)?;
        let s = 1.0 - z * z;
        let v_end = 0.5 * k * z;
        for (v, wv) in rule.mapped(0.0, v_end) {
            let weight = wz * wv;
            a1 += weight * pair(w, v) * sinhc(v) * z / (w * s * s * s);
            a2 += weight * pair(w, v) * (beta * w).sinh() / (1.0 + q2 * s) * (q2 - v * v) * z / s;
        }
    }
    for (z, wz) in rule.mapped(0.0, 0.5 * k * zk) {
        let w = el - z;
        for (v, wv) in rule.mapped(0.0, z) {
            let weight = wz * wv;
            a1 += weight * pair(w, v) * sinhc(v) * (w * w - q2);
            a2 += weight * pair(w, v) * (beta * w).sinh() / w * (q2 - v * v);
        }
    }
    let pref = 16.0 / (PI * k);
    Ok((pref * a1, pref * a2))
}

/// C1(0) = (8 beta / pi) \int_0^Lambda s^2 n(E(s)) n(-E(s)) ds
/// = (8 beta / pi) \int_1^{E(Lambda)} t sqrt(t^2 - 1) / ((1 + e^{-beta t})(1 + e^{beta t})) dt.
pub fn c1_at_zero(params: &ModelParams) -> f64 {
    let beta = params.beta;
    let rule = GaussLegendre::new(64);
    let panels = 8;
    let h = params.lambda / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        acc += rule.integrate(i as f64 * h, (i + 1) as f64 * h, |s| {
            let ch = (0.5 * beta * energy(s)).cosh();
            s * s / (4.0 * ch * ch)
        });
    }
    8.0 * beta / PI * acc
}

/// Which route tabulates [`ResponseKernel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseRoute {
    #[default]
    Direct,
    Reduced,
}

/// The polarization function C = C1 + C2 tabulated on [0, 2 Lambda].
#[derive(Debug, Clone)]
pub struct ResponseKernel {
    params: ModelParams,
    c1: RadialProfile,
    c2: RadialProfile,
    total: RadialProfile,
}

impl ResponseKernel {
    pub fn compute(
        params: &ModelParams,
        panels: usize,
        order: usize,
        route: ResponseRoute,
        opts: ResponseOptions,
    ) -> Result<Self> {
        params.validate()?;
        let grid = crate::momentum::make_radial_grid(2.0 * params.lambda, panels, order)?;
        Self::on_grid(params, grid, route, opts)
    }

    pub fn on_grid(
        params: &ModelParams,
        grid: RadialGrid,
        route: ResponseRoute,
        opts: ResponseOptions,
    ) -> Result<Self> {
        if (grid.end() - 2.0 * params.lambda).abs() > 1e-12 * params.lambda {
            return Err(Error::InvalidParameter(
                "response grid must span [0, 2 lambda]".into(),
            ));
        }
        let parts: Vec<(f64, f64)> = grid
            .nodes()
            .par_iter()
            .map(|&k| match route {
                ResponseRoute::Direct => response_direct_parts(k, params, opts),
                ResponseRoute::Reduced => response_reduced(k, params, opts),
            })
            .collect::<Result<_>>()?;
        let c1 = RadialProfile::new(grid.clone(), parts.iter().map(|p| p.0).collect())?;
        let c2 = RadialProfile::new(grid.clone(), parts.iter().map(|p| p.1).collect())?;
        let total = RadialProfile::new(grid, parts.iter().map(|p| p.0 + p.1).collect())?;
        Ok(Self {
            params: *params,
            c1,
            c2,
            total,
        })
    }

    /// Default tabulation: 4 panels of 16 nodes, direct route.
    pub fn new(params: &ModelParams) -> Result<Self> {
        Self::compute(params, 4, 16, ResponseRoute::Direct, ResponseOptions::default())
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn c1(&self) -> &RadialProfile {
        &self.c1
    }

    pub fn c2(&self) -> &RadialProfile {
        &self.c2
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.total
    }

    pub fn grid(&self) -> &RadialGrid {
        self.total.grid()
    }

    /// C(r), interpolated; 0 beyond 2 Lambda.
    pub fn at(&self, r: f64) -> f64 {
        self.total.eval(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert!((zeta_lambda(0.0, 1.0).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(zeta_lambda(2.0, 1.0).unwrap(), 0.0);
        assert!((zeta_lambda(1.0, 1.0).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(zeta_lambda(2.1, 1.0).is_err());
        let direct = |r: f64| (2f64.sqrt() - (1.0 + (1.0 - r) * (1.0 - r)).sqrt()) / r;
        for r in [0.3, 0.9, 1.6] {
            assert!((zeta_lambda(r, 1.0).unwrap() - direct(r)).abs() < 1e-14);
        }
    }

    #[test]
    fn w_values() {
        assert!((w_kernel(1.2, 0.0).unwrap() - (1.0f64 + 0.36).sqrt()).abs() < 1e-15);
        assert!((w_kernel(0.0, 0.6).unwrap() - 1.25).abs() < 1e-15);
        assert!(w_kernel(1.0, 1.0).is_err());
    }

    #[test]
    fn fermi_ratio_limit_is_continuous() {
        let beta = 1.3;
        let a = 1.7;
        let near = fermi_ratio_same(beta, a, a - 1e-9);
        assert!((near - fermi_ratio_same(beta, a, a)).abs() < 1e-9);
        let naive = ((beta * a).exp() - (beta * 1.2f64).exp())
            / ((a - 1.2) * (1.0 + (beta * a).exp()) * (1.0 + (beta * 1.2f64).exp()));
        assert!((fermi_ratio_same(beta, a, 1.2) - naive).abs() < 1e-15);
        let naive = ((beta * a).exp() - (-beta * 1.2f64).exp())
            / ((a + 1.2) * (1.0 + (beta * a).exp()) * (1.0 + (-beta * 1.2f64).exp()));
        assert!((fermi_ratio_opposite(beta, a, 1.2) - naive).abs() < 1e-15);
    }

    #[test]
    fn empty_lens_gives_zero() {
        let p = ModelParams::new(0.3, 1.0, 1.0).unwrap();
        assert_eq!(response_direct(2.0, &p, Default::default()).unwrap(), 0.0);
        assert_eq!(response_reduced(2.0, &p, Default::default()).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn direct_at_zero_is_c1_at_zero() {
        let p = ModelParams::new(0.3, 1.0, 1.0).unwrap();
        let (c1, c2) = response_direct_parts(0.0, &p, Default::default()).unwrap();
        assert!((c1 - c1_at_zero(&p)).abs() < 1e-12);
        assert!(c2.abs() < 1e-15);
    }

    #[test]
    fn routes_agree() {
        let p = ModelParams::new(0.3, 1.0, 1.0).unwrap();
        for k in [0.5, 1.0, 1.7] {
            let d = response_direct(k, &p, Default::default()).unwrap();
            let (a, b) = response_reduced(k, &p, Default::default()).unwrap();
            assert!(((a + b) - d).abs() < 1e-9 * d, "k={k}: {d} vs {}", a + b);
        }
    }
}
