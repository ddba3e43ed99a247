use std::f64::consts::PI;
use std::sync::OnceLock;

use super::profile::RadialProfile;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive, AdaptiveOptions, GaussLegendre};

/// A radial function known through its Fourier transform.
pub trait RadialFourier {
    fn hat(&self, k: f64) -> f64;
    /// Radius beyond which the transform vanishes, if finite.
    fn support(&self) -> Option<f64>;
    /// Points where the transform may lose smoothness.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl RadialFourier for RadialProfile {
    fn hat(&self, k: f64) -> f64 {
        self.eval(k)
    }

    fn support(&self) -> Option<f64> {
        Some(self.end())
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.grid().breakpoints().to_vec()
    }
}

fn split_points(a: f64, b: f64, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(extra.into_iter().filter(|&x| x > a && x < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

const PAIRING_OPTS: AdaptiveOptions = AdaptiveOptions {
    abs_tol: 1e-15,
    rel_tol: 1e-13,
    max_intervals: 20000,
};

/// Coulomb pairing D(f, g) = 4 pi \int |k|^-2 f^(k) g^(k) dk
/// = 16 pi^2 \int_0^inf f^(r) g^(r) dr for radial real transforms.
pub fn coulomb_pairing<F: RadialFourier + ?Sized, G: RadialFourier + ?Sized>(
    f: &F,
    g: &G,
) -> Result<f64> {
    let integrand = |k: f64| f.hat(k) * g.hat(k);
    let support = match (f.support(), g.support()) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let total = if let Some(end) = support {
        let pts = split_points(0.0, end, f.breakpoints().into_iter().chain(g.breakpoints()));
        let mut acc = 0.0;
        for w in pts.windows(2) {
            acc += adaptive(integrand, w[0], w[1], 1, PAIRING_OPTS)?.0;
        }
        acc
    } else {
        let mut acc = adaptive(integrand, 0.0, 1.0, 4, PAIRING_OPTS)?.0;
        let mut a = 1.0;
        let mut quiet = 0;
        for _ in 0..64 {
            let piece = adaptive(integrand, a, 2.0 * a, 4, PAIRING_OPTS)?.0;
            acc += piece;
            a *= 2.0;
            if piece.abs() <= 1e-16 * acc.abs().max(1e-300) {
                quiet += 1;
                if quiet == 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if quiet < 2 {
            return Err(Error::Quadrature(
                "Coulomb pairing tail does not converge".into(),
            ));
        }
        acc
    };
    Ok(16.0 * PI * PI * total)
}

fn oscillatory_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

/// sqrt(2/pi)/k \int_a^b r f(r) sin(k r) dr, the radial form of the unitary
/// three-dimensional Fourier transform (in either direction). Panels never
/// exceed an eighth of the oscillation wavelength and are aligned with
/// `breaks`. At k = 0 the limit sqrt(2/pi) \int r^2 f is returned.
pub fn radial_sine_transform<F: Fn(f64) -> f64>(f: F, k: f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let rule = oscillatory_rule();
    let max_len = if k > 0.0 { PI / (4.0 * k) } else { f64::INFINITY };
    let pts = split_points(a, b, breaks.iter().copied());
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let len = w[1] - w[0];
        let m = if max_len.is_finite() {
            (len / max_len).ceil().max(1.0) as usize
        } else {
            1
        };
        let h = len / m as f64;
        for j in 0..m {
            let lo = w[0] + j as f64 * h;
            acc += rule.integrate(lo, lo + h, |r| {
                let kernel = if k == 0.0 { r } else { (k * r).sin() / k };
                r * f(r) * kernel
            });
        }
    }
    (2.0 / PI).sqrt() * acc
}

/// Precomputed quadrature for sqrt(2/pi)/x \int_a^b r f(r) sin(r x) dr,
/// valid for 0 <= x <= `x_max`; evaluation costs one pass over the nodes.
#[derive(Debug, Clone)]
pub struct SineTable {
    nodes: Vec<f64>,
    coeffs: Vec<f64>,
    x_max: f64,
}

impl SineTable {
    pub fn new<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], x_max: f64) -> Self {
        Self::with_phase(f, a, b, breaks, x_max, PI / 4.0)
    }

    /// Like [`new`](Self::new) with panels spanning at most `phase` radians
    /// of sin(r x_max). Phases up to 2 pi keep the 24-node rule exact to
    /// rounding for band-limited integrands.
    pub fn with_phase<F: Fn(f64) -> f64>(
        f: F,
        a: f64,
        b: f64,
        breaks: &[f64],
        x_max: f64,
        phase: f64,
    ) -> Self {
        let rule = oscillatory_rule();
        let max_len = phase / x_max.max(1e-300);
        let pts = split_points(a, b, breaks.iter().copied());
        let mut nodes = Vec::new();
        let mut coeffs = Vec::new();
        let c = (2.0 / PI).sqrt();
        for w in pts.windows(2) {
            let len = w[1] - w[0];
            let m = (len / max_len).ceil().max(1.0) as usize;
            let h = len / m as f64;
            for j in 0..m {
                let lo = w[0] + j as f64 * h;
                for (r, wr) in rule.mapped(lo, lo + h) {
                    nodes.push(r);
                    coeffs.push(c * wr * r * f(r));
                }
            }
        }
        Self { nodes, coeffs, x_max }
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x <= self.x_max * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "x = {x} outside the tabulated range [0, {}]",
                self.x_max
            )));
        }
        if x == 0.0 {
            return Ok(self.nodes.iter().zip(&self.coeffs).map(|(r, c)| r * c).sum());
        }
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(r, c)| c * (r * x).sin())
            .sum();
        Ok(s / x)
    }
}

/// Position-space value b(x) of a radial function whose transform is the
/// profile `bhat`, supported on [0, R].
pub fn radial_inverse_fourier(bhat: &RadialProfile, x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidParameter(format!("x must be > 0, got {x}")));
    }
    Ok(radial_sine_transform(
        |r| bhat.eval(r),
        x,
        0.0,
        bhat.end(),
        bhat.grid().breakpoints(),
    ))
}

/// Relative disagreement allowed between two derivative stencils before the
/// estimate is declared noise-dominated.
pub const DERIVATIVE_NOISE_TOL: f64 = 1e-3;

/// Ingredients of the large-|x| representation of b(x) obtained by three
/// integrations by parts of sqrt(2/pi)/x \int_0^R g(r) sin(r x) dr, g = r b^.
#[derive(Debug, Clone)]
pub struct DecayCoefficients {
    /// R b^''(R).
    pub endpoint_second: f64,
    /// 2 b^'(0) = g''(0).
    pub origin_slope: f64,
    /// (r b^)''' tabulated on the grid of b^.
    pub third: RadialProfile,
    /// g(R) = R b^(R).
    pub endpoint_value: f64,
    /// g'(R) = b^(R) + R b^'(R).
    pub endpoint_slope: f64,
    /// g''(R) = 2 b^'(R) + R b^''(R).
    pub endpoint_curvature: f64,
    /// \int_0^R |g'''|.
    pub third_integral: f64,
}

impl DecayCoefficients {
    /// Upper bound for |b(x)| from the integration-by-parts identity,
    /// including the boundary terms at R when b^ does not vanish there.
    pub fn envelope(&self, x: f64) -> f64 {
        let c = (2.0 / PI).sqrt() / x;
        c * (self.endpoint_value.abs() / x
            + self.endpoint_slope.abs() / (x * x)
            + (self.endpoint_curvature.abs() + self.origin_slope.abs() + self.third_integral)
                / (x * x * x))
    }

    /// True when the boundary terms of order x^-2 and x^-3 vanish to `tol`,
    /// so that b(x) = O(x^-4).
    pub fn fourth_order(&self, tol: f64) -> bool {
        self.endpoint_value.abs() <= tol && self.endpoint_slope.abs() <= tol
    }
}

fn checked_derivative(p: &RadialProfile, r: f64, k: usize, scale: f64) -> Result<f64> {
    let full = p.derivative(r, k, None);
    let reduced = p.derivative(r, k, Some(p.grid().order() - 1));
    let natural = scale / p.end().powi(k as i32);
    if (full - reduced).abs() > DERIVATIVE_NOISE_TOL * full.abs().max(natural) {
        return Err(Error::Quadrature(format!(
            "derivative of order {k} at r = {r} is noise-dominated ({full:e} vs {reduced:e})"
        )));
    }
    Ok(full)
}

pub fn decay_coefficient(bhat: &RadialProfile) -> Result<DecayCoefficients> {
    if bhat.grid().order() < 6 {
        return Err(Error::InvalidParameter(
            "decay coefficients need panels of at least 6 nodes".into(),
        ));
    }
    let r_end = bhat.end();
    let scale = bhat.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let b_end = bhat.eval(r_end);
    let d1_end = checked_derivative(bhat, r_end, 1, scale)?;
    let d2_end = checked_derivative(bhat, r_end, 2, scale)?;
    let d1_origin = checked_derivative(bhat, 0.0, 1, scale)?;
    let g = bhat.map(|r, v| r * v)?;
    let third = g.derivative_profile(3)?;
    let third_integral = third.map(|_, v| v.abs())?.integral();
    Ok(DecayCoefficients {
        endpoint_second: r_end * d2_end,
        origin_slope: 2.0 * d1_origin,
        third,
        endpoint_value: r_end * b_end,
        endpoint_slope: b_end + r_end * d1_end,
        endpoint_curvature: 2.0 * d1_end + r_end * d2_end,
        third_integral,
    })
}

/// Comparison of |b(x)| against the decay envelope on sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCheck {
    /// max |b(x)| / envelope(x).
    pub max_ratio: f64,
    /// sup x^4 |b(x)|.
    pub sup_x4: f64,
    pub samples: usize,
}

impl DecayCheck {
    pub fn within(&self, slack: f64) -> bool {
        self.max_ratio <= 1.0 + slack
    }
}

pub fn decay_bound_check(
    bhat: &RadialProfile,
    coeffs: &DecayCoefficients,
    xs: &[f64],
) -> Result<DecayCheck> {
    let mut max_ratio = 0.0f64;
    let mut sup_x4 = 0.0f64;
    for &x in xs {
        let b = radial_inverse_fourier(bhat, x)?.abs();
        let env = coeffs.envelope(x);
        let ratio = if env > 0.0 {
            b / env
        } else if b == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_ratio = max_ratio.max(ratio);
        sup_x4 = sup_x4.max(x.powi(4) * b);
    }
    Ok(DecayCheck {
        max_ratio,
        sup_x4,
        samples: xs.len(),
    })
}
