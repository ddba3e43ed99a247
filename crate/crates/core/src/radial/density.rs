use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::spline::CubicSpline;
use super::transform::{coulomb_pairing, radial_sine_transform, RadialFourier};
use super::FOURIER_PREFACTOR;
use crate::error::{Error, Result};

/// Serializable description of a radial external charge density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChargeDensitySpec {
    /// nu(x) = Z (2 pi sigma^2)^(-3/2) exp(-|x|^2 / (2 sigma^2)).
    Gaussian { charge: f64, width: f64 },
    /// nu(x) = Z exp(-|x|/sigma) / (8 pi sigma^3), a smeared point charge.
    PointRegularized { charge: f64, width: f64 },
    /// Fourier transform tabulated at increasing radii starting at 0;
    /// interpolated by a cubic spline and zero beyond the last radius.
    Tabulated { k: Vec<f64>, nu_hat: Vec<f64> },
}

impl ChargeDensitySpec {
    pub fn gaussian(charge: f64, width: f64) -> Self {
        Self::Gaussian { charge, width }
    }

    pub fn build(&self) -> Result<ChargeDensity> {
        ChargeDensity::new(self.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Gaussian { width: f64 },
    PointRegularized { width: f64 },
    Tabulated(CubicSpline),
}

/// Validated radial charge density with its Fourier transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeDensity {
    spec: ChargeDensitySpec,
    charge: f64,
    shape: Shape,
    zero: bool,
}

fn check_width(width: f64) -> Result<()> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidParameter(format!("width must be > 0, got {width}")));
    }
    Ok(())
}

fn check_charge(charge: f64) -> Result<()> {
    if !charge.is_finite() {
        return Err(Error::InvalidParameter(format!("charge must be finite, got {charge}")));
    }
    Ok(())
}

impl ChargeDensity {
    pub fn new(spec: ChargeDensitySpec) -> Result<Self> {
        let (charge, shape) = match &spec {
            ChargeDensitySpec::Gaussian { charge, width } => {
                check_charge(*charge)?;
                check_width(*width)?;
                (*charge, Shape::Gaussian { width: *width })
            }
            ChargeDensitySpec::PointRegularized { charge, width } => {
                check_charge(*charge)?;
                check_width(*width)?;
                (*charge, Shape::PointRegularized { width: *width })
            }
            ChargeDensitySpec::Tabulated { k, nu_hat } => {
                if k.first() != Some(&0.0) {
                    return Err(Error::InvalidParameter(
                        "tabulated density must start at k = 0".into(),
                    ));
                }
                let spline = CubicSpline::new(k.clone(), nu_hat.clone())?;
                (nu_hat[0] / FOURIER_PREFACTOR, Shape::Tabulated(spline))
            }
        };
        let zero = match &spec {
            ChargeDensitySpec::Tabulated { nu_hat, .. } => nu_hat.iter().all(|v| *v == 0.0),
            _ => charge == 0.0,
        };
        Ok(Self {
            spec,
            charge,
            shape,
            zero,
        })
    }

    pub fn gaussian(charge: f64, width: f64) -> Result<Self> {
        Self::new(ChargeDensitySpec::gaussian(charge, width))
    }

    pub fn zero() -> Self {
        Self::gaussian(0.0, 1.0).expect("valid")
    }

    pub fn spec(&self) -> &ChargeDensitySpec {
        &self.spec
    }

    /// Total charge Z = (2 pi)^(3/2) nu^(0).
    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Radial Fourier transform nu^(k).
    pub fn hat(&self, k: f64) -> f64 {
        let z = self.charge * FOURIER_PREFACTOR;
        match &self.shape {
            Shape::Gaussian { width } => z * (-0.5 * width * width * k * k).exp(),
            Shape::PointRegularized { width } => {
                let t = 1.0 + width * width * k * k;
                z / (t * t)
            }
            Shape::Tabulated(s) => {
                if k > s.last() {
                    0.0
                } else {
                    s.eval(k)
                }
            }
        }
    }

    /// Position-space density nu(|x|).
    pub fn position(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian { width } => {
                let s2 = width * width;
                self.charge * (2.0 * PI * s2).powf(-1.5) * (-0.5 * r * r / s2).exp()
            }
            Shape::PointRegularized { width } => {
                self.charge * (-r / width).exp() / (8.0 * PI * width.powi(3))
            }
            Shape::Tabulated(s) => {
                radial_sine_transform(|k| s.eval(k), r, 0.0, s.last(), s.knots())
            }
        }
    }

    /// Electrostatic potential \int nu(y) / |x - y| dy at |x| = r.
    pub fn coulomb_potential(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian { width } => {
                let s = width * std::f64::consts::SQRT_2;
                if r < 1e-8 * width {
                    self.charge * 2.0 / (s * PI.sqrt())
                } else {
                    self.charge * libm::erf(r / s) / r
                }
            }
            Shape::PointRegularized { width } => {
                let t = r / width;
                if t < 1e-6 {
                    self.charge / (2.0 * width)
                } else {
                    // 1 - (1 + t/2) e^{-t}, cancellation-free for small t
                    let e = (-t).exp();
                    self.charge * (-(-t).exp_m1() - 0.5 * t * e) / r
                }
            }
            Shape::Tabulated(s) => {
                let f = |k: f64| 4.0 * PI * s.eval(k) / (k * k);
                radial_sine_transform(f, r, 0.0, s.last(), s.knots())
            }
        }
    }

    /// D(nu, nu), in closed form where available.
    pub fn self_energy(&self) -> Result<f64> {
        let z2 = self.charge * self.charge;
        match &self.shape {
            Shape::Gaussian { width } => Ok(z2 / (width * PI.sqrt())),
            Shape::PointRegularized { width } => Ok(5.0 * z2 / (16.0 * width)),
            Shape::Tabulated(_) => coulomb_pairing(self, self),
        }
    }
}

impl RadialFourier for ChargeDensity {
    fn hat(&self, k: f64) -> f64 {
        ChargeDensity::hat(self, k)
    }

    fn support(&self) -> Option<f64> {
        match &self.shape {
            Shape::Tabulated(s) => Some(s.last()),
            _ => None,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Tabulated(s) => s.knots().to_vec(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mode_is_charge() {
        let g = ChargeDensity::gaussian(2.0, 0.7).unwrap();
        assert!((g.hat(0.0) - 2.0 * FOURIER_PREFACTOR).abs() < 1e-16);
        let p = ChargeDensitySpec::PointRegularized { charge: 1.5, width: 0.3 }.build().unwrap();
        assert!((p.hat(0.0) - 1.5 * FOURIER_PREFACTOR).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_width() {
        assert!(ChargeDensity::gaussian(1.0, 0.0).is_err());
        assert!(ChargeDensity::gaussian(1.0, -1.0).is_err());
        assert!(ChargeDensity::gaussian(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn point_regularized_self_energy_matches_quadrature() {
        let p = ChargeDensitySpec::PointRegularized { charge: 1.0, width: 0.5 }.build().unwrap();
        let numeric = coulomb_pairing(&p, &p).unwrap();
        assert!((numeric - p.self_energy().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn tabulated_charge_and_position() {
        let k: Vec<f64> = (0..=400).map(|i| i as f64 * 0.02).collect();
        let g = ChargeDensity::gaussian(1.0, 1.0).unwrap();
        let nu_hat = k.iter().map(|&q| g.hat(q)).collect();
        let t = ChargeDensitySpec::Tabulated { k, nu_hat }.build().unwrap();
        assert!((t.charge() - 1.0).abs() < 1e-14);
        for r in [0.0, 0.5, 1.5] {
            assert!((t.position(r) - g.position(r)).abs() < 1e-6);
        }
        let d = t.self_energy().unwrap();
        assert!((d - g.self_energy().unwrap()).abs() < 1e-6);
    }

    #[test]
    fn potentials_match_tabulated_route() {
        let k: Vec<f64> = (0..=800).map(|i| i as f64 * 0.01).collect();
        let g = ChargeDensity::gaussian(1.3, 0.8).unwrap();
        let nu_hat = k.iter().map(|&q| g.hat(q)).collect();
        let t = ChargeDensitySpec::Tabulated { k, nu_hat }.build().unwrap();
        for r in [0.3, 2.0, 7.5] {
            assert!((t.coulomb_potential(r) - g.coulomb_potential(r)).abs() < 1e-6, "r={r}");
        }
        assert!((g.coulomb_potential(60.0) * 60.0 - 1.3).abs() < 1e-12);
        let p = ChargeDensitySpec::PointRegularized { charge: 1.0, width: 0.5 }.build().unwrap();
        // potential of the exponential density from the shell theorem
        let r = 1.2f64;
        let inner = crate::quadrature::GaussLegendre::new(60).integrate(0.0, r, |s| p.position(s) * s * s);
        let (outer, _) = crate::quadrature::adaptive(|s| p.position(s) * s, r, 60.0, 8, Default::default()).unwrap();
        let shell = 4.0 * PI * (inner / r + outer);
        assert!((p.coulomb_potential(r) - shell).abs() < 1e-10);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s = ChargeDensitySpec::gaussian(1.0, 2.0);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"kind\":\"gaussian\""));
        let back: ChargeDensitySpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
