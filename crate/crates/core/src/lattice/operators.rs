use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{same_config, sub, BoxConfig, BoxDensity, BoxMode, BoxReference, BoxState};
use crate::entropy::{fermi_logit, rel_entropy_log_spectral, trace_product, HermitianMatrix, Spectrum};
use crate::error::{Error, Result};

/// c_k = L^-3 sum_p tr Q(p, p - k) over mode pairs realizing k.
pub fn density_of(q: &HermitianMatrix, config: &Arc<BoxConfig>) -> BoxDensity {
    let m = config.mode_count();
    let vol = config.volume();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); config.differences().len()];
    for i in 0..m {
        for j in 0..m {
            let k = sub(config.modes()[i], config.modes()[j]);
            let idx = config.difference_index(&k).expect("pair difference is tabulated");
            let tr: Complex64 = (0..4).map(|a| q[(4 * i + a, 4 * j + a)]).sum();
            coeffs[idx] += tr / vol;
        }
    }
    BoxDensity {
        config: config.clone(),
        coeffs,
    }
}

/// D(f, g) = 4 pi L^3 sum_{k != 0} conj(f_k) g_k / |k|^2 (real part).
pub fn coulomb_energy(f: &BoxDensity, g: &BoxDensity) -> Result<f64> {
    same_config(f.config(), g.config())?;
    let config = f.config();
    let vol = config.volume();
    Ok(config
        .differences()
        .iter()
        .zip(f.coefficients().iter().zip(g.coefficients()))
        .map(|(k, (a, b))| config.coulomb_multiplier(k) * (a.conj() * b).re)
        .sum::<f64>()
        * vol)
}

/// Block (p, q) = alpha (4 pi / |p - q|^2) rho_{p-q} times the identity.
pub fn hartree_matrix(rho: &BoxDensity, alpha: f64) -> HermitianMatrix {
    let config = rho.config();
    let m = config.mode_count();
    let mut out = DMatrix::zeros(4 * m, 4 * m);
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let k = sub(config.modes()[i], config.modes()[j]);
            let v = rho.get(&k) * (alpha * config.coulomb_multiplier(&k));
            for a in 0..4 {
                out[(4 * i + a, 4 * j + a)] = v;
            }
        }
    }
    out
}

/// shift[k][i] = index of p_i - k when it is a mode.
fn shift_table(config: &BoxConfig) -> Vec<(f64, Vec<Option<usize>>)> {
    config
        .differences()
        .iter()
        .filter(|k| **k != [0, 0, 0])
        .map(|k| {
            let row = config
                .modes()
                .iter()
                .map(|p| config.mode_index(&sub(*p, *k)))
                .collect();
            (config.coulomb_multiplier(k), row)
        })
        .collect()
}

/// Block (p, q) = -(alpha / L^3) sum_{k != 0} (4 pi / |k|^2) Q(p - k, q - k).
pub fn exchange_matrix(q: &HermitianMatrix, config: &Arc<BoxConfig>, alpha: f64) -> HermitianMatrix {
    let m = config.mode_count();
    let n = 4 * m;
    let table = shift_table(config);
    let scale = -alpha / config.volume();
    let rows: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![Complex64::new(0.0, 0.0); 4 * n];
            for (mult, shift) in &table {
                let Some(a) = shift[i] else { continue };
                let c = scale * mult;
                for j in 0..m {
                    let Some(b) = shift[j] else { continue };
                    for r in 0..4 {
                        for s in 0..4 {
                            row[r * n + 4 * j + s] += q[(4 * a + r, 4 * b + s)] * c;
                        }
                    }
                }
            }
            row
        })
        .collect();
    let mut out = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for r in 0..4 {
            for c in 0..n {
                out[(4 * i + r, c)] = row[r * n + c];
            }
        }
    }
    out
}

/// X(Q) = (4 pi / L^3) sum_{k != 0} |k|^-2 sum_{p,q} tr[Q(p, q) Q(q + k, p + k)],
/// the quadratic form whose gradient is -2 exchange_matrix(Q, 1).
pub fn exchange_energy(q: &HermitianMatrix, config: &Arc<BoxConfig>) -> f64 {
    -trace_product(&exchange_matrix(q, config, 1.0), q)
}

fn check_mode(reference: &BoxReference, mode: BoxMode) -> Result<()> {
    if reference.mode != mode {
        return Err(Error::InvalidParameter(format!(
            "reference built for {:?} mode used in {:?} mode",
            reference.mode, mode
        )));
    }
    Ok(())
}

/// D_gamma = D_ref + Hartree(rho_Q - nu) [+ Exchange(Q) in full mode], Q = gamma - ref.
pub fn mean_field_operator(
    gamma: &BoxState,
    nu: &BoxDensity,
    reference: &BoxReference,
    mode: BoxMode,
) -> Result<HermitianMatrix> {
    check_mode(reference, mode)?;
    same_config(&gamma.config, nu.config())?;
    let q = gamma.difference(&reference.state)?;
    let alpha = gamma.params.alpha;
    let rho = density_of(&q, &gamma.config).sub(nu)?;
    let mut d = &reference.dirac + hartree_matrix(&rho, alpha);
    if mode == BoxMode::Full {
        d += exchange_matrix(&q, &gamma.config, alpha);
    }
    Ok(d)
}

/// Terms of the box free energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTerms {
    /// T H(gamma, ref).
    pub entropy: f64,
    /// -alpha D(nu, rho_Q).
    pub external: f64,
    /// (alpha/2) D(rho_Q, rho_Q).
    pub hartree: f64,
    /// -(alpha/2) X(Q), zero in reduced mode.
    pub exchange: f64,
    pub total: f64,
}

/// F = T H(gamma, ref) - alpha D(nu, rho_Q) + (alpha/2) D(rho_Q, rho_Q) [- (alpha/2) X(Q)].
pub fn free_energy(
    gamma: &BoxState,
    nu: &BoxDensity,
    reference: &BoxReference,
    mode: BoxMode,
) -> Result<EnergyTerms> {
    check_mode(reference, mode)?;
    same_config(&gamma.config, nu.config())?;
    let q = gamma.difference(&reference.state)?;
    let alpha = gamma.params.alpha;
    let rho = density_of(&q, &gamma.config);
    let entropy = gamma.params.temperature() * rel_entropy_log_spectral(&gamma.gamma, &reference.spectrum)?;
    let external = -alpha * coulomb_energy(nu, &rho)?;
    let hartree = 0.5 * alpha * coulomb_energy(&rho, &rho)?;
    let exchange = match mode {
        BoxMode::Reduced => 0.0,
        BoxMode::Full => -0.5 * alpha * exchange_energy(&q, &gamma.config),
    };
    Ok(EnergyTerms {
        entropy,
        external,
        hartree,
        exchange,
        total: entropy + external + hartree + exchange,
    })
}

/// Gradient of [`free_energy`] in the trace pairing: D_gamma + T logit(gamma),
/// using T logit(ref) = -D_ref.
pub fn free_energy_gradient(
    gamma: &BoxState,
    nu: &BoxDensity,
    reference: &BoxReference,
    mode: BoxMode,
) -> Result<HermitianMatrix> {
    let d = mean_field_operator(gamma, nu, reference, mode)?;
    let spec = Spectrum::of(&gamma.gamma)?;
    if let Some(v) = spec.values.iter().find(|v| v.abs() >= 0.5) {
        return Err(Error::OutOfRange(*v));
    }
    let t = gamma.params.temperature();
    Ok(d + spec.apply(fermi_logit) * Complex64::new(t, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_reference, neg};
    use crate::params::ModelParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> HermitianMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
        });
        (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
    }

    #[test]
    fn density_is_linear_and_hermitian() {
        let config = Arc::new(BoxConfig::new(8.0, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_hermitian(config.dim(), &mut rng, 0.1);
        let rho = density_of(&q, &config);
        assert!(rho.hermitian_defect() < 1e-15);
        for x in [[0.3, 1.1, -2.0], [4.0, 0.0, 0.5]] {
            let v = rho.position_value(&crate::momentum::Momentum::new(x[0], x[1], x[2]));
            assert!(v.im.abs() < 1e-14, "{v}");
        }
        // single block
        let mut single = DMatrix::zeros(config.dim(), config.dim());
        single[(4, 0)] = Complex64::new(0.7, 0.2);
        single[(5, 1)] = Complex64::new(0.1, 0.0);
        let rho = density_of(&single, &config);
        let k = sub(config.modes()[1], config.modes()[0]);
        let nonzero: Vec<_> = rho.coefficients().iter().filter(|c| c.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((rho.get(&k) - Complex64::new(0.8, 0.2) / config.volume()).norm() < 1e-16);
        assert_eq!(rho.get(&neg(k)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn coulomb_pair_and_positivity() {
        let config = Arc::new(BoxConfig::new(8.0, 1.0).unwrap());
        let k = config.differences()[3];
        let mut c = vec![Complex64::new(0.0, 0.0); config.differences().len()];
        c[config.difference_index(&k).unwrap()] = Complex64::new(0.3, 0.4);
        c[config.difference_index(&neg(k)).unwrap()] = Complex64::new(0.3, -0.4);
        let f = BoxDensity::from_coefficients(config.clone(), c).unwrap();
        let d = coulomb_energy(&f, &f).unwrap();
        let exact = 2.0 * config.coulomb_multiplier(&k) * config.volume() * 0.25;
        assert!((d - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn exchange_gradient_matches_finite_difference() {
        let config = Arc::new(BoxConfig::new(8.0, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_hermitian(config.dim(), &mut rng, 0.05);
        let dq = random_hermitian(config.dim(), &mut rng, 0.05);
        let h = 1e-5;
        let c = Complex64::new(h, 0.0);
        let fd = (exchange_energy(&(&q + &dq * c), &config) - exchange_energy(&(&q - &dq * c), &config))
            / (2.0 * h);
        let an = -2.0 * trace_product(&exchange_matrix(&q, &config, 1.0), &dq);
        assert!((fd - an).abs() < 1e-6 * an.abs(), "{fd} {an}");
        let ex = exchange_matrix(&q, &config, 0.4);
        assert!((&ex - ex.adjoint()).camax() < 1e-15);
    }

    #[test]
    fn mean_field_at_reference_is_reference_operator() {
        let config = Arc::new(BoxConfig::new(8.0, 1.0).unwrap());
        let params = ModelParams::new(0.3, 1.0, 1.0).unwrap();
        let r = build_reference(config.clone(), params, BoxMode::Reduced, None).unwrap();
        let nu = BoxDensity::zero(config);
        let d = mean_field_operator(&r.state, &nu, &r, BoxMode::Reduced).unwrap();
        assert!((&d - &r.dirac).camax() < 1e-15);
        let f = free_energy(&r.state, &nu, &r, BoxMode::Reduced).unwrap();
        assert!(f.total.abs() < 1e-12);
    }
}
