//! Fermi-Dirac functional calculus and the relative entropy of renormalized
//! density matrices `-1/2 <= gamma <= 1/2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::dense::{hermitian_eigen, matmul, matmul_adjoint};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive, AdaptiveOptions};

/// Dense complex Hermitian matrix.
pub type HermitianMatrix = DMatrix<Complex64>;

/// Eigenvalues within this distance of +-1/2 are clamped onto the boundary.
pub const CLAMP_TOL: f64 = 1e-12;

/// Reference eigenvalues closer than this to +-1/2 make the logarithms unusable.
pub const REFERENCE_TOL: f64 = 1e-10;

/// Relative Hermiticity tolerance for inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unitary (columns are eigenvectors).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: HermitianMatrix,
}

impl Spectrum {
    pub fn of(m: &HermitianMatrix) -> Result<Self> {
        check_hermitian(m)?;
        let (values, vectors) = hermitian_eigen(m)?;
        Ok(Self { values, vectors })
    }

    /// Spectrum of a block-diagonal matrix with square blocks of size `block`,
    /// assembled from the per-block decompositions.
    pub fn of_block_diagonal(m: &HermitianMatrix, block: usize) -> Result<Self> {
        check_hermitian(m)?;
        let n = m.nrows();
        if block == 0 || n % block != 0 {
            return Err(Error::InvalidParameter(format!("block size {block} does not divide {n}")));
        }
        let off = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter(|(r, c)| r / block != c / block)
            .map(|(r, c)| m[(r, c)].norm())
            .fold(0.0, f64::max);
        if off > 0.0 {
            return Err(Error::InvalidParameter(format!("matrix is not block diagonal (off-block {off:e})")));
        }
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
        let mut blocks = Vec::with_capacity(n / block);
        for b in 0..n / block {
            let sub = m.view((b * block, b * block), (block, block)).into_owned();
            let (vals, vecs) = hermitian_eigen(&sub)?;
            for (k, &v) in vals.iter().enumerate() {
                pairs.push((v, b, k));
            }
            blocks.push(vecs);
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut vectors = HermitianMatrix::zeros(n, n);
        for (c, &(_, b, k)) in pairs.iter().enumerate() {
            for r in 0..block {
                vectors[(b * block + r, c)] = blocks[b][(r, k)];
            }
        }
        Ok(Self {
            values: pairs.iter().map(|p| p.0).collect(),
            vectors,
        })
    }

    /// V diag(f(lambda)) V^*.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        let d = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| Complex64::new(f(x), 0.0)),
        );
        let scaled = HermitianMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, c| {
            self.vectors[(r, c)] * d[c]
        });
        hermitize(matmul_adjoint(&scaled, &self.vectors))
    }
}

pub fn check_hermitian(m: &HermitianMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let dev = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// Random Hermitian matrix with eigenvalues uniform in [lo, hi] and the
/// eigenvectors of a random Hermitian matrix with uniform entries.
pub fn random_with_spectrum<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Result<HermitianMatrix> {
    if !(lo <= hi) {
        return Err(Error::InvalidParameter(format!("empty spectral range [{lo}, {hi}]")));
    }
    let a = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let v = Spectrum::of(&hermitize(a))?.vectors;
    let values: Vec<f64> = (0..n).map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) }).collect();
    let scaled = DMatrix::from_fn(n, n, |r, c| v[(r, c)] * values[c]);
    Ok(hermitize(matmul_adjoint(&scaled, &v)))
}

/// (M + M^*)/2.
pub fn hermitize(m: HermitianMatrix) -> HermitianMatrix {
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn check_same_dim(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok(())
}

/// Real part of tr(A B) without forming the product.
pub fn trace_product(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// Fermi-Dirac scalar map g_beta(h) = -tanh(beta h / 2) / 2.
pub fn g_beta(h: f64, beta: f64) -> f64 {
    -0.5 * (0.5 * beta * h).tanh()
}

/// x ln x with the convention 0 ln 0 = 0.
fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Scalar entropy density s(x) = -[(1/2+x) ln(1/2+x) + (1/2-x) ln(1/2-x)].
pub fn scalar_s(x: f64) -> f64 {
    -(xlnx(0.5 + x) + xlnx(0.5 - x))
}

/// Scalar relative entropy f(x, y), for |x| <= 1/2 and |y| < 1/2.
pub fn scalar_f(x: f64, y: f64) -> f64 {
    let a = 0.5 + x;
    let b = 0.5 - x;
    let mut v = xlnx(a) + xlnx(b);
    if a > 0.0 {
        v -= a * (0.5 + y).ln();
    }
    if b > 0.0 {
        v -= b * (0.5 - y).ln();
    }
    v
}

/// C(y) = ln((1/2+y)/(1/2-y)) / (2y), with C(0) = 2.
pub fn scalar_c(y: f64) -> Result<f64> {
    if !(y.abs() < 0.5) {
        return Err(Error::OutOfRange(y));
    }
    if y.abs() < 1e-4 {
        // ln((1+2y)/(1-2y)) = 2 artanh(2y)
        let t = 4.0 * y * y;
        return Ok(2.0 * (1.0 + t / 3.0 + t * t / 5.0 + t * t * t / 7.0));
    }
    Ok((2.0 * y).atanh() / y)
}

/// ln((1/2+y)/(1/2-y)), the inverse of the Fermi-Dirac map up to the factor -beta.
pub fn fermi_logit(y: f64) -> f64 {
    2.0 * (2.0 * y).atanh()
}

/// gamma = g_beta(H), computed by eigendecomposition.
pub fn fermi_map(h: &HermitianMatrix, beta: f64) -> Result<HermitianMatrix> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
    }
    Ok(Spectrum::of(h)?.apply(|x| g_beta(x, beta)))
}

/// Spectrum of a renormalized density: eigenvalues outside [-1/2 - tol, 1/2 + tol]
/// are rejected, those within tol of the boundary are clamped onto it.
pub fn density_spectrum(gamma: &HermitianMatrix) -> Result<Spectrum> {
    let mut s = Spectrum::of(gamma)?;
    for v in s.values.iter_mut() {
        if v.abs() > 0.5 + CLAMP_TOL {
            return Err(Error::OutOfRange(*v));
        }
        if v.abs() >= 0.5 - CLAMP_TOL {
            *v = 0.5 * v.signum();
        }
    }
    Ok(s)
}

fn reference_spectrum(gamma0: &HermitianMatrix) -> Result<Spectrum> {
    let s = Spectrum::of(gamma0)?;
    for &v in &s.values {
        if v.abs() > 0.5 - REFERENCE_TOL {
            return Err(Error::IllConditioned(v));
        }
    }
    Ok(s)
}

/// S(gamma) = -tr[(1/2+gamma) ln(1/2+gamma) + (1/2-gamma) ln(1/2-gamma)].
pub fn entropy(gamma: &HermitianMatrix) -> Result<f64> {
    Ok(density_spectrum(gamma)?.values.iter().map(|&x| scalar_s(x)).sum())
}

/// |<w_i | v_j>|^2 for the eigenvector sets of two spectra.
fn overlap_weights(a: &Spectrum, b: &Spectrum) -> DMatrix<f64> {
    let o = matmul(&a.vectors.adjoint(), &b.vectors);
    o.map(|z| z.norm_sqr())
}

/// Relative entropy from the logarithmic formula.
pub fn rel_entropy_log(gamma: &HermitianMatrix, gamma0: &HermitianMatrix) -> Result<f64> {
    check_same_dim(gamma, gamma0)?;
    let s0 = reference_spectrum(gamma0)?;
    rel_entropy_log_spectral(gamma, &s0)
}

/// [`rel_entropy_log`] with the reference given by its (precomputed) spectrum.
pub fn rel_entropy_log_spectral(gamma: &HermitianMatrix, reference: &Spectrum) -> Result<f64> {
    if gamma.nrows() != reference.values.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.values.len(),
            got: gamma.nrows(),
        });
    }
    if let Some(&v) = reference.values.iter().find(|v| v.abs() > 0.5 - REFERENCE_TOL) {
        return Err(Error::IllConditioned(v));
    }
    let sg = density_spectrum(gamma)?;
    let w = overlap_weights(reference, &sg);
    let logs: Vec<(f64, f64)> = reference.values.iter().map(|&y| ((0.5 + y).ln(), (0.5 - y).ln())).collect();
    let mut h = 0.0;
    for (j, &x) in sg.values.iter().enumerate() {
        let a = 0.5 + x;
        let b = 0.5 - x;
        h += xlnx(a) + xlnx(b);
        for (i, &(lp, lm)) in logs.iter().enumerate() {
            h -= w[(i, j)] * (a * lp + b * lm);
        }
    }
    Ok(h.max(0.0))
}

/// Options for the u-integral of [`rel_entropy_int`].
#[derive(Debug, Clone, Copy)]
pub struct IntegralOptions {
    pub quadrature: AdaptiveOptions,
    pub initial_panels: usize,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self {
            quadrature: AdaptiveOptions {
                abs_tol: 1e-14,
                rel_tol: 1e-12,
                max_intervals: 2000,
            },
            initial_panels: 2,
        }
    }
}

/// Relative entropy from the u-integral formula. In the joint eigenbases of
/// gamma0 (mu_i) and gamma (lambda_j) the trace separates into
/// 2 sum |M_ij|^2 \int (1-|u|) / ((1+2u mu_i)^2 (1+2u lambda_j)) du with
/// M the matrix of gamma - gamma0; each scalar integral is done adaptively on
/// [-1, 0] and [0, 1].
pub fn rel_entropy_int(
    gamma: &HermitianMatrix,
    gamma0: &HermitianMatrix,
    opts: IntegralOptions,
) -> Result<f64> {
    check_same_dim(gamma, gamma0)?;
    let sg = density_spectrum(gamma)?;
    let s0 = reference_spectrum(gamma0)?;
    let x = gamma - gamma0;
    let m = matmul(&matmul(&s0.vectors.adjoint(), &x), &sg.vectors);
    let mut h = 0.0;
    for (i, &mu) in s0.values.iter().enumerate() {
        for (j, &la) in sg.values.iter().enumerate() {
            let w = m[(i, j)].norm_sqr();
            if w == 0.0 {
                continue;
            }
            let kernel = |u: f64| {
                let a = 1.0 + 2.0 * u * mu;
                let b = 1.0 + 2.0 * u * la;
                let num = 1.0 - u.abs();
                if num == 0.0 {
                    // limit (1-|u|)/(1+2u lambda) is 1 when lambda = -+1/2 at u = +-1
                    let lim = if b.abs() < 1e-300 { 1.0 } else { 0.0 };
                    return lim / (a * a);
                }
                num / (a * a * b)
            };
            let (left, _) = adaptive(kernel, -1.0, 0.0, opts.initial_panels, opts.quadrature)?;
            let (right, _) = adaptive(kernel, 0.0, 1.0, opts.initial_panels, opts.quadrature)?;
            h += 2.0 * w * (left + right);
        }
    }
    Ok(h)
}

/// (T H(gamma, g_beta(H0)), max{tr[(gamma-gamma0)^2 |H0|], 2T tr[(gamma-gamma0)^2]}).
/// The first component dominates the second for every admissible gamma.
pub fn klein_margin(gamma: &HermitianMatrix, h0: &HermitianMatrix, beta: f64) -> Result<(f64, f64)> {
    check_same_dim(gamma, h0)?;
    let sh = Spectrum::of(h0)?;
    let gamma0 = sh.apply(|x| g_beta(x, beta));
    let abs_h0 = sh.apply(f64::abs);
    let lhs = rel_entropy_log(gamma, &gamma0)? / beta;
    let x = gamma - &gamma0;
    let x2 = matmul(&x, &x);
    let weighted = trace_product(&x2, &abs_h0);
    let plain = 2.0 * x2.trace().re / beta;
    Ok((lhs, weighted.max(plain)))
}

/// Residual of the three-point expansion
/// H(g', g0) = H(g, g0) + H(g', g) + tr[(g' - g)(logit(g) - logit(g0))].
pub fn entropy_expansion_identity(
    gamma_prime: &HermitianMatrix,
    gamma: &HermitianMatrix,
    gamma0: &HermitianMatrix,
) -> Result<f64> {
    let h_p0 = rel_entropy_log(gamma_prime, gamma0)?;
    let h_g0 = rel_entropy_log(gamma, gamma0)?;
    let h_pg = rel_entropy_log(gamma_prime, gamma)?;
    let lg = reference_spectrum(gamma)?.apply(fermi_logit);
    let l0 = reference_spectrum(gamma0)?.apply(fermi_logit);
    let diff = gamma_prime - gamma;
    let cross = trace_product(&diff, &(lg - l0));
    Ok((h_p0 - h_g0 - h_pg - cross).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_diagonal(&DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    #[test]
    fn fermi_map_scalar_values() {
        let g = fermi_map(&diag(&[2.0]), 1.0).unwrap();
        let direct = 0.5 * (1.0 / (1.0 + 2f64.exp()) - 1.0 / (1.0 + (-2f64).exp()));
        assert!((g[(0, 0)].re - direct).abs() < 1e-15);
        assert!((g[(0, 0)].re + 0.380_797_078_0).abs() < 1e-10);
        let z = fermi_map(&diag(&[0.0, 0.0]), 3.0).unwrap();
        assert!(z.iter().all(|c| c.norm() < 1e-16));
    }

    #[test]
    fn entropy_values() {
        assert!((entropy(&diag(&[0.0; 4])).unwrap() - 4.0 * 2f64.ln()).abs() < 1e-14);
        assert!(entropy(&diag(&[0.5, -0.5])).unwrap().abs() < 1e-15);
        let e = entropy(&diag(&[0.25, -0.25])).unwrap();
        let exact = -2.0 * (0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((e - exact).abs() < 1e-14);
        assert!((e - 1.1247).abs() < 1e-4);
        assert!(entropy(&diag(&[0.6])).is_err());
    }

    #[test]
    fn relative_entropy_scalar_pair() {
        let h = rel_entropy_log(&diag(&[0.1]), &diag(&[-0.1])).unwrap();
        let exact = 0.6 * (0.6f64 / 0.4).ln() + 0.4 * (0.4f64 / 0.6).ln();
        assert!((h - exact).abs() < 1e-14);
        let hi = rel_entropy_int(&diag(&[0.1]), &diag(&[-0.1]), Default::default()).unwrap();
        assert!((hi - exact).abs() < 1e-12);
    }

    #[test]
    fn boundary_eigenvalue_is_finite_in_both_forms() {
        let g = diag(&[0.5, -0.2]);
        let g0 = diag(&[0.1, 0.3]);
        let a = rel_entropy_log(&g, &g0).unwrap();
        let b = rel_entropy_int(&g, &g0, Default::default()).unwrap();
        let exact = scalar_f(0.5, 0.1) + scalar_f(-0.2, 0.3);
        assert!((a - exact).abs() < 1e-14);
        assert!((b - exact).abs() < 1e-10, "{b} vs {exact}");
        let g = diag(&[-0.5]);
        let b = rel_entropy_int(&g, &diag(&[0.2]), Default::default()).unwrap();
        assert!((b - scalar_f(-0.5, 0.2)).abs() < 1e-10);
    }

    #[test]
    fn reference_near_boundary_is_rejected() {
        assert!(matches!(
            rel_entropy_log(&diag(&[0.0]), &diag(&[0.5])),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn scalar_c_values() {
        assert!((scalar_c(0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((scalar_c(1e-6).unwrap() - 2.0).abs() < 1e-10);
        let y = 0.5 * (1.0 / (1.0 + 2f64.exp()) - 1.0 / (1.0 + (-2f64).exp()));
        assert!((scalar_c(y).unwrap() - 2.0 / 1f64.tanh()).abs() < 1e-12);
        assert!((scalar_c(0.49).unwrap() - 99f64.ln() / 0.98).abs() < 1e-12);
        assert!(scalar_c(0.5).is_err());
    }

    #[test]
    fn scalar_c_series_matches_closed_form() {
        for y in [9e-5f64, 5e-5, -3e-5] {
            let closed = ((0.5 + y) / (0.5 - y)).ln() / (2.0 * y);
            assert!((scalar_c(y).unwrap() - closed).abs() < 1e-11);
        }
    }

    #[test]
    fn klein_scalar_case() {
        let (lhs, rhs) = klein_margin(&diag(&[0.0]), &diag(&[2.0]), 1.0).unwrap();
        let g = g_beta(2.0, 1.0);
        assert!((lhs - scalar_f(0.0, g)).abs() < 1e-14);
        assert!((rhs - 2.0 * g * g).abs() < 1e-14);
        assert!(lhs > rhs);
    }

    #[test]
    fn klein_plain_term_carries_temperature() {
        // at low temperature the unscaled bound 2 tr X^2 fails while 2T tr X^2 holds
        let beta = 10.0;
        let (lhs, rhs) = klein_margin(&diag(&[0.3]), &diag(&[0.01]), beta).unwrap();
        let x = 0.3 - g_beta(0.01, beta);
        assert!(lhs < 2.0 * x * x);
        assert!((rhs - 2.0 * x * x / beta).abs() < 1e-14);
        assert!(lhs >= rhs);
    }

    #[test]
    fn expansion_identity_trivial_cases() {
        let g = diag(&[0.1, -0.3]);
        let g0 = diag(&[0.2, 0.05]);
        assert!(entropy_expansion_identity(&g, &g, &g0).unwrap() < 1e-14);
        assert!(entropy_expansion_identity(&g0, &g, &g0).unwrap() < 1e-12);
    }
}
