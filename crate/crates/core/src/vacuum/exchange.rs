use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::momentum::RadialGrid;
use crate::quadrature::GaussLegendre;

/// Nodes of the base rule used for the product integration of one panel piece.
const PRODUCT_ORDER: usize = 48;
/// Grading exponent toward the logarithmic singularity.
const PRODUCT_GRADING: u32 = 4;

/// phi(x) = (1 + x^2) artanh(x) - x for 0 <= x < 1.
pub fn phi(x: f64) -> f64 {
    if x < 0.25 {
        // sum_{n>=1} 4n x^{2n+1} / (4n^2 - 1)
        let x2 = x * x;
        let mut term = x * x2;
        let mut acc = 0.0;
        for n in 1..40 {
            let nf = n as f64;
            let c = 4.0 * nf / (4.0 * nf * nf - 1.0);
            acc += c * term;
            term *= x2;
            if term < 1e-18 * acc.abs() {
                break;
            }
        }
        acc
    } else {
        (1.0 + x * x) * x.atanh() - x
    }
}

/// Angular average kernel of the beta component:
/// int_{S^2} f0(|q|) / |p - q|^2 dOmega q^2 = (2 pi q / p) ln((p+q)/|p-q|) f0(q).
pub fn kernel_scalar(p: f64, q: f64) -> f64 {
    2.0 * PI * q / p * ((p + q) / (p - q).abs()).ln()
}

/// Kernel of the alpha.p component, normalized so that the coefficient of
/// alpha.p is int kernel_vector(p, q) f1(q) dq.
pub fn kernel_vector(p: f64, q: f64) -> f64 {
    let h = if q < p {
        q * phi(q / p)
    } else {
        q * q * q * phi(p / q) / (p * p)
    };
    2.0 * PI * h / p
}

/// Exchange term on a radial grid. Nodal convolutions use the product
/// integration rows `w0[i][j] = int K0(p_i, q) l_j(q) dq` (likewise `w1`)
/// against the panel Lagrange bases. The energy uses the symmetric Galerkin
/// forms `a0[i][j] = iint l_i(p) p^2 K0(p, q) l_j(q)` and `a1` with `p^4 K1`.
/// For smooth states `a0 f ~ s0 * (w0 f)` with `s0 = w p^2`, `s1 = w p^4`.
#[derive(Debug, Clone)]
pub struct ExchangeOperator {
    grid: RadialGrid,
    w0: DMatrix<f64>,
    w1: DMatrix<f64>,
    a0: DMatrix<f64>,
    a1: DMatrix<f64>,
    s0: DVector<f64>,
    s1: DVector<f64>,
}

impl ExchangeOperator {
    pub fn new(grid: &RadialGrid) -> Result<Self> {
        let n = grid.len();
        let k = grid.order();
        let rule = GaussLegendre::new(PRODUCT_ORDER);
        // Outer points: each panel split in halves, graded toward both ends
        // to resolve the mild singularities of the inner integrals at breakpoints.
        let bps = grid.breakpoints();
        let mut outer = Vec::new();
        for panel in 0..grid.panels() {
            let (a, b) = (bps[panel], bps[panel + 1]);
            let m = 0.5 * (a + b);
            outer.extend(rule.graded(a, m, a, PRODUCT_GRADING).into_iter().map(|(p, w)| (panel, p, w)));
            outer.extend(rule.graded(m, b, b, PRODUCT_GRADING).into_iter().map(|(p, w)| (panel, p, w)));
        }
        let parts: Vec<(DMatrix<f64>, DMatrix<f64>)> = outer
            .par_chunks(64)
            .map(|chunk| {
                let mut g0 = DMatrix::zeros(n, n);
                let mut g1 = DMatrix::zeros(n, n);
                let mut basis = vec![0.0; k];
                for &(panel, p, w) in chunk {
                    let (r0, r1) = product_row(grid, &rule, p);
                    let start = lagrange_in_panel(grid, panel, p, &mut basis);
                    for (i, &l) in basis.iter().enumerate() {
                        let c0 = w * p * p * l;
                        let c1 = c0 * p * p;
                        for j in 0..n {
                            g0[(start + i, j)] += c0 * r0[j];
                            g1[(start + i, j)] += c1 * r1[j];
                        }
                    }
                }
                (g0, g1)
            })
            .collect();
        let mut a0 = DMatrix::zeros(n, n);
        let mut a1 = DMatrix::zeros(n, n);
        for (g0, g1) in parts {
            a0 += g0;
            a1 += g1;
        }
        let a0 = symmetrize(a0);
        let a1 = symmetrize(a1);
        let rows: Vec<(Vec<f64>, Vec<f64>)> = grid
            .nodes()
            .par_iter()
            .map(|&p| product_row(grid, &rule, p))
            .collect();
        let mut w0 = DMatrix::zeros(n, n);
        let mut w1 = DMatrix::zeros(n, n);
        for (i, (r0, r1)) in rows.into_iter().enumerate() {
            for j in 0..n {
                w0[(i, j)] = r0[j];
                w1[(i, j)] = r1[j];
            }
        }
        let s0 = DVector::from_iterator(
            n,
            grid.nodes().iter().zip(grid.weights()).map(|(p, w)| w * p * p),
        );
        let s1 = DVector::from_iterator(
            n,
            grid.nodes().iter().zip(grid.weights()).map(|(p, w)| w * p.powi(4)),
        );
        if a0.iter().chain(a1.iter()).chain(w0.iter()).chain(w1.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Quadrature("non-finite exchange kernel entry".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            w0,
            w1,
            a0,
            a1,
            s0,
            s1,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn scalar_form(&self) -> &DMatrix<f64> {
        &self.a0
    }

    pub fn vector_form(&self) -> &DMatrix<f64> {
        &self.a1
    }

    /// Nodal values of the convolutions (x0, x1) of (f0, f1) with the
    /// angular-averaged Coulomb kernel |p - q|^-2.
    pub fn apply(&self, f0: &[f64], f1: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let x0 = &self.w0 * DVector::from_column_slice(f0);
        let x1 = &self.w1 * DVector::from_column_slice(f1);
        (x0.as_slice().to_vec(), x1.as_slice().to_vec())
    }

    /// Largest relative mismatch between the Galerkin forms and the nodal
    /// convolutions weighted by `s`, for the state (f0, f1).
    pub fn consistency(&self, f0: &[f64], f1: &[f64]) -> f64 {
        let g0 = &self.a0 * DVector::from_column_slice(f0);
        let g1 = &self.a1 * DVector::from_column_slice(f1);
        let (x0, x1) = self.apply(f0, f1);
        let scale0 = g0.amax().max(f64::MIN_POSITIVE);
        let scale1 = g1.amax().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() {
            worst = worst.max((g0[i] - self.s0[i] * x0[i]).abs() / scale0);
            worst = worst.max((g1[i] - self.s1[i] * x1[i]).abs() / scale1);
        }
        worst
    }

    /// iint p^2 q^2 [f0(p) g0(q) K + p.q f1(p) g1(q) K'] in the Galerkin forms.
    pub fn bilinear(&self, f0: &[f64], f1: &[f64], g0: &[f64], g1: &[f64]) -> f64 {
        let f0 = DVector::from_column_slice(f0);
        let f1 = DVector::from_column_slice(f1);
        let g0 = DVector::from_column_slice(g0);
        let g1 = DVector::from_column_slice(g1);
        f0.dot(&(&self.a0 * g0)) + f1.dot(&(&self.a1 * g1))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Row i of the product-integration matrices for the node `p`.
fn product_row(grid: &RadialGrid, rule: &GaussLegendre, p: f64) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let k = grid.order();
    let mut r0 = vec![0.0; n];
    let mut r1 = vec![0.0; n];
    let mut basis = vec![0.0; k];
    let bps = grid.breakpoints();
    for panel in 0..grid.panels() {
        let (a, b) = (bps[panel], bps[panel + 1]);
        let pieces: Vec<(f64, f64, f64)> = if p > a && p < b {
            vec![(a, p, p), (p, b, p)]
        } else if (p - a).abs() <= (p - b).abs() {
            vec![(a, b, a)]
        } else {
            vec![(a, b, b)]
        };
        for (lo, hi, toward) in pieces {
            for (q, w) in rule.graded(lo, hi, toward, PRODUCT_GRADING) {
                if q <= lo || q >= hi || q == p {
                    continue;
                }
                let start = lagrange_in_panel(grid, panel, q, &mut basis);
                let k0 = w * kernel_scalar(p, q);
                let k1 = w * kernel_vector(p, q);
                for (j, &l) in basis.iter().enumerate() {
                    r0[start + j] += k0 * l;
                    r1[start + j] += k1 * l;
                }
            }
        }
    }
    (r0, r1)
}

fn lagrange_in_panel(grid: &RadialGrid, panel: usize, q: f64, out: &mut [f64]) -> usize {
    let start = grid.lagrange_basis(q, out);
    debug_assert_eq!(start, panel * grid.order());
    start
}
