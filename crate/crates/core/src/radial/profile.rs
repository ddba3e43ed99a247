use crate::error::{Error, Result};
use crate::momentum::RadialGrid;

/// Finite-difference weights (Fornberg) for derivatives of order 0..=m at
/// `x0` from samples at `xs`. Entry `[k][j]` multiplies `f(xs[j])` in the
/// k-th derivative.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A real function of a radial variable tabulated on a [`RadialGrid`] and
/// interpolated by the panel-wise Lagrange polynomial through the nodes.
/// Evaluation outside [0, R] returns 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite profile value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(grid: RadialGrid, f: F) -> Result<Self> {
        let values = grid.nodes().iter().copied().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn end(&self) -> f64 {
        self.grid.end()
    }

    pub fn eval(&self, r: f64) -> f64 {
        if !(0.0..=self.end()).contains(&r) {
            return 0.0;
        }
        self.grid.interpolate(&self.values, r)
    }

    /// Like [`eval`](Self::eval) but rejecting points outside the grid.
    pub fn try_eval(&self, r: f64) -> Result<f64> {
        if !(0.0..=self.end()).contains(&r) {
            return Err(Error::OutOfGrid {
                value: r,
                end: self.end(),
            });
        }
        Ok(self.grid.interpolate(&self.values, r))
    }

    /// Pointwise map into a new profile on the same grid.
    pub fn map<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> Result<Self> {
        let values = self
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| f(r, v))
            .collect();
        Self::new(self.grid.clone(), values)
    }

    /// Sum of w_i v_i over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    fn panel_slice(&self, panel: usize) -> (&[f64], &[f64]) {
        let k = self.grid.order();
        let s = panel * k;
        (&self.grid.nodes()[s..s + k], &self.values[s..s + k])
    }

    /// k-th derivative at `r` from the nodes of the panel containing `r`,
    /// using the `stencil` nodes nearest to `r` (all panel nodes if `None`).
    pub fn derivative(&self, r: f64, k: usize, stencil: Option<usize>) -> f64 {
        let panel = self.grid.panel_of(r);
        let (xs, vs) = self.panel_slice(panel);
        let n = stencil.unwrap_or(xs.len()).clamp(k + 1, xs.len());
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&a, &b| (xs[a] - r).abs().total_cmp(&(xs[b] - r).abs()));
        idx.truncate(n);
        let sx: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
        let w = fd_weights(r, &sx, k);
        idx.iter().zip(&w[k]).map(|(&i, wi)| wi * vs[i]).sum()
    }

    /// Profile of the k-th derivative at the nodes, panel by panel.
    pub fn derivative_profile(&self, k: usize) -> Result<Self> {
        let mut out = Vec::with_capacity(self.values.len());
        for panel in 0..self.grid.panels() {
            let (xs, vs) = self.panel_slice(panel);
            for &x in xs {
                let w = fd_weights(x, xs, k);
                out.push(w[k].iter().zip(vs).map(|(a, b)| a * b).sum());
            }
        }
        Self::new(self.grid.clone(), out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentum::make_radial_grid;

    #[test]
    fn fornberg_central_difference() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[1][0] + 0.5).abs() < 1e-15 && (w[1][2] - 0.5).abs() < 1e-15);
        assert!((w[2][0] - 1.0).abs() < 1e-15 && (w[2][1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn profile_outside_is_zero() {
        let g = make_radial_grid(2.0, 2, 8).unwrap();
        let p = RadialProfile::from_fn(g, |r| 1.0 + r).unwrap();
        assert_eq!(p.eval(2.5), 0.0);
        assert_eq!(p.eval(-0.1), 0.0);
        assert!((p.eval(2.0) - 3.0).abs() < 1e-13);
        assert!(p.try_eval(2.1).is_err());
    }

    #[test]
    fn endpoint_derivatives() {
        let g = make_radial_grid(2.0, 4, 12).unwrap();
        let p = RadialProfile::from_fn(g, |r| (1.3 * r).sin()).unwrap();
        assert!((p.derivative(2.0, 1, None) - 1.3 * (2.6f64).cos()).abs() < 1e-9);
        assert!((p.derivative(0.0, 2, None)).abs() < 1e-7);
        let d3 = p.derivative_profile(3).unwrap();
        for (&r, &v) in d3.nodes().iter().zip(d3.values()) {
            assert!((v + 1.3f64.powi(3) * (1.3 * r).cos()).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let g = make_radial_grid(1.0, 1, 4).unwrap();
        assert!(RadialProfile::new(g.clone(), vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(RadialProfile::new(g, vec![0.0; 3]).is_err());
    }
}
