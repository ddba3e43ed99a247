use crate::error::{Error, Result};

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidParameter(
                "spline needs at least two knots and matching values".into(),
            ));
        }
        if !xs.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("spline knots must increase".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite spline data".into()));
        }
        // Thomas algorithm for the interior second derivatives.
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[i] = 2.0 * (h0 + h1);
                rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for i in 2..n - 1 {
                let h = xs[i] - xs[i - 1];
                let f = h / diag[i - 1];
                diag[i] -= f * h;
                rhs[i] -= f * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                let h1 = xs[i + 1] - xs[i];
                m[i] = (rhs[i] - h1 * m[i + 1]) / diag[i];
            }
        }
        Ok(Self { xs, ys, m })
    }

    pub fn first(&self) -> f64 {
        self.xs[0]
    }

    pub fn last(&self) -> f64 {
        *self.xs.last().expect("non-empty")
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    /// Value at `x`, clamped to the end values outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_data_and_knots() {
        let s = CubicSpline::new(vec![0.0, 1.0, 2.5, 3.0], vec![1.0, 3.0, 6.0, 7.0]).unwrap();
        assert!((s.eval(1.7) - 4.4).abs() < 1e-14);
        assert_eq!(s.eval(2.5), 6.0);
    }

    #[test]
    fn smooth_function_accuracy() {
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 * 0.03).collect();
        let ys = xs.iter().map(|x| (-x * x).exp()).collect();
        let s = CubicSpline::new(xs, ys).unwrap();
        for x in [0.11, 1.234, 2.9] {
            assert!((s.eval(x) - (-x * x).exp()).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_unsorted() {
        assert!(CubicSpline::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }
}
