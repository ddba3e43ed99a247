use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Composite Gauss-Legendre grid on [0, R]. Every panel carries the same
/// number of nodes, which allows high-order interpolation inside a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    breakpoints: Vec<f64>,
    order: usize,
    rule: Arc<GaussLegendre>,
    bary: Arc<Vec<f64>>,
}

/// Composite Gauss-Legendre grid with `panels` equal panels of `order` nodes.
pub fn make_radial_grid(end: f64, panels: usize, order: usize) -> Result<RadialGrid> {
    if !(end.is_finite() && end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid endpoint must be positive, got {end}"
        )));
    }
    if panels == 0 {
        return Err(Error::InvalidParameter("at least one panel required".into()));
    }
    let breakpoints: Vec<f64> = (0..=panels)
        .map(|i| end * i as f64 / panels as f64)
        .collect();
    RadialGrid::from_breakpoints(&breakpoints, order)
}

impl RadialGrid {
    /// Grid with panels between consecutive `breakpoints` (first must be 0).
    pub fn from_breakpoints(breakpoints: &[f64], order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!(
                "panel order must be >= 2, got {order}"
            )));
        }
        if breakpoints.len() < 2 || breakpoints[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "breakpoints must start at 0 and define at least one panel".into(),
            ));
        }
        if !breakpoints.windows(2).all(|w| w[1] > w[0]) || !breakpoints.iter().all(|b| b.is_finite()) {
            return Err(Error::InvalidParameter("breakpoints must increase strictly".into()));
        }
        let rule = GaussLegendre::new(order);
        let mut nodes = Vec::with_capacity(order * (breakpoints.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in breakpoints.windows(2) {
            for (x, wt) in rule.mapped(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        let bary = rule.barycentric_weights();
        Ok(Self {
            nodes,
            weights,
            breakpoints: breakpoints.to_vec(),
            order,
            rule: Arc::new(rule),
            bary: Arc::new(bary),
        })
    }

    /// Panels on [0, end] with breakpoints at the given fractions of `end`.
    pub fn graded(end: f64, fractions: &[f64], order: usize) -> Result<Self> {
        let mut bps = vec![0.0];
        bps.extend(fractions.iter().map(|f| f * end));
        bps.push(end);
        Self::from_breakpoints(&bps, order)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn panels(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().expect("grid has breakpoints")
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    /// Sum of w_i f(r_i).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * f(r))
            .sum()
    }

    /// Panel containing `r` (clamped to the grid range).
    pub fn panel_of(&self, r: f64) -> usize {
        let n = self.panels();
        match self
            .breakpoints
            .binary_search_by(|b| b.total_cmp(&r))
        {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Lagrange basis values of the panel containing `r`: returns the index of
    /// the first node of that panel and writes `order` weights into `out`.
    pub fn lagrange_basis(&self, r: f64, out: &mut [f64]) -> usize {
        let panel = self.panel_of(r);
        let (a, b) = (self.breakpoints[panel], self.breakpoints[panel + 1]);
        let t = (2.0 * r - a - b) / (b - a);
        let xs = &self.rule.nodes;
        for (j, &x) in xs.iter().enumerate() {
            if t == x {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[j] = 1.0;
                return panel * self.order;
            }
        }
        let mut denom = 0.0;
        for (j, &x) in xs.iter().enumerate() {
            let v = self.bary[j] / (t - x);
            out[j] = v;
            denom += v;
        }
        out.iter_mut().for_each(|o| *o /= denom);
        panel * self.order
    }

    /// High-order interpolation of nodal `values` at `r` inside [0, R].
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let mut basis = vec![0.0; self.order];
        let start = self.lagrange_basis(r, &mut basis);
        basis
            .iter()
            .zip(&values[start..start + self.order])
            .map(|(b, v)| b * v)
            .sum()
    }
}
