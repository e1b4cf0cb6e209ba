//! Trapezoid weights over a sub-interval of a sampled grid.

use crate::{Error, Result};

/// Node indices and nonnegative weights such that `sum w_i f(x_i)` integrates
/// the piecewise-linear interpolant of `f` over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Quadrature {
    pub(crate) nodes: Vec<usize>,
    pub(crate) weights: Vec<f64>,
}

impl Quadrature {
    pub(crate) fn over(grid: &[f64], lo: f64, hi: f64) -> Result<Self> {
        let (first, last) = match (grid.first(), grid.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::Domain("empty spatial grid".into())),
        };
        let slack = 1e-12 * (1.0 + first.abs().max(last.abs()));
        if lo < first - slack || hi > last + slack || !(lo <= hi) {
            return Err(Error::Domain(format!(
                "interval [{lo}, {hi}] outside grid span [{first}, {last}]"
            )));
        }
        let (lo, hi) = (lo.max(first), hi.min(last));
        let mut nodes = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut push = |i: usize, w: f64| {
            if nodes.last() == Some(&i) {
                *weights.last_mut().unwrap() += w;
            } else {
                nodes.push(i);
                weights.push(w);
            }
        };
        for (i, cell) in grid.windows(2).enumerate() {
            let (x0, x1) = (cell[0], cell[1]);
            let a = x0.max(lo);
            let b = x1.min(hi);
            if b <= a {
                continue;
            }
            let h = x1 - x0;
            let ta = (a - x0) / h;
            let tb = (b - x0) / h;
            let half = 0.5 * (b - a);
            push(i, half * ((1.0 - ta) + (1.0 - tb)));
            push(i + 1, half * (ta + tb));
        }
        Ok(Self { nodes, weights })
    }
}
