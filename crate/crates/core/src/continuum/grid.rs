use std::sync::Arc;

use super::quadrature::{composite_panels, GaussLegendre};
use crate::error::{Error, Result};
use crate::event_algebra::Region;
use crate::linalg::{c, C64};

/// Composite Gauss–Legendre nodes along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    lo: f64,
    hi: f64,
    panels: Vec<(f64, f64)>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Axis {
    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn panels(&self) -> &[(f64, f64)] {
        &self.panels
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Panel holding `x`; points on a shared edge go to the right panel.
    pub fn panel_of(&self, x: f64) -> Option<usize> {
        if x < self.lo || x > self.hi {
            return None;
        }
        let i = self.panels.partition_point(|&(a, _)| a <= x);
        Some(i.saturating_sub(1))
    }
}

/// Tensor product of per-axis composite rules over a box in `ℝ^d`. Values
/// are stored row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    rule: GaussLegendre,
}

impl Grid {
    /// `bounds[a]` is the extent of axis `a`; every panel is at most
    /// `max_width[a]` wide and never straddles a breakpoint.
    pub fn new(
        bounds: &[(f64, f64)],
        breakpoints: &[Vec<f64>],
        max_width: &[f64],
        order: usize,
    ) -> Result<Self> {
        if bounds.is_empty() || bounds.len() != breakpoints.len() || bounds.len() != max_width.len() {
            return Err(Error::usage("grid needs bounds, breakpoints and widths per axis"));
        }
        let rule = GaussLegendre::new(order)?;
        let mut axes = Vec::with_capacity(bounds.len());
        for ((&(lo, hi), cuts), &h) in bounds.iter().zip(breakpoints).zip(max_width) {
            if !(lo < hi) || !(h > 0.0) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::usage(format!("bad grid axis [{lo}, {hi}] with width {h}")));
            }
            let panels = composite_panels(lo, hi, cuts, h);
            let mut nodes = Vec::with_capacity(panels.len() * order);
            let mut weights = Vec::with_capacity(panels.len() * order);
            for &(a, b) in &panels {
                for (x, w) in rule.on(a, b) {
                    nodes.push(x);
                    weights.push(w);
                }
            }
            axes.push(Axis {
                lo,
                hi,
                panels,
                nodes,
                weights,
            });
        }
        Ok(Grid { axes, rule })
    }

    /// One-dimensional grid on `[lo, hi]`.
    pub fn line(lo: f64, hi: f64, breakpoints: &[f64], max_width: f64, order: usize) -> Result<Self> {
        Self::new(&[(lo, hi)], &[breakpoints.to_vec()], &[max_width], order)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis indices of a flat index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            let n = self.axes[a].len();
            idx[a] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax.nodes[i])
            .collect()
    }

    pub fn weight(&self, flat: usize) -> f64 {
        self.unflatten(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax.weights[i])
            .product()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Piecewise-polynomial interpolant of grid values at `x`; zero outside
    /// the box.
    pub fn interpolate(&self, values: &[C64], x: &[f64]) -> C64 {
        let q = self.rule.order();
        let mut panels = Vec::with_capacity(self.dim());
        for (ax, &xa) in self.axes.iter().zip(x) {
            match ax.panel_of(xa) {
                Some(p) => panels.push(p),
                None => return c(0.0, 0.0),
            }
        }
        // Collapse one axis at a time, last axis first.
        let mut block: Vec<C64> = Vec::with_capacity(q.pow(self.dim() as u32));
        let strides: Vec<usize> = (0..self.dim())
            .map(|a| self.axes[a + 1..].iter().map(Axis::len).product())
            .collect();
        let count = q.pow(self.dim() as u32);
        for local in 0..count {
            let mut rem = local;
            let mut flat = 0;
            for a in (0..self.dim()).rev() {
                let i = rem % q;
                rem /= q;
                flat += (panels[a] * q + i) * strides[a];
            }
            block.push(values[flat]);
        }
        for a in (0..self.dim()).rev() {
            let (lo, hi) = self.axes[a].panels[panels[a]];
            let t = (2.0 * x[a] - lo - hi) / (hi - lo);
            block = block
                .chunks(q)
                .map(|chunk| self.rule.interpolate(chunk, t))
                .collect();
        }
        block[0]
    }
}

/// Complex samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Arc<Grid>,
    values: Vec<C64>,
}

impl WaveFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::usage(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(WaveFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        WaveFunction { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![c(0.0, 0.0); grid.len()];
        WaveFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::usage("wave functions live on different grids"))
        }
    }

    /// `⟨self, other⟩ = ∫ self* other` by the grid rule.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.same_grid(other)?;
        let w = self.grid.weights();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(&w)
            .map(|((a, b), &w)| a.conj() * b * w)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same grid").re.max(0.0).sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.sub(other)?.norm())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(WaveFunction {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(WaveFunction {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn scale(&self, z: C64) -> Self {
        WaveFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * z).collect(),
        }
    }

    /// `χ_R · self`, evaluated at the nodes.
    pub fn masked(&self, region: &Region) -> Self {
        if region.is_full() {
            return self.clone();
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if region.contains(&self.grid.point(i)) {
                    v
                } else {
                    c(0.0, 0.0)
                }
            })
            .collect();
        WaveFunction {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> C64 {
        self.grid.interpolate(&self.values, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_norm_on_a_line() {
        let g = Arc::new(Grid::line(-10.0, 10.0, &[], 0.5, 12).unwrap());
        let psi = WaveFunction::from_fn(g, |x| {
            c((-x[0] * x[0] / 2.0).exp() / std::f64::consts::PI.powf(0.25), 0.0)
        });
        assert!((psi.norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn breakpoints_are_panel_edges() {
        let g = Grid::line(-1.0, 1.0, &[0.123], 0.3, 4).unwrap();
        let ax = &g.axes()[0];
        assert!(ax.panels().iter().any(|&(a, _)| a == 0.123));
        assert_eq!(ax.panel_of(0.123), ax.panels().iter().position(|&(a, _)| a == 0.123));
        assert_eq!(ax.panel_of(1.5), None);
        assert_eq!(ax.panel_of(1.0), Some(ax.panels().len() - 1));
    }

    #[test]
    fn interpolation_in_two_dimensions() {
        let g = Arc::new(
            Grid::new(&[(-1.0, 1.0), (0.0, 2.0)], &[vec![], vec![1.0]], &[0.5, 0.7], 8).unwrap(),
        );
        let f = |x: &[f64]| c((x[0] * 1.3).sin() * x[1].cos(), x[0] * x[1]);
        let w = WaveFunction::from_fn(g, f);
        for p in [[0.31, 0.77], [-0.99, 1.99], [0.0, 1.0]] {
            assert!((w.evaluate(&p) - f(&p)).norm() < 1e-9);
        }
        assert_eq!(w.evaluate(&[2.0, 0.5]), c(0.0, 0.0));
    }

    #[test]
    fn masking_uses_region_membership() {
        let g = Arc::new(Grid::line(-2.0, 2.0, &[0.0, 1.0], 0.5, 6).unwrap());
        let one = WaveFunction::from_fn(g, |_| c(1.0, 0.0));
        let m = one.masked(&Region::interval(0.0, 1.0).unwrap());
        assert!((m.norm().powi(2) - 1.0).abs() < 1e-13);
        let co = one.masked(&Region::interval(0.0, 1.0).unwrap().complement());
        assert!((co.norm().powi(2) - 3.0).abs() < 1e-13);
    }
}
