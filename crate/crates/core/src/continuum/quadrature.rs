use crate::error::{Error, Result};
use crate::linalg::{c, C64};

/// Gauss–Legendre rule of order `q` on `[−1, 1]`, with barycentric weights
/// for Lagrange interpolation through its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Result<Self> {
        if !(2..=64).contains(&order) {
            return Err(Error::usage(format!("Gauss–Legendre order {order} outside 2..=64")));
        }
        let q = order;
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        for i in 0..q.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[q - 1 - i] = x;
            weights[i] = w;
            weights[q - 1 - i] = w;
        }
        let bary = (0..q)
            .map(|j| {
                let s = ((1.0 - nodes[j] * nodes[j]) * weights[j]).sqrt();
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        Ok(GaussLegendre {
            nodes,
            weights,
            bary,
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    /// Lagrange interpolant through the nodes, evaluated at `t ∈ [−1, 1]`.
    pub fn interpolate(&self, values: &[C64], t: f64) -> C64 {
        let mut num = c(0.0, 0.0);
        let mut den = 0.0;
        for ((&x, &b), &v) in self.nodes.iter().zip(&self.bary).zip(values) {
            let d = t - x;
            if d == 0.0 {
                return v;
            }
            num += v * (b / d);
            den += b / d;
        }
        num / den
    }
}

/// `(P_q(x), P_q'(x))`
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=q {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule: `[a, b]` is cut at the given breakpoints and each piece
/// is split into equal panels no wider than `max_width`.
pub fn composite_panels(a: f64, b: f64, breakpoints: &[f64], max_width: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut panels = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let k = (len / max_width).ceil().max(1.0) as usize;
        let h = len / k as f64;
        for i in 0..k {
            let lo = w[0] + i as f64 * h;
            let hi = if i + 1 == k { w[1] } else { lo + h };
            panels.push((lo, hi));
        }
    }
    panels
}

/// Decreasing sequence of convergence-factor strengths `ε` and the tolerance
/// on the extrapolated limit.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLadder {
    epsilons: Vec<f64>,
    tolerance: f64,
}

impl Default for ConvergenceLadder {
    fn default() -> Self {
        Self::geometric(1e-2, 0.5, 5, 1e-6).expect("valid default ladder")
    }
}

impl ConvergenceLadder {
    pub fn new(epsilons: Vec<f64>, tolerance: f64) -> Result<Self> {
        if epsilons.len() < 3 {
            return Err(Error::usage("convergence ladder needs at least 3 entries"));
        }
        if epsilons.iter().any(|&e| !(e > 0.0) || !e.is_finite())
            || epsilons.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::usage(format!(
                "ladder must be positive and strictly decreasing: {epsilons:?}"
            )));
        }
        if !(tolerance > 0.0) {
            return Err(Error::usage("ladder tolerance must be positive"));
        }
        Ok(ConvergenceLadder {
            epsilons,
            tolerance,
        })
    }

    pub fn geometric(first: f64, ratio: f64, len: usize, tolerance: f64) -> Result<Self> {
        if !(0.0 < ratio && ratio < 1.0) {
            return Err(Error::usage("ladder ratio must lie in (0, 1)"));
        }
        Self::new(
            (0..len).map(|k| first * ratio.powi(k as i32)).collect(),
            tolerance,
        )
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn smallest(&self) -> f64 {
        *self.epsilons.last().unwrap()
    }
}

/// Polynomial (Neville) extrapolation of `values[i] = f(ε_i)` to `ε = 0`.
/// Returns the estimate from all points and its distance to the estimate
/// that omits the largest `ε`.
pub fn extrapolate_to_zero(epsilons: &[f64], values: &[C64]) -> (C64, f64) {
    let full = neville_at_zero(epsilons, values);
    if epsilons.len() < 2 {
        return (full, f64::INFINITY);
    }
    let reduced = neville_at_zero(&epsilons[1..], &values[1..]);
    (full, (full - reduced).norm())
}

fn neville_at_zero(x: &[f64], y: &[C64]) -> C64 {
    let mut p: Vec<C64> = y.to_vec();
    let n = x.len();
    for m in 1..n {
        for i in 0..n - m {
            let (xi, xj) = (x[i], x[i + m]);
            p[i] = (p[i] * (-xj) + p[i + 1] * xi) / (xi - xj);
        }
    }
    p[0]
}
