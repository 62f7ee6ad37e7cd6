use super::propagator::{PropagatorKind, PropagatorSpec, NEAR_CAUSTIC_TOL};
use super::quadrature::{composite_panels, extrapolate_to_zero, ConvergenceLadder, GaussLegendre};
use crate::error::{Error, Result};
use crate::linalg::{c, C64};

/// Panel layout for the regularized composition integral.
#[derive(Debug, Clone, PartialEq)]
pub struct EsckQuadrature {
    pub order: usize,
    /// Radians of integrand phase per panel.
    pub panel_phase: f64,
    /// The integral is cut where `εx² = tail`.
    pub tail: f64,
}

impl Default for EsckQuadrature {
    fn default() -> Self {
        EsckQuadrature {
            order: 16,
            panel_phase: 8.0,
            tail: 36.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsckReport {
    /// `|numeric − exact| / |exact|`, or `|numeric|` where the exact kernel vanishes.
    pub residual: f64,
    pub numeric: C64,
    pub exact: C64,
    pub extrapolation_residual: f64,
    /// Integrand evaluations at the smallest `ε`.
    pub nodes: usize,
}

/// Compares `lim_{ε→0⁺} ∫ K(x₃,t₃|x,t₂) K(x,t₂|x₁,t₁) e^{−ε|x|²} dx` with
/// `K(x₃,t₃|x₁,t₁)`.
pub fn check_esck(
    spec: &PropagatorSpec,
    x3: &[f64],
    t3: f64,
    x1: &[f64],
    t1: f64,
    t2: f64,
    ladder: &ConvergenceLadder,
    quad: &EsckQuadrature,
) -> Result<EsckReport> {
    let d = spec.dim();
    if x3.len() != d || x1.len() != d {
        return Err(Error::usage("points must match the propagator dimension"));
    }
    if !(t1 < t2 && t2 < t3) {
        return Err(Error::usage(format!("need t₁ < t₂ < t₃, got {t1}, {t2}, {t3}")));
    }
    if let PropagatorKind::Oscillator { omega } = spec.kind() {
        for dt in [t2 - t1, t3 - t2, t3 - t1] {
            let s = (omega * dt).sin().abs();
            if s < NEAR_CAUSTIC_TOL {
                return Err(Error::Inapplicable(format!(
                    "interval {dt} lies on or near a caustic (|sin ωΔt| = {s:.2e})"
                )));
            }
        }
    }
    let rule = GaussLegendre::new(quad.order)?;
    let (d1, d2) = (t2 - t1, t3 - t2);
    let breaks: &[f64] = match spec.kind() {
        PropagatorKind::HalfLine => &[0.0],
        _ => &[],
    };
    let mut values = Vec::with_capacity(ladder.epsilons().len());
    let mut nodes = 0;
    for &eps in ladder.epsilons() {
        let mut product = c(1.0, 0.0);
        nodes = 0;
        for axis in 0..d {
            let l = (quad.tail / eps).sqrt() + x1[axis].abs() + x3[axis].abs();
            let k = spec.phase_gradient_bound(d1, l) + spec.phase_gradient_bound(d2, l);
            let panels = composite_panels(-l, l, breaks, quad.panel_phase / k);
            let mut sum = c(0.0, 0.0);
            for &(a, b) in &panels {
                for (x, w) in rule.on(a, b) {
                    sum += spec.axis_kernel(axis, x3[axis], x, d2)
                        * spec.axis_kernel(axis, x, x1[axis], d1)
                        * (w * (-eps * x * x).exp());
                }
            }
            nodes += panels.len() * quad.order;
            product *= sum;
        }
        values.push(product);
    }
    let (numeric, extrapolation_residual) = extrapolate_to_zero(ladder.epsilons(), &values);
    let exact = spec
        .value(x3, t3, x1, t1)?
        .finite()
        .ok_or_else(|| Error::Inapplicable("the composed interval is a caustic".into()))?;
    let residual = if exact.norm() > 0.0 {
        (numeric - exact).norm() / exact.norm()
    } else {
        numeric.norm()
    };
    Ok(EsckReport {
        residual,
        numeric,
        exact,
        extrapolation_residual,
        nodes,
    })
}
