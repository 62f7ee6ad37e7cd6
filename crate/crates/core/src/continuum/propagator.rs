use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::linalg::{c, C64};

/// `|sin ωΔt|` below which the oscillator kernel is a delta function.
pub const CAUSTIC_TOL: f64 = 1e-8;
/// `|sin ωΔt|` below which (and above [`CAUSTIC_TOL`]) the oscillator kernel
/// is refused as too close to a caustic.
pub const NEAR_CAUSTIC_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum PropagatorKind {
    Free,
    /// Charge `e` in the constant vector potential `A`.
    VectorPotential { charge: f64, potential: Vec<f64> },
    /// Isotropic harmonic oscillator of angular frequency `ω`.
    Oscillator { omega: f64 },
    /// Free particle on `x > 0` behind an infinite wall at the origin.
    HalfLine,
}

/// A closed-form propagator `K(x', t' | x, t)` on `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSpec {
    kind: PropagatorKind,
    dim: usize,
    mass: f64,
    hbar: f64,
}

/// Value of a propagator: an ordinary number, or the oscillator caustic
/// `e^{−iMπd/2} δ(x' − (−1)^M x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PropagatorValue {
    Finite(C64),
    Delta { maslov: i64, phase: C64 },
}

impl PropagatorValue {
    pub fn finite(self) -> Option<C64> {
        match self {
            PropagatorValue::Finite(z) => Some(z),
            PropagatorValue::Delta { .. } => None,
        }
    }
}

/// How one time step acts: through an integral kernel, or as the reflected
/// and phased identity at a caustic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepKind {
    Kernel,
    Delta { reflect: bool, phase: C64 },
}

impl PropagatorSpec {
    pub fn new(kind: PropagatorKind, dim: usize, mass: f64, hbar: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("dimension must be positive"));
        }
        if !(mass > 0.0 && mass.is_finite()) || !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::usage("mass and ħ must be positive"));
        }
        match &kind {
            PropagatorKind::Oscillator { omega } if !(*omega > 0.0 && omega.is_finite()) => {
                return Err(Error::usage("oscillator frequency must be positive"));
            }
            PropagatorKind::VectorPotential { potential, charge } => {
                if potential.len() != dim || !charge.is_finite() {
                    return Err(Error::usage(format!(
                        "vector potential needs {dim} components"
                    )));
                }
            }
            PropagatorKind::HalfLine if dim != 1 => {
                return Err(Error::usage("the half-line propagator is one-dimensional"));
            }
            _ => {}
        }
        Ok(PropagatorSpec {
            kind,
            dim,
            mass,
            hbar,
        })
    }

    pub fn free(dim: usize) -> Self {
        Self::new(PropagatorKind::Free, dim, 1.0, 1.0).expect("valid")
    }

    pub fn oscillator(dim: usize, omega: f64) -> Result<Self> {
        Self::new(PropagatorKind::Oscillator { omega }, dim, 1.0, 1.0)
    }

    pub fn vector_potential(charge: f64, potential: Vec<f64>) -> Result<Self> {
        let dim = potential.len();
        Self::new(
            PropagatorKind::VectorPotential { charge, potential },
            dim,
            1.0,
            1.0,
        )
    }

    pub fn half_line() -> Self {
        Self::new(PropagatorKind::HalfLine, 1, 1.0, 1.0).expect("valid")
    }

    pub fn kind(&self) -> &PropagatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Classifies a step of length `dt`. Oscillator steps within
    /// [`NEAR_CAUSTIC_TOL`] of a caustic are refused.
    pub fn step_kind(&self, dt: f64) -> Result<StepKind> {
        if !(dt > 0.0) {
            return Err(Error::usage(format!("propagation needs t' > t (Δt = {dt})")));
        }
        if let PropagatorKind::Oscillator { omega } = self.kind {
            let s = (omega * dt).sin();
            if s.abs() < CAUSTIC_TOL {
                let m = (omega * dt / PI).round() as i64;
                let phase = C64::from_polar(1.0, -(m as f64) * FRAC_PI_2 * self.dim as f64);
                return Ok(StepKind::Delta {
                    reflect: m % 2 != 0,
                    phase,
                });
            }
            if s.abs() < NEAR_CAUSTIC_TOL {
                return Err(Error::NearCaustic {
                    delta_t: dt,
                    sin_abs: s.abs(),
                });
            }
        }
        Ok(StepKind::Kernel)
    }

    /// `K(x', t' | x, t)`.
    pub fn value(&self, x_to: &[f64], t_to: f64, x_from: &[f64], t_from: f64) -> Result<PropagatorValue> {
        if x_to.len() != self.dim || x_from.len() != self.dim {
            return Err(Error::usage("point dimension does not match the propagator"));
        }
        let dt = t_to - t_from;
        match self.step_kind(dt)? {
            StepKind::Delta { phase, .. } => {
                let m = match self.kind {
                    PropagatorKind::Oscillator { omega } => (omega * dt / PI).round() as i64,
                    _ => unreachable!("only the oscillator has caustics"),
                };
                Ok(PropagatorValue::Delta { maslov: m, phase })
            }
            StepKind::Kernel => Ok(PropagatorValue::Finite(
                (0..self.dim)
                    .map(|a| self.axis_kernel(a, x_to[a], x_from[a], dt))
                    .product(),
            )),
        }
    }

    /// One-dimensional factor of the kernel along `axis` for a non-caustic
    /// step; the full kernel is the product over axes.
    pub fn axis_kernel(&self, axis: usize, y: f64, x: f64, dt: f64) -> C64 {
        let (m, hb) = (self.mass, self.hbar);
        match &self.kind {
            PropagatorKind::Free => free_1d(m, hb, y, x, dt),
            PropagatorKind::VectorPotential { charge, potential } => {
                free_1d(m, hb, y, x, dt)
                    * C64::from_polar(1.0, charge * potential[axis] * (y - x) / hb)
            }
            PropagatorKind::Oscillator { omega } => {
                let w = omega * dt;
                let (s, co) = w.sin_cos();
                let maslov = (w / PI).floor();
                let amp = (m * omega / (2.0 * PI * hb * s.abs())).sqrt();
                let phase = -FRAC_PI_4 - maslov * FRAC_PI_2
                    + m * omega * ((y * y + x * x) * co - 2.0 * x * y) / (2.0 * hb * s);
                C64::from_polar(amp, phase)
            }
            PropagatorKind::HalfLine => {
                if x <= 0.0 || y <= 0.0 {
                    return c(0.0, 0.0);
                }
                let pre = C64::from_polar((m / (2.0 * PI * hb * dt)).sqrt(), -FRAC_PI_4);
                let k = m / (2.0 * hb * dt);
                pre * (C64::from_polar(1.0, k * (y - x) * (y - x))
                    - C64::from_polar(1.0, k * (y + x) * (y + x)))
            }
        }
    }

    /// Upper bound on `|∂ phase / ∂x|` of the kernel when both points lie in
    /// `[−half_width, half_width]`.
    pub fn phase_gradient_bound(&self, dt: f64, half_width: f64) -> f64 {
        let (m, hb, l) = (self.mass, self.hbar, half_width);
        match &self.kind {
            PropagatorKind::Free | PropagatorKind::HalfLine => 2.0 * m * l / (hb * dt),
            PropagatorKind::VectorPotential { charge, potential } => {
                let a = potential.iter().map(|v| v.abs()).fold(0.0, f64::max);
                2.0 * m * l / (hb * dt) + (charge * a).abs() / hb
            }
            PropagatorKind::Oscillator { omega } => {
                let (s, co) = (omega * dt).sin_cos();
                m * omega * (co.abs() * l + l) / (hb * s.abs().max(NEAR_CAUSTIC_TOL))
            }
        }
    }
}

fn free_1d(m: f64, hb: f64, y: f64, x: f64, dt: f64) -> C64 {
    let amp = (m / (2.0 * PI * hb * dt)).sqrt();
    C64::from_polar(amp, -FRAC_PI_4 + m * (y - x) * (y - x) / (2.0 * hb * dt))
}
