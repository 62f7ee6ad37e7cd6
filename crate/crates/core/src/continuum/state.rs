use std::f64::consts::PI;
use std::sync::Arc;

use super::grid::{Grid, WaveFunction};
use super::propagator::{PropagatorKind, PropagatorSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, C64};

/// Widths (in `σ`) kept between the furthest packet centre and the box edge.
const GAUSSIAN_SIGMAS: f64 = 7.0;
const ODD_SIGMAS: f64 = 8.0;

/// Initial wave function at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// `(2πσ²)^{−d/4} exp(−|x−c|²/(4σ²) + i k·x)`.
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        momentum: Vec<f64>,
    },
    /// Normalized `x e^{−x²/(4σ²)}` on `x > 0`, zero elsewhere (`d = 1`).
    HalfLineOdd { sigma: f64 },
    /// Samples on a user-chosen grid, read between nodes by interpolation.
    Sampled(WaveFunction),
}

impl InitialState {
    pub fn gaussian(center: Vec<f64>, sigma: f64, momentum: Vec<f64>) -> Result<Self> {
        if center.is_empty() || center.len() != momentum.len() {
            return Err(Error::usage("gaussian centre and momentum need the same dimension"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::usage("gaussian width must be positive"));
        }
        if center.iter().chain(&momentum).any(|v| !v.is_finite()) {
            return Err(Error::usage("gaussian parameters must be finite"));
        }
        Ok(InitialState::Gaussian {
            center,
            sigma,
            momentum,
        })
    }

    /// Unit-width packet at rest at `x0` on the line.
    pub fn standard(x0: f64) -> Self {
        Self::gaussian(vec![x0], 1.0, vec![0.0]).expect("valid")
    }

    pub fn half_line_odd(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::usage("width must be positive"));
        }
        Ok(InitialState::HalfLineOdd { sigma })
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialState::Gaussian { center, .. } => center.len(),
            InitialState::HalfLineOdd { .. } => 1,
            InitialState::Sampled(w) => w.grid().dim(),
        }
    }

    pub fn value(&self, x: &[f64]) -> C64 {
        match self {
            InitialState::Gaussian {
                center,
                sigma,
                momentum,
            } => {
                let d = center.len() as f64;
                let norm = (2.0 * PI * sigma * sigma).powf(-d / 4.0);
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                let kx: f64 = x.iter().zip(momentum).map(|(a, k)| a * k).sum();
                C64::from_polar(norm * (-r2 / (4.0 * sigma * sigma)).exp(), kx)
            }
            InitialState::HalfLineOdd { sigma } => {
                if x[0] <= 0.0 {
                    return c(0.0, 0.0);
                }
                let norm = ((PI / 2.0).sqrt() * sigma.powi(3)).powf(-0.5);
                c(norm * x[0] * (-x[0] * x[0] / (4.0 * sigma * sigma)).exp(), 0.0)
            }
            InitialState::Sampled(w) => w.evaluate(x),
        }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<WaveFunction> {
        if grid.dim() != self.dim() {
            return Err(Error::usage("state and grid dimensions differ"));
        }
        if let InitialState::Sampled(w) = self {
            if w.grid() == grid {
                return Ok(w.clone());
            }
        }
        Ok(WaveFunction::from_fn(grid.clone(), |x| self.value(x)))
    }

    /// Per-axis interval holding all but a negligible tail of the state over
    /// `[0, t_max]` under `spec`.
    pub fn support(&self, spec: &PropagatorSpec, t_max: f64) -> Vec<(f64, f64)> {
        let (m, hb) = (spec.mass(), spec.hbar());
        match self {
            InitialState::Gaussian {
                center,
                sigma,
                momentum,
            } => {
                let s = *sigma;
                center
                    .iter()
                    .zip(momentum)
                    .enumerate()
                    .map(|(a, (&c0, &k))| match spec.kind() {
                        PropagatorKind::Oscillator { omega } => {
                            let amp = (c0 * c0 + (hb * k / (m * omega)).powi(2)).sqrt();
                            let width = s.max(hb / (2.0 * m * omega * s));
                            (-amp - GAUSSIAN_SIGMAS * width, amp + GAUSSIAN_SIGMAS * width)
                        }
                        kind => {
                            let shift = match kind {
                                PropagatorKind::VectorPotential { charge, potential } => {
                                    charge * potential[a]
                                }
                                _ => 0.0,
                            };
                            let end = c0 + (hb * k - shift) * t_max / m;
                            let width = spread(s, m, hb, t_max);
                            (
                                c0.min(end) - GAUSSIAN_SIGMAS * width,
                                c0.max(end) + GAUSSIAN_SIGMAS * width,
                            )
                        }
                    })
                    .collect()
            }
            InitialState::HalfLineOdd { sigma } => {
                vec![(0.0, ODD_SIGMAS * spread(*sigma, m, hb, t_max))]
            }
            InitialState::Sampled(w) => w.grid().axes().iter().map(|a| (a.lo(), a.hi())).collect(),
        }
    }

    /// Largest wave number carried by the state.
    pub fn wave_number(&self) -> f64 {
        match self {
            InitialState::Gaussian {
                sigma, momentum, ..
            } => momentum.iter().map(|k| k.abs()).fold(0.0, f64::max) + 4.0 / sigma,
            InitialState::HalfLineOdd { sigma } => 4.0 / sigma,
            InitialState::Sampled(w) => {
                let g = w.grid();
                let h = g
                    .axes()
                    .iter()
                    .flat_map(|a| a.panels().iter().map(|(lo, hi)| hi - lo))
                    .fold(0.0, f64::max);
                0.5 * g.rule().order() as f64 / h
            }
        }
    }

    /// Point where `|ψ|` peaks.
    pub fn peak(&self) -> Vec<f64> {
        match self {
            InitialState::Gaussian { center, .. } => center.clone(),
            InitialState::HalfLineOdd { sigma } => vec![sigma * 2f64.sqrt()],
            InitialState::Sampled(w) => {
                let (i, _) = w
                    .values()
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |best, (i, v)| if v.norm() > best.1 { (i, v.norm()) } else { best });
                w.grid().point(i)
            }
        }
    }

    /// Width scale used when searching around [`InitialState::peak`].
    pub fn width(&self) -> f64 {
        match self {
            InitialState::Gaussian { sigma, .. } | InitialState::HalfLineOdd { sigma } => *sigma,
            InitialState::Sampled(w) => {
                let a = &w.grid().axes()[0];
                (a.hi() - a.lo()) / 20.0
            }
        }
    }
}

/// Free-packet width at time `t`.
fn spread(sigma: f64, m: f64, hb: f64, t: f64) -> f64 {
    sigma * (1.0 + (hb * t / (2.0 * m * sigma * sigma)).powi(2)).sqrt()
}
