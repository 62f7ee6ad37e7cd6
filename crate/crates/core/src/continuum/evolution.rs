use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::grid::{Grid, WaveFunction};
use super::propagator::{PropagatorKind, PropagatorSpec, StepKind};
use super::quadrature::{extrapolate_to_zero, ConvergenceLadder};
use super::state::InitialState;
use crate::dynamics::DecoherenceFunctional;
use crate::error::{Error, Result};
use crate::event_algebra::{ContinuumEvent, HomogeneousEvent, Region};
use crate::linalg::{c, C64};

pub const DEFAULT_ORDER: usize = 16;
/// Radians of integrand phase allowed across one panel.
pub const DEFAULT_PANEL_PHASE: f64 = 8.0;
const TIME_MATCH: f64 = 1e-12;

/// How the truncated box relates to the state it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxProvenance {
    pub bounds: Vec<(f64, f64)>,
    pub nodes: usize,
    /// `1 − ‖ψ₀‖²` on the grid.
    pub initial_mass_outside: f64,
    /// Largest `|ψ|` on the outermost panels over the largest `|ψ|`.
    pub edge_amplitude: f64,
}

/// A restricted evolution at its truncation time.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub wave: WaveFunction,
    pub time: f64,
    /// L² distance between the full and reduced ε-extrapolants; zero when no
    /// slot needed a convergence factor.
    pub extrapolation_residual: f64,
    pub provenance: BoxProvenance,
}

/// Nested-quadrature engine for restricted evolution under one propagator.
///
/// Every event evolved on a shared grid is cut at the same panel edges, so
/// their wave functions can be compared node by node.
#[derive(Debug, Clone)]
pub struct Evolver {
    spec: PropagatorSpec,
    ladder: ConvergenceLadder,
    order: usize,
    panel_phase: f64,
    half_width: Option<f64>,
}

impl Evolver {
    pub fn new(spec: PropagatorSpec) -> Self {
        Evolver {
            spec,
            ladder: ConvergenceLadder::default(),
            order: DEFAULT_ORDER,
            panel_phase: DEFAULT_PANEL_PHASE,
            half_width: None,
        }
    }

    pub fn with_ladder(mut self, ladder: ConvergenceLadder) -> Self {
        self.ladder = ladder;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_panel_phase(mut self, radians: f64) -> Self {
        self.panel_phase = radians;
        self
    }

    /// Fixes the box to `[−l, l]^d` instead of sizing it from the state.
    pub fn with_half_width(mut self, l: f64) -> Self {
        self.half_width = Some(l);
        self
    }

    pub fn spec(&self) -> &PropagatorSpec {
        &self.spec
    }

    pub fn ladder(&self) -> &ConvergenceLadder {
        &self.ladder
    }

    /// Common grid for evolving `psi` through every event listed, and back.
    pub fn grid_for(&self, psi: &InitialState, events: &[&HomogeneousEvent]) -> Result<Arc<Grid>> {
        let d = self.spec.dim();
        if psi.dim() != d {
            return Err(Error::usage(format!(
                "state is {}-dimensional, propagator {d}-dimensional",
                psi.dim()
            )));
        }
        if let Some(e) = events.iter().find(|e| e.dim() != d) {
            return Err(Error::usage(format!("event is {}-dimensional, expected {d}", e.dim())));
        }
        let t_max = events
            .iter()
            .map(|e| e.truncation_time())
            .fold(0.0, f64::max);
        let mut breaks: Vec<Vec<f64>> = vec![Vec::new(); d];
        for e in events {
            for r in e.regions() {
                for (a, b) in breaks.iter_mut().enumerate() {
                    b.extend(r.breakpoints(a));
                }
            }
        }
        if matches!(self.spec.kind(), PropagatorKind::HalfLine) {
            breaks[0].push(0.0);
        }
        let l = match self.half_width {
            Some(l) if l > 0.0 && l.is_finite() => l,
            Some(l) => return Err(Error::usage(format!("box half-width {l} must be positive"))),
            None => {
                let state = psi
                    .support(&self.spec, t_max)
                    .iter()
                    .map(|(a, b)| a.abs().max(b.abs()))
                    .fold(0.0, f64::max);
                let edges = breaks
                    .iter()
                    .flatten()
                    .map(|v| v.abs() + 1.0)
                    .fold(0.0, f64::max);
                state.max(edges)
            }
        };
        let mut steps: Vec<f64> = events
            .iter()
            .flat_map(|e| e.times().windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>())
            .collect();
        steps.extend(events.iter().map(|e| e.truncation_time()));
        let mut k_kernel: f64 = 0.0;
        for dt in steps {
            if let StepKind::Kernel = self.spec.step_kind(dt)? {
                k_kernel = k_kernel.max(self.spec.phase_gradient_bound(dt, l));
            }
        }
        // Cuts leave kernel-rate oscillations in the next integrand.
        let k = 2.0 * k_kernel + psi.wave_number();
        let h = (self.panel_phase / k).min(l / 4.0);
        Grid::new(&vec![(-l, l); d], &breaks, &vec![h; d], self.order).map(Arc::new)
    }

    pub fn evolve(&self, psi: &InitialState, alpha: &HomogeneousEvent) -> Result<Evolved> {
        let grid = self.grid_for(psi, &[alpha])?;
        self.evolve_on(&grid, psi, alpha)
    }

    /// `ψ_α(·, T)` on a given grid.
    pub fn evolve_on(&self, grid: &Arc<Grid>, psi: &InitialState, alpha: &HomogeneousEvent) -> Result<Evolved> {
        if alpha.dim() != self.spec.dim() || grid.dim() != self.spec.dim() {
            return Err(Error::usage("event, grid and propagator dimensions differ"));
        }
        let psi0 = psi.sample(grid)?;
        let (values, residual) = self.run(grid, &psi0, alpha)?;
        let wave = WaveFunction::new(grid.clone(), values)?;
        Ok(Evolved {
            provenance: provenance(grid, psi, &psi0, &wave),
            wave,
            time: alpha.truncation_time(),
            extrapolation_residual: residual,
        })
    }

    pub fn evolve_event(&self, psi: &InitialState, alpha: &ContinuumEvent) -> Result<Evolved> {
        let parts: Vec<&HomogeneousEvent> = alpha.parts().iter().collect();
        let grid = self.grid_for(psi, &parts)?;
        self.evolve_event_on(&grid, psi, alpha)
    }

    /// `ψ_α = Σ_k ψ_{α_k}` over the disjoint homogeneous parts of `α`.
    pub fn evolve_event_on(&self, grid: &Arc<Grid>, psi: &InitialState, alpha: &ContinuumEvent) -> Result<Evolved> {
        let parts = alpha.parts();
        let Some(first) = parts.first() else {
            return Err(Error::usage("the empty event has no truncation time"));
        };
        let psi0 = psi.sample(grid)?;
        let mut total = vec![c(0.0, 0.0); grid.len()];
        let mut residual = 0.0;
        for part in parts {
            let (values, r) = self.run(grid, &psi0, part)?;
            total.iter_mut().zip(values).for_each(|(t, v)| *t += v);
            residual += r;
        }
        let wave = WaveFunction::new(grid.clone(), total)?;
        Ok(Evolved {
            provenance: provenance(grid, psi, &psi0, &wave),
            wave,
            time: first.truncation_time(),
            extrapolation_residual: residual,
        })
    }

    /// `D(α, β) = ⟨ψ_α, ψ_β⟩` at the common truncation time.
    pub fn decoherence(&self, psi: &InitialState, a: &ContinuumEvent, b: &ContinuumEvent) -> Result<C64> {
        let m = self.decoherence_matrix(psi, &[a.clone(), b.clone()])?;
        Ok(m[(0, 1)])
    }

    /// Gram matrix `D(α_i, α_j)` computed on one shared grid.
    pub fn decoherence_matrix(&self, psi: &InitialState, events: &[ContinuumEvent]) -> Result<DMatrix<C64>> {
        let live: Vec<&ContinuumEvent> = events.iter().filter(|e| !e.parts().is_empty()).collect();
        if let Some(t0) = live.first().map(|e| e.parts()[0].truncation_time()) {
            if let Some(bad) = live
                .iter()
                .find(|e| (e.parts()[0].truncation_time() - t0).abs() > TIME_MATCH)
            {
                return Err(Error::usage(format!(
                    "events end at different times ({t0} and {})",
                    bad.parts()[0].truncation_time()
                )));
            }
        }
        let parts: Vec<&HomogeneousEvent> = live.iter().flat_map(|e| e.parts()).collect();
        let n = events.len();
        let mut gram = DMatrix::from_element(n, n, c(0.0, 0.0));
        if parts.is_empty() {
            return Ok(gram);
        }
        let grid = self.grid_for(psi, &parts)?;
        let waves: Vec<Option<WaveFunction>> = events
            .iter()
            .map(|e| {
                if e.parts().is_empty() {
                    Ok(None)
                } else {
                    self.evolve_event_on(&grid, psi, e).map(|r| Some(r.wave))
                }
            })
            .collect::<Result<_>>()?;
        for i in 0..n {
            for j in i..n {
                if let (Some(a), Some(b)) = (&waves[i], &waves[j]) {
                    let z = a.inner(b)?;
                    gram[(i, j)] = z;
                    gram[(j, i)] = z.conj();
                }
            }
        }
        for i in 0..n {
            gram[(i, i)].im = 0.0;
        }
        Ok(gram)
    }

    /// Applies the adjoint of unrestricted evolution over `[0, t]`.
    pub fn evolve_back(&self, wave: &WaveFunction, t: f64) -> Result<WaveFunction> {
        let grid = wave.grid();
        if grid.dim() != self.spec.dim() {
            return Err(Error::usage("wave function and propagator dimensions differ"));
        }
        let values = self.step(grid, wave.values(), t, None, true)?;
        WaveFunction::new(grid.clone(), values)
    }

    /// Unrestricted forward evolution over `dt`.
    pub fn evolve_free(&self, wave: &WaveFunction, dt: f64) -> Result<WaveFunction> {
        let grid = wave.grid();
        let values = self.step(grid, wave.values(), dt, None, false)?;
        WaveFunction::new(grid.clone(), values)
    }

    fn run(&self, grid: &Arc<Grid>, psi0: &WaveFunction, alpha: &HomogeneousEvent) -> Result<(Vec<C64>, f64)> {
        let times = alpha.times();
        let regions = alpha.regions();
        let masks: Vec<Option<Vec<bool>>> = regions.iter().map(|r| mask_of(grid, r)).collect();
        let last = times.len() - 1;
        let mut phi = psi0.values().to_vec();
        apply_mask(&mut phi, masks[0].as_deref());
        // The ψ-weighted first integral decays; later unbounded ones may not.
        let factored: Vec<bool> = (0..=last)
            .map(|k| k >= 1 && k < last && !regions[k].is_bounded())
            .collect();
        let first = factored.iter().position(|&f| f);
        for k in 0..first.unwrap_or(last) {
            phi = self.step(grid, &phi, times[k + 1] - times[k], masks[k + 1].as_deref(), false)?;
        }
        let Some(first) = first else {
            return Ok((phi, 0.0));
        };
        if phi.iter().all(|v| *v == c(0.0, 0.0)) {
            return Ok((vec![c(0.0, 0.0); grid.len()], 0.0));
        }
        let r2: Vec<f64> = (0..grid.len())
            .map(|i| grid.point(i).iter().map(|x| x * x).sum())
            .collect();
        let runs: Vec<Vec<C64>> = self
            .ladder
            .epsilons()
            .iter()
            .map(|&eps| {
                let mut psi = phi.clone();
                for k in first..last {
                    if factored[k] {
                        psi.iter_mut().zip(&r2).for_each(|(v, r)| *v *= (-eps * r).exp());
                    }
                    psi = self.step(grid, &psi, times[k + 1] - times[k], masks[k + 1].as_deref(), false)?;
                }
                Ok(psi)
            })
            .collect::<Result<_>>()?;
        let eps = self.ladder.epsilons();
        let weights = grid.weights();
        let mut out = Vec::with_capacity(grid.len());
        let mut res2 = 0.0;
        for (i, w) in weights.iter().enumerate() {
            let column: Vec<C64> = runs.iter().map(|r| r[i]).collect();
            let (v, r) = extrapolate_to_zero(eps, &column);
            out.push(v);
            res2 += w * r * r;
        }
        let residual = res2.sqrt();
        if residual > self.ladder.tolerance() {
            return Err(Error::NonConvergence {
                context: format!("convergence-factor limit for event at times {times:?}"),
                residual,
                tolerance: self.ladder.tolerance(),
            });
        }
        Ok((out, residual))
    }

    /// One propagation step over `dt`, zeroed outside `mask`. The backward
    /// step applies the conjugate-transposed kernel.
    fn step(&self, grid: &Grid, input: &[C64], dt: f64, mask: Option<&[bool]>, backward: bool) -> Result<Vec<C64>> {
        match self.spec.step_kind(dt)? {
            StepKind::Delta { reflect, phase } => {
                let phase = if backward { phase.conj() } else { phase };
                Ok((0..grid.len())
                    .into_par_iter()
                    .map(|i| {
                        if mask.is_some_and(|m| !m[i]) {
                            return c(0.0, 0.0);
                        }
                        let mut x = grid.point(i);
                        if reflect {
                            x.iter_mut().for_each(|v| *v = -*v);
                        }
                        phase * grid.interpolate(input, &x)
                    })
                    .collect())
            }
            StepKind::Kernel => {
                let shape: Vec<usize> = grid.axes().iter().map(|a| a.len()).collect();
                let mut cur = input.to_vec();
                for axis in 0..grid.dim() {
                    cur = self.apply_axis(grid, &shape, &cur, axis, dt, mask, backward);
                }
                apply_mask(&mut cur, mask);
                Ok(cur)
            }
        }
    }

    fn apply_axis(
        &self,
        grid: &Grid,
        shape: &[usize],
        values: &[C64],
        axis: usize,
        dt: f64,
        mask: Option<&[bool]>,
        backward: bool,
    ) -> Vec<C64> {
        let n = shape[axis];
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let ax = &grid.axes()[axis];
        let (nodes, weights) = (ax.nodes(), ax.weights());
        let zero = c(0.0, 0.0);

        // Output rows outside the mask and input columns that vanish are skipped.
        let mut rows = vec![mask.is_none(); n];
        if let Some(m) = mask {
            for (flat, _) in m.iter().enumerate().filter(|(_, on)| **on) {
                rows[(flat / inner) % n] = true;
            }
        }
        let mut live = vec![false; n];
        for (flat, _) in values.iter().enumerate().filter(|(_, v)| **v != zero) {
            live[(flat / inner) % n] = true;
        }
        let cols: Vec<usize> = (0..n).filter(|&j| live[j]).collect();

        let slabs: Vec<Option<Vec<C64>>> = (0..n)
            .into_par_iter()
            .map(|r| {
                if !rows[r] || cols.is_empty() {
                    return None;
                }
                let y = nodes[r];
                let kernel: Vec<C64> = cols
                    .iter()
                    .map(|&j| {
                        let k = if backward {
                            self.spec.axis_kernel(axis, nodes[j], y, dt).conj()
                        } else {
                            self.spec.axis_kernel(axis, y, nodes[j], dt)
                        };
                        k * weights[j]
                    })
                    .collect();
                let mut slab = vec![zero; outer * inner];
                for o in 0..outer {
                    for s in 0..inner {
                        slab[o * inner + s] = kernel
                            .iter()
                            .zip(&cols)
                            .map(|(k, &j)| k * values[(o * n + j) * inner + s])
                            .sum();
                    }
                }
                Some(slab)
            })
            .collect();

        let mut out = vec![zero; values.len()];
        for (r, slab) in slabs.into_iter().enumerate() {
            if let Some(slab) = slab {
                for o in 0..outer {
                    for s in 0..inner {
                        out[(o * n + r) * inner + s] = slab[o * inner + s];
                    }
                }
            }
        }
        out
    }
}

fn mask_of(grid: &Grid, region: &Region) -> Option<Vec<bool>> {
    if region.is_full() {
        return None;
    }
    Some((0..grid.len()).map(|i| region.contains(&grid.point(i))).collect())
}

fn apply_mask(values: &mut [C64], mask: Option<&[bool]>) {
    if let Some(m) = mask {
        values
            .iter_mut()
            .zip(m)
            .filter(|(_, on)| !**on)
            .for_each(|(v, _)| *v = c(0.0, 0.0));
    }
}

fn provenance(grid: &Grid, psi: &InitialState, psi0: &WaveFunction, out: &WaveFunction) -> BoxProvenance {
    let reference = match psi {
        InitialState::Sampled(w) => w.norm().powi(2),
        _ => 1.0,
    };
    let inside = psi0.norm().powi(2);
    let peak = out.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let q = grid.rule().order();
    let mut edge: f64 = 0.0;
    for (i, v) in out.values().iter().enumerate() {
        let idx = grid.unflatten(i);
        let on_edge = idx
            .iter()
            .zip(grid.axes())
            .any(|(&k, ax)| k < q || k + q >= ax.len());
        if on_edge {
            edge = edge.max(v.norm());
        }
    }
    BoxProvenance {
        bounds: grid.axes().iter().map(|a| (a.lo(), a.hi())).collect(),
        nodes: grid.len(),
        initial_mass_outside: if reference > 0.0 {
            (1.0 - inside / reference).max(0.0)
        } else {
            0.0
        },
        edge_amplitude: if peak > 0.0 { edge / peak } else { 0.0 },
    }
}

/// The standard decoherence functional of a particle prepared in `state`.
#[derive(Debug, Clone)]
pub struct ContinuumFunctional {
    pub evolver: Evolver,
    pub state: InitialState,
}

impl DecoherenceFunctional for ContinuumFunctional {
    type Event = ContinuumEvent;

    fn decoherence(&self, a: &ContinuumEvent, b: &ContinuumEvent) -> Result<C64> {
        self.evolver.decoherence(&self.state, a, b)
    }
}

/// `ψ_α(·, T)` for a sampled initial state. The box is the one `psi` is
/// sampled on, widened to hold every region edge.
pub fn restricted_evolution_homogeneous(
    psi: &WaveFunction,
    alpha: &HomogeneousEvent,
    spec: &PropagatorSpec,
    ladder: &ConvergenceLadder,
) -> Result<WaveFunction> {
    let evolver = Evolver::new(spec.clone()).with_ladder(ladder.clone());
    Ok(evolver.evolve(&InitialState::Sampled(psi.clone()), alpha)?.wave)
}

pub fn restricted_evolution_event(
    psi: &InitialState,
    alpha: &ContinuumEvent,
    spec: &PropagatorSpec,
    ladder: &ConvergenceLadder,
) -> Result<Evolved> {
    Evolver::new(spec.clone())
        .with_ladder(ladder.clone())
        .evolve_event(psi, alpha)
}

pub fn decoherence_continuum(
    a: &ContinuumEvent,
    b: &ContinuumEvent,
    psi: &InitialState,
    spec: &PropagatorSpec,
    ladder: &ConvergenceLadder,
) -> Result<C64> {
    Evolver::new(spec.clone())
        .with_ladder(ladder.clone())
        .decoherence(psi, a, b)
}

/// `ψ_α(x, 0) = ∫ K(x, 0 | y, t_N) ψ_α(y, t_N) dy`.
pub fn evolve_back_to_initial(wave: &WaveFunction, t_n: f64, spec: &PropagatorSpec) -> Result<WaveFunction> {
    Evolver::new(spec.clone()).evolve_back(wave, t_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Closed-form free evolution of the Gaussian `(2πσ²)^{−1/4} e^{−(x−c)²/4σ² + ikx}`.
    fn free_gaussian(x: f64, t: f64, c0: f64, s: f64, k: f64) -> C64 {
        let z = c(1.0, t / (2.0 * s * s));
        let a = (2.0 * PI * s * s).powf(-0.25);
        let arg = -c((x - c0 - k * t).powi(2), 0.0) / (z * 4.0 * s * s)
            + c(0.0, k * x - k * k * t / 2.0);
        arg.exp() * a / z.sqrt()
    }

    fn ev(spec: PropagatorSpec) -> Evolver {
        Evolver::new(spec)
    }

    #[test]
    fn free_evolution_matches_the_spreading_gaussian() {
        let psi = InitialState::gaussian(vec![0.3], 0.8, vec![1.5]).unwrap();
        let alpha = HomogeneousEvent::full(1, vec![0.0, 1.2]).unwrap();
        let out = ev(PropagatorSpec::free(1)).evolve(&psi, &alpha).unwrap();
        let exact = WaveFunction::from_fn(out.wave.grid().clone(), |x| {
            free_gaussian(x[0], 1.2, 0.3, 0.8, 1.5)
        });
        assert!(out.wave.distance(&exact).unwrap() < 1e-8);
        assert!((out.wave.norm() - 1.0).abs() < 1e-6);
        assert!(out.provenance.initial_mass_outside < 1e-8);
    }

    #[test]
    fn unitarity_for_vector_potential_and_oscillator() {
        let psi = InitialState::gaussian(vec![0.5], 1.0, vec![0.5]).unwrap();
        for spec in [
            PropagatorSpec::vector_potential(1.0, vec![0.7]).unwrap(),
            PropagatorSpec::oscillator(1, 1.0).unwrap(),
        ] {
            let alpha = HomogeneousEvent::full(1, vec![0.0, 0.9]).unwrap();
            let out = ev(spec).evolve(&psi, &alpha).unwrap();
            assert!((out.wave.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn narrow_initial_cut_barely_changes_evolution() {
        let psi = InitialState::gaussian(vec![0.0], 0.5, vec![0.0]).unwrap();
        let e = ev(PropagatorSpec::free(1));
        let cut = HomogeneousEvent::two_time(1, 1.0, Region::interval(-5.0, 5.0).unwrap(), Region::Full).unwrap();
        let full = HomogeneousEvent::full(1, vec![0.0, 1.0]).unwrap();
        let grid = e.grid_for(&psi, &[&cut, &full]).unwrap();
        let a = e.evolve_on(&grid, &psi, &cut).unwrap().wave;
        let b = e.evolve_on(&grid, &psi, &full).unwrap().wave;
        assert!(a.distance(&b).unwrap() < 1e-3);
    }

    #[test]
    fn oscillator_half_period_reflects_with_a_quarter_turn() {
        let spec = PropagatorSpec::oscillator(1, 1.0).unwrap();
        let psi = InitialState::gaussian(vec![1.0], 0.9, vec![0.4]).unwrap();
        let alpha = HomogeneousEvent::full(1, vec![0.0, 1.3, PI]).unwrap();
        let out = ev(spec).evolve(&psi, &alpha).unwrap();
        let expected = WaveFunction::from_fn(out.wave.grid().clone(), |x| {
            c(0.0, -1.0) * psi.value(&[-x[0]])
        });
        assert!(out.wave.distance(&expected).unwrap() < 1e-6);
    }

    #[test]
    fn oscillator_full_period_flips_sign() {
        let spec = PropagatorSpec::oscillator(1, 1.0).unwrap();
        let psi = InitialState::gaussian(vec![-0.5], 1.0, vec![0.0]).unwrap();
        let alpha = HomogeneousEvent::full(1, vec![0.0, 2.0, 2.0 * PI]).unwrap();
        let out = ev(spec).evolve(&psi, &alpha).unwrap();
        let expected = psi.sample(out.wave.grid()).unwrap().scale(c(-1.0, 0.0));
        assert!(out.wave.distance(&expected).unwrap() < 1e-6);
    }

    #[test]
    fn caustic_step_equals_two_stage_evolution() {
        let spec = PropagatorSpec::oscillator(1, 1.0).unwrap();
        let psi = InitialState::gaussian(vec![0.7], 1.0, vec![0.0]).unwrap();
        let e = ev(spec);
        let one = HomogeneousEvent::full(1, vec![0.0, PI]).unwrap();
        let two = HomogeneousEvent::full(1, vec![0.0, 1.3, PI]).unwrap();
        let grid = e.grid_for(&psi, &[&one, &two]).unwrap();
        let a = e.evolve_on(&grid, &psi, &one).unwrap().wave;
        let b = e.evolve_on(&grid, &psi, &two).unwrap().wave;
        assert!(a.distance(&b).unwrap() < 1e-6);
    }

    #[test]
    fn half_line_outputs_vanish_behind_the_wall() {
        let psi = InitialState::half_line_odd(1.0).unwrap();
        let alpha = HomogeneousEvent::new(
            1,
            vec![0.0, 0.5, 1.0],
            vec![Region::Full, Region::interval(0.5, 3.0).unwrap(), Region::Full],
        )
        .unwrap();
        let out = ev(PropagatorSpec::half_line()).evolve(&psi, &alpha).unwrap();
        let g = out.wave.grid().clone();
        let mut checked = 0;
        for (i, v) in out.wave.values().iter().enumerate() {
            if g.point(i)[0] <= 0.0 {
                assert_eq!(*v, c(0.0, 0.0));
                checked += 1;
            }
        }
        assert!(checked > 0);
        assert!(out.wave.norm() > 0.1);
    }

    #[test]
    fn half_line_odd_state_follows_its_odd_extension() {
        // The image kernel on x > 0 acts like the free kernel on the odd extension.
        let psi = InitialState::half_line_odd(1.0).unwrap();
        let alpha = HomogeneousEvent::full(1, vec![0.0, 0.8]).unwrap();
        let e = ev(PropagatorSpec::half_line());
        let out = e.evolve(&psi, &alpha).unwrap();
        let eps = 1e-5;
        let g = out.wave.grid().clone();
        let expected = WaveFunction::from_fn(g, |x| {
            if x[0] <= 0.0 {
                return c(0.0, 0.0);
            }
            // x e^{−x²/4σ²} ∝ −∂_c of the Gaussian centred at c.
            let d = (free_gaussian(x[0], 0.8, eps, 1.0, 0.0) - free_gaussian(x[0], 0.8, -eps, 1.0, 0.0))
                / (2.0 * eps);
            let norm = ((PI / 2.0).sqrt()).powf(-0.5) * 2.0 * (2.0 * PI).powf(0.25);
            d * norm
        });
        assert!(out.wave.distance(&expected).unwrap() < 1e-6);
    }

    #[test]
    fn decoherence_is_hermitian_and_normalized() {
        let psi = InitialState::standard(0.0);
        let e = ev(PropagatorSpec::free(1));
        let omega = ContinuumEvent::full(1, 1.0).unwrap();
        let d = e.decoherence(&psi, &omega, &omega).unwrap();
        assert!((d - c(1.0, 0.0)).norm() < 1e-4);
        let a: ContinuumEvent = HomogeneousEvent::two_time(1, 1.0, Region::interval(-1.0, 0.5).unwrap(), Region::interval(0.0, 2.0).unwrap())
            .unwrap()
            .into();
        let b: ContinuumEvent = HomogeneousEvent::two_time(1, 1.0, Region::Full, Region::interval(-1.0, 1.0).unwrap())
            .unwrap()
            .into();
        let ab = e.decoherence(&psi, &a, &b).unwrap();
        let ba = e.decoherence(&psi, &b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12);
    }

    #[test]
    fn two_slits_interfere() {
        let psi = InitialState::standard(0.0);
        let e = ev(PropagatorSpec::free(1));
        let slit = |lo: f64, hi: f64| -> ContinuumEvent {
            HomogeneousEvent::new(
                1,
                vec![0.0, 0.5, 1.5],
                vec![Region::Full, Region::interval(lo, hi).unwrap(), Region::interval(-0.5, 0.5).unwrap()],
            )
            .unwrap()
            .into()
        };
        let a = slit(-1.5, -0.5);
        let b = slit(0.5, 1.5);
        let gram = e.decoherence_matrix(&psi, &[a.clone(), b.clone()]).unwrap();
        let both = a.union(&b).unwrap();
        let mu = e.decoherence(&psi, &both, &both).unwrap().re;
        let interference = mu - gram[(0, 0)].re - gram[(1, 1)].re;
        assert!((interference - 2.0 * gram[(0, 1)].re).abs() < 1e-10);
        assert!(interference.abs() > 1e-3);
    }

    #[test]
    fn back_evolution_inverts_forward_evolution() {
        let psi = InitialState::gaussian(vec![0.2], 1.0, vec![1.0]).unwrap();
        let e = ev(PropagatorSpec::free(1));
        let alpha = HomogeneousEvent::full(1, vec![0.0, 1.0]).unwrap();
        let out = e.evolve(&psi, &alpha).unwrap();
        let back = e.evolve_back(&out.wave, 1.0).unwrap();
        let start = psi.sample(out.wave.grid()).unwrap();
        assert!(back.distance(&start).unwrap() < 1e-4);
        assert!((back.norm() - out.wave.norm()).abs() < 1e-4);
    }

    #[test]
    fn unbounded_intermediate_slot_uses_the_ladder() {
        let psi = InitialState::standard(0.0);
        let e = ev(PropagatorSpec::free(1));
        let cut = Region::interval(-1.0, 1.0).unwrap().complement();
        let alpha = HomogeneousEvent::new(
            1,
            vec![0.0, 0.6, 1.2],
            vec![Region::Full, cut, Region::interval(-2.0, 2.0).unwrap()],
        )
        .unwrap();
        let out = e.evolve(&psi, &alpha).unwrap();
        assert!(out.extrapolation_residual > 0.0);
        assert!(out.extrapolation_residual <= e.ladder().tolerance());
    }

    #[test]
    fn two_dimensional_free_evolution_factorizes() {
        let psi = InitialState::gaussian(vec![0.0, 0.5], 1.0, vec![0.5, 0.0]).unwrap();
        let alpha = HomogeneousEvent::full(2, vec![0.0, 1.0]).unwrap();
        let e = ev(PropagatorSpec::free(2)).with_half_width(7.0).with_order(12);
        let out = e.evolve(&psi, &alpha).unwrap();
        let exact = WaveFunction::from_fn(out.wave.grid().clone(), |x| {
            free_gaussian(x[0], 1.0, 0.0, 1.0, 0.5) * free_gaussian(x[1], 1.0, 0.5, 1.0, 0.0)
        });
        let dist = out.wave.distance(&exact).unwrap();
        assert!(dist < 1e-5, "{dist}");
    }

    #[test]
    fn mismatched_truncation_times_are_rejected() {
        let psi = InitialState::standard(0.0);
        let a = ContinuumEvent::full(1, 1.0).unwrap();
        let b = ContinuumEvent::full(1, 2.0).unwrap();
        assert!(matches!(
            ev(PropagatorSpec::free(1)).decoherence(&psi, &a, &b),
            Err(Error::Usage(_))
        ));
    }
}
