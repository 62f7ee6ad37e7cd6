//! Finite-configuration quantum measure systems.
//!
//! A system is `n` configurations observed at `N` times, unitary steps
//! between successive times and a pure or mixed initial state. Restricted
//! evolution, the decoherence functional and the quantal measure are computed
//! from a table of history amplitudes built once per system.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event_algebra::{FiniteEvent, FiniteSampleSpace, History};
use crate::linalg::{self, c, hermitian_eigen, numerical_rank, C64};

pub const UNITARITY_TOL: f64 = 1e-10;
pub const STATE_NORM_TOL: f64 = 1e-12;
pub const DENSITY_TOL: f64 = 1e-12;
pub const PSD_SLACK: f64 = 1e-10;

/// A vector in `ℂⁿ`. Initial states must have unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        StateVector(DVector::from_vec(amplitudes))
    }

    pub fn from_vector(v: DVector<C64>) -> Self {
        StateVector(v)
    }

    /// `δ_k`, 0-based.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[k] = c(1.0, 0.0);
        StateVector(v)
    }

    pub fn zeros(n: usize) -> Self {
        StateVector(DVector::zeros(n))
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        StateVector(linalg::random_unit_vector(n, rng))
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::validation("cannot normalize the zero vector"));
        }
        Ok(StateVector(&self.0 / c(norm, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.0.dotc(&other.0)
    }

    fn check_initial(&self) -> Result<()> {
        if (self.norm() - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::validation(format!(
                "initial state has norm {} (needs 1 within {STATE_NORM_TOL:e})",
                self.norm()
            )));
        }
        Ok(())
    }
}

/// Hermitian, positive semidefinite, unit-trace `n × n` matrix together with
/// its spectral ensemble.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    spectrum: Vec<(f64, DVector<C64>)>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::validation("density matrix must be square and nonempty"));
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > DENSITY_TOL {
            return Err(Error::validation(format!(
                "density matrix not Hermitian (defect {herm:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace - c(1.0, 0.0)).norm() > DENSITY_TOL {
            return Err(Error::validation(format!("density matrix trace {trace} ≠ 1")));
        }
        let (values, vectors) = hermitian_eigen(&matrix);
        if let Some(&min) = values.last() {
            if min < -DENSITY_TOL {
                return Err(Error::validation(format!(
                    "density matrix has negative eigenvalue {min:e}"
                )));
            }
        }
        let spectrum = values
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > DENSITY_TOL)
            .map(|(k, &p)| (p, vectors.column(k).into_owned()))
            .collect();
        Ok(DensityMatrix { matrix, spectrum })
    }

    pub fn pure(psi: &StateVector) -> Result<Self> {
        Self::ensemble(&[1.0], std::slice::from_ref(psi))
    }

    /// `Σ p_k |ψ_k⟩⟨ψ_k|` for unit vectors `ψ_k` and weights summing to one.
    pub fn ensemble(weights: &[f64], states: &[StateVector]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::usage("ensemble needs one weight per state"));
        }
        if weights.iter().any(|&p| p < 0.0) {
            return Err(Error::validation("ensemble weights must be nonnegative"));
        }
        let n = states[0].dim();
        let mut m = DMatrix::zeros(n, n);
        for (&p, s) in weights.iter().zip(states) {
            if s.dim() != n {
                return Err(Error::usage("ensemble states of different dimension"));
            }
            s.check_initial()?;
            m += s.as_vector() * s.as_vector().adjoint() * c(p, 0.0);
        }
        Self::new(m)
    }

    /// Generic rank-`r` state: `r` Haar-random vectors with random weights.
    pub fn random<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<Self> {
        if rank == 0 || rank > n {
            return Err(Error::usage(format!("rank {rank} out of range for n = {n}")));
        }
        let raw: Vec<f64> = (0..rank).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let states: Vec<StateVector> = (0..rank).map(|_| StateVector::random(n, rng)).collect();
        Self::ensemble(&weights, &states)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Number of eigenvalues above the cutoff.
    pub fn rank(&self) -> usize {
        self.spectrum.len()
    }

    /// Spectral decomposition `(p_k, ψ_k)` restricted to `p_k > 1e-12`.
    pub fn spectrum(&self) -> &[(f64, DVector<C64>)] {
        &self.spectrum
    }
}

/// Unitaries `U(t_{k+1}, t_k)` between successive times `0 = t₁ < … < t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSchedule {
    times: Vec<f64>,
    steps: Vec<DMatrix<C64>>,
}

impl EvolutionSchedule {
    pub fn new(times: Vec<f64>, steps: Vec<DMatrix<C64>>) -> Result<Self> {
        let s = Self::from_steps_unchecked(times, steps)?;
        for (k, u) in s.steps.iter().enumerate() {
            let defect = linalg::unitarity_defect(u);
            if defect > UNITARITY_TOL {
                return Err(Error::validation(format!(
                    "step {k} is not unitary (defect {defect:e})"
                )));
            }
        }
        Ok(s)
    }

    /// Same shape checks as [`EvolutionSchedule::new`] without the
    /// unitarity test. Used to exhibit axiom failures.
    pub fn from_steps_unchecked(times: Vec<f64>, steps: Vec<DMatrix<C64>>) -> Result<Self> {
        if times.len() < 2 || steps.len() + 1 != times.len() {
            return Err(Error::usage(format!(
                "{} times need {} steps, got {}",
                times.len(),
                times.len().saturating_sub(1),
                steps.len()
            )));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::usage(format!(
                "times must start at 0 and increase: {times:?}"
            )));
        }
        let n = steps[0].nrows();
        if n == 0 || steps.iter().any(|u| u.nrows() != n || u.ncols() != n) {
            return Err(Error::usage("steps must be square matrices of one size"));
        }
        Ok(EvolutionSchedule { times, steps })
    }

    /// Integer times `0, 1, …, N−1`.
    pub fn uniform(steps: Vec<DMatrix<C64>>) -> Result<Self> {
        let times = (0..=steps.len()).map(|k| k as f64).collect();
        Self::new(times, steps)
    }

    /// `U(t_{k+1}, t_k) = I` for every step.
    pub fn trivial(n: usize, times: usize) -> Result<Self> {
        Self::uniform(vec![DMatrix::identity(n, n); times.saturating_sub(1)])
    }

    /// Independent Haar-random steps.
    pub fn random_haar<R: Rng + ?Sized>(n: usize, times: usize, rng: &mut R) -> Result<Self> {
        let steps = (0..times.saturating_sub(1))
            .map(|_| linalg::random_unitary(n, rng))
            .collect();
        Self::uniform(steps)
    }

    /// Local walk on a path of `n` sites: steps alternate between mixing the
    /// pairs `(0,1),(2,3),…` and `(1,2),(3,4),…` with a rotation by `theta`,
    /// so each step moves amplitude by at most one site.
    pub fn local_hopping(n: usize, times: usize, theta: f64) -> Result<Self> {
        let steps = (0..times.saturating_sub(1))
            .map(|k| {
                let mut u = DMatrix::<C64>::identity(n, n);
                let (s, co) = theta.sin_cos();
                let mut a = k % 2;
                while a + 1 < n {
                    u[(a, a)] = c(co, 0.0);
                    u[(a + 1, a + 1)] = c(co, 0.0);
                    u[(a, a + 1)] = c(0.0, s);
                    u[(a + 1, a)] = c(0.0, s);
                    a += 2;
                }
                u
            })
            .collect();
        Self::uniform(steps)
    }

    pub fn configs(&self) -> usize {
        self.steps[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> &[DMatrix<C64>] {
        &self.steps
    }

    /// `U(t_l, t_k) = U(t_l, t_{l−1}) ⋯ U(t_{k+1}, t_k)` for `k ≤ l`, 0-based.
    pub fn composite(&self, k: usize, l: usize) -> Result<DMatrix<C64>> {
        if k > l || l >= self.times.len() {
            return Err(Error::usage(format!("no composite U(t_{l}, t_{k})")));
        }
        let n = self.configs();
        Ok(self.steps[k..l]
            .iter()
            .fold(DMatrix::identity(n, n), |acc, u| u * acc))
    }

    pub fn sample_space(&self) -> Result<FiniteSampleSpace> {
        FiniteSampleSpace::new(self.configs(), self.len())
    }
}

/// Pure or mixed initial condition.
#[derive(Debug, Clone)]
pub enum InitialCondition {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl InitialCondition {
    pub fn dim(&self) -> usize {
        match self {
            InitialCondition::Pure(s) => s.dim(),
            InitialCondition::Mixed(rho) => rho.dim(),
        }
    }

    /// Weighted pure components: `[(1, ψ)]` or the spectral ensemble of `ρ`.
    pub fn components(&self) -> Vec<(f64, DVector<C64>)> {
        match self {
            InitialCondition::Pure(s) => vec![(1.0, s.as_vector().clone())],
            InitialCondition::Mixed(rho) => rho.spectrum().to_vec(),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            InitialCondition::Pure(_) => 1,
            InitialCondition::Mixed(rho) => rho.rank(),
        }
    }
}

impl From<StateVector> for InitialCondition {
    fn from(s: StateVector) -> Self {
        InitialCondition::Pure(s)
    }
}

impl From<DensityMatrix> for InitialCondition {
    fn from(rho: DensityMatrix) -> Self {
        InitialCondition::Mixed(rho)
    }
}

/// A decoherence functional on some event type.
pub trait DecoherenceFunctional {
    type Event;

    fn decoherence(&self, a: &Self::Event, b: &Self::Event) -> Result<C64>;

    fn quantal_measure(&self, a: &Self::Event) -> Result<f64> {
        Ok(self.decoherence(a, a)?.re)
    }
}

/// A schedule plus initial condition, with the amplitude of every history
/// precomputed for each pure component.
#[derive(Debug, Clone)]
pub struct FiniteSystem {
    space: FiniteSampleSpace,
    schedule: EvolutionSchedule,
    initial: InitialCondition,
    // Per component: sqrt(p_k) and the lexicographic amplitude table.
    tables: Vec<(f64, Vec<C64>)>,
}

impl FiniteSystem {
    pub fn new(schedule: EvolutionSchedule, initial: impl Into<InitialCondition>) -> Result<Self> {
        let initial = initial.into();
        if initial.dim() != schedule.configs() {
            return Err(Error::usage(format!(
                "initial state has dimension {} but the schedule acts on ℂ^{}",
                initial.dim(),
                schedule.configs()
            )));
        }
        if let InitialCondition::Pure(s) = &initial {
            s.check_initial()?;
        }
        let space = schedule.sample_space()?;
        let tables = initial
            .components()
            .into_iter()
            .map(|(p, psi)| (p.sqrt(), amplitude_table(&schedule, &psi)))
            .collect();
        Ok(FiniteSystem {
            space,
            schedule,
            initial,
            tables,
        })
    }

    pub fn space(&self) -> FiniteSampleSpace {
        self.space
    }

    pub fn schedule(&self) -> &EvolutionSchedule {
        &self.schedule
    }

    pub fn initial(&self) -> &InitialCondition {
        &self.initial
    }

    pub fn configs(&self) -> usize {
        self.space.configs()
    }

    /// Dimension of the vectors returned by [`FiniteSystem::lifted`].
    pub fn lifted_dim(&self) -> usize {
        self.tables.len() * self.configs()
    }

    /// `(ψ_γ)_{γ_N}` for the first pure component.
    pub fn history_amplitude(&self, history: &History) -> Result<C64> {
        let idx = self.space.index_of(history)?;
        Ok(self.tables[0].1[idx])
    }

    pub fn history_amplitude_by_index(&self, index: usize) -> C64 {
        self.tables[0].1[index]
    }

    fn check_event(&self, a: &FiniteEvent) -> Result<()> {
        if a.space() != self.space {
            return Err(Error::usage(format!(
                "event over {:?} used with a system over {:?}",
                a.space(),
                self.space
            )));
        }
        Ok(())
    }

    /// `⊕_k √p_k ψ_{k,α}`: the restricted evolutions of all pure components
    /// stacked into one vector, so that `D(α, β) = ⟨lift(α), lift(β)⟩`.
    pub fn lifted(&self, a: &FiniteEvent) -> Result<DVector<C64>> {
        self.check_event(a)?;
        let n = self.configs();
        let mut out = DVector::zeros(self.lifted_dim());
        for (k, (w, table)) in self.tables.iter().enumerate() {
            for idx in a.indices() {
                out[k * n + idx % n] += table[idx] * w;
            }
        }
        Ok(out)
    }

    /// `ψ_α` for a pure initial state.
    pub fn restricted_evolution(&self, a: &FiniteEvent) -> Result<StateVector> {
        if self.tables.len() != 1 {
            return Err(Error::usage(
                "restricted evolution of a mixed state is not a single vector; use `lifted`",
            ));
        }
        Ok(StateVector(self.lifted(a)?))
    }

    /// Columns `lift(α_i)`, so that the Gram is `V† V`.
    pub fn lifted_matrix(&self, events: &[FiniteEvent]) -> Result<DMatrix<C64>> {
        let lifted: Vec<DVector<C64>> = events
            .par_iter()
            .map(|e| self.lifted(e))
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(self.lifted_dim(), events.len(), |r, j| {
            lifted[j][r]
        }))
    }

    pub fn gram(&self, events: &[FiniteEvent]) -> Result<DecoherenceGram> {
        DecoherenceGram::new(self, events)
    }
}

impl DecoherenceFunctional for FiniteSystem {
    type Event = FiniteEvent;

    fn decoherence(&self, a: &FiniteEvent, b: &FiniteEvent) -> Result<C64> {
        Ok(self.lifted(a)?.dotc(&self.lifted(b)?))
    }
}

fn amplitude_table(schedule: &EvolutionSchedule, psi: &DVector<C64>) -> Vec<C64> {
    let n = schedule.configs();
    let mut table: Vec<C64> = psi.iter().copied().collect();
    for u in schedule.steps() {
        let mut next = Vec::with_capacity(table.len() * n);
        for (prefix, &amp) in table.iter().enumerate() {
            let last = prefix % n;
            next.extend((0..n).map(|j| u[(j, last)] * amp));
        }
        table = next;
    }
    table
}

/// `ψ_γ = P^{γ_N} U ⋯ P^{γ₂} U P^{γ₁} ψ`.
pub fn restricted_evolution_history(
    psi: &StateVector,
    history: &History,
    schedule: &EvolutionSchedule,
) -> Result<StateVector> {
    let n = schedule.configs();
    let g = history.configs();
    if g.len() != schedule.len() || psi.dim() != n {
        return Err(Error::usage("history, state and schedule sizes disagree"));
    }
    if let Some(&bad) = g.iter().find(|&&j| j >= n) {
        return Err(Error::usage(format!("configuration {bad} out of range 0..{n}")));
    }
    let mut amp = psi.0[g[0]];
    for (k, u) in schedule.steps().iter().enumerate() {
        amp *= u[(g[k + 1], g[k])];
    }
    let mut out = StateVector::zeros(n);
    out.0[history.final_config()] = amp;
    Ok(out)
}

/// `ψ_α = Σ_{γ∈α} ψ_γ`.
pub fn restricted_evolution_event(
    psi: &StateVector,
    a: &FiniteEvent,
    schedule: &EvolutionSchedule,
) -> Result<StateVector> {
    FiniteSystem::new(schedule.clone(), psi.clone())?.restricted_evolution(a)
}

/// `D(α, β) = ⟨ψ_α, ψ_β⟩`.
pub fn decoherence(
    a: &FiniteEvent,
    b: &FiniteEvent,
    psi: &StateVector,
    schedule: &EvolutionSchedule,
) -> Result<C64> {
    FiniteSystem::new(schedule.clone(), psi.clone())?.decoherence(a, b)
}

/// `Σ_k p_k D_k(α, β)` over the spectral decomposition of `ρ`.
pub fn decoherence_mixed(
    a: &FiniteEvent,
    b: &FiniteEvent,
    rho: &DensityMatrix,
    schedule: &EvolutionSchedule,
) -> Result<C64> {
    FiniteSystem::new(schedule.clone(), rho.clone())?.decoherence(a, b)
}

/// `μ(α) = D(α, α)`.
pub fn quantal_measure(
    a: &FiniteEvent,
    initial: &InitialCondition,
    schedule: &EvolutionSchedule,
) -> Result<f64> {
    FiniteSystem::new(schedule.clone(), initial.clone())?.quantal_measure(a)
}

/// `μ(α∪β∪γ) − μ(α∪β) − μ(β∪γ) − μ(α∪γ) + μ(α) + μ(β) + μ(γ)` for mutually
/// disjoint events.
pub fn sum_rule_residual(
    system: &FiniteSystem,
    a: &FiniteEvent,
    b: &FiniteEvent,
    g: &FiniteEvent,
) -> Result<f64> {
    let mu = |e: &FiniteEvent| system.quantal_measure(e);
    let ab = a.union(b)?;
    let bg = b.union(g)?;
    let ag = a.union(g)?;
    let abg = ab.union(g)?;
    Ok(mu(&abg)? - mu(&ab)? - mu(&bg)? - mu(&ag)? + mu(a)? + mu(b)? + mu(g)?)
}

/// The matrix `D(α_i, α_j)` over an ordered event family.
#[derive(Debug, Clone)]
pub struct DecoherenceGram {
    events: Vec<FiniteEvent>,
    gram: DMatrix<C64>,
}

impl DecoherenceGram {
    pub fn new(system: &FiniteSystem, events: &[FiniteEvent]) -> Result<Self> {
        let v = system.lifted_matrix(events)?;
        Ok(DecoherenceGram {
            events: events.to_vec(),
            gram: v.adjoint() * v,
        })
    }

    pub fn events(&self) -> &[FiniteEvent] {
        &self.events
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.gram
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.gram)
            .0
            .last()
            .copied()
            .unwrap_or(0.0)
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        numerical_rank(&hermitian_eigen(&self.gram).0, rel_tol)
    }
}

/// Worst-case residuals of the decoherence-functional axioms over an event
/// family.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    /// `max |D(α,β) − D(β,α)*|`
    pub hermiticity: f64,
    /// `max |D(α∪β,γ) − D(α,γ) − D(β,γ)|` over disjoint `α, β`.
    pub bi_additivity: f64,
    /// `max |quantal sum rule|` over disjoint triples.
    pub sum_rule: f64,
    /// `|D(Ω,Ω) − 1|`
    pub normalization: f64,
    /// Smallest eigenvalue of the Gram over the family.
    pub min_eigenvalue: f64,
    pub pairs_checked: usize,
    pub triples_checked: usize,
    pub tol: f64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.hermiticity <= self.tol
            && self.bi_additivity <= self.tol
            && self.sum_rule <= self.tol
            && self.normalization <= self.tol
            && self.min_eigenvalue >= -self.tol
    }
}

const MAX_PAIRS: usize = 4096;
const MAX_TRIPLES: usize = 2048;

/// Checks hermiticity, bi-additivity, the quantal sum rule, normalization and
/// strong positivity on `events`.
///
/// Disjoint pairs are `(α_i ∖ α_j, α_i ∩ α_j)` tested against `α_j`; disjoint
/// triples are `(α_i, α_j ∖ α_i, α_k ∖ (α_i ∪ α_j))`. Both families are
/// enumerated in index order up to a fixed cap.
pub fn verify_axioms(
    events: &[FiniteEvent],
    initial: &InitialCondition,
    schedule: &EvolutionSchedule,
    tol: f64,
) -> Result<AxiomReport> {
    let system = FiniteSystem::new(schedule.clone(), initial.clone())?;
    verify_system_axioms(&system, events, tol)
}

pub fn verify_system_axioms(
    system: &FiniteSystem,
    events: &[FiniteEvent],
    tol: f64,
) -> Result<AxiomReport> {
    if events.is_empty() {
        return Err(Error::usage("axiom check needs at least one event"));
    }
    let m = events.len();
    let gram = system.gram(events)?;
    let g = gram.matrix();
    let hermiticity = linalg::hermiticity_defect(g);
    let min_eigenvalue = gram.min_eigenvalue();

    let omega = FiniteEvent::full(system.space());
    let normalization = (system.decoherence(&omega, &omega)? - c(1.0, 0.0)).norm();

    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .take(MAX_PAIRS)
        .collect();
    let bi_additivity = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<f64> {
            let a = events[i].difference(&events[j])?;
            let b = events[i].ring_mul(&events[j])?;
            let lg = system.lifted(&events[j])?;
            let whole = system.lifted(&events[i])?.dotc(&lg);
            let split = system.lifted(&a)?.dotc(&lg) + system.lifted(&b)?.dotc(&lg);
            Ok((whole - split).norm())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let triples: Vec<(usize, usize, usize)> = (0..m)
        .flat_map(|i| (0..m).flat_map(move |j| (0..m).map(move |k| (i, j, k))))
        .take(MAX_TRIPLES)
        .collect();
    let sum_rule = triples
        .par_iter()
        .map(|&(i, j, k)| -> Result<f64> {
            let a = events[i].clone();
            let b = events[j].difference(&a)?;
            let cc = events[k].difference(&a.union(&events[j])?)?;
            Ok(sum_rule_residual(system, &a, &b, &cc)?.abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    Ok(AxiomReport {
        hermiticity,
        bi_additivity,
        sum_rule,
        normalization,
        min_eigenvalue,
        pairs_checked: pairs.len(),
        triples_checked: triples.len(),
        tol,
    })
}
