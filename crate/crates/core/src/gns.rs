//! The free vector space `H₁` on an event algebra, its degenerate inner
//! product, the quotient `H₂` and the map `f₀`.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{DecoherenceFunctional, EvolutionSchedule, FiniteSystem, StateVector, PSD_SLACK};
use crate::error::{Error, Result};
use crate::event_algebra::{FiniteEvent, FiniteSampleSpace, History};
use crate::linalg::{c, hermitian_eigen, numerical_rank, C64};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const DEFAULT_WITNESS_TOL: f64 = 1e-8;
/// Largest `n^N` for which the witness search also scans every history.
pub const EXHAUSTIVE_LIMIT: usize = 10_000;

/// Finitely supported complex function on events. Coefficients of repeated
/// events are merged and exact zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeVector<E> {
    entries: Vec<(E, C64)>,
}

impl<E> Default for FreeVector<E> {
    fn default() -> Self {
        FreeVector {
            entries: Vec::new(),
        }
    }
}

impl<E: Clone + PartialEq> FreeVector<E> {
    pub fn new() -> Self {
        Self::default()
    }

    /// `δ_α`
    pub fn delta(event: E) -> Self {
        let mut u = Self::new();
        u.add(event, c(1.0, 0.0));
        u
    }

    pub fn from_entries<I: IntoIterator<Item = (E, C64)>>(entries: I) -> Self {
        let mut u = Self::new();
        for (e, z) in entries {
            u.add(e, z);
        }
        u
    }

    pub fn add(&mut self, event: E, coeff: C64) {
        match self.entries.iter().position(|(e, _)| *e == event) {
            Some(i) => {
                self.entries[i].1 += coeff;
                if self.entries[i].1 == c(0.0, 0.0) {
                    self.entries.remove(i);
                }
            }
            None if coeff != c(0.0, 0.0) => self.entries.push((event, coeff)),
            None => {}
        }
    }

    pub fn get(&self, event: &E) -> C64 {
        self.entries
            .iter()
            .find(|(e, _)| e == event)
            .map_or(c(0.0, 0.0), |(_, z)| *z)
    }

    pub fn entries(&self) -> &[(E, C64)] {
        &self.entries
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::from_entries(self.entries.iter().map(|(e, w)| (e.clone(), w * z)))
    }

    /// `self + z · other`
    pub fn axpy(&self, z: C64, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, w) in &other.entries {
            out.add(e.clone(), w * z);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(c(-1.0, 0.0), other)
    }
}

/// `δ_α + δ_β − δ_{α∪β}` for disjoint `α, β`: a vector of zero `H₁` norm.
pub fn null_vector(a: &FiniteEvent, b: &FiniteEvent) -> Result<FreeVector<FiniteEvent>> {
    if !a.is_disjoint(b)? {
        return Err(Error::usage("null vector needs disjoint events"));
    }
    let mut u = FreeVector::delta(a.clone());
    u.add(b.clone(), c(1.0, 0.0));
    u.add(a.union(b)?, c(-1.0, 0.0));
    Ok(u)
}

/// `⟨u, v⟩₁ = Σ_α Σ_β u(α)* D(α, β) v(β)`
pub fn inner_product_h1<D>(
    u: &FreeVector<D::Event>,
    v: &FreeVector<D::Event>,
    d: &D,
) -> Result<C64>
where
    D: DecoherenceFunctional,
    D::Event: Clone + PartialEq,
{
    let mut total = c(0.0, 0.0);
    for (a, ua) in u.entries() {
        for (b, vb) in v.entries() {
            total += ua.conj() * d.decoherence(a, b)? * vb;
        }
    }
    Ok(total)
}

/// `f₀(u) = Σ_α u(α) ψ_α`. For mixed initial states this is the stacked
/// vector `⊕_k √p_k Σ_α u(α) ψ_{k,α}`.
pub fn f0_map(u: &FreeVector<FiniteEvent>, system: &FiniteSystem) -> Result<DVector<C64>> {
    let mut out = DVector::zeros(system.lifted_dim());
    for (a, z) in u.entries() {
        out += system.lifted(a)? * *z;
    }
    Ok(out)
}

/// Concrete quotient `H₂ = H₁ / {‖u‖₁ = 0}` restricted to the span of a
/// generator family, realized through the eigen-decomposition of its Gram.
#[derive(Debug, Clone)]
pub struct HistoryHilbertSpace<E> {
    generators: Vec<E>,
    gram: Option<DMatrix<C64>>,
    eigenvalues: Vec<f64>,
    rank: usize,
    factor: DMatrix<C64>,
    rank_tol: f64,
}

impl<E: Clone + PartialEq> HistoryHilbertSpace<E> {
    pub fn build<D>(generators: &[E], d: &D, rank_tol: f64) -> Result<Self>
    where
        D: DecoherenceFunctional<Event = E>,
    {
        let m = generators.len();
        let mut gram = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let z = d.decoherence(&generators[i], &generators[j])?;
                gram[(i, j)] = z;
                gram[(j, i)] = z.conj();
            }
        }
        Self::from_gram(generators.to_vec(), gram, rank_tol)
    }

    /// Rank is the number of eigenvalues above `rank_tol · λ_max`; the
    /// factor is `Λ_r^{1/2} V_r†`.
    pub fn from_gram(generators: Vec<E>, gram: DMatrix<C64>, rank_tol: f64) -> Result<Self> {
        if generators.is_empty() || gram.nrows() != generators.len() || !gram.is_square() {
            return Err(Error::usage("Gram must be square over a nonempty generator list"));
        }
        let (eigenvalues, vectors) = hermitian_eigen(&gram);
        let max = eigenvalues[0].max(0.0);
        let min = *eigenvalues.last().unwrap();
        if min < -PSD_SLACK * max.max(1.0) {
            return Err(Error::AxiomViolation(format!(
                "Gram has eigenvalue {min:e} below the positivity slack"
            )));
        }
        let rank = numerical_rank(&eigenvalues, rank_tol);
        let m = generators.len();
        let factor = DMatrix::from_fn(rank, m, |k, j| {
            vectors[(j, k)].conj() * eigenvalues[k].sqrt()
        });
        Ok(HistoryHilbertSpace {
            generators,
            gram: Some(gram),
            eigenvalues,
            rank,
            factor,
            rank_tol,
        })
    }

    pub fn generators(&self) -> &[E] {
        &self.generators
    }

    /// The `M × M` Gram, kept only when it was formed explicitly.
    pub fn gram(&self) -> Option<&DMatrix<C64>> {
        self.gram.as_ref()
    }

    /// Gram eigenvalues in descending order. When the Gram was
    /// not formed this is the spectrum of `V V†`, which has the same nonzero
    /// eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `dim H₂` as seen by the generator family.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn factor(&self) -> &DMatrix<C64> {
        &self.factor
    }

    /// Coefficients of `u` over the generator list.
    pub fn coefficients(&self, u: &FreeVector<E>) -> Result<DVector<C64>> {
        let mut coeffs = DVector::zeros(self.generators.len());
        for (e, z) in u.entries() {
            let i = self
                .generators
                .iter()
                .position(|g| g == e)
                .ok_or_else(|| Error::usage("vector supported outside the generator list"))?;
            coeffs[i] += z;
        }
        Ok(coeffs)
    }

    /// Orthonormal coordinates of `[u]` in `ℂ^rank`.
    pub fn coordinates(&self, u: &FreeVector<E>) -> Result<DVector<C64>> {
        Ok(&self.factor * self.coefficients(u)?)
    }
}

impl<E: Clone + PartialEq> HistoryHilbertSpace<E> {
    /// Builds the quotient from representatives `V = [v(α₁) … v(α_M)]` with
    /// `D(α_i, α_j) = v(α_i)† v(α_j)`. When `M` exceeds the vector dimension
    /// the decomposition runs on `V V†` and `factor = W_r† V`, which equals
    /// `Λ_r^{1/2} X_r†` for the singular value decomposition `V = W Σ X†`.
    pub fn from_vectors(generators: Vec<E>, v: DMatrix<C64>, rank_tol: f64) -> Result<Self> {
        if generators.is_empty() || v.ncols() != generators.len() {
            return Err(Error::usage("one representative column per generator"));
        }
        if v.ncols() <= v.nrows() {
            let gram = v.adjoint() * &v;
            return Self::from_gram(generators, gram, rank_tol);
        }
        let dual = &v * v.adjoint();
        let (eigenvalues, w) = hermitian_eigen(&dual);
        let rank = numerical_rank(&eigenvalues, rank_tol);
        let factor = w.columns(0, rank).adjoint() * &v;
        Ok(HistoryHilbertSpace {
            generators,
            gram: None,
            eigenvalues,
            rank,
            factor,
            rank_tol,
        })
    }
}

impl HistoryHilbertSpace<FiniteEvent> {
    /// Fast path for finite systems: representatives are the lifted
    /// restricted evolutions.
    pub fn finite(system: &FiniteSystem, generators: &[FiniteEvent], rank_tol: f64) -> Result<Self> {
        let v = system.lifted_matrix(generators)?;
        Self::from_vectors(generators.to_vec(), v, rank_tol)
    }

    /// All `n^N` singleton events, which span `H₂` by bi-additivity.
    pub fn singletons(system: &FiniteSystem, rank_tol: f64) -> Result<Self> {
        Self::finite(system, &singleton_events(system.space()), rank_tol)
    }
}

pub fn singleton_events(space: FiniteSampleSpace) -> Vec<FiniteEvent> {
    (0..space.size())
        .map(|i| FiniteEvent::from_indices(space, [i]).expect("index in range"))
        .collect()
}

/// One history per final configuration with a nonzero amplitude there.
#[derive(Debug, Clone, PartialEq)]
pub struct OntoWitness {
    space: FiniteSampleSpace,
    histories: Vec<History>,
    amplitudes: Vec<C64>,
}

impl OntoWitness {
    pub fn new(space: FiniteSampleSpace, histories: Vec<History>, amplitudes: Vec<C64>) -> Result<Self> {
        let n = space.configs();
        if histories.len() != n || amplitudes.len() != n {
            return Err(Error::InvalidWitness(format!("need one history per configuration (n = {n})")));
        }
        for (j, h) in histories.iter().enumerate() {
            space.index_of(h)?;
            if h.final_config() != j {
                return Err(Error::InvalidWitness(format!(
                    "history for configuration {j} ends at {}",
                    h.final_config()
                )));
            }
        }
        Ok(OntoWitness {
            space,
            histories,
            amplitudes,
        })
    }

    pub fn histories(&self) -> &[History] {
        &self.histories
    }

    /// `(ψ_{γ^j})_j`
    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OntoOutcome {
    Onto(OntoWitness),
    /// Final configurations (0-based) that no history reaches above tolerance.
    NotOnto { unreachable: Vec<usize> },
}

impl OntoOutcome {
    pub fn is_onto(&self) -> bool {
        matches!(self, OntoOutcome::Onto(_))
    }
}

/// Per final configuration, the history of largest `|amplitude|`, found by
/// dynamic programming over `max |U_{j i}| · best(i)` with back-pointers.
/// Small spaces are additionally scanned exhaustively. A witness entry counts
/// as nonzero when it exceeds `witness_tol` times the largest amplitude.
pub fn onto_witness_search(
    psi: &StateVector,
    schedule: &EvolutionSchedule,
    witness_tol: f64,
) -> Result<OntoOutcome> {
    let system = FiniteSystem::new(schedule.clone(), psi.clone())?;
    onto_witness_for(&system, witness_tol)
}

pub fn onto_witness_for(system: &FiniteSystem, witness_tol: f64) -> Result<OntoOutcome> {
    let schedule = system.schedule();
    let psi = match system.initial() {
        crate::dynamics::InitialCondition::Pure(s) => s,
        crate::dynamics::InitialCondition::Mixed(_) => {
            return Err(Error::usage("onto-witness search needs a pure initial state"))
        }
    };
    let n = schedule.configs();
    let steps = schedule.steps();
    let mut best: Vec<f64> = psi.amplitudes().iter().map(|z| z.norm()).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(steps.len());
    for u in steps {
        let mut next = vec![0.0; n];
        let mut ptr = vec![0; n];
        for j in 0..n {
            for i in 0..n {
                let v = u[(j, i)].norm() * best[i];
                if v > next[j] {
                    next[j] = v;
                    ptr[j] = i;
                }
            }
        }
        best = next;
        back.push(ptr);
    }
    let trace = |j: usize| {
        let mut path = vec![j];
        for ptr in back.iter().rev() {
            path.push(ptr[*path.last().unwrap()]);
        }
        path.reverse();
        History::new(path)
    };
    let mut histories: Vec<History> = (0..n).map(trace).collect();
    let mut amplitudes: Vec<C64> = histories
        .iter()
        .map(|h| system.history_amplitude(h))
        .collect::<Result<_>>()?;

    let space = system.space();
    let mut scale = amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if space.size() <= EXHAUSTIVE_LIMIT {
        for idx in 0..space.size() {
            let z = system.history_amplitude_by_index(idx);
            let j = idx % n;
            scale = scale.max(z.norm());
            if z.norm() > amplitudes[j].norm() {
                amplitudes[j] = z;
                histories[j] = space.history(idx);
            }
        }
    }
    let threshold = witness_tol * scale;
    let unreachable: Vec<usize> = (0..n)
        .filter(|&j| !(amplitudes[j].norm() > threshold) || scale == 0.0)
        .collect();
    if unreachable.is_empty() {
        Ok(OntoOutcome::Onto(OntoWitness::new(space, histories, amplitudes)?))
    } else {
        Ok(OntoOutcome::NotOnto { unreachable })
    }
}

/// The preimage `u({γ^j}) = φ_j / (ψ_{γ^j})_j` of `φ` under `f₀`.
pub fn invert_via_witness(phi: &DVector<C64>, witness: &OntoWitness) -> Result<FreeVector<FiniteEvent>> {
    let n = witness.space.configs();
    if phi.len() != n {
        return Err(Error::usage(format!("target has length {} but n = {n}", phi.len())));
    }
    let mut u = FreeVector::new();
    for j in 0..n {
        let amp = witness.amplitudes[j];
        if amp.norm() == 0.0 || !amp.norm().is_finite() {
            return Err(Error::InvalidWitness(format!("zero amplitude for configuration {j}")));
        }
        if phi[j] != c(0.0, 0.0) {
            let e = FiniteEvent::singleton(witness.space, &witness.histories[j])?;
            u.add(e, phi[j] / amp);
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DensityMatrix, EvolutionSchedule, StateVector};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn generic(n: usize, big_n: usize, seed: u64) -> FiniteSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sched = EvolutionSchedule::random_haar(n, big_n, &mut rng).unwrap();
        FiniteSystem::new(sched, StateVector::random(n, &mut rng)).unwrap()
    }

    fn random_event(space: FiniteSampleSpace, rng: &mut ChaCha8Rng) -> FiniteEvent {
        FiniteEvent::from_indices(space, (0..space.size()).filter(|_| rng.random_bool(0.5))).unwrap()
    }

    fn random_free(space: FiniteSampleSpace, rng: &mut ChaCha8Rng, terms: usize) -> FreeVector<FiniteEvent> {
        FreeVector::from_entries((0..terms).map(|_| {
            (
                random_event(space, rng),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        }))
    }

    fn h1_norm_sq(u: &FreeVector<FiniteEvent>, sys: &FiniteSystem) -> f64 {
        inner_product_h1(u, u, sys).unwrap().re
    }

    #[test]
    fn free_vector_merges_and_drops_zeros() {
        let mut u = FreeVector::delta(1u8);
        u.add(2, c(2.0, 0.0));
        u.add(1, c(-1.0, 0.0));
        assert_eq!(u.entries(), &[(2, c(2.0, 0.0))]);
        assert!(u.sub(&u).is_empty());
        assert_eq!(u.scale(c(0.5, 0.0)).get(&2), c(1.0, 0.0));
    }

    #[test]
    fn null_vector_has_zero_norm_and_image() {
        let sys = generic(3, 3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a = random_event(sys.space(), &mut rng);
            let b = random_event(sys.space(), &mut rng).difference(&a).unwrap();
            let u = null_vector(&a, &b).unwrap();
            assert!(h1_norm_sq(&u, &sys).abs() < 1e-12);
            assert!(f0_map(&u, &sys).unwrap().norm() < 1e-12);
        }
        let omega = FreeVector::delta(FiniteEvent::full(sys.space()));
        assert!((h1_norm_sq(&omega, &sys) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_matches_double_sum_on_2x2() {
        let sys = generic(2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_free(sys.space(), &mut rng, 3);
        let v = random_free(sys.space(), &mut rng, 4);
        let mut oracle = c(0.0, 0.0);
        for (a, ua) in u.entries() {
            for (b, vb) in v.entries() {
                let pa = sys.restricted_evolution(a).unwrap();
                let pb = sys.restricted_evolution(b).unwrap();
                oracle += ua.conj() * pa.inner(&pb) * vb;
            }
        }
        assert!((inner_product_h1(&u, &v, &sys).unwrap() - oracle).norm() < 1e-14);
    }

    #[test]
    fn f0_is_an_isometry_and_linear() {
        let sys = generic(3, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let u = random_free(sys.space(), &mut rng, 4);
            let v = random_free(sys.space(), &mut rng, 3);
            let fu = f0_map(&u, &sys).unwrap();
            let fv = f0_map(&v, &sys).unwrap();
            assert!((fu.dotc(&fv) - inner_product_h1(&u, &v, &sys).unwrap()).norm() < 1e-12);
            let z = c(0.3, -1.2);
            let comb = f0_map(&u.axpy(z, &v), &sys).unwrap();
            assert!((comb - (&fu + &fv * z)).norm() < 1e-12);
        }
        let omega = FreeVector::delta(FiniteEvent::full(sys.space()));
        let evolved = sys.schedule().composite(0, 2).unwrap()
            * match sys.initial() {
                crate::dynamics::InitialCondition::Pure(s) => s.as_vector().clone(),
                _ => unreachable!(),
            };
        assert!((f0_map(&omega, &sys).unwrap() - evolved).norm() < 1e-13);
    }

    #[test]
    fn injective_on_the_quotient() {
        let sys = generic(2, 3, 7);
        let space = sys.space();
        let all: Vec<FiniteEvent> = (0..256u32)
            .map(|m| FiniteEvent::from_indices(space, (0..8).filter(|i| m >> i & 1 == 1)).unwrap())
            .collect();
        let hs = HistoryHilbertSpace::from_gram(
            all.clone(),
            sys.gram(&all).unwrap().matrix().clone(),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..100 {
            let u = random_free(space, &mut rng, 3);
            // Half the pairs differ by a null vector only.
            let v = if trial % 2 == 0 {
                let a = random_event(space, &mut rng);
                let b = random_event(space, &mut rng).difference(&a).unwrap();
                u.axpy(c(0.0, 2.0), &null_vector(&a, &b).unwrap())
            } else {
                random_free(space, &mut rng, 3)
            };
            let d = u.sub(&v);
            let image_zero = (f0_map(&u, &sys).unwrap() - f0_map(&v, &sys).unwrap()).norm() < 1e-10;
            let quotient_zero = hs.coordinates(&d).unwrap().norm() < 1e-10;
            assert_eq!(image_zero, quotient_zero);
            assert_eq!(quotient_zero, trial % 2 == 0);
        }
    }

    #[test]
    fn coordinates_represent_the_inner_product() {
        let sys = generic(3, 2, 9);
        let hs = HistoryHilbertSpace::singletons(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(hs.rank(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let gens = hs.generators().to_vec();
        let pick = |rng: &mut ChaCha8Rng| {
            FreeVector::from_entries((0..4).map(|_| {
                (
                    gens[rng.random_range(0..gens.len())].clone(),
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            }))
        };
        for _ in 0..20 {
            let u = pick(&mut rng);
            let v = pick(&mut rng);
            let lhs = hs.coordinates(&u).unwrap().dotc(&hs.coordinates(&v).unwrap());
            assert!((lhs - inner_product_h1(&u, &v, &sys).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn quotient_coordinates_ignore_null_vectors() {
        let sys = generic(2, 2, 11);
        let space = sys.space();
        let events: Vec<FiniteEvent> = (0..16u32)
            .map(|m| FiniteEvent::from_indices(space, (0..4).filter(|i| m >> i & 1 == 1)).unwrap())
            .collect();
        let hs = HistoryHilbertSpace::finite(&sys, &events, DEFAULT_RANK_TOL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let u = FreeVector::from_entries((0..3).map(|_| {
                (events[rng.random_range(0..16)].clone(), c(rng.random_range(-1.0..1.0), 0.5))
            }));
            let a = events[rng.random_range(1..16)].clone();
            let b = FiniteEvent::from_indices(space, (0..4).filter(|_| rng.random_bool(0.5)))
                .unwrap()
                .difference(&a)
                .unwrap();
            let shifted = u.axpy(c(-0.7, 0.2), &null_vector(&a, &b).unwrap());
            let d = hs.coordinates(&u).unwrap() - hs.coordinates(&shifted).unwrap();
            assert!(d.norm() < 1e-10);
        }
    }

    #[test]
    fn rank_is_basis_independent_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for seed in 0..5 {
            let sys = generic(3, 3, 100 + seed);
            let singles = singleton_events(sys.space());
            let base = HistoryHilbertSpace::finite(&sys, &singles, DEFAULT_RANK_TOL).unwrap();
            assert!(base.rank() <= 3);
            // Prefix unions of a shuffled singleton list are related to the
            // singletons by an invertible triangular 0/1 matrix.
            let mut order: Vec<usize> = (0..singles.len()).collect();
            order.shuffle(&mut rng);
            let mut acc = FiniteEvent::empty(sys.space());
            let prefixes: Vec<FiniteEvent> = order
                .iter()
                .map(|&i| {
                    acc = acc.union(&singles[i]).unwrap();
                    acc.clone()
                })
                .collect();
            let other = HistoryHilbertSpace::finite(&sys, &prefixes, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(base.rank(), other.rank());
        }
    }

    #[test]
    fn generic_system_has_full_rank_and_witness() {
        let sys = generic(3, 3, 14);
        let hs = HistoryHilbertSpace::singletons(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(hs.rank(), 3);
        let OntoOutcome::Onto(w) = onto_witness_for(&sys, DEFAULT_WITNESS_TOL).unwrap() else {
            panic!("generic system must be onto");
        };
        for (j, h) in w.histories().iter().enumerate() {
            assert_eq!(h.final_config(), j);
            assert_eq!(sys.history_amplitude(h).unwrap(), w.amplitudes()[j]);
        }
    }

    #[test]
    fn dynamic_programming_finds_the_largest_amplitude() {
        // n^N above the exhaustive limit: the DP result alone is used.
        let sys = generic(5, 6, 15);
        assert!(sys.space().size() > EXHAUSTIVE_LIMIT);
        let OntoOutcome::Onto(w) = onto_witness_for(&sys, DEFAULT_WITNESS_TOL).unwrap() else {
            panic!("generic system must be onto");
        };
        let n = sys.configs();
        for idx in 0..sys.space().size() {
            let z = sys.history_amplitude_by_index(idx).norm();
            assert!(z <= w.amplitudes()[idx % n].norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn trivial_evolution_of_delta_state() {
        let sched = EvolutionSchedule::trivial(4, 3).unwrap();
        let sys = FiniteSystem::new(sched.clone(), StateVector::basis(4, 2)).unwrap();
        let hs = HistoryHilbertSpace::singletons(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(hs.rank(), 1);
        let out = onto_witness_search(&StateVector::basis(4, 2), &sched, DEFAULT_WITNESS_TOL).unwrap();
        assert_eq!(out, OntoOutcome::NotOnto { unreachable: vec![0, 1, 3] });

        let spread = StateVector::new(vec![c(0.5, 0.0); 4]);
        let out = onto_witness_search(&spread, &sched, DEFAULT_WITNESS_TOL).unwrap();
        assert!(out.is_onto());
    }

    #[test]
    fn local_hopping_rank_grows_then_saturates() {
        let n = 5;
        let ranks: Vec<usize> = (2..=6)
            .map(|big_n| {
                let sched = EvolutionSchedule::local_hopping(n, big_n, 0.6).unwrap();
                let sys = FiniteSystem::new(sched, StateVector::basis(n, 2)).unwrap();
                HistoryHilbertSpace::singletons(&sys, DEFAULT_RANK_TOL).unwrap().rank()
            })
            .collect();
        assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{ranks:?}");
        assert!(ranks[0] < n);
        assert_eq!(*ranks.last().unwrap(), n);
    }

    #[test]
    fn witness_inversion_reproduces_targets() {
        let sys = generic(4, 3, 16);
        let OntoOutcome::Onto(w) = onto_witness_for(&sys, DEFAULT_WITNESS_TOL).unwrap() else {
            panic!("generic system must be onto");
        };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let phi = DVector::from_fn(4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let u = invert_via_witness(&phi, &w).unwrap();
            assert!(u.support_len() <= 4);
            assert!((f0_map(&u, &sys).unwrap() - &phi).norm() < 1e-12);
        }
        let mut e2 = DVector::zeros(4);
        e2[2] = c(1.0, 0.0);
        let u = invert_via_witness(&e2, &w).unwrap();
        assert_eq!(u.support_len(), 1);
        assert_eq!(u.entries()[0].0.len(), 1);

        let omega = FreeVector::delta(FiniteEvent::full(sys.space()));
        let target = f0_map(&omega, &sys).unwrap();
        let back = invert_via_witness(&target, &w).unwrap();
        assert!((f0_map(&back, &sys).unwrap() - target).norm() < 1e-12);
    }

    #[test]
    fn zero_amplitude_witness_is_rejected() {
        let space = FiniteSampleSpace::new(2, 2).unwrap();
        let w = OntoWitness::new(
            space,
            vec![vec![0, 0].into(), vec![0, 1].into()],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let phi = DVector::from_element(2, c(1.0, 0.0));
        assert!(matches!(invert_via_witness(&phi, &w), Err(Error::InvalidWitness(_))));
        assert!(OntoWitness::new(space, vec![vec![0, 1].into(), vec![0, 1].into()], vec![c(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn mixed_rank_two_gives_twice_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let sched = EvolutionSchedule::random_haar(3, 3, &mut rng).unwrap();
        let rho = DensityMatrix::random(3, 2, &mut rng).unwrap();
        let sys = FiniteSystem::new(sched, rho).unwrap();
        let hs = HistoryHilbertSpace::singletons(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(hs.rank(), 6);
        let generic_hs = HistoryHilbertSpace::build(hs.generators(), &sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(generic_hs.rank(), 6);
    }
}
