use proptest::prelude::*;
use qmeasure::continuum::PropagatorSpec;
use qmeasure::dynamics::{
    DecoherenceFunctional, DensityMatrix, EvolutionSchedule, FiniteSystem, InitialCondition,
    StateVector, verify_system_axioms,
};
use qmeasure::event_algebra::{FiniteEvent, FiniteSampleSpace};
use qmeasure::gns::HistoryHilbertSpace;
use qmeasure::linalg::{random_unitary, unitarity_defect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn event(space: FiniteSampleSpace, rng: &mut ChaCha8Rng) -> FiniteEvent {
    let idx: Vec<usize> = (0..space.size()).filter(|_| rng.random_bool(0.5)).collect();
    FiniteEvent::from_indices(space, idx).unwrap()
}

fn system(seed: u64, n: usize, times: usize, mixed_rank: Option<usize>) -> FiniteSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedule = EvolutionSchedule::random_haar(n, times, &mut rng).unwrap();
    let initial: InitialCondition = match mixed_rank {
        Some(r) => DensityMatrix::random(n, r.min(n), &mut rng).unwrap().into(),
        None => StateVector::random(n, &mut rng).into(),
    };
    FiniteSystem::new(schedule, initial).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn haar_steps_are_unitary(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(unitarity_defect(&random_unitary(n, &mut rng)) < 1e-12);
    }

    #[test]
    fn axioms_hold_on_random_systems(
        seed in any::<u64>(),
        n in 2usize..5,
        times in 2usize..4,
        mixed in prop::option::of(1usize..4),
    ) {
        let sys = system(seed, n, times, mixed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
        let space = sys.space();
        let mut events: Vec<FiniteEvent> = (0..5).map(|_| event(space, &mut rng)).collect();
        events.push(FiniteEvent::full(space));
        let report = verify_system_axioms(&sys, &events, 1e-11).unwrap();
        prop_assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn restricted_evolution_through_every_history_preserves_the_norm(
        seed in any::<u64>(),
        n in 2usize..5,
        times in 2usize..4,
    ) {
        let sys = system(seed, n, times, None);
        let full = FiniteEvent::full(sys.space());
        let psi = sys.restricted_evolution(&full).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measure_is_squared_norm_of_restricted_evolution(
        seed in any::<u64>(),
        n in 2usize..5,
        times in 2usize..4,
    ) {
        let sys = system(seed, n, times, None);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let a = event(sys.space(), &mut rng);
        let mu = sys.quantal_measure(&a).unwrap();
        let psi = sys.restricted_evolution(&a).unwrap();
        prop_assert!((mu - psi.norm().powi(2)).abs() < 1e-12);
        prop_assert!(mu >= -1e-14);
    }

    #[test]
    fn complement_and_union_partition_the_space(
        seed in any::<u64>(),
        n in 2usize..4,
        times in 2usize..4,
    ) {
        let space = FiniteSampleSpace::new(n, times).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = event(space, &mut rng);
        let b = event(space, &mut rng);
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert!(a.is_disjoint(&a.complement()).unwrap());
        prop_assert!(a.union(&a.complement()).unwrap().is_full());
        prop_assert_eq!(a.union(&b).unwrap(), b.union(&a).unwrap());
        let sym = a.ring_add(&b).unwrap();
        let both = a.ring_mul(&b).unwrap();
        prop_assert!(sym.is_disjoint(&both).unwrap());
        prop_assert_eq!(sym.union(&both).unwrap(), a.union(&b).unwrap());
    }

    #[test]
    fn history_space_dimension_is_bounded_by_lifted_dimension(
        seed in any::<u64>(),
        n in 2usize..4,
        times in 2usize..4,
        mixed in prop::option::of(1usize..3),
    ) {
        let sys = system(seed, n, times, mixed);
        let h = HistoryHilbertSpace::singletons(&sys, 1e-10).unwrap();
        let bound = n * sys.initial().rank();
        prop_assert!(h.rank() <= bound);
        prop_assert!(h.rank() >= 1);
    }

    #[test]
    fn vector_potential_only_changes_the_phase(
        charge in -3.0..3.0f64,
        a in -3.0..3.0f64,
        y in -5.0..5.0f64,
        x in -5.0..5.0f64,
        dt in 0.05..4.0f64,
    ) {
        let free = PropagatorSpec::free(1).value(&[y], dt, &[x], 0.0).unwrap().finite().unwrap();
        let gauge = PropagatorSpec::vector_potential(charge, vec![a]).unwrap();
        let k = gauge.value(&[y], dt, &[x], 0.0).unwrap().finite().unwrap();
        prop_assert!((k.norm() - free.norm()).abs() < 1e-12 * free.norm().max(1.0));
    }

    #[test]
    fn half_line_kernel_vanishes_behind_the_wall(
        y in -5.0..5.0f64,
        x in -5.0..5.0f64,
        dt in 0.05..4.0f64,
    ) {
        let k = PropagatorSpec::half_line().value(&[y], dt, &[x], 0.0).unwrap().finite().unwrap();
        if x <= 0.0 || y <= 0.0 {
            prop_assert_eq!(k.norm(), 0.0);
        }
        let at_wall = PropagatorSpec::half_line().value(&[1e-12], dt, &[x.abs() + 0.1], 0.0).unwrap();
        prop_assert!(at_wall.finite().unwrap().norm() < 1e-9);
    }

    #[test]
    fn oscillator_kernel_is_symmetric_in_its_endpoints(
        omega in 0.2..3.0f64,
        y in -3.0..3.0f64,
        x in -3.0..3.0f64,
        dt in 0.05..1.0f64,
    ) {
        let spec = PropagatorSpec::oscillator(1, omega).unwrap();
        prop_assume!((omega * dt / std::f64::consts::PI).fract() > 1e-3);
        let a = spec.value(&[y], dt, &[x], 0.0).unwrap().finite().unwrap();
        let b = spec.value(&[x], dt, &[y], 0.0).unwrap().finite().unwrap();
        prop_assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }
}
