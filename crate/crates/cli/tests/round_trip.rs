use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qmeasure_cli::scenario::{
    ContinuumEventDef, ContinuumScenario, Dynamics, FiniteEventDef, FiniteScenario, FiniteSet,
    Initial, PartDef, PropagatorDef, PropagatorKindDef, QuadratureDef, RegionDef, ReconstructDef,
    StateDef, System,
};
use qmeasure_cli::Scenario;

fn real() -> impl Strategy<Value = f64> + Clone {
    prop_oneof![
        -1e3..1e3f64,
        (-20i32..20).prop_map(f64::from),
        prop::num::f64::NORMAL,
        Just(1e-300),
        Just(0.1),
    ]
}

fn complex() -> impl Strategy<Value = C64> + Clone {
    (real(), real()).prop_map(|(a, b)| C64::new(a, b))
}

fn finite() -> impl Strategy<Value = System> {
    (1usize..4, 2usize..4).prop_flat_map(|(n, big)| {
        let matrix = prop::collection::vec(prop::collection::vec(complex(), n), n);
        let dynamics = prop_oneof![
            prop::collection::vec(matrix.clone(), big - 1).prop_map(Dynamics::Explicit),
            Just(Dynamics::Haar),
            Just(Dynamics::Trivial),
            real().prop_map(|theta| Dynamics::Hopping { theta }),
        ];
        let initial = prop_oneof![
            prop::collection::vec(complex(), n).prop_map(Initial::State),
            (0..n).prop_map(Initial::Basis),
            Just(Initial::Random),
            matrix.prop_map(Initial::Density),
            (1..=n).prop_map(|rank| Initial::RandomDensity { rank }),
        ];
        let set = prop_oneof![
            Just(FiniteSet::Full),
            Just(FiniteSet::Empty),
            prop::collection::vec(prop::collection::vec(0..n, big), 0..4).prop_map(FiniteSet::Histories),
            prop::collection::vec(prop::option::of(prop::collection::vec(0..n, 1..3)), big)
                .prop_map(FiniteSet::Cylinder),
        ];
        let events = prop::collection::vec(set, 0..4).prop_map(|sets| {
            sets.into_iter()
                .enumerate()
                .map(|(i, set)| FiniteEventDef {
                    name: format!("e{i}"),
                    set,
                })
                .collect::<Vec<_>>()
        });
        let times = prop::collection::vec(0.01..5.0f64, big - 1).prop_map(|steps| {
            let mut t = vec![0.0];
            for s in steps {
                t.push(t.last().unwrap() + s);
            }
            t
        });
        (times, dynamics, initial, events, 0usize..5, prop::option::of(1usize..9), 0usize..30).prop_map(
            move |(times, dynamics, initial, events, random_events, expect_dim, onto_targets)| {
                System::Finite(FiniteScenario {
                    n,
                    times,
                    dynamics,
                    initial,
                    events,
                    random_events,
                    expect_dim,
                    onto_targets,
                })
            },
        )
    })
}

fn interval() -> impl Strategy<Value = (f64, f64)> + Clone {
    (real(), 0.0..10.0f64).prop_map(|(a, w)| (a, a + w))
}

fn continuum() -> impl Strategy<Value = System> {
    (1usize..3).prop_flat_map(|dim| {
        let kind = prop_oneof![
            Just(PropagatorKindDef::Free),
            (0.1..5.0f64).prop_map(|omega| PropagatorKindDef::Oscillator { omega }),
            (real(), prop::collection::vec(real(), dim))
                .prop_map(|(charge, potential)| PropagatorKindDef::VectorPotential { charge, potential }),
        ];
        let boxed = prop::collection::vec(interval(), dim);
        let region = prop_oneof![
            Just(RegionDef::Full),
            Just(RegionDef::Empty),
            prop::collection::vec(boxed.clone(), 1..3).prop_map(RegionDef::Union),
            prop::collection::vec(boxed, 1..3).prop_map(RegionDef::ComplementOf),
        ];
        let part = (1usize..4).prop_flat_map(move |k| {
            (
                prop::collection::vec(real(), k),
                prop::collection::vec(region.clone(), k),
            )
                .prop_map(|(times, regions)| PartDef { times, regions })
        });
        let events = prop::collection::vec(prop::collection::vec(part, 0..3), 0..3).prop_map(|evs| {
            evs.into_iter()
                .enumerate()
                .map(|(i, parts)| ContinuumEventDef {
                    name: format!("ev{i}"),
                    parts,
                })
                .collect::<Vec<_>>()
        });
        let state = (prop::collection::vec(real(), dim), 0.1..3.0f64, prop::collection::vec(real(), dim))
            .prop_map(|(center, sigma, momentum)| StateDef::Gaussian {
                center,
                sigma,
                momentum,
            });
        let quadrature = (2usize..40, 0.5..20.0f64, prop::option::of(1.0..50.0f64), prop::collection::vec(real(), 3..6), real())
            .prop_map(|(order, panel_phase, half_width, ladder, ladder_tolerance)| QuadratureDef {
                order,
                panel_phase,
                half_width,
                ladder,
                ladder_tolerance,
            });
        let reconstruct = prop::option::of(
            (real(), real(), prop::collection::vec((interval(), complex()), 1..4))
                .prop_map(|(time, epsilon, terms)| ReconstructDef { time, epsilon, terms }),
        );
        (kind, real(), real(), quadrature, state, events, reconstruct).prop_map(
            move |(kind, mass, hbar, quadrature, state, events, reconstruct)| {
                System::Continuum(ContinuumScenario {
                    propagator: PropagatorDef { kind, dim, mass, hbar },
                    quadrature,
                    state,
                    events,
                    esck: None,
                    reconstruct,
                })
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serializer_then_parser_is_identity(
        seed in prop::option::of(any::<u64>()),
        system in prop_oneof![finite(), continuum()],
    ) {
        let s = Scenario { seed, system };
        let text = s.to_text();
        let back = Scenario::parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back.digest(), s.digest());
    }
}
