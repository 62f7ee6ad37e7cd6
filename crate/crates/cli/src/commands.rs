use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use qmeasure::continuum::{
    check_esck, lemma4_reconstruct, reconstruct_step_function, ConvergenceLadder, EsckQuadrature,
    Evolver, InitialState, Lemma4Params, PropagatorKind, PropagatorSpec,
};
use qmeasure::dynamics::{
    verify_system_axioms, DecoherenceFunctional, DensityMatrix, EvolutionSchedule, FiniteSystem,
    InitialCondition, StateVector,
};
use qmeasure::event_algebra::{
    ContinuumEvent, FiniteEvent, History, HomogeneousEvent, Interval, Region,
};
use qmeasure::gns::{f0_map, invert_via_witness, onto_witness_for, HistoryHilbertSpace, OntoOutcome};
use qmeasure::linalg::{hermitian_eigen, random_unit_vector, unitarity_defect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliError;
use crate::report::{Record, Report, Status};
use crate::scenario::{
    BoxDef, ContinuumScenario, Dynamics, EsckDef, FiniteScenario, FiniteSet, Initial, Matrix,
    PropagatorKindDef, RegionDef, Scenario, StateDef, System, DEFAULT_ESCK_POINTS,
};

/// Relative threshold below which a final configuration counts as unreachable.
const WITNESS_TOL: f64 = 1e-8;
/// Interference sums are formed over at most this many events.
const MAX_INTERFERENCE_EVENTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckAxioms,
    Gns,
    Onto,
    Esck,
    Reconstruct,
    Interference,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckAxioms => "check-axioms",
            Command::Gns => "gns",
            Command::Onto => "onto",
            Command::Esck => "esck",
            Command::Reconstruct => "reconstruct",
            Command::Interference => "interference",
        }
    }

    fn default_tol(self) -> f64 {
        match self {
            Command::CheckAxioms | Command::Gns | Command::Onto => 1e-12,
            Command::Esck => 1e-3,
            Command::Reconstruct => f64::NAN,
            Command::Interference => 1e-9,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Options {
    pub tol: Option<f64>,
    pub rank_tol: Option<f64>,
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
}

pub fn run(command: Command, scenario: &Scenario, opts: &Options) -> Result<Report, CliError> {
    for (flag, v) in [("--tol", opts.tol), ("--rank-tol", opts.rank_tol)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::usage(format!("{flag} must be a positive number")));
            }
        }
    }
    let seed = opts.seed.or(scenario.seed);
    let needs_seed = scenario.uses_randomness()
        || matches!((&scenario.system, command), (System::Finite(f), Command::Onto) if f.onto_targets > 0);
    if needs_seed && seed.is_none() {
        return Err(CliError::usage(format!(
            "`{}` on this scenario draws random numbers; give `seed` or --seed",
            command.name()
        )));
    }
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let tol = opts.tol.unwrap_or(command.default_tol());
    let mut report = Report::new(command.name(), scenario.digest(), seed);
    let start = Instant::now();
    match (&scenario.system, command) {
        (System::Finite(f), Command::CheckAxioms) => check_axioms(f, &mut rng, tol, &mut report)?,
        (System::Finite(f), Command::Gns) => {
            gns(f, &mut rng, tol, opts.rank_tol.unwrap_or(1e-10), &mut report)?
        }
        (System::Finite(f), Command::Onto) => onto(f, &mut rng, tol, &mut report)?,
        (System::Finite(f), Command::Interference) => finite_interference(f, &mut rng, tol, &mut report)?,
        (System::Continuum(c), Command::Esck) => esck(c, tol, &mut report)?,
        (System::Continuum(c), Command::Reconstruct) => reconstruct(c, opts.tol, &mut report)?,
        (System::Continuum(c), Command::Interference) => continuum_interference(c, tol, &mut report)?,
        (System::Finite(_), cmd) => {
            return Err(CliError::usage(format!("`{}` needs a continuum scenario", cmd.name())))
        }
        (System::Continuum(_), cmd) => {
            return Err(CliError::usage(format!("`{}` needs a finite scenario", cmd.name())))
        }
    }
    report.time("total", start.elapsed().as_secs_f64() * 1e3);
    Ok(report)
}

fn need_rng(rng: &mut Option<ChaCha8Rng>) -> Result<&mut ChaCha8Rng, CliError> {
    rng.as_mut().ok_or_else(|| CliError::usage("this scenario needs a seed"))
}

fn to_dmatrix(m: &Matrix) -> DMatrix<C64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j])
}

fn fmt_configs(cfg: &[usize]) -> String {
    cfg.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(" ")
}

// ------------------------------------------------------------- finite model

struct FiniteModel {
    system: FiniteSystem,
    events: Vec<(String, FiniteEvent)>,
}

/// Draws randomness in a fixed order: dynamics, initial state, events.
fn build_finite(f: &FiniteScenario, rng: &mut Option<ChaCha8Rng>) -> Result<FiniteModel, CliError> {
    let n = f.n;
    let big_n = f.times.len();
    let retimed = |s: EvolutionSchedule| EvolutionSchedule::new(f.times.clone(), s.steps().to_vec());
    let schedule = match &f.dynamics {
        Dynamics::Explicit(steps) => {
            EvolutionSchedule::from_steps_unchecked(f.times.clone(), steps.iter().map(to_dmatrix).collect())?
        }
        Dynamics::Haar => retimed(EvolutionSchedule::random_haar(n, big_n, need_rng(rng)?)?)?,
        Dynamics::Trivial => retimed(EvolutionSchedule::trivial(n, big_n)?)?,
        Dynamics::Hopping { theta } => retimed(EvolutionSchedule::local_hopping(n, big_n, *theta)?)?,
    };
    let initial: InitialCondition = match &f.initial {
        Initial::State(a) => StateVector::new(a.clone()).into(),
        Initial::Basis(k) => StateVector::basis(n, *k).into(),
        Initial::Random => StateVector::random(n, need_rng(rng)?).into(),
        Initial::Density(m) => DensityMatrix::new(to_dmatrix(m))?.into(),
        Initial::RandomDensity { rank } => DensityMatrix::random(n, *rank, need_rng(rng)?)?.into(),
    };
    let system = FiniteSystem::new(schedule, initial)?;
    let space = system.space();
    let mut events = Vec::with_capacity(f.events.len() + f.random_events);
    for def in &f.events {
        let e = match &def.set {
            FiniteSet::Full => FiniteEvent::full(space),
            FiniteSet::Empty => FiniteEvent::empty(space),
            FiniteSet::Histories(hs) => {
                let hs: Vec<History> = hs.iter().map(|h| History::new(h.clone())).collect();
                FiniteEvent::from_histories(space, &hs)?
            }
            FiniteSet::Cylinder(slots) => FiniteEvent::cylinder(space, slots)?,
        };
        events.push((def.name.clone(), e));
    }
    for k in 0..f.random_events {
        let r = need_rng(rng)?;
        let idx: Vec<usize> = (0..space.size()).filter(|_| r.random_bool(0.5)).collect();
        events.push((format!("random{}", k + 1), FiniteEvent::from_indices(space, idx)?));
    }
    Ok(FiniteModel { system, events })
}

fn check_axioms(
    f: &FiniteScenario,
    rng: &mut Option<ChaCha8Rng>,
    tol: f64,
    report: &mut Report,
) -> Result<(), CliError> {
    let model = build_finite(f, rng)?;
    if model.events.is_empty() {
        return Err(CliError::usage("the scenario defines no events to check"));
    }
    for (k, u) in model.system.schedule().steps().iter().enumerate() {
        report.push(Record::at_most(format!("unitarity step {}", k + 1), unitarity_defect(u), tol));
    }
    let events: Vec<FiniteEvent> = model.events.iter().map(|(_, e)| e.clone()).collect();
    let axioms = verify_system_axioms(&model.system, &events, tol)?;
    report.push(Record::at_most("hermiticity", axioms.hermiticity, tol));
    report.push(Record::at_most("bi-additivity", axioms.bi_additivity, tol));
    report.push(Record::at_most("sum rule", axioms.sum_rule, tol));
    report.push(
        Record::at_most("normalization", axioms.normalization, tol).with_note("|D(Ω,Ω) − 1|"),
    );
    report.push(
        Record::at_least_minus("positivity", axioms.min_eigenvalue, tol).with_note("smallest Gram eigenvalue"),
    );
    report.push(Record::info("disjoint pairs", axioms.pairs_checked as f64));
    report.push(Record::info("disjoint triples", axioms.triples_checked as f64));
    for (name, e) in &model.events {
        report.push(Record::info(format!("μ({name})"), model.system.quantal_measure(e)?));
    }
    Ok(())
}

fn gns(
    f: &FiniteScenario,
    rng: &mut Option<ChaCha8Rng>,
    tol: f64,
    rank_tol: f64,
    report: &mut Report,
) -> Result<(), CliError> {
    let model = build_finite(f, rng)?;
    let system = &model.system;
    let dim = HistoryHilbertSpace::singletons(system, rank_tol)?.rank();
    report.push(Record::info("configurations", f.n as f64));
    report.push(Record::info("initial rank", system.initial().rank() as f64));
    report.push(Record::info("dim H₂", dim as f64).with_tolerance(rank_tol).with_note("relative rank tolerance"));
    if let Some(expected) = f.expect_dim {
        report.push(Record {
            name: "dim H₂ = expected".into(),
            value: dim as f64,
            tolerance: Some(0.0),
            status: if dim == expected { Status::Pass } else { Status::Fail },
            note: format!("expected {expected}"),
        });
    }
    match system.initial() {
        InitialCondition::Mixed(_) => {
            report.push(Record::info("onto witness", 0.0).with_note("not defined for mixed states"));
        }
        InitialCondition::Pure(_) => match onto_witness_for(system, WITNESS_TOL)? {
            OntoOutcome::Onto(w) => {
                report.push(Record::info("onto witness", 1.0).with_note("found"));
                report.push(Record::flag("dim H₂ = n", dim == f.n, "f₀ is onto"));
                let phi = system.lifted(&FiniteEvent::full(system.space()))?;
                let u = invert_via_witness(&phi, &w)?;
                let res = (f0_map(&u, system)? - &phi).norm();
                report.push(Record::at_most("witness inversion", res, tol).with_note("target f₀(δ_Ω)"));
            }
            OntoOutcome::NotOnto { unreachable } => {
                report.push(
                    Record::info("onto witness", 0.0)
                        .with_note(format!("unreachable final configurations {}", fmt_configs(&unreachable))),
                );
            }
        },
    }
    Ok(())
}

fn onto(
    f: &FiniteScenario,
    rng: &mut Option<ChaCha8Rng>,
    tol: f64,
    report: &mut Report,
) -> Result<(), CliError> {
    let model = build_finite(f, rng)?;
    let system = &model.system;
    match onto_witness_for(system, WITNESS_TOL)? {
        OntoOutcome::NotOnto { unreachable } => {
            report.push(Record::flag(
                "onto",
                false,
                format!("unreachable final configurations {}", fmt_configs(&unreachable)),
            ));
        }
        OntoOutcome::Onto(w) => {
            report.push(Record::flag("onto", true, "every final configuration reached"));
            for (j, (h, a)) in w.histories().iter().zip(w.amplitudes()).enumerate() {
                report.push(
                    Record::info(format!("witness for config {}", j + 1), a.norm())
                        .with_note(format!("history {}", fmt_configs(h.configs()))),
                );
            }
            if f.onto_targets > 0 {
                let r = need_rng(rng)?;
                let mut worst = 0f64;
                for _ in 0..f.onto_targets {
                    let phi: DVector<C64> = random_unit_vector(f.n, r);
                    let u = invert_via_witness(&phi, &w)?;
                    worst = worst.max((f0_map(&u, system)? - &phi).norm());
                }
                report.push(
                    Record::at_most("inversion residual", worst, tol)
                        .with_note(format!("max over {} random unit targets", f.onto_targets)),
                );
            }
        }
    }
    Ok(())
}

// --------------------------------------------------------------- interference

/// Index subsets of size 2 and 3.
fn pairs_and_triples(m: usize) -> (Vec<[usize; 2]>, Vec<[usize; 3]>) {
    let mut pairs = Vec::new();
    let mut triples = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            pairs.push([i, j]);
            for k in j + 1..m {
                triples.push([i, j, k]);
            }
        }
    }
    (pairs, triples)
}

/// Records from the Gram `D` of single events and the measures of their
/// pairwise and triple unions.
fn interference_records(
    names: &[String],
    gram: &DMatrix<C64>,
    pair_mu: &[f64],
    triple_mu: &[f64],
    tol: f64,
    report: &mut Report,
) {
    let m = names.len();
    let herm = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| (gram[(i, j)] - gram[(j, i)].conj()).norm())
        .fold(0.0, f64::max);
    report.push(Record::at_most("hermiticity", herm, tol));
    let (eig, _) = hermitian_eigen(gram);
    let min = eig.last().copied().unwrap_or(0.0);
    report.push(Record::at_least_minus("positivity", min, tol).with_note("smallest eigenvalue of D"));
    let mu: Vec<f64> = (0..m).map(|i| gram[(i, i)].re).collect();
    for (name, v) in names.iter().zip(&mu) {
        report.push(Record::info(format!("μ({name})"), *v));
    }
    let (pairs, triples) = pairs_and_triples(m);
    let mut violations = 0;
    for ([i, j], u) in pairs.iter().zip(pair_mu) {
        let i2 = u - mu[*i] - mu[*j];
        let violated = i2.abs() > tol;
        violations += violated as usize;
        let note = if violated {
            "violates the classical sum rule"
        } else {
            "classical sum rule holds"
        };
        report.push(
            Record::info(format!("I₂({},{})", names[*i], names[*j]), i2)
                .with_tolerance(tol)
                .with_note(note),
        );
    }
    for (&[i, j, k], u) in triples.iter().zip(triple_mu) {
        let pij = pairs.iter().position(|p| *p == [i, j]).unwrap();
        let pik = pairs.iter().position(|p| *p == [i, k]).unwrap();
        let pjk = pairs.iter().position(|p| *p == [j, k]).unwrap();
        let i3 = u - pair_mu[pij] - pair_mu[pik] - pair_mu[pjk] + mu[i] + mu[j] + mu[k];
        report.push(
            Record::at_most(format!("|I₃({},{},{})|", names[i], names[j], names[k]), i3.abs(), tol)
                .with_note("quantal sum rule"),
        );
    }
    report.push(
        Record::info("classical sum rule violations", violations as f64)
            .with_note(format!("of {} pairs", pairs.len())),
    );
}

fn check_interference_count(m: usize) -> Result<(), CliError> {
    if m < 2 {
        return Err(CliError::usage("interference needs at least two events"));
    }
    if m > MAX_INTERFERENCE_EVENTS {
        return Err(CliError::usage(format!(
            "interference takes at most {MAX_INTERFERENCE_EVENTS} events, got {m}"
        )));
    }
    Ok(())
}

fn finite_interference(
    f: &FiniteScenario,
    rng: &mut Option<ChaCha8Rng>,
    tol: f64,
    report: &mut Report,
) -> Result<(), CliError> {
    let model = build_finite(f, rng)?;
    let m = model.events.len();
    check_interference_count(m)?;
    let ev: Vec<&FiniteEvent> = model.events.iter().map(|(_, e)| e).collect();
    for i in 0..m {
        for j in i + 1..m {
            if !ev[i].is_disjoint(ev[j])? {
                return Err(CliError::usage(format!(
                    "events `{}` and `{}` overlap",
                    model.events[i].0, model.events[j].0
                )));
            }
        }
    }
    let sys = &model.system;
    let gram = DMatrix::from_fn(m, m, |i, j| sys.decoherence(ev[i], ev[j]).expect("same space"));
    let (pairs, triples) = pairs_and_triples(m);
    let pair_mu = pairs
        .iter()
        .map(|&[i, j]| sys.quantal_measure(&ev[i].union(ev[j])?))
        .collect::<Result<Vec<_>, _>>()?;
    let triple_mu = triples
        .iter()
        .map(|&[i, j, k]| sys.quantal_measure(&ev[i].union(ev[j])?.union(ev[k])?))
        .collect::<Result<Vec<_>, _>>()?;
    let names: Vec<String> = model.events.iter().map(|(n, _)| n.clone()).collect();
    interference_records(&names, &gram, &pair_mu, &triple_mu, tol, report);
    Ok(())
}

// ----------------------------------------------------------- continuum model

fn propagator(c: &ContinuumScenario) -> Result<PropagatorSpec, CliError> {
    let p = &c.propagator;
    let kind = match &p.kind {
        PropagatorKindDef::Free => PropagatorKind::Free,
        PropagatorKindDef::Oscillator { omega } => PropagatorKind::Oscillator { omega: *omega },
        PropagatorKindDef::VectorPotential { charge, potential } => PropagatorKind::VectorPotential {
            charge: *charge,
            potential: potential.clone(),
        },
        PropagatorKindDef::HalfLine => PropagatorKind::HalfLine,
    };
    Ok(PropagatorSpec::new(kind, p.dim, p.mass, p.hbar)?)
}

fn initial_state(c: &ContinuumScenario) -> Result<InitialState, CliError> {
    Ok(match &c.state {
        StateDef::Gaussian {
            center,
            sigma,
            momentum,
        } => InitialState::gaussian(center.clone(), *sigma, momentum.clone())?,
        StateDef::HalfLineOdd { sigma } => InitialState::half_line_odd(*sigma)?,
    })
}

fn ladder(c: &ContinuumScenario) -> Result<ConvergenceLadder, CliError> {
    Ok(ConvergenceLadder::new(
        c.quadrature.ladder.clone(),
        c.quadrature.ladder_tolerance,
    )?)
}

fn evolver(c: &ContinuumScenario) -> Result<Evolver, CliError> {
    let mut e = Evolver::new(propagator(c)?)
        .with_order(c.quadrature.order)
        .with_panel_phase(c.quadrature.panel_phase)
        .with_ladder(ladder(c)?);
    if let Some(l) = c.quadrature.half_width {
        e = e.with_half_width(l);
    }
    Ok(e)
}

fn to_interval(b: &BoxDef) -> Result<Interval, CliError> {
    Ok(Interval::new(
        b.iter().map(|s| s.0).collect(),
        b.iter().map(|s| s.1).collect(),
    )?)
}

fn to_region(r: &RegionDef) -> Result<Region, CliError> {
    Ok(match r {
        RegionDef::Full => Region::Full,
        RegionDef::Empty => Region::empty(),
        RegionDef::Union(bs) => bs
            .iter()
            .map(|b| to_interval(b).map(Region::boxed))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(Region::empty(), |acc, r| acc.union(&r)),
        RegionDef::ComplementOf(bs) => {
            Region::complement_of(bs.iter().map(to_interval).collect::<Result<Vec<_>, _>>()?)
        }
    })
}

fn continuum_events(c: &ContinuumScenario) -> Result<Vec<(String, ContinuumEvent)>, CliError> {
    c.events
        .iter()
        .map(|def| {
            let parts = def
                .parts
                .iter()
                .map(|p| {
                    let regions = p.regions.iter().map(to_region).collect::<Result<Vec<_>, _>>()?;
                    Ok(HomogeneousEvent::new(c.propagator.dim, p.times.clone(), regions)?)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok((def.name.clone(), ContinuumEvent::new(parts)?))
        })
        .collect()
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn esck(c: &ContinuumScenario, tol: f64, report: &mut Report) -> Result<(), CliError> {
    let spec = propagator(c)?;
    let ladder = ladder(c)?;
    let quad = EsckQuadrature::default();
    let dim = c.propagator.dim;
    let def = c.esck.clone().unwrap_or_else(|| EsckDef {
        times: [0.0, 0.5, 1.0],
        x3: DEFAULT_ESCK_POINTS.iter().map(|&x| vec![x; dim]).collect(),
        x1: DEFAULT_ESCK_POINTS.iter().map(|&x| vec![x; dim]).collect(),
    });
    let [t1, t2, t3] = def.times;
    let jobs: Vec<(&Vec<f64>, &Vec<f64>)> =
        def.x3.iter().flat_map(|a| def.x1.iter().map(move |b| (a, b))).collect();
    let results = jobs
        .par_iter()
        .map(|(x3, x1)| check_esck(&spec, x3, t3, x1, t1, t2, &ladder, &quad))
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst = 0f64;
    for ((x3, x1), r) in jobs.iter().zip(&results) {
        worst = worst.max(r.residual);
        report.push(
            Record::at_most(format!("K x3={} x1={}", fmt_point(x3), fmt_point(x1)), r.residual, tol)
                .with_note(format!("extrapolation {:.2e}", r.extrapolation_residual)),
        );
    }
    report.push(Record::info("max residual", worst).with_tolerance(tol));
    Ok(())
}

fn reconstruct(c: &ContinuumScenario, tol: Option<f64>, report: &mut Report) -> Result<(), CliError> {
    let def = c
        .reconstruct
        .as_ref()
        .ok_or_else(|| CliError::usage("the scenario has no [reconstruct] section"))?;
    let eps = tol.unwrap_or(def.epsilon);
    let spec = propagator(c)?;
    let psi = initial_state(c)?;
    let params = Lemma4Params {
        time: def.time,
        ..Lemma4Params::default()
    };
    let result = match def.terms.as_slice() {
        [((a, b), w)] if *w == C64::new(1.0, 0.0) => {
            lemma4_reconstruct(&Interval::closed(*a, *b)?, eps, &psi, &spec, &params)
        }
        terms => {
            let terms = terms
                .iter()
                .map(|((a, b), w)| Ok((Interval::closed(*a, *b)?, *w)))
                .collect::<Result<Vec<_>, CliError>>()?;
            reconstruct_step_function(&terms, eps, &psi, &spec, &params)
        }
    };
    match result {
        Ok(rec) => {
            report.push(Record::at_most("L² error", rec.error, eps).with_note("‖S − f₀(u)‖ by quadrature"));
            report.push(Record::info("cells", rec.cells as f64));
            report.push(Record::info("events", rec.u.support_len() as f64));
            report.push(Record::info("cover pieces", rec.cover.len() as f64));
            report.push(Record::info("P bound", rec.p_bound));
            report.push(Record::info("widest cell", rec.delta));
            report.push(Record::info("target norm", rec.target));
        }
        Err(qmeasure::Error::HypothesisFailure { point, reason }) => {
            report.push(Record::flag(
                "nonvanishing propagator",
                false,
                format!("fails at x = {}: {reason}", fmt_point(&point)),
            ));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn continuum_interference(c: &ContinuumScenario, tol: f64, report: &mut Report) -> Result<(), CliError> {
    let events = continuum_events(c)?;
    let m = events.len();
    check_interference_count(m)?;
    for i in 0..m {
        for j in i + 1..m {
            if !events[i].1.is_disjoint(&events[j].1) {
                return Err(CliError::usage(format!(
                    "events `{}` and `{}` overlap",
                    events[i].0, events[j].0
                )));
            }
        }
    }
    let (pairs, triples) = pairs_and_triples(m);
    let mut all: Vec<ContinuumEvent> = events.iter().map(|(_, e)| e.clone()).collect();
    for &[i, j] in &pairs {
        all.push(events[i].1.union(&events[j].1)?);
    }
    for &[i, j, k] in &triples {
        all.push(events[i].1.union(&events[j].1)?.union(&events[k].1)?);
    }
    let psi = initial_state(c)?;
    let full = evolver(c)?.decoherence_matrix(&psi, &all)?;
    let gram = full.view((0, 0), (m, m)).into_owned();
    let pair_mu: Vec<f64> = (0..pairs.len()).map(|p| full[(m + p, m + p)].re).collect();
    let off = m + pairs.len();
    let triple_mu: Vec<f64> = (0..triples.len()).map(|t| full[(off + t, off + t)].re).collect();
    let names: Vec<String> = events.iter().map(|(n, _)| n.clone()).collect();
    interference_records(&names, &gram, &pair_mu, &triple_mu, tol, report);
    Ok(())
}
