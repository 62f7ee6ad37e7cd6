//! Plain-text scenario files.
//!
//! A scenario is a sequence of lines. `#` starts a comment, top-level
//! `key = value` lines come first, and `[section]` headers open sections
//! whose `key = value` lines follow. Sections that describe list items
//! (`[unitary]`, `[event]`) may repeat. Complex numbers are written `re,im`,
//! list entries are separated by whitespace and finite configurations are
//! 1-based.
//!
//! ```text
//! system = finite
//! seed = 1
//!
//! [finite]
//! n = 2
//! N = 3
//! dynamics = explicit
//!
//! [unitary]
//! row = 0.7071067811865476,0 0.7071067811865476,0
//! row = 0.7071067811865476,0 -0.7071067811865476,0
//! ```
//!
//! [`Scenario::to_text`] writes the canonical form: every field spelled out,
//! fixed key order, no comments. Parsing a canonical file and writing it back
//! reproduces it byte for byte.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: Option<u64>,
    pub system: System,
}

#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Finite(FiniteScenario),
    Continuum(ContinuumScenario),
}

pub type Matrix = Vec<Vec<C64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteScenario {
    pub n: usize,
    pub times: Vec<f64>,
    pub dynamics: Dynamics,
    pub initial: Initial,
    pub events: Vec<FiniteEventDef>,
    /// Extra seeded events, each history kept with probability 1/2.
    pub random_events: usize,
    pub expect_dim: Option<usize>,
    pub onto_targets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// One row-major matrix per step.
    Explicit(Vec<Matrix>),
    Haar,
    Trivial,
    Hopping { theta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    State(Vec<C64>),
    /// 0-based basis vector.
    Basis(usize),
    Random,
    Density(Matrix),
    RandomDensity { rank: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteEventDef {
    pub name: String,
    pub set: FiniteSet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FiniteSet {
    Full,
    Empty,
    /// 0-based configuration lists.
    Histories(Vec<Vec<usize>>),
    /// Per slot, `None` for any configuration.
    Cylinder(Vec<Option<Vec<usize>>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumScenario {
    pub propagator: PropagatorDef,
    pub quadrature: QuadratureDef,
    pub state: StateDef,
    pub events: Vec<ContinuumEventDef>,
    pub esck: Option<EsckDef>,
    pub reconstruct: Option<ReconstructDef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorDef {
    pub kind: PropagatorKindDef,
    pub dim: usize,
    pub mass: f64,
    pub hbar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropagatorKindDef {
    Free,
    Oscillator { omega: f64 },
    VectorPotential { charge: f64, potential: Vec<f64> },
    HalfLine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDef {
    pub order: usize,
    pub panel_phase: f64,
    pub half_width: Option<f64>,
    pub ladder: Vec<f64>,
    pub ladder_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateDef {
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        momentum: Vec<f64>,
    },
    HalfLineOdd { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumEventDef {
    pub name: String,
    pub parts: Vec<PartDef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartDef {
    pub times: Vec<f64>,
    pub regions: Vec<RegionDef>,
}

/// Box given as per-axis `(lo, hi)` pairs.
pub type BoxDef = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub enum RegionDef {
    Full,
    Empty,
    Union(Vec<BoxDef>),
    ComplementOf(Vec<BoxDef>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsckDef {
    pub times: [f64; 3],
    pub x3: Vec<Vec<f64>>,
    pub x1: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructDef {
    pub time: f64,
    pub epsilon: f64,
    /// Weighted intervals; a single unit-weight term is one interval.
    pub terms: Vec<((f64, f64), C64)>,
}

pub const DEFAULT_LADDER: [f64; 5] = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4];
pub const DEFAULT_LADDER_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_ESCK_POINTS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
    used: Vec<bool>,
}

impl Section {
    fn new(name: &str, line: usize) -> Self {
        Section {
            name: name.to_string(),
            line,
            entries: Vec::new(),
            used: Vec::new(),
        }
    }

    fn push(&mut self, e: Entry) {
        self.entries.push(e);
        self.used.push(false);
    }

    /// The single value of `key`, if present.
    fn get(&mut self, key: &str) -> Result<Option<(String, usize)>, CliError> {
        let mut found = None;
        for (i, e) in self.entries.iter().enumerate() {
            if e.key == key {
                if found.is_some() {
                    return Err(CliError::parse(e.line, format!("duplicate key `{key}`")));
                }
                found = Some((e.value.clone(), e.line));
                self.used[i] = true;
            }
        }
        Ok(found)
    }

    fn require(&mut self, key: &str) -> Result<(String, usize), CliError> {
        self.get(key)?.ok_or_else(|| {
            CliError::parse(self.line, format!("[{}] needs `{key}`", self.name))
        })
    }

    fn all(&mut self, key: &str) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.key == key {
                out.push((e.value.clone(), e.line));
                self.used[i] = true;
            }
        }
        out
    }

    fn finish(&self) -> Result<(), CliError> {
        match self.entries.iter().zip(&self.used).find(|(_, u)| !**u) {
            Some((e, _)) => Err(CliError::parse(
                e.line,
                format!("unknown key `{}` in [{}]", e.key, self.name),
            )),
            None => Ok(()),
        }
    }
}

fn lex(text: &str) -> Result<Vec<Section>, CliError> {
    // The unnamed first section holds the top-level keys.
    let mut sections = vec![Section::new("", 1)];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::parse(line, "unterminated section header"))?
                .trim();
            if name.is_empty() {
                return Err(CliError::parse(line, "empty section name"));
            }
            sections.push(Section::new(name, line));
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| CliError::parse(line, format!("expected `key = value`, got `{body}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::parse(line, "missing key"));
        }
        sections.last_mut().expect("root section").push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

// ------------------------------------------------------------ value parsing

fn parse_f64(s: &str, line: usize) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::parse(line, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::parse(line, format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn parse_usize(s: &str, line: usize) -> Result<usize, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::parse(line, format!("`{s}` is not a non-negative integer")))
}

fn parse_f64_list(s: &str, line: usize) -> Result<Vec<f64>, CliError> {
    s.split_whitespace().map(|t| parse_f64(t, line)).collect()
}

fn parse_complex(s: &str, line: usize) -> Result<C64, CliError> {
    match s.split_once(',') {
        Some((re, im)) => Ok(C64::new(parse_f64(re, line)?, parse_f64(im, line)?)),
        None => Ok(C64::new(parse_f64(s, line)?, 0.0)),
    }
}

fn parse_complex_row(s: &str, line: usize) -> Result<Vec<C64>, CliError> {
    s.split_whitespace().map(|t| parse_complex(t, line)).collect()
}

/// 1-based configuration list to 0-based.
fn parse_configs(s: &str, n: usize, line: usize) -> Result<Vec<usize>, CliError> {
    s.split_whitespace()
        .map(|t| {
            let k = parse_usize(t, line)?;
            if k == 0 || k > n {
                return Err(CliError::parse(line, format!("configuration {k} outside 1..={n}")));
            }
            Ok(k - 1)
        })
        .collect()
}

fn parse_matrix(rows: &[(String, usize)], n: usize, what: &str, at: usize) -> Result<Matrix, CliError> {
    if rows.len() != n {
        return Err(CliError::parse(at, format!("{what} needs {n} rows, got {}", rows.len())));
    }
    rows.iter()
        .map(|(r, line)| {
            let row = parse_complex_row(r, *line)?;
            if row.len() != n {
                return Err(CliError::parse(*line, format!("{what} row has {} entries, expected {n}", row.len())));
            }
            Ok(row)
        })
        .collect()
}

fn parse_box(s: &str, dim: usize, line: usize) -> Result<BoxDef, CliError> {
    let axes: Vec<&str> = s.split('x').collect();
    if axes.len() != dim {
        return Err(CliError::parse(line, format!("box `{s}` has {} axes, expected {dim}", axes.len())));
    }
    axes.iter()
        .map(|a| {
            let inner = a
                .trim()
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| CliError::parse(line, format!("expected `[lo,hi]`, got `{a}`")))?;
            let (lo, hi) = inner
                .split_once(',')
                .ok_or_else(|| CliError::parse(line, format!("expected `[lo,hi]`, got `{a}`")))?;
            let (lo, hi) = (parse_f64(lo, line)?, parse_f64(hi, line)?);
            if lo > hi {
                return Err(CliError::parse(line, format!("box side `{a}` has lo > hi")));
            }
            Ok((lo, hi))
        })
        .collect()
}

fn parse_region(s: &str, dim: usize, line: usize) -> Result<RegionDef, CliError> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    match s.as_str() {
        "full" => return Ok(RegionDef::Full),
        "empty" => return Ok(RegionDef::Empty),
        _ => {}
    }
    let (complement, body) = match s.strip_prefix('~') {
        Some(rest) => (true, rest),
        None => (false, s.as_str()),
    };
    let boxes = body
        .split('+')
        .map(|b| parse_box(b, dim, line))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(if complement {
        RegionDef::ComplementOf(boxes)
    } else {
        RegionDef::Union(boxes)
    })
}

fn parse_part(s: &str, dim: usize, line: usize) -> Result<PartDef, CliError> {
    let (times, regions) = s
        .split_once('|')
        .ok_or_else(|| CliError::parse(line, "expected `times | region; region; ...`"))?;
    let times = parse_f64_list(times, line)?;
    let regions = regions
        .split(';')
        .map(|r| parse_region(r, dim, line))
        .collect::<Result<Vec<_>, _>>()?;
    if times.len() != regions.len() {
        return Err(CliError::parse(
            line,
            format!("{} times but {} regions", times.len(), regions.len()),
        ));
    }
    Ok(PartDef { times, regions })
}

fn parse_point_list(s: &str, dim: usize, line: usize) -> Result<Vec<Vec<f64>>, CliError> {
    s.split(';')
        .map(|p| {
            let v = parse_f64_list(p, line)?;
            if v.len() != dim {
                return Err(CliError::parse(line, format!("point `{}` needs {dim} coordinates", p.trim())));
            }
            Ok(v)
        })
        .collect()
}

// ------------------------------------------------------------------ parsing

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut sections = lex(text)?;
        let mut root = sections.remove(0);
        let seed = match root.get("seed")? {
            Some((v, line)) => Some(
                v.parse::<u64>()
                    .map_err(|_| CliError::parse(line, format!("seed `{v}` is not an unsigned integer")))?,
            ),
            None => None,
        };
        let (kind, kind_line) = root.require("system")?;
        root.finish()?;
        let system = match kind.as_str() {
            "finite" => System::Finite(parse_finite(&mut sections)?),
            "continuum" => System::Continuum(parse_continuum(&mut sections)?),
            other => {
                return Err(CliError::parse(
                    kind_line,
                    format!("system must be `finite` or `continuum`, got `{other}`"),
                ))
            }
        };
        if let Some(s) = sections.first() {
            return Err(CliError::parse(s.line, format!("unexpected section [{}]", s.name)));
        }
        Ok(Scenario { seed, system })
    }

    /// SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// Whether running the scenario draws random numbers.
    pub fn uses_randomness(&self) -> bool {
        match &self.system {
            System::Finite(f) => {
                matches!(f.dynamics, Dynamics::Haar)
                    || matches!(f.initial, Initial::Random | Initial::RandomDensity { .. })
                    || f.random_events > 0
            }
            System::Continuum(_) => false,
        }
    }
}

/// Removes and returns every section called `name`, in file order.
fn take(sections: &mut Vec<Section>, name: &str) -> Vec<Section> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sections.len() {
        if sections[i].name == name {
            out.push(sections.remove(i));
        } else {
            i += 1;
        }
    }
    out
}

fn take_one(sections: &mut Vec<Section>, name: &str) -> Result<Option<Section>, CliError> {
    let mut found = take(sections, name);
    if found.len() > 1 {
        return Err(CliError::parse(found[1].line, format!("section [{name}] given twice")));
    }
    Ok(found.pop())
}

fn require_section(sections: &mut Vec<Section>, name: &str) -> Result<Section, CliError> {
    take_one(sections, name)?
        .ok_or_else(|| CliError::parse(1, format!("missing section [{name}]")))
}

fn check_name(names: &mut Vec<String>, name: &str, line: usize) -> Result<(), CliError> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
        return Err(CliError::parse(line, format!("event name `{name}` must be one word")));
    }
    if names.iter().any(|n| n == name) {
        return Err(CliError::parse(line, format!("event `{name}` defined twice")));
    }
    names.push(name.to_string());
    Ok(())
}

fn parse_finite(sections: &mut Vec<Section>) -> Result<FiniteScenario, CliError> {
    let mut sec = require_section(sections, "finite")?;
    let (n, n_line) = sec.require("n")?;
    let n = parse_usize(&n, n_line)?;
    if n == 0 {
        return Err(CliError::parse(n_line, "n must be positive"));
    }
    let times = match (sec.get("N")?, sec.get("times")?) {
        (Some((big, line)), None) => {
            let big = parse_usize(&big, line)?;
            (0..big).map(|k| k as f64).collect::<Vec<_>>()
        }
        (big, Some((t, line))) => {
            let times = parse_f64_list(&t, line)?;
            if let Some((big, bl)) = big {
                if parse_usize(&big, bl)? != times.len() {
                    return Err(CliError::parse(line, "N disagrees with the number of times"));
                }
            }
            times
        }
        (None, None) => return Err(CliError::parse(sec.line, "[finite] needs `N` or `times`")),
    };
    if times.len() < 2 {
        return Err(CliError::parse(sec.line, "a finite system needs at least 2 times"));
    }
    let (dyn_kind, dyn_line) = sec.require("dynamics")?;
    let theta = sec.get("theta")?;
    let dynamics = match dyn_kind.as_str() {
        "explicit" => {
            let mut steps = Vec::new();
            for mut u in take(sections, "unitary") {
                let rows = u.all("row");
                steps.push(parse_matrix(&rows, n, "unitary", u.line)?);
                u.finish()?;
            }
            if steps.len() + 1 != times.len() {
                return Err(CliError::parse(
                    dyn_line,
                    format!("{} times need {} [unitary] sections, got {}", times.len(), times.len() - 1, steps.len()),
                ));
            }
            Dynamics::Explicit(steps)
        }
        "haar" => Dynamics::Haar,
        "trivial" => Dynamics::Trivial,
        "hopping" => {
            let (t, line) = theta
                .clone()
                .ok_or_else(|| CliError::parse(dyn_line, "hopping dynamics needs `theta`"))?;
            Dynamics::Hopping {
                theta: parse_f64(&t, line)?,
            }
        }
        other => {
            return Err(CliError::parse(
                dyn_line,
                format!("dynamics must be explicit, haar, trivial or hopping, got `{other}`"),
            ))
        }
    };
    if let (Some((_, line)), false) = (&theta, matches!(dynamics, Dynamics::Hopping { .. })) {
        return Err(CliError::parse(*line, "`theta` only applies to hopping dynamics"));
    }
    if !matches!(dynamics, Dynamics::Explicit(_)) {
        if let Some(u) = take(sections, "unitary").first() {
            return Err(CliError::parse(u.line, "[unitary] needs `dynamics = explicit`"));
        }
    }
    let expect_dim = match sec.get("expect_dim")? {
        Some((v, line)) => Some(parse_usize(&v, line)?),
        None => None,
    };
    let onto_targets = match sec.get("onto_targets")? {
        Some((v, line)) => parse_usize(&v, line)?,
        None => 10,
    };
    let random_events = match sec.get("random_events")? {
        Some((v, line)) => parse_usize(&v, line)?,
        None => 0,
    };
    sec.finish()?;

    let mut init = require_section(sections, "initial")?;
    let (kind, kind_line) = init.require("kind")?;
    let initial = match kind.as_str() {
        "state" => {
            let (a, line) = init.require("amplitudes")?;
            let amps = parse_complex_row(&a, line)?;
            if amps.len() != n {
                return Err(CliError::parse(line, format!("state has {} amplitudes, expected {n}", amps.len())));
            }
            Initial::State(amps)
        }
        "basis" => {
            let (k, line) = init.require("index")?;
            Initial::Basis(parse_configs(&k, n, line)?.first().copied().ok_or_else(|| {
                CliError::parse(line, "basis index missing")
            })?)
        }
        "random" => Initial::Random,
        "density" => {
            let rows = init.all("row");
            Initial::Density(parse_matrix(&rows, n, "density matrix", init.line)?)
        }
        "random_density" => {
            let (r, line) = init.require("rank")?;
            let rank = parse_usize(&r, line)?;
            if rank == 0 || rank > n {
                return Err(CliError::parse(line, format!("rank must lie in 1..={n}")));
            }
            Initial::RandomDensity { rank }
        }
        other => {
            return Err(CliError::parse(
                kind_line,
                format!("initial kind must be state, basis, random, density or random_density, got `{other}`"),
            ))
        }
    };
    init.finish()?;

    let mut names = Vec::new();
    let mut events = Vec::new();
    for mut ev in take(sections, "event") {
        let (name, name_line) = ev.require("name")?;
        check_name(&mut names, &name, name_line)?;
        let forms = [ev.get("set")?, ev.get("histories")?, ev.get("cylinder")?];
        let set = match forms {
            [Some((s, line)), None, None] => match s.as_str() {
                "full" => FiniteSet::Full,
                "empty" => FiniteSet::Empty,
                other => return Err(CliError::parse(line, format!("set must be full or empty, got `{other}`"))),
            },
            [None, Some((h, line)), None] => {
                let hs = if h.trim().is_empty() {
                    Vec::new()
                } else {
                    h.split(';')
                        .map(|one| {
                            let cfg = parse_configs(one, n, line)?;
                            if cfg.len() != times.len() {
                                return Err(CliError::parse(
                                    line,
                                    format!("history `{}` needs {} configurations", one.trim(), times.len()),
                                ));
                            }
                            Ok(cfg)
                        })
                        .collect::<Result<Vec<_>, _>>()?
                };
                FiniteSet::Histories(hs)
            }
            [None, None, Some((c, line))] => {
                let slots = c
                    .split(';')
                    .map(|slot| {
                        if slot.trim() == "*" {
                            Ok(None)
                        } else {
                            parse_configs(slot, n, line).map(Some)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if slots.len() != times.len() {
                    return Err(CliError::parse(line, format!("cylinder needs {} slots", times.len())));
                }
                FiniteSet::Cylinder(slots)
            }
            _ => {
                return Err(CliError::parse(
                    ev.line,
                    "an event needs exactly one of `set`, `histories`, `cylinder`",
                ))
            }
        };
        ev.finish()?;
        events.push(FiniteEventDef { name, set });
    }
    Ok(FiniteScenario {
        n,
        times,
        dynamics,
        initial,
        events,
        random_events,
        expect_dim,
        onto_targets,
    })
}

fn parse_continuum(sections: &mut Vec<Section>) -> Result<ContinuumScenario, CliError> {
    let mut p = require_section(sections, "propagator")?;
    let (kind, kind_line) = p.require("kind")?;
    let dim = match p.get("dim")? {
        Some((v, line)) => parse_usize(&v, line)?,
        None => 1,
    };
    if dim == 0 {
        return Err(CliError::parse(p.line, "dimension must be positive"));
    }
    let opt_f64 = |p: &mut Section, key: &str, default: f64| -> Result<f64, CliError> {
        match p.get(key)? {
            Some((v, line)) => parse_f64(&v, line),
            None => Ok(default),
        }
    };
    let mass = opt_f64(&mut p, "mass", 1.0)?;
    let hbar = opt_f64(&mut p, "hbar", 1.0)?;
    let kind = match kind.as_str() {
        "free" => PropagatorKindDef::Free,
        "oscillator" => {
            let (w, line) = p.require("omega")?;
            PropagatorKindDef::Oscillator {
                omega: parse_f64(&w, line)?,
            }
        }
        "vector_potential" => {
            let (q, ql) = p.require("charge")?;
            let (a, al) = p.require("potential")?;
            let potential = parse_f64_list(&a, al)?;
            if potential.len() != dim {
                return Err(CliError::parse(al, format!("potential needs {dim} components")));
            }
            PropagatorKindDef::VectorPotential {
                charge: parse_f64(&q, ql)?,
                potential,
            }
        }
        "half_line" => PropagatorKindDef::HalfLine,
        other => {
            return Err(CliError::parse(
                kind_line,
                format!("propagator must be free, oscillator, vector_potential or half_line, got `{other}`"),
            ))
        }
    };
    p.finish()?;
    let propagator = PropagatorDef {
        kind,
        dim,
        mass,
        hbar,
    };

    let quadrature = match take_one(sections, "quadrature")? {
        Some(mut q) => {
            let order = match q.get("order")? {
                Some((v, line)) => parse_usize(&v, line)?,
                None => qmeasure::continuum::DEFAULT_ORDER,
            };
            let panel_phase = opt_f64(&mut q, "panel_phase", qmeasure::continuum::DEFAULT_PANEL_PHASE)?;
            let half_width = match q.get("half_width")? {
                Some((v, line)) => Some(parse_f64(&v, line)?),
                None => None,
            };
            let ladder = match q.get("ladder")? {
                Some((v, line)) => parse_f64_list(&v, line)?,
                None => DEFAULT_LADDER.to_vec(),
            };
            let ladder_tolerance = opt_f64(&mut q, "ladder_tolerance", DEFAULT_LADDER_TOLERANCE)?;
            q.finish()?;
            QuadratureDef {
                order,
                panel_phase,
                half_width,
                ladder,
                ladder_tolerance,
            }
        }
        None => QuadratureDef {
            order: qmeasure::continuum::DEFAULT_ORDER,
            panel_phase: qmeasure::continuum::DEFAULT_PANEL_PHASE,
            half_width: None,
            ladder: DEFAULT_LADDER.to_vec(),
            ladder_tolerance: DEFAULT_LADDER_TOLERANCE,
        },
    };

    let mut s = require_section(sections, "state")?;
    let (family, fam_line) = s.require("family")?;
    let state = match family.as_str() {
        "gaussian" => {
            let center = match s.get("center")? {
                Some((v, line)) => parse_f64_list(&v, line)?,
                None => vec![0.0; dim],
            };
            let momentum = match s.get("momentum")? {
                Some((v, line)) => parse_f64_list(&v, line)?,
                None => vec![0.0; dim],
            };
            if center.len() != dim || momentum.len() != dim {
                return Err(CliError::parse(s.line, format!("centre and momentum need {dim} components")));
            }
            StateDef::Gaussian {
                center,
                sigma: opt_f64(&mut s, "sigma", 1.0)?,
                momentum,
            }
        }
        "half_line_odd" => StateDef::HalfLineOdd {
            sigma: opt_f64(&mut s, "sigma", 1.0)?,
        },
        other => {
            return Err(CliError::parse(
                fam_line,
                format!("state family must be gaussian or half_line_odd, got `{other}`"),
            ))
        }
    };
    s.finish()?;

    let mut names = Vec::new();
    let mut events = Vec::new();
    for mut ev in take(sections, "event") {
        let (name, name_line) = ev.require("name")?;
        check_name(&mut names, &name, name_line)?;
        let parts = ev
            .all("part")
            .iter()
            .map(|(v, line)| parse_part(v, dim, *line))
            .collect::<Result<Vec<_>, _>>()?;
        ev.finish()?;
        events.push(ContinuumEventDef { name, parts });
    }

    let esck = match take_one(sections, "esck")? {
        Some(mut e) => {
            let times = match e.get("times")? {
                Some((v, line)) => {
                    let t = parse_f64_list(&v, line)?;
                    <[f64; 3]>::try_from(t).map_err(|_| CliError::parse(line, "esck needs three times"))?
                }
                None => [0.0, 0.5, 1.0],
            };
            let default_points = || -> Vec<Vec<f64>> {
                DEFAULT_ESCK_POINTS.iter().map(|&x| vec![x; dim]).collect()
            };
            let x3 = match e.get("x3")? {
                Some((v, line)) => parse_point_list(&v, dim, line)?,
                None => default_points(),
            };
            let x1 = match e.get("x1")? {
                Some((v, line)) => parse_point_list(&v, dim, line)?,
                None => default_points(),
            };
            e.finish()?;
            Some(EsckDef { times, x3, x1 })
        }
        None => None,
    };

    let reconstruct = match take_one(sections, "reconstruct")? {
        Some(mut r) => {
            let time = opt_f64(&mut r, "time", 1.0)?;
            let (eps, el) = r.require("epsilon")?;
            let epsilon = parse_f64(&eps, el)?;
            let interval = r.get("interval")?;
            let term_lines = r.all("term");
            let terms = match (interval, term_lines.is_empty()) {
                (Some((v, line)), true) => match parse_f64_list(&v, line)?.as_slice() {
                    &[a, b] => vec![((a, b), C64::new(1.0, 0.0))],
                    _ => return Err(CliError::parse(line, "interval needs two endpoints")),
                },
                (None, false) => term_lines
                    .iter()
                    .map(|(v, line)| {
                        let (ab, w) = v
                            .split_once('|')
                            .ok_or_else(|| CliError::parse(*line, "expected `lo hi | re,im`"))?;
                        match parse_f64_list(ab, *line)?.as_slice() {
                            &[a, b] => Ok(((a, b), parse_complex(w.trim(), *line)?)),
                            _ => Err(CliError::parse(*line, "term needs two endpoints")),
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                _ => {
                    return Err(CliError::parse(
                        r.line,
                        "[reconstruct] needs either `interval` or one or more `term` lines",
                    ))
                }
            };
            r.finish()?;
            Some(ReconstructDef {
                time,
                epsilon,
                terms,
            })
        }
        None => None,
    };
    Ok(ContinuumScenario {
        propagator,
        quadrature,
        state,
        events,
        esck,
        reconstruct,
    })
}

// ------------------------------------------------------------ serializing

fn fmt_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x}")
    } else {
        format!("{x:?}")
    }
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ")
}

fn fmt_complex(z: C64) -> String {
    format!("{},{}", fmt_f64(z.re), fmt_f64(z.im))
}

fn fmt_row(row: &[C64]) -> String {
    row.iter().map(|&z| fmt_complex(z)).collect::<Vec<_>>().join(" ")
}

fn fmt_configs(cfg: &[usize]) -> String {
    cfg.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(" ")
}

fn fmt_box(b: &BoxDef) -> String {
    b.iter()
        .map(|(lo, hi)| format!("[{},{}]", fmt_f64(*lo), fmt_f64(*hi)))
        .collect::<Vec<_>>()
        .join("x")
}

fn fmt_region(r: &RegionDef) -> String {
    let boxes = |bs: &[BoxDef]| bs.iter().map(fmt_box).collect::<Vec<_>>().join("+");
    match r {
        RegionDef::Full => "full".into(),
        RegionDef::Empty => "empty".into(),
        RegionDef::Union(bs) => boxes(bs),
        RegionDef::ComplementOf(bs) => format!("~{}", boxes(bs)),
    }
}

impl Scenario {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let kind = match self.system {
            System::Finite(_) => "finite",
            System::Continuum(_) => "continuum",
        };
        writeln!(out, "system = {kind}").unwrap();
        if let Some(seed) = self.seed {
            writeln!(out, "seed = {seed}").unwrap();
        }
        match &self.system {
            System::Finite(f) => write_finite(&mut out, f),
            System::Continuum(c) => write_continuum(&mut out, c),
        }
        out
    }
}

fn write_finite(out: &mut String, f: &FiniteScenario) {
    writeln!(out, "\n[finite]").unwrap();
    writeln!(out, "n = {}", f.n).unwrap();
    writeln!(out, "N = {}", f.times.len()).unwrap();
    writeln!(out, "times = {}", fmt_list(&f.times)).unwrap();
    match &f.dynamics {
        Dynamics::Explicit(_) => writeln!(out, "dynamics = explicit").unwrap(),
        Dynamics::Haar => writeln!(out, "dynamics = haar").unwrap(),
        Dynamics::Trivial => writeln!(out, "dynamics = trivial").unwrap(),
        Dynamics::Hopping { theta } => {
            writeln!(out, "dynamics = hopping").unwrap();
            writeln!(out, "theta = {}", fmt_f64(*theta)).unwrap();
        }
    }
    writeln!(out, "random_events = {}", f.random_events).unwrap();
    if let Some(d) = f.expect_dim {
        writeln!(out, "expect_dim = {d}").unwrap();
    }
    writeln!(out, "onto_targets = {}", f.onto_targets).unwrap();
    if let Dynamics::Explicit(steps) = &f.dynamics {
        for u in steps {
            writeln!(out, "\n[unitary]").unwrap();
            for row in u {
                writeln!(out, "row = {}", fmt_row(row)).unwrap();
            }
        }
    }
    writeln!(out, "\n[initial]").unwrap();
    match &f.initial {
        Initial::State(a) => {
            writeln!(out, "kind = state").unwrap();
            writeln!(out, "amplitudes = {}", fmt_row(a)).unwrap();
        }
        Initial::Basis(k) => {
            writeln!(out, "kind = basis").unwrap();
            writeln!(out, "index = {}", k + 1).unwrap();
        }
        Initial::Random => writeln!(out, "kind = random").unwrap(),
        Initial::Density(m) => {
            writeln!(out, "kind = density").unwrap();
            for row in m {
                writeln!(out, "row = {}", fmt_row(row)).unwrap();
            }
        }
        Initial::RandomDensity { rank } => {
            writeln!(out, "kind = random_density").unwrap();
            writeln!(out, "rank = {rank}").unwrap();
        }
    }
    for ev in &f.events {
        writeln!(out, "\n[event]").unwrap();
        writeln!(out, "name = {}", ev.name).unwrap();
        match &ev.set {
            FiniteSet::Full => writeln!(out, "set = full").unwrap(),
            FiniteSet::Empty => writeln!(out, "set = empty").unwrap(),
            FiniteSet::Histories(hs) => {
                let body = hs.iter().map(|h| fmt_configs(h)).collect::<Vec<_>>().join("; ");
                writeln!(out, "histories = {body}").unwrap();
            }
            FiniteSet::Cylinder(slots) => {
                let body = slots
                    .iter()
                    .map(|s| match s {
                        None => "*".to_string(),
                        Some(cfg) => fmt_configs(cfg),
                    })
                    .collect::<Vec<_>>()
                    .join("; ");
                writeln!(out, "cylinder = {body}").unwrap();
            }
        }
    }
}

fn write_continuum(out: &mut String, c: &ContinuumScenario) {
    let p = &c.propagator;
    writeln!(out, "\n[propagator]").unwrap();
    match &p.kind {
        PropagatorKindDef::Free => writeln!(out, "kind = free").unwrap(),
        PropagatorKindDef::Oscillator { omega } => {
            writeln!(out, "kind = oscillator").unwrap();
            writeln!(out, "omega = {}", fmt_f64(*omega)).unwrap();
        }
        PropagatorKindDef::VectorPotential { charge, potential } => {
            writeln!(out, "kind = vector_potential").unwrap();
            writeln!(out, "charge = {}", fmt_f64(*charge)).unwrap();
            writeln!(out, "potential = {}", fmt_list(potential)).unwrap();
        }
        PropagatorKindDef::HalfLine => writeln!(out, "kind = half_line").unwrap(),
    }
    writeln!(out, "dim = {}", p.dim).unwrap();
    writeln!(out, "mass = {}", fmt_f64(p.mass)).unwrap();
    writeln!(out, "hbar = {}", fmt_f64(p.hbar)).unwrap();

    let q = &c.quadrature;
    writeln!(out, "\n[quadrature]").unwrap();
    writeln!(out, "order = {}", q.order).unwrap();
    writeln!(out, "panel_phase = {}", fmt_f64(q.panel_phase)).unwrap();
    if let Some(l) = q.half_width {
        writeln!(out, "half_width = {}", fmt_f64(l)).unwrap();
    }
    writeln!(out, "ladder = {}", fmt_list(&q.ladder)).unwrap();
    writeln!(out, "ladder_tolerance = {}", fmt_f64(q.ladder_tolerance)).unwrap();

    writeln!(out, "\n[state]").unwrap();
    match &c.state {
        StateDef::Gaussian {
            center,
            sigma,
            momentum,
        } => {
            writeln!(out, "family = gaussian").unwrap();
            writeln!(out, "center = {}", fmt_list(center)).unwrap();
            writeln!(out, "sigma = {}", fmt_f64(*sigma)).unwrap();
            writeln!(out, "momentum = {}", fmt_list(momentum)).unwrap();
        }
        StateDef::HalfLineOdd { sigma } => {
            writeln!(out, "family = half_line_odd").unwrap();
            writeln!(out, "sigma = {}", fmt_f64(*sigma)).unwrap();
        }
    }

    for ev in &c.events {
        writeln!(out, "\n[event]").unwrap();
        writeln!(out, "name = {}", ev.name).unwrap();
        for part in &ev.parts {
            let regions = part.regions.iter().map(fmt_region).collect::<Vec<_>>().join("; ");
            writeln!(out, "part = {} | {regions}", fmt_list(&part.times)).unwrap();
        }
    }

    if let Some(e) = &c.esck {
        let points = |ps: &[Vec<f64>]| ps.iter().map(|p| fmt_list(p)).collect::<Vec<_>>().join("; ");
        writeln!(out, "\n[esck]").unwrap();
        writeln!(out, "times = {}", fmt_list(&e.times)).unwrap();
        writeln!(out, "x3 = {}", points(&e.x3)).unwrap();
        writeln!(out, "x1 = {}", points(&e.x1)).unwrap();
    }

    if let Some(r) = &c.reconstruct {
        writeln!(out, "\n[reconstruct]").unwrap();
        writeln!(out, "time = {}", fmt_f64(r.time)).unwrap();
        writeln!(out, "epsilon = {}", fmt_f64(r.epsilon)).unwrap();
        match r.terms.as_slice() {
            [((a, b), w)] if *w == C64::new(1.0, 0.0) => {
                writeln!(out, "interval = {} {}", fmt_f64(*a), fmt_f64(*b)).unwrap();
            }
            terms => {
                for ((a, b), w) in terms {
                    writeln!(out, "term = {} {} | {}", fmt_f64(*a), fmt_f64(*b), fmt_complex(*w)).unwrap();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HADAMARD: &str = "\
system = finite
seed = 1

[finite]
n = 2
N = 3
times = 0 1 2
dynamics = explicit
random_events = 0
onto_targets = 10

[unitary]
row = 0.7071067811865476,0 0.7071067811865476,0
row = 0.7071067811865476,0 -0.7071067811865476,0

[unitary]
row = 0.7071067811865476,0 0.7071067811865476,0
row = 0.7071067811865476,0 -0.7071067811865476,0

[initial]
kind = basis
index = 1

[event]
name = up
cylinder = *; 1; *

[event]
name = paths
histories = 1 1 1; 1 2 1
";

    #[test]
    fn canonical_text_round_trips() {
        let s = Scenario::parse(HADAMARD).unwrap();
        assert_eq!(s.to_text(), HADAMARD);
        assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn configurations_are_one_based_in_files() {
        let s = Scenario::parse(HADAMARD).unwrap();
        let System::Finite(f) = &s.system else { panic!() };
        assert_eq!(f.initial, Initial::Basis(0));
        assert_eq!(f.events[1].set, FiniteSet::Histories(vec![vec![0, 0, 0], vec![0, 1, 0]]));
        assert_eq!(f.events[0].set, FiniteSet::Cylinder(vec![None, Some(vec![0]), None]));
    }

    #[test]
    fn comments_and_defaults_do_not_change_the_digest() {
        let a = Scenario::parse(HADAMARD).unwrap();
        let commented = HADAMARD.replace("n = 2", "n = 2   # two sites").replace("random_events = 0\n", "");
        let b = Scenario::parse(&commented).unwrap();
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = HADAMARD.replace("index = 1", "index = 3");
        match Scenario::parse(&bad) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 22),
            other => panic!("{other:?}"),
        }
        let unknown = HADAMARD.replace("onto_targets", "ontotargets");
        assert!(matches!(Scenario::parse(&unknown), Err(CliError::Parse { line: 10, .. })));
    }

    #[test]
    fn continuum_regions_parse() {
        let text = "system = continuum\n[propagator]\nkind = free\n[state]\nfamily = gaussian\n\
                    [event]\nname = a\npart = 0 1 2 | full; ~[-1,1]+[2,3]; [-0.5, 0.5]\n";
        let s = Scenario::parse(text).unwrap();
        let System::Continuum(c) = &s.system else { panic!() };
        assert_eq!(
            c.events[0].parts[0].regions[1],
            RegionDef::ComplementOf(vec![vec![(-1.0, 1.0)], vec![(2.0, 3.0)]])
        );
        let again = Scenario::parse(&s.to_text()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_text(), s.to_text());
    }
}
