use super::region::Region;
use super::TIME_EPS;
use crate::error::{Error, Result};

/// Cylinder set of trajectories `γ : [0,T] → ℝ^d` with `γ(t_k) ∈ α_k` for
/// every slot `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousEvent {
    dim: usize,
    times: Vec<f64>,
    regions: Vec<Region>,
}

/// Positions of one trajectory sampled at a list of times, used for
/// membership tests.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

impl SampledTrajectory {
    pub fn position_at(&self, t: f64) -> Option<&[f64]> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= TIME_EPS)
            .map(|i| self.positions[i].as_slice())
    }
}

impl HomogeneousEvent {
    pub fn new(dim: usize, times: Vec<f64>, regions: Vec<Region>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("dimension must be positive"));
        }
        if times.len() < 2 || times.len() != regions.len() {
            return Err(Error::usage(format!(
                "homogeneous event needs ≥ 2 slots with matching times ({} times, {} regions)",
                times.len(),
                regions.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::usage("first time of a homogeneous event must be 0"));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::usage(format!("times must increase strictly: {times:?}")));
        }
        for r in &regions {
            if let Some(d) = r.dim() {
                if d != dim {
                    return Err(Error::usage(format!(
                        "region of dimension {d} in a {dim}-dimensional event"
                    )));
                }
            }
        }
        Ok(HomogeneousEvent {
            dim,
            times,
            regions,
        })
    }

    /// The event `(ℝ^d, …, ℝ^d)`: every trajectory.
    pub fn full(dim: usize, times: Vec<f64>) -> Result<Self> {
        let regions = vec![Region::Full; times.len()];
        Self::new(dim, times, regions)
    }

    /// Two-time event `(initial, final)` on `(0, T)`.
    pub fn two_time(dim: usize, truncation: f64, initial: Region, last: Region) -> Result<Self> {
        Self::new(dim, vec![0.0, truncation], vec![initial, last])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn truncation_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.iter().any(Region::is_empty)
    }

    pub fn contains(&self, traj: &SampledTrajectory) -> bool {
        self.times.iter().zip(&self.regions).all(|(&t, r)| {
            let x = traj
                .position_at(t)
                .unwrap_or_else(|| panic!("trajectory not sampled at t = {t}"));
            r.contains(x)
        })
    }

    /// Re-expresses the event on a finer time tuple by inserting `ℝ^d` slots.
    pub fn pad_to(&self, times: &[f64]) -> Result<Self> {
        if (times.last().copied().unwrap_or(f64::NAN) - self.truncation_time()).abs() > TIME_EPS {
            return Err(Error::usage("padding must keep the truncation time"));
        }
        let mut regions = Vec::with_capacity(times.len());
        let mut own = 0;
        for &t in times {
            if own < self.times.len() && (self.times[own] - t).abs() <= TIME_EPS {
                regions.push(self.regions[own].clone());
                own += 1;
            } else {
                regions.push(Region::Full);
            }
        }
        if own != self.times.len() {
            return Err(Error::usage(format!(
                "time tuple {times:?} does not contain {:?}",
                self.times
            )));
        }
        Self::new(self.dim, times.to_vec(), regions)
    }

    /// Appends an `ℝ^d` slot so that the event ends at `t_end ≥ T`.
    pub fn extend_to(&self, t_end: f64) -> Result<Self> {
        let t = self.truncation_time();
        if (t_end - t).abs() <= TIME_EPS {
            return Ok(self.clone());
        }
        if t_end < t {
            return Err(Error::usage("cannot extend an event backwards in time"));
        }
        let mut times = self.times.clone();
        let mut regions = self.regions.clone();
        times.push(t_end);
        regions.push(Region::Full);
        Self::new(self.dim, times, regions)
    }

    /// Canonical representative: canonical regions, interior `ℝ^d` slots
    /// removed, and every empty event mapped to `(∅, ∅)` on `(0, T)`.
    pub fn canonical(&self) -> Self {
        let t_end = self.truncation_time();
        if self.is_empty() {
            return HomogeneousEvent {
                dim: self.dim,
                times: vec![0.0, t_end],
                regions: vec![Region::empty(), Region::empty()],
            };
        }
        let last = self.times.len() - 1;
        let mut times = Vec::new();
        let mut regions = Vec::new();
        for (k, (t, r)) in self.times.iter().zip(&self.regions).enumerate() {
            let r = r.canonical();
            if k == 0 || k == last || r != Region::Full {
                times.push(*t);
                regions.push(r);
            }
        }
        HomogeneousEvent {
            dim: self.dim,
            times,
            regions,
        }
    }

    /// Set equality of the underlying trajectory sets.
    pub fn same_set(&self, other: &Self) -> bool {
        self.dim == other.dim
            && (self.truncation_time() - other.truncation_time()).abs() <= TIME_EPS
            && self.canonical() == other.canonical()
    }

    /// Disjoint homogeneous pieces of the complement: every slot pattern of
    /// `α_k` / `α_k^c` except the all-`α_k` one, with empty pieces dropped.
    pub fn complement_pieces(&self) -> Vec<HomogeneousEvent> {
        let n = self.len();
        let complements: Vec<Region> = self.regions.iter().map(Region::complement).collect();
        let mut out = Vec::new();
        for mask in 1u64..(1u64 << n) {
            let regions: Vec<Region> = (0..n)
                .map(|k| {
                    if mask >> (n - 1 - k) & 1 == 1 {
                        complements[k].clone()
                    } else {
                        self.regions[k].clone()
                    }
                })
                .collect();
            if regions.iter().any(Region::is_empty) {
                continue;
            }
            out.push(HomogeneousEvent {
                dim: self.dim,
                times: self.times.clone(),
                regions,
            });
        }
        out
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        homogeneous_intersection(self, other).is_empty()
    }
}

fn merged_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|x, y| (*x - *y).abs() <= TIME_EPS);
    all
}

/// Re-expresses both events on the merged time tuple.
pub fn pad_to_common_times(
    a: &HomogeneousEvent,
    b: &HomogeneousEvent,
) -> Result<(HomogeneousEvent, HomogeneousEvent)> {
    if (a.truncation_time() - b.truncation_time()).abs() > TIME_EPS {
        return Err(Error::usage(format!(
            "events end at different truncation times ({} vs {})",
            a.truncation_time(),
            b.truncation_time()
        )));
    }
    let times = merged_times(&a.times, &b.times);
    Ok((a.pad_to(&times)?, b.pad_to(&times)?))
}

/// Slot-wise intersection on the common time tuple. Events ending at
/// different times are first extended to the later one.
pub fn homogeneous_intersection(a: &HomogeneousEvent, b: &HomogeneousEvent) -> HomogeneousEvent {
    assert_eq!(a.dim, b.dim, "events of different dimension");
    let t_end = a.truncation_time().max(b.truncation_time());
    let a = a.extend_to(t_end).expect("extension forward in time");
    let b = b.extend_to(t_end).expect("extension forward in time");
    let (a, b) = pad_to_common_times(&a, &b).expect("same truncation time");
    let regions = a
        .regions
        .iter()
        .zip(&b.regions)
        .map(|(x, y)| x.intersect(y))
        .collect();
    HomogeneousEvent {
        dim: a.dim,
        times: a.times,
        regions,
    }
}

/// Finite union of mutually disjoint homogeneous events over one time tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumEvent {
    parts: Vec<HomogeneousEvent>,
}

impl ContinuumEvent {
    /// Validates common times and pairwise disjointness.
    pub fn new(parts: Vec<HomogeneousEvent>) -> Result<Self> {
        if let Some(first) = parts.first() {
            for p in &parts {
                if p.dim != first.dim
                    || p.times.len() != first.times.len()
                    || p.times
                        .iter()
                        .zip(&first.times)
                        .any(|(a, b)| (a - b).abs() > TIME_EPS)
                {
                    return Err(Error::usage("parts must share dimension and time tuple"));
                }
            }
        }
        for (i, a) in parts.iter().enumerate() {
            for b in &parts[i + 1..] {
                if !a.is_disjoint(b) {
                    return Err(Error::usage("parts of a continuum event must be disjoint"));
                }
            }
        }
        Ok(ContinuumEvent { parts })
    }

    pub fn empty() -> Self {
        ContinuumEvent { parts: Vec::new() }
    }

    /// The whole sample space `Ω` truncated at `T`.
    pub fn full(dim: usize, truncation: f64) -> Result<Self> {
        Ok(ContinuumEvent {
            parts: vec![HomogeneousEvent::full(dim, vec![0.0, truncation])?],
        })
    }

    pub fn parts(&self) -> &[HomogeneousEvent] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.iter().all(HomogeneousEvent::is_empty)
    }

    pub fn contains(&self, traj: &SampledTrajectory) -> bool {
        self.parts.iter().any(|p| p.contains(traj))
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        let all: Vec<HomogeneousEvent> =
            self.parts.iter().chain(&other.parts).cloned().collect();
        if all.is_empty() {
            return Ok(Self::empty());
        }
        disjoint_decomposition(&all)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        let mut parts = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let i = homogeneous_intersection(a, b);
                if !i.is_empty() {
                    parts.push(i);
                }
            }
        }
        align(parts)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.parts
            .iter()
            .all(|a| other.parts.iter().all(|b| a.is_disjoint(b)))
    }
}

impl From<HomogeneousEvent> for ContinuumEvent {
    fn from(h: HomogeneousEvent) -> Self {
        ContinuumEvent { parts: vec![h] }
    }
}

fn align(parts: Vec<HomogeneousEvent>) -> Result<ContinuumEvent> {
    if parts.is_empty() {
        return Ok(ContinuumEvent::empty());
    }
    let t_end = parts
        .iter()
        .map(HomogeneousEvent::truncation_time)
        .fold(f64::MIN, f64::max);
    let extended: Vec<HomogeneousEvent> = parts
        .iter()
        .map(|p| p.extend_to(t_end))
        .collect::<Result<_>>()?;
    let times = extended
        .iter()
        .fold(Vec::new(), |acc: Vec<f64>, p| merged_times(&acc, &p.times));
    let padded = extended
        .iter()
        .map(|p| p.pad_to(&times))
        .collect::<Result<Vec<_>>>()?;
    Ok(ContinuumEvent { parts: padded })
}

/// Rewrites `α ∪ β ∪ γ ∪ …` as `α + (1+α)β + (1+α)(1+β)γ + …`, expanding each
/// `1+α` into its disjoint homogeneous complement pieces. The result lives on
/// the merged time tuple of all inputs.
pub fn disjoint_decomposition(events: &[HomogeneousEvent]) -> Result<ContinuumEvent> {
    if events.is_empty() {
        return Err(Error::usage("disjoint decomposition needs at least one event"));
    }
    let aligned = align(events.to_vec())?.parts;
    let mut out: Vec<HomogeneousEvent> = Vec::new();
    // Disjoint pieces of (1+e₁)(1+e₂)… accumulated so far.
    let mut outside: Option<Vec<HomogeneousEvent>> = None;
    for e in aligned {
        if e.is_empty() {
            continue;
        }
        match &outside {
            None => out.push(e.clone()),
            Some(pieces) => {
                for p in pieces {
                    let i = homogeneous_intersection(p, &e);
                    if !i.is_empty() {
                        out.push(i);
                    }
                }
            }
        }
        let comp = e.complement_pieces();
        outside = Some(match outside {
            None => comp,
            Some(pieces) => {
                let mut next = Vec::new();
                for p in &pieces {
                    for c in &comp {
                        let i = homogeneous_intersection(p, c);
                        if !i.is_empty() {
                            next.push(i);
                        }
                    }
                }
                next
            }
        });
    }
    Ok(ContinuumEvent { parts: out })
}
