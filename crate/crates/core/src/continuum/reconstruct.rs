use rayon::prelude::*;

use super::propagator::{PropagatorSpec, StepKind};
use super::quadrature::{composite_panels, GaussLegendre};
use super::state::InitialState;
use crate::error::{Error, Result};
use crate::event_algebra::{ContinuumEvent, HomogeneousEvent, Interval, Region};
use crate::gns::FreeVector;
use crate::linalg::{c, C64};

/// Search and refinement settings for the interval reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma4Params {
    /// Truncation time `T` of the two-time events.
    pub time: f64,
    pub order: usize,
    pub panel_phase: f64,
    /// Half-width of the smallest candidate source set, in state widths.
    pub candidate_scale: f64,
    /// Number of candidate source sets; each doubles the previous width.
    pub candidates: usize,
    /// Sample points per cover piece when bounding `|ψ_α|` from below.
    pub samples: usize,
    pub max_split_depth: usize,
    /// Largest `k` in the cell width `|C_i| / 2^k`.
    pub max_refinements: usize,
    /// `|ψ_α|` at or below this counts as vanishing.
    pub floor: f64,
}

impl Default for Lemma4Params {
    fn default() -> Self {
        Lemma4Params {
            time: 1.0,
            order: 16,
            panel_phase: 8.0,
            candidate_scale: 0.5,
            candidates: 8,
            samples: 64,
            max_split_depth: 6,
            max_refinements: 16,
            floor: 1e-8,
        }
    }
}

/// One cover piece `C_i` with its source set `A_i` and cell partition.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverPiece {
    pub piece: (f64, f64),
    pub source: (f64, f64),
    /// Lower bound on `|ψ_{(A_i, ℝ)}|` over the piece.
    pub p_bound: f64,
    pub cells: usize,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub u: FreeVector<ContinuumEvent>,
    pub cover: Vec<CoverPiece>,
    pub cells: usize,
    /// `P` of the construction: the smallest piece bound.
    pub p_bound: f64,
    /// Widest cell.
    pub delta: f64,
    /// `‖target − f₀(u)‖` by quadrature over the cells.
    pub error: f64,
    pub target: f64,
}

/// `ψ_{(A, ℝ)}(x, T) = ∫_A K(x, T | x₀, 0) ψ(x₀) dx₀` for a box `A` on the line.
#[derive(Clone)]
struct SourceAmplitude<'a> {
    spec: &'a PropagatorSpec,
    psi: &'a InitialState,
    time: f64,
    kind: StepKind,
    source: (f64, f64),
    nodes: Vec<f64>,
    weighted: Vec<C64>,
}

impl<'a> SourceAmplitude<'a> {
    fn new(
        spec: &'a PropagatorSpec,
        psi: &'a InitialState,
        time: f64,
        source: (f64, f64),
        reach: f64,
        rule: &GaussLegendre,
        panel_phase: f64,
    ) -> Result<Self> {
        let kind = spec.step_kind(time)?;
        let (mut nodes, mut weighted) = (Vec::new(), Vec::new());
        if let StepKind::Kernel = kind {
            let l = reach.max(source.0.abs()).max(source.1.abs());
            let k = spec.phase_gradient_bound(time, l) + psi.wave_number();
            for (a, b) in composite_panels(source.0, source.1, &[0.0], panel_phase / k) {
                for (x, w) in rule.on(a, b) {
                    let v = psi.value(&[x]);
                    if v != c(0.0, 0.0) {
                        nodes.push(x);
                        weighted.push(v * w);
                    }
                }
            }
        }
        Ok(SourceAmplitude {
            spec,
            psi,
            time,
            kind,
            source,
            nodes,
            weighted,
        })
    }

    fn at(&self, x: f64) -> C64 {
        match self.kind {
            StepKind::Delta { reflect, phase } => {
                let x0 = if reflect { -x } else { x };
                if self.source.0 <= x0 && x0 <= self.source.1 {
                    phase * self.psi.value(&[x0])
                } else {
                    c(0.0, 0.0)
                }
            }
            StepKind::Kernel => self
                .nodes
                .iter()
                .zip(&self.weighted)
                .map(|(&x0, &v)| self.spec.axis_kernel(0, x, x0, self.time) * v)
                .sum(),
        }
    }
}

fn check_line(spec: &PropagatorSpec, psi: &InitialState) -> Result<()> {
    if spec.dim() != 1 || psi.dim() != 1 {
        return Err(Error::Inapplicable(
            "interval reconstruction is implemented on the line only".into(),
        ));
    }
    Ok(())
}

fn line_interval(i: &Interval) -> Result<(f64, f64)> {
    if i.dim() != 1 || i.is_empty() {
        return Err(Error::usage(format!(
            "target must be a one-dimensional interval of positive length, got {i:?}"
        )));
    }
    Ok((i.lo()[0], i.hi()[0]))
}

fn samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// Builds `u ∈ H₁` with `‖[χ_I] − f₀(u)‖ < ε` from two-time events
/// `(A_i, D_ij)` with coefficients `1/ψ_{α_ij}(x_ij, T)`, where `x_ij` is
/// the midpoint of cell `D_ij`.
pub fn lemma4_reconstruct(
    target: &Interval,
    eps: f64,
    psi: &InitialState,
    spec: &PropagatorSpec,
    params: &Lemma4Params,
) -> Result<Reconstruction> {
    check_line(spec, psi)?;
    let (lo, hi) = line_interval(target)?;
    if !(eps > 0.0) {
        return Err(Error::usage("target accuracy must be positive"));
    }
    if !(params.time > 0.0) {
        return Err(Error::usage("truncation time must be positive"));
    }
    let rule = GaussLegendre::new(params.order)?;
    let reach = lo.abs().max(hi.abs());
    let center = psi.peak()[0];
    let w0 = params.candidate_scale * psi.width();
    let sources: Vec<SourceAmplitude> = (0..params.candidates.max(1))
        .map(|j| {
            let half = w0 * 2f64.powi(j as i32);
            SourceAmplitude::new(
                spec,
                psi,
                params.time,
                (center - half, center + half),
                reach,
                &rule,
                params.panel_phase,
            )
        })
        .collect::<Result<_>>()?;

    let mut pieces = Vec::new();
    cover(lo, hi, 0, &sources, params, &mut pieces)?;
    let p = pieces.iter().map(|(_, _, p)| *p).fold(f64::INFINITY, f64::min);
    let threshold = eps * p / (hi - lo).sqrt();

    let mut u = FreeVector::new();
    let mut cover_out = Vec::new();
    let mut delta: f64 = 0.0;
    for &((a, b), j, p_i) in &pieces {
        let src = &sources[j];
        let cells = refine(a, b, src, threshold, params)?;
        let a_region = Region::interval(src.source.0, src.source.1)?;
        for &(l, r) in &cells {
            let mid = src.at(0.5 * (l + r));
            let event = HomogeneousEvent::two_time(1, params.time, a_region.clone(), Region::interval(l, r)?)?;
            u.add(ContinuumEvent::from(event), mid.inv());
            delta = delta.max(r - l);
        }
        cover_out.push(CoverPiece {
            piece: (a, b),
            source: src.source,
            p_bound: p_i,
            cells: cells.len(),
        });
    }
    let cells = u.support_len();
    let error = step_error(&[((lo, hi), c(1.0, 0.0))], &u, psi, spec, params)?;
    if error >= eps {
        return Err(Error::NonConvergence {
            context: format!("interval reconstruction on [{lo}, {hi}]"),
            residual: error,
            tolerance: eps,
        });
    }
    Ok(Reconstruction {
        u,
        cover: cover_out,
        cells,
        p_bound: p,
        delta,
        error,
        target: eps,
    })
}

/// Splits `[lo, hi]` until one source set keeps `|ψ_α|` away from zero on
/// each piece. Records `(piece, source index, P_i)`.
fn cover(
    lo: f64,
    hi: f64,
    depth: usize,
    sources: &[SourceAmplitude],
    params: &Lemma4Params,
    out: &mut Vec<((f64, f64), usize, f64)>,
) -> Result<()> {
    let xs = samples(lo, hi, params.samples.max(2));
    let table: Vec<Vec<f64>> = sources
        .par_iter()
        .map(|s| xs.iter().map(|&x| s.at(x).norm()).collect())
        .collect();
    // Per-point best over all sources; a point no source reaches is fatal.
    let (worst_k, worst) = (0..xs.len())
        .map(|k| (k, table.iter().map(|row| row[k]).fold(0.0, f64::max)))
        .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    if worst <= params.floor {
        return Err(Error::HypothesisFailure {
            point: vec![xs[worst_k]],
            reason: format!(
                "|ψ_α(x, T)| ≤ {:.1e} for every candidate source set (max {worst:.3e})",
                params.floor
            ),
        });
    }
    let (best, min_best) = table
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .enumerate()
        .fold((0, -1.0), |acc, (j, m)| if m > acc.1 { (j, m) } else { acc });
    if min_best > 0.25 * worst || (min_best > params.floor && depth >= params.max_split_depth) {
        out.push(((lo, hi), best, 0.5 * min_best));
        return Ok(());
    }
    if depth >= params.max_split_depth {
        return Err(Error::HypothesisFailure {
            point: vec![0.5 * (lo + hi)],
            reason: "no single source set covers the neighbourhood".into(),
        });
    }
    let mid = 0.5 * (lo + hi);
    cover(lo, mid, depth + 1, sources, params, out)?;
    cover(mid, hi, depth + 1, sources, params, out)
}

/// Uniform cells `|piece| / 2^k`, with `k` the smallest level at which the
/// sampled oscillation about every cell midpoint stays below half of
/// `threshold`.
fn refine(lo: f64, hi: f64, src: &SourceAmplitude, threshold: f64, params: &Lemma4Params) -> Result<Vec<(f64, f64)>> {
    let mut worst = f64::INFINITY;
    for k in 0..=params.max_refinements {
        let n = 1usize << k;
        let h = (hi - lo) / n as f64;
        let cells: Vec<(f64, f64)> = (0..n)
            .map(|i| (lo + i as f64 * h, if i + 1 == n { hi } else { lo + (i + 1) as f64 * h }))
            .collect();
        worst = cells
            .par_iter()
            .map(|&(a, b)| {
                let mid = src.at(0.5 * (a + b));
                samples(a, b, 8)
                    .iter()
                    .map(|&x| (src.at(x) - mid).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        if worst < 0.5 * threshold {
            return Ok(cells);
        }
    }
    Err(Error::NonConvergence {
        context: format!("cell refinement on [{lo}, {hi}]"),
        residual: worst,
        tolerance: 0.5 * threshold,
    })
}

/// `‖S − f₀(u)‖` for `S = Σ s_i χ_{I_i}`, with `f₀(u) = Σ_α u(α) ψ_α(·, T)`
/// evaluated event by event. Every event must be two-time with a bounded
/// final set inside `∪ I_i`.
pub fn step_error(
    terms: &[((f64, f64), C64)],
    u: &FreeVector<ContinuumEvent>,
    psi: &InitialState,
    spec: &PropagatorSpec,
    params: &Lemma4Params,
) -> Result<f64> {
    let rule = GaussLegendre::new(params.order)?;
    let cell_rule = GaussLegendre::new(8)?;
    let reach = terms
        .iter()
        .map(|((a, b), _)| a.abs().max(b.abs()))
        .fold(0.0, f64::max);
    // Final cells with their amplitude sources and coefficients.
    let mut pieces: Vec<((f64, f64), Vec<SourceAmplitude>, C64)> = Vec::new();
    for (event, coeff) in u.entries() {
        for part in event.parts() {
            if part.len() != 2 || (part.truncation_time() - params.time).abs() > 1e-12 {
                return Err(Error::usage("verification needs two-time events ending at T"));
            }
            let (initial, last) = (&part.regions()[0], &part.regions()[1]);
            if !initial.is_bounded() || !last.is_bounded() {
                return Err(Error::usage("verification needs bounded initial and final sets"));
            }
            let sources = initial
                .bounded_cells()
                .iter()
                .map(|i| {
                    let a = (i.lo()[0], i.hi()[0]);
                    SourceAmplitude::new(spec, psi, params.time, a, reach, &rule, params.panel_phase)
                })
                .collect::<Result<Vec<_>>>()?;
            for cell in last.bounded_cells() {
                pieces.push(((cell.lo()[0], cell.hi()[0]), sources.clone(), *coeff));
            }
        }
    }
    // Integrate |S − f₀(u)|² over every final cell, plus S alone where no
    // cell reaches.
    let mut edges: Vec<f64> = terms.iter().flat_map(|((a, b), _)| [*a, *b]).collect();
    edges.extend(pieces.iter().flat_map(|((a, b), _, _)| [*a, *b]));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let target = |x: f64| -> C64 {
        terms
            .iter()
            .filter(|((a, b), _)| *a <= x && x <= *b)
            .map(|(_, s)| *s)
            .sum()
    };
    let total: f64 = edges
        .par_windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let mut acc = 0.0;
            for (x, wt) in cell_rule.on(a, b) {
                let f0: C64 = pieces
                    .iter()
                    .filter(|((l, r), _, _)| *l <= x && x <= *r)
                    .map(|(_, srcs, coeff)| srcs.iter().map(|s| s.at(x)).sum::<C64>() * coeff)
                    .sum();
                acc += wt * (target(x) - f0).norm_sqr();
            }
            acc
        })
        .sum();
    Ok(total.sqrt())
}

/// Reconstructs `S = Σ s_i χ_{I_i}` by running the interval construction on
/// each term at accuracy `ε/(N·M)`, `M = max |s_i|`, and summing `s_i u_i`.
pub fn reconstruct_step_function(
    terms: &[(Interval, C64)],
    eps: f64,
    psi: &InitialState,
    spec: &PropagatorSpec,
    params: &Lemma4Params,
) -> Result<Reconstruction> {
    if !(eps > 0.0) {
        return Err(Error::usage("target accuracy must be positive"));
    }
    if terms.is_empty() {
        return Ok(Reconstruction {
            u: FreeVector::new(),
            cover: Vec::new(),
            cells: 0,
            p_bound: f64::INFINITY,
            delta: 0.0,
            error: 0.0,
            target: eps,
        });
    }
    check_line(spec, psi)?;
    let mut lines = Vec::with_capacity(terms.len());
    for (i, s) in terms {
        if *s == c(0.0, 0.0) || !s.re.is_finite() || !s.im.is_finite() {
            return Err(Error::validation(format!("step weight {s} must be finite and nonzero")));
        }
        lines.push((line_interval(i)?, *s));
    }
    let mut sorted: Vec<(f64, f64)> = lines.iter().map(|(i, _)| *i).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
        return Err(Error::validation("step intervals overlap"));
    }
    let n = terms.len() as f64;
    let m = lines.iter().map(|(_, s)| s.norm()).fold(0.0, f64::max);
    let budget = eps / (n * m);
    let mut u = FreeVector::new();
    let mut cover = Vec::new();
    let (mut p, mut delta) = (f64::INFINITY, 0.0f64);
    for (i, s) in terms {
        let r = lemma4_reconstruct(i, budget, psi, spec, params)?;
        for (e, z) in r.u.entries() {
            u.add(e.clone(), z * s);
        }
        cover.extend(r.cover);
        p = p.min(r.p_bound);
        delta = delta.max(r.delta);
    }
    let error = step_error(&lines, &u, psi, spec, params)?;
    if error >= eps {
        return Err(Error::NonConvergence {
            context: "step-function reconstruction".into(),
            residual: error,
            tolerance: eps,
        });
    }
    Ok(Reconstruction {
        cells: u.support_len(),
        u,
        cover,
        p_bound: p,
        delta,
        error,
        target: eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::closed(0.0, 1.0).unwrap()
    }

    #[test]
    fn unit_interval_for_a_free_gaussian() {
        let psi = InitialState::standard(0.0);
        let r = lemma4_reconstruct(&unit(), 0.1, &psi, &PropagatorSpec::free(1), &Lemma4Params::default()).unwrap();
        assert!(r.error < 0.1);
        assert!(r.cells > 0 && r.p_bound > 0.0);
        assert_eq!(r.cells, r.cover.iter().map(|p| p.cells).sum::<usize>());
    }

    #[test]
    fn halving_the_target_refines_the_cells() {
        let psi = InitialState::standard(0.0);
        let spec = PropagatorSpec::free(1);
        let p = Lemma4Params::default();
        let a = lemma4_reconstruct(&unit(), 0.1, &psi, &spec, &p).unwrap();
        let b = lemma4_reconstruct(&unit(), 0.05, &psi, &spec, &p).unwrap();
        assert!(b.cells > a.cells);
        assert!(b.error < a.error);
    }

    #[test]
    fn half_line_behind_the_wall_fails_the_hypothesis() {
        let psi = InitialState::half_line_odd(1.0).unwrap();
        let r = lemma4_reconstruct(
            &Interval::closed(-1.0, 0.0).unwrap(),
            0.1,
            &psi,
            &PropagatorSpec::half_line(),
            &Lemma4Params::default(),
        );
        match r {
            Err(Error::HypothesisFailure { point, .. }) => assert!(point[0] <= 0.0),
            other => panic!("expected hypothesis failure, got {other:?}"),
        }
    }

    #[test]
    fn half_line_in_front_of_the_wall_succeeds() {
        let psi = InitialState::half_line_odd(1.0).unwrap();
        let r = lemma4_reconstruct(
            &Interval::closed(0.5, 1.5).unwrap(),
            0.1,
            &psi,
            &PropagatorSpec::half_line(),
            &Lemma4Params::default(),
        )
        .unwrap();
        assert!(r.error < 0.1);
    }

    #[test]
    fn signed_step_function() {
        let psi = InitialState::standard(0.0);
        let terms = vec![
            (Interval::closed(-1.0, 0.0).unwrap(), c(2.0, 0.0)),
            (Interval::closed(1.0, 2.0).unwrap(), c(-1.0, 0.0)),
        ];
        let r = reconstruct_step_function(&terms, 0.2, &psi, &PropagatorSpec::free(1), &Lemma4Params::default()).unwrap();
        assert!(r.error < 0.2);
    }

    #[test]
    fn single_indicator_matches_the_interval_construction() {
        let psi = InitialState::standard(0.0);
        let spec = PropagatorSpec::free(1);
        let p = Lemma4Params::default();
        let s = reconstruct_step_function(&[(unit(), c(1.0, 0.0))], 0.1, &psi, &spec, &p).unwrap();
        let l = lemma4_reconstruct(&unit(), 0.1, &psi, &spec, &p).unwrap();
        assert_eq!(s.u, l.u);
        assert!((s.error - l.error).abs() < 1e-12);
    }

    #[test]
    fn zero_step_function_is_the_empty_vector() {
        let psi = InitialState::standard(0.0);
        let r = reconstruct_step_function(&[], 0.1, &psi, &PropagatorSpec::free(1), &Lemma4Params::default()).unwrap();
        assert!(r.u.is_empty());
        assert_eq!(r.error, 0.0);
    }

    #[test]
    fn overlapping_or_zero_terms_are_rejected() {
        let psi = InitialState::standard(0.0);
        let spec = PropagatorSpec::free(1);
        let p = Lemma4Params::default();
        let overlap = vec![
            (Interval::closed(0.0, 1.0).unwrap(), c(1.0, 0.0)),
            (Interval::closed(0.5, 2.0).unwrap(), c(1.0, 0.0)),
        ];
        assert!(reconstruct_step_function(&overlap, 0.1, &psi, &spec, &p).is_err());
        let zero = vec![(unit(), c(0.0, 0.0))];
        assert!(reconstruct_step_function(&zero, 0.1, &psi, &spec, &p).is_err());
    }
}
