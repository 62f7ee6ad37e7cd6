use crate::error::{Error, Result};

/// A compact axis-aligned box `[lo₁,hi₁] × … × [lo_d,hi_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Interval {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::usage("interval bounds must have equal, nonzero length"));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::usage("interval bounds must be finite"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::usage(format!("interval has lo > hi: {lo:?} {hi:?}")));
        }
        Ok(Interval { lo, hi })
    }

    /// One-dimensional interval `[a, b]`.
    pub fn closed(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a], vec![b])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Degenerate boxes have zero measure and are treated as empty.
    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a >= b)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        let out = Interval { lo, hi };
        if out.lo.iter().zip(&out.hi).any(|(a, b)| a > b) || out.is_empty() {
            None
        } else {
            Some(out)
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

/// A subset of `ℝ^d` in the continuum event algebra: either bounded (a finite
/// union of boxes), the complement of such a union, or all of `ℝ^d`.
///
/// `Bounded(vec![])` is the empty set.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Bounded(Vec<Interval>),
    CoBounded(Vec<Interval>),
    Full,
}

impl Region {
    pub fn empty() -> Self {
        Region::Bounded(Vec::new())
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Ok(Region::Bounded(vec![Interval::closed(a, b)?]))
    }

    pub fn boxed(i: Interval) -> Self {
        Region::Bounded(vec![i])
    }

    pub fn complement_of(intervals: Vec<Interval>) -> Self {
        Region::CoBounded(intervals)
    }

    fn pieces(&self) -> &[Interval] {
        match self {
            Region::Bounded(v) | Region::CoBounded(v) => v,
            Region::Full => &[],
        }
    }

    /// Dimension of the boxes, if the region mentions any.
    pub fn dim(&self) -> Option<usize> {
        self.pieces().first().map(Interval::dim)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Full => true,
            Region::Bounded(v) => v.iter().any(|i| !i.is_empty() && i.contains(x)),
            Region::CoBounded(v) => !v.iter().any(|i| !i.is_empty() && i.contains(x)),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Region::Bounded(_))
    }

    pub fn is_full(&self) -> bool {
        matches!(self.canonical(), Region::Full)
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Region::Bounded(v) => v.iter().all(Interval::is_empty),
            _ => false,
        }
    }

    /// Lebesgue measure; infinite for unbounded regions.
    pub fn measure(&self) -> f64 {
        match self.canonical() {
            Region::Bounded(v) => v.iter().map(Interval::measure).sum(),
            _ => f64::INFINITY,
        }
    }

    pub fn complement(&self) -> Region {
        match self {
            Region::Full => Region::empty(),
            Region::Bounded(v) if v.iter().all(Interval::is_empty) => Region::Full,
            Region::Bounded(v) => Region::CoBounded(v.clone()),
            Region::CoBounded(v) => Region::Bounded(v.clone()),
        }
    }

    pub fn intersect(&self, other: &Region) -> Region {
        combine(&[self, other], |m| m[0] && m[1])
    }

    pub fn union(&self, other: &Region) -> Region {
        combine(&[self, other], |m| m[0] || m[1])
    }

    pub fn difference(&self, other: &Region) -> Region {
        combine(&[self, other], |m| m[0] && !m[1])
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.intersect(other).is_empty()
    }

    /// Unique representation: boxes of the coarsest grid on which the region
    /// is a union of cells, listed in lexicographic cell order.
    pub fn canonical(&self) -> Region {
        combine(&[self], |m| m[0])
    }

    /// Sorted box edges along `axis`.
    pub fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .pieces()
            .iter()
            .filter(|i| !i.is_empty())
            .flat_map(|i| [i.lo[axis], i.hi[axis]])
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Bounded part as a list of disjoint boxes (the region itself if
    /// bounded, the excluded boxes if co-bounded).
    pub fn bounded_cells(&self) -> Vec<Interval> {
        self.canonical().pieces().to_vec()
    }

    pub fn intervals(&self) -> &[Interval] {
        self.pieces()
    }
}

/// Evaluates a Boolean combination of regions exactly on the coordinate
/// compressed grid spanned by all box edges.
fn combine(regions: &[&Region], f: impl Fn(&[bool]) -> bool) -> Region {
    let dim = match regions.iter().find_map(|r| r.dim()) {
        Some(d) => d,
        None => {
            // Only Full / empty sets involved: membership is constant.
            let m: Vec<bool> = regions.iter().map(|r| !r.is_empty()).collect();
            return if f(&m) { Region::Full } else { Region::empty() };
        }
    };
    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for r in regions {
        for piece in r.pieces().iter().filter(|i| !i.is_empty()) {
            assert_eq!(piece.dim(), dim, "regions of different dimension");
            for (a, axis) in axes.iter_mut().enumerate() {
                axis.push(piece.lo[a]);
                axis.push(piece.hi[a]);
            }
        }
    }
    for axis in axes.iter_mut() {
        axis.sort_by(f64::total_cmp);
        axis.dedup();
    }
    if axes.iter().any(Vec::is_empty) {
        let m: Vec<bool> = regions.iter().map(|r| !r.is_empty()).collect();
        return if f(&m) { Region::Full } else { Region::empty() };
    }

    // Slab k of an axis with breakpoints b₀<…<b_{B-1}: k=0 is (−∞,b₀), k=B is (b_{B-1},∞).
    let reps: Vec<Vec<f64>> = axes
        .iter()
        .map(|b| {
            let mut r = Vec::with_capacity(b.len() + 1);
            r.push(b[0] - 1.0);
            for w in b.windows(2) {
                r.push(0.5 * (w[0] + w[1]));
            }
            r.push(b[b.len() - 1] + 1.0);
            r
        })
        .collect();
    let shape: Vec<usize> = reps.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let mut cells = vec![false; total];
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut memberships = vec![false; regions.len()];
    for flat in 0..total {
        unflatten(flat, &shape, &mut idx);
        for a in 0..dim {
            point[a] = reps[a][idx[a]];
        }
        for (m, r) in memberships.iter_mut().zip(regions) {
            *m = r.contains(&point);
        }
        cells[flat] = f(&memberships);
    }

    // Any unbounded cell decides boundedness; for algebra members all
    // unbounded cells agree.
    let complemented = cells[0];
    if complemented {
        cells.iter_mut().for_each(|c| *c = !*c);
    }
    let boxes = minimal_boxes(&axes, &shape, &cells);
    match (complemented, boxes.is_empty()) {
        (true, true) => Region::Full,
        (true, false) => Region::CoBounded(boxes),
        (false, _) => Region::Bounded(boxes),
    }
}

fn unflatten(mut flat: usize, shape: &[usize], idx: &mut [usize]) {
    for a in (0..shape.len()).rev() {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
}

fn flatten(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &s)| acc * s + i)
}

/// Removes breakpoints whose two neighbouring slabs carry identical cell
/// patterns, then lists the remaining occupied finite cells as boxes.
fn minimal_boxes(axes: &[Vec<f64>], shape: &[usize], cells: &[bool]) -> Vec<Interval> {
    let dim = axes.len();
    let mut cells = cells.to_vec();
    let mut shape = shape.to_vec();
    let mut axes = axes.to_vec();
    for a in 0..dim {
        let mut k = 0;
        while k + 1 < shape[a] {
            if slices_equal(&cells, &shape, a, k, k + 1) {
                // Merge slab k+1 into k: drop breakpoint k (between slabs k and k+1).
                let (new_cells, new_shape) = drop_slab(&cells, &shape, a, k + 1);
                cells = new_cells;
                shape = new_shape;
                axes[a].remove(k);
            } else {
                k += 1;
            }
        }
    }
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; dim];
    let mut out = Vec::new();
    for flat in 0..total {
        if !cells[flat] {
            continue;
        }
        unflatten(flat, &shape, &mut idx);
        let mut lo = Vec::with_capacity(dim);
        let mut hi = Vec::with_capacity(dim);
        let mut finite = true;
        for a in 0..dim {
            let k = idx[a];
            if k == 0 || k == shape[a] - 1 {
                finite = false;
                break;
            }
            lo.push(axes[a][k - 1]);
            hi.push(axes[a][k]);
        }
        if finite {
            out.push(Interval { lo, hi });
        }
    }
    out
}

fn slices_equal(cells: &[bool], shape: &[usize], axis: usize, k1: usize, k2: usize) -> bool {
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        unflatten(flat, shape, &mut idx);
        if idx[axis] != k1 {
            continue;
        }
        idx[axis] = k2;
        if cells[flat] != cells[flatten(&idx, shape)] {
            return false;
        }
    }
    true
}

fn drop_slab(cells: &[bool], shape: &[usize], axis: usize, k: usize) -> (Vec<bool>, Vec<usize>) {
    let mut new_shape = shape.to_vec();
    new_shape[axis] -= 1;
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total / shape[axis] * new_shape[axis]);
    let mut idx = vec![0usize; shape.len()];
    for (flat, &cell) in cells.iter().enumerate() {
        unflatten(flat, shape, &mut idx);
        if idx[axis] != k {
            out.push(cell);
        }
    }
    (out, new_shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::closed(a, b).unwrap()
    }

    #[test]
    fn touching_intervals_merge() {
        let r = Region::Bounded(vec![iv(1.0, 2.0), iv(0.0, 1.0), iv(3.0, 4.0)]);
        assert_eq!(
            r.canonical(),
            Region::Bounded(vec![iv(0.0, 2.0), iv(3.0, 4.0)])
        );
        assert!((r.measure() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn interval_arithmetic() {
        let a = Region::interval(0.0, 2.0).unwrap();
        let b = Region::interval(1.0, 3.0).unwrap();
        assert_eq!(a.intersect(&b), Region::interval(1.0, 2.0).unwrap());
        assert_eq!(a.union(&b), Region::interval(0.0, 3.0).unwrap());
        assert_eq!(a.difference(&b), Region::interval(0.0, 1.0).unwrap());
        assert_eq!(a.complement().intersect(&b), Region::interval(2.0, 3.0).unwrap());
        assert_eq!(a.complement().union(&a), Region::Full);
        assert!(a.intersect(&a.complement()).is_empty());
        assert_eq!(
            a.complement().intersect(&b.complement()).canonical(),
            Region::CoBounded(vec![iv(0.0, 3.0)])
        );
    }

    #[test]
    fn full_and_empty() {
        let full = Region::Full;
        let empty = Region::empty();
        let a = Region::interval(-1.0, 1.0).unwrap();
        assert_eq!(a.intersect(&full), a);
        assert_eq!(a.union(&empty), a);
        assert_eq!(full.complement(), empty);
        assert!(Region::CoBounded(vec![]).is_full());
        assert!(Region::Bounded(vec![iv(1.0, 1.0)]).is_empty());
    }

    #[test]
    fn boxes_in_two_dimensions() {
        let a = Region::boxed(Interval::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap());
        let b = Region::boxed(Interval::new(vec![1.0, 1.0], vec![3.0, 3.0]).unwrap());
        let i = a.intersect(&b);
        assert_eq!(
            i,
            Region::boxed(Interval::new(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap())
        );
        assert!((a.union(&b).measure() - 7.0).abs() < 1e-12);
        assert!((a.difference(&b).measure() - 3.0).abs() < 1e-12);
        // Canonical form is independent of how a box is split.
        let split = Region::Bounded(vec![
            Interval::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(),
            Interval::new(vec![1.0, 0.0], vec![2.0, 2.0]).unwrap(),
        ]);
        assert_eq!(split.canonical(), a.canonical());
    }
}
