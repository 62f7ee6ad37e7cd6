use std::fmt;

use crate::error::{Error, Result};

/// Upper bound on `n^N` for a finite sample space held as a bitset.
const MAX_HISTORIES: usize = 1 << 24;

/// The `n^N` histories of an `n`-configuration system observed at `N` times.
///
/// Histories are enumerated lexicographically with the first time slot most
/// significant. Configurations are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteSampleSpace {
    configs: usize,
    times: usize,
    size: usize,
}

/// A configuration tuple `(γ₁, …, γ_N)`; entry `a` is the configuration at
/// the `a`-th time of the parent schedule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History(Vec<usize>);

impl History {
    pub fn new(configs: Vec<usize>) -> Self {
        History(configs)
    }

    pub fn configs(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn final_config(&self) -> usize {
        *self.0.last().expect("history has at least two entries")
    }
}

impl From<Vec<usize>> for History {
    fn from(v: Vec<usize>) -> Self {
        History(v)
    }
}

impl FiniteSampleSpace {
    pub fn new(configs: usize, times: usize) -> Result<Self> {
        if configs == 0 {
            return Err(Error::usage("sample space needs at least one configuration"));
        }
        if times < 2 {
            return Err(Error::usage("histories need at least two times"));
        }
        let mut size: usize = 1;
        for _ in 0..times {
            size = size
                .checked_mul(configs)
                .filter(|&s| s <= MAX_HISTORIES)
                .ok_or_else(|| {
                    Error::usage(format!("{configs}^{times} histories exceed {MAX_HISTORIES}"))
                })?;
        }
        Ok(FiniteSampleSpace {
            configs,
            times,
            size,
        })
    }

    pub fn configs(&self) -> usize {
        self.configs
    }

    pub fn times(&self) -> usize {
        self.times
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn index_of(&self, history: &History) -> Result<usize> {
        if history.len() != self.times {
            return Err(Error::usage(format!(
                "history has {} entries, sample space has {} times",
                history.len(),
                self.times
            )));
        }
        let mut index = 0;
        for &g in history.configs() {
            if g >= self.configs {
                return Err(Error::usage(format!(
                    "configuration {g} out of range 0..{}",
                    self.configs
                )));
            }
            index = index * self.configs + g;
        }
        Ok(index)
    }

    pub fn history(&self, mut index: usize) -> History {
        assert!(index < self.size, "history index {index} out of range");
        let mut configs = vec![0; self.times];
        for slot in configs.iter_mut().rev() {
            *slot = index % self.configs;
            index /= self.configs;
        }
        History(configs)
    }

    pub fn histories(&self) -> impl Iterator<Item = History> + '_ {
        (0..self.size).map(move |i| self.history(i))
    }

    fn words(&self) -> usize {
        self.size.div_ceil(64)
    }

    fn tail_mask(&self) -> u64 {
        match self.size % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }
}

/// A subset of a finite sample space, stored as a bitset over the
/// lexicographic enumeration of histories.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteEvent {
    space: FiniteSampleSpace,
    bits: Vec<u64>,
}

impl FiniteEvent {
    pub fn empty(space: FiniteSampleSpace) -> Self {
        FiniteEvent {
            space,
            bits: vec![0; space.words()],
        }
    }

    pub fn full(space: FiniteSampleSpace) -> Self {
        let mut bits = vec![u64::MAX; space.words()];
        if let Some(last) = bits.last_mut() {
            *last &= space.tail_mask();
        }
        FiniteEvent { space, bits }
    }

    pub fn singleton(space: FiniteSampleSpace, history: &History) -> Result<Self> {
        let mut e = Self::empty(space);
        e.insert_index(space.index_of(history)?);
        Ok(e)
    }

    pub fn from_histories<'a, I>(space: FiniteSampleSpace, histories: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a History>,
    {
        let mut e = Self::empty(space);
        for h in histories {
            e.insert_index(space.index_of(h)?);
        }
        Ok(e)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(
        space: FiniteSampleSpace,
        indices: I,
    ) -> Result<Self> {
        let mut e = Self::empty(space);
        for i in indices {
            if i >= space.size {
                return Err(Error::usage(format!("history index {i} out of range")));
            }
            e.insert_index(i);
        }
        Ok(e)
    }

    /// Cylinder event: histories whose configuration at slot `a` lies in
    /// `slots[a]`, where `None` leaves that slot unconstrained.
    pub fn cylinder(space: FiniteSampleSpace, slots: &[Option<Vec<usize>>]) -> Result<Self> {
        if slots.len() != space.times {
            return Err(Error::usage(format!(
                "cylinder has {} slots, sample space has {} times",
                slots.len(),
                space.times
            )));
        }
        let mut allowed = vec![vec![false; space.configs]; space.times];
        for (a, slot) in slots.iter().enumerate() {
            match slot {
                None => allowed[a].iter_mut().for_each(|b| *b = true),
                Some(set) => {
                    for &g in set {
                        if g >= space.configs {
                            return Err(Error::usage(format!(
                                "configuration {g} out of range 0..{}",
                                space.configs
                            )));
                        }
                        allowed[a][g] = true;
                    }
                }
            }
        }
        let mut e = Self::empty(space);
        for i in 0..space.size {
            let h = space.history(i);
            if h.configs().iter().enumerate().all(|(a, &g)| allowed[a][g]) {
                e.insert_index(i);
            }
        }
        Ok(e)
    }

    pub fn space(&self) -> FiniteSampleSpace {
        self.space
    }

    fn insert_index(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains_index(&self, i: usize) -> bool {
        i < self.space.size && self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn contains(&self, history: &History) -> bool {
        self.space
            .index_of(history)
            .map(|i| self.contains_index(i))
            .unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        *self == Self::full(self.space)
    }

    /// Indices of member histories in increasing order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn histories(&self) -> impl Iterator<Item = History> + '_ {
        self.indices().map(|i| self.space.history(i))
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::usage(format!(
                "events live on different sample spaces ({}^{} vs {}^{})",
                self.space.configs, self.space.times, other.space.configs, other.space.times
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.check_space(other)?;
        Ok(FiniteEvent {
            space: self.space,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Boolean-ring addition: symmetric difference.
    pub fn ring_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a ^ b)
    }

    /// Boolean-ring multiplication: intersection.
    pub fn ring_mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a & !b)
    }

    /// `1 + α` in ring notation.
    pub fn complement(&self) -> Self {
        Self::full(self.space)
            .ring_add(self)
            .expect("same sample space")
    }

    pub fn is_disjoint(&self, other: &Self) -> Result<bool> {
        Ok(self.ring_mul(other)?.is_empty())
    }
}

impl fmt::Debug for FiniteEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FiniteEvent({}^{}; ",
            self.space.configs, self.space.times
        )?;
        f.debug_set().entries(self.indices()).finish()?;
        write!(f, ")")
    }
}
