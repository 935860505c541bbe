//! Information states as fixed-width world bitsets.

use std::fmt;

/// Largest number of worlds a bitset state can address.
pub const MAX_WORLDS: usize = 64;

/// A set of worlds, stored as a bitmask over world indices.
///
/// The width is owned by the model the state belongs to; the bitset itself
/// never stores it, so states from models of different sizes compare by bits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct InfoState(u64);

impl InfoState {
    pub const EMPTY: InfoState = InfoState(0);

    pub const fn from_bits(bits: u64) -> Self {
        InfoState(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(world: usize) -> Self {
        debug_assert!(world < MAX_WORLDS);
        InfoState(1 << world)
    }

    /// The full state `{0, .., n-1}`.
    pub fn full(n_worlds: usize) -> Self {
        debug_assert!(n_worlds <= MAX_WORLDS);
        if n_worlds == MAX_WORLDS {
            InfoState(u64::MAX)
        } else {
            InfoState((1u64 << n_worlds) - 1)
        }
    }

    pub fn from_worlds<I: IntoIterator<Item = usize>>(worlds: I) -> Self {
        worlds.into_iter().fold(InfoState::EMPTY, |s, w| s.with(w))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, world: usize) -> bool {
        world < MAX_WORLDS && self.0 >> world & 1 == 1
    }

    pub fn with(self, world: usize) -> Self {
        InfoState(self.0 | 1 << world)
    }

    pub fn without(self, world: usize) -> Self {
        InfoState(self.0 & !(1 << world))
    }

    pub fn union(self, other: Self) -> Self {
        InfoState(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        InfoState(self.0 & other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// True iff every world index is below `n_worlds`.
    pub fn fits(self, n_worlds: usize) -> bool {
        self.is_subset(InfoState::full(n_worlds))
    }

    /// Worlds in ascending order.
    pub fn worlds(self) -> Worlds {
        Worlds(self.0)
    }

    /// All subsets of `self`, including `∅` and `self`, in descending
    /// numeric order (so `self` comes first and `∅` last).
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(self.0),
        }
    }

    /// Removes world `k` and shifts the higher worlds down by one.
    pub fn drop_world(self, k: usize) -> Self {
        let low = self.0 & ((1u64 << k) - 1);
        let high = if k + 1 >= MAX_WORLDS { 0 } else { self.0 >> (k + 1) };
        InfoState(low | high << k)
    }
}

impl fmt::Debug for InfoState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.worlds()).finish()
    }
}

impl FromIterator<usize> for InfoState {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        InfoState::from_worlds(iter)
    }
}

pub struct Worlds(u64);

impl Iterator for Worlds {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let w = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(w)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Worlds {}

/// Submask enumeration: `sub = (sub - 1) & mask`.
pub struct Subsets {
    mask: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = InfoState;

    fn next(&mut self) -> Option<InfoState> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            Some((cur - 1) & self.mask)
        };
        Some(InfoState(cur))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_cover_powerset() {
        let s = InfoState::from_worlds([0, 2, 5]);
        let subs: Vec<_> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert_eq!(subs[0], s);
        assert_eq!(*subs.last().unwrap(), InfoState::EMPTY);
        assert!(subs.iter().all(|t| t.is_subset(s)));
        let mut sorted = subs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
    }

    #[test]
    fn empty_has_one_subset() {
        assert_eq!(InfoState::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn drop_world_shifts() {
        let s = InfoState::from_worlds([0, 2, 3]);
        assert_eq!(s.drop_world(2), InfoState::from_worlds([0, 2]));
        assert_eq!(s.drop_world(1), InfoState::from_worlds([0, 1, 2]));
        assert_eq!(InfoState::full(64).drop_world(63), InfoState::full(63));
    }

    #[test]
    fn full_width() {
        assert_eq!(InfoState::full(0), InfoState::EMPTY);
        assert_eq!(InfoState::full(3).len(), 3);
        assert_eq!(InfoState::full(64).len(), 64);
    }
}
