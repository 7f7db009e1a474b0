//! Min-heap entries keyed by finite floats.

use std::cmp::Ordering;

/// `BinaryHeap` entry popping the smallest `(key, tie)` first; `item` rides
/// along and is ignored by the ordering. Keys must not be NaN; `tie` keeps
/// pop order deterministic for equal keys.
#[derive(Debug, Clone)]
pub struct MinEntry<T> {
    pub key: f64,
    pub tie: usize,
    pub item: T,
}

impl<T> MinEntry<T> {
    pub fn new(key: f64, tie: usize, item: T) -> Self {
        debug_assert!(!key.is_nan());
        MinEntry { key, tie, item }
    }
}

impl<T> PartialEq for MinEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.tie == other.tie
    }
}

impl<T> Eq for MinEntry<T> {}

impl<T> Ord for MinEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we pop the minimum.
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.tie.cmp(&self.tie))
    }
}

impl<T> PartialOrd for MinEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
