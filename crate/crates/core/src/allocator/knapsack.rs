//! Exact multiple-choice knapsack over the channel budget.
//!
//! Each group (one licensee) contributes at most one of its items. The
//! objective is lexicographic: total value, then number of groups served,
//! then the earliest-positioned served set, then fewer channels, then fewer
//! antennas, then fewer channels for earlier groups. Every component is
//! either additive or written at the group's own position, so a plain
//! capacity DP is exact.

use std::cmp::Ordering;

use crate::units::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Item {
    pub channels: usize,
    pub antennas: u32,
    pub value: Micros,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Key {
    value: Micros,
    served: usize,
    /// `chosen[i]` is true when group `i` is served. Compared as a bit string
    /// with `true > false`, which prefers the lexicographically smallest set
    /// of served positions among sets of equal size.
    chosen: Vec<bool>,
    channels: usize,
    antennas: u64,
    /// Channels per group; smaller earlier entries win the final tie.
    sizes: Vec<usize>,
}

impl Key {
    fn empty(groups: usize) -> Self {
        Key {
            value: Micros::ZERO,
            served: 0,
            chosen: vec![false; groups],
            channels: 0,
            antennas: 0,
            sizes: vec![0; groups],
        }
    }

    fn with(&self, group: usize, item: &Item) -> Key {
        let mut next = self.clone();
        next.value += item.value;
        next.served += 1;
        next.chosen[group] = true;
        next.channels += item.channels;
        next.antennas += item.antennas as u64;
        next.sizes[group] = item.channels;
        next
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .cmp(&other.value)
            .then(self.served.cmp(&other.served))
            .then_with(|| self.chosen.cmp(&other.chosen))
            .then(other.channels.cmp(&self.channels))
            .then(other.antennas.cmp(&self.antennas))
            .then_with(|| other.sizes.cmp(&self.sizes))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Returns the chosen item index for every group (`None` = not served).
///
/// `capacity` bounds the total channels; `max_served`, when set, bounds the
/// number of groups that may be served.
pub(crate) fn solve(groups: &[Vec<Item>], capacity: usize, max_served: Option<usize>) -> Vec<Option<usize>> {
    let n = groups.len();
    let layers = max_served.map_or(1, |k| k.min(n) + 1);
    let idx = |c: usize, k: usize| c * layers + k;

    let mut best = vec![Key::empty(n); (capacity + 1) * layers];
    // choice[g][cell] = item picked for group g when the DP cell was filled
    let mut choice: Vec<Vec<Option<usize>>> = Vec::with_capacity(n);

    for (g, items) in groups.iter().enumerate() {
        let mut next = best.clone();
        let mut picks = vec![None; best.len()];
        for c in 0..=capacity {
            for k in 0..layers {
                let from_k = match max_served {
                    Some(_) if k == 0 => continue,
                    Some(_) => k - 1,
                    None => k,
                };
                for (o, item) in items.iter().enumerate() {
                    if item.channels > c {
                        continue;
                    }
                    let cand = best[idx(c - item.channels, from_k)].with(g, item);
                    if cand > next[idx(c, k)] {
                        next[idx(c, k)] = cand;
                        picks[idx(c, k)] = Some(o);
                    }
                }
            }
        }
        best = next;
        choice.push(picks);
    }

    let mut out = vec![None; n];
    let (mut c, mut k) = (capacity, layers - 1);
    for g in (0..n).rev() {
        if let Some(o) = choice[g][idx(c, k)] {
            out[g] = Some(o);
            c -= groups[g][o].channels;
            if max_served.is_some() {
                k -= 1;
            }
        }
    }
    out
}
