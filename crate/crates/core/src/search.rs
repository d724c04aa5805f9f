//! Integer search spaces shared by every allocator.
//!
//! A space is a vector of non-negative integers split into contiguous
//! groups, each with its own sum budget, plus a per-entry cap. The AP-level
//! search is one group of length `M`; the per-UE refinement of a single AP is
//! one group of length `K`; comparators refining the whole matrix use `M`
//! groups of length `K`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on exhaustive enumeration sizes.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Decrement uniformly chosen strictly positive entries until `Σ v ≤ budget`.
///
/// Each step draws `rng.random_range(0..p)` with `p` the number of positive
/// entries and decrements the selected one (positives taken in index order).
pub fn repair<R: Rng + ?Sized>(v: &mut [u32], budget: u32, rng: &mut R) {
    let mut total: u64 = v.iter().map(|&b| u64::from(b)).sum();
    let budget = u64::from(budget);
    let mut positives: Vec<usize> = (0..v.len()).filter(|&i| v[i] > 0).collect();
    while total > budget {
        let j = rng.random_range(0..positives.len());
        let i = positives[j];
        v[i] -= 1;
        total -= 1;
        if v[i] == 0 {
            positives.remove(j);
        }
    }
}

/// `C(dims + budget, dims)`: non-negative integer vectors of length `dims`
/// with sum at most `budget`.
pub fn stars_and_bars(dims: usize, budget: u32) -> u128 {
    binomial(dims as u128 + u128::from(budget), dims as u128)
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Number of vectors of length `dims`, entries in `[0, cap]`, sum ≤ `budget`.
pub fn count_bounded(dims: usize, cap: u32, budget: u32) -> u128 {
    // ways[s] = number of prefixes with sum exactly s.
    let b = budget as usize;
    let mut ways = vec![0u128; b + 1];
    ways[0] = 1;
    for _ in 0..dims {
        let mut next = vec![0u128; b + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for add in 0..=(cap as usize).min(b - s) {
                next[s + add] = next[s + add].saturating_add(w);
            }
        }
        ways = next;
    }
    ways.iter().fold(0u128, |a, &w| a.saturating_add(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub start: usize,
    pub len: usize,
    pub budget: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    caps: Vec<u32>,
    groups: Vec<Group>,
}

impl SearchSpace {
    /// One group of `dim` entries under `budget`, entries capped at
    /// `min(max_bits, budget)`.
    pub fn single(dim: usize, budget: u32, max_bits: u32) -> Self {
        Self {
            caps: vec![max_bits.min(budget); dim],
            groups: vec![Group {
                start: 0,
                len: dim,
                budget,
            }],
        }
    }

    /// `budgets.len()` consecutive groups of `group_len` entries each.
    pub fn grouped(group_len: usize, budgets: &[u32], max_bits: u32) -> Self {
        let mut caps = Vec::with_capacity(group_len * budgets.len());
        let groups = budgets
            .iter()
            .enumerate()
            .map(|(g, &budget)| {
                caps.extend(std::iter::repeat_n(max_bits.min(budget), group_len));
                Group {
                    start: g * group_len,
                    len: group_len,
                    budget,
                }
            })
            .collect();
        Self { caps, groups }
    }

    pub fn dim(&self) -> usize {
        self.caps.len()
    }

    pub fn cap(&self, i: usize) -> u32 {
        self.caps[i]
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    /// Per-entry uniform draw on `[0, cap]`, then [`SearchSpace::repair`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        let mut v: Vec<u32> = self.caps.iter().map(|&c| rng.random_range(0..=c)).collect();
        self.repair(&mut v, rng);
        v
    }

    /// Clamp entries to their caps and repair each group to its budget.
    pub fn repair<R: Rng + ?Sized>(&self, v: &mut [u32], rng: &mut R) {
        for (x, &c) in v.iter_mut().zip(&self.caps) {
            *x = (*x).min(c);
        }
        for g in &self.groups {
            repair(&mut v[g.start..g.start + g.len], g.budget, rng);
        }
    }

    pub fn is_feasible(&self, v: &[u32]) -> bool {
        v.len() == self.dim()
            && v.iter().zip(&self.caps).all(|(x, c)| x <= c)
            && self.groups.iter().all(|g| {
                v[g.start..g.start + g.len].iter().map(|&b| u64::from(b)).sum::<u64>()
                    <= u64::from(g.budget)
            })
    }

    /// Exact number of feasible vectors (saturating).
    pub fn count_feasible(&self) -> u128 {
        self.groups.iter().fold(1u128, |acc, g| {
            acc.saturating_mul(count_bounded(g.len, self.caps[g.start..].first().copied().unwrap_or(0), g.budget))
        })
    }

    /// Visit every feasible vector in lexicographic order. Refuses when the
    /// count exceeds `cap`.
    pub fn for_each_feasible<F>(&self, cap: u128, mut f: F) -> Result<u128>
    where
        F: FnMut(&[u32]) -> Result<()>,
    {
        let count = self.count_feasible();
        if count > cap {
            return Err(Error::EnumerationTooLarge { count, cap });
        }
        let mut v = vec![0u32; self.dim()];
        let mut visited = 0u128;
        self.enumerate_from(0, &mut v, &mut visited, &mut f)?;
        debug_assert_eq!(visited, count);
        Ok(visited)
    }

    fn enumerate_from<F>(&self, i: usize, v: &mut [u32], visited: &mut u128, f: &mut F) -> Result<()>
    where
        F: FnMut(&[u32]) -> Result<()>,
    {
        if i == v.len() {
            *visited += 1;
            return f(v);
        }
        let g = self
            .groups
            .iter()
            .find(|g| i >= g.start && i < g.start + g.len)
            .expect("groups cover every index");
        let used: u32 = v[g.start..i].iter().sum();
        let hi = self.caps[i].min(g.budget - used);
        for b in 0..=hi {
            v[i] = b;
            self.enumerate_from(i + 1, v, visited, f)?;
        }
        v[i] = 0;
        Ok(())
    }
}

/// Best vector found by a search over a [`SearchSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorOutcome {
    pub best: Vec<u32>,
    pub best_eval: f64,
    /// Best-so-far after initialization, then after every iteration.
    pub trace: Vec<f64>,
    pub evaluations: u64,
}
