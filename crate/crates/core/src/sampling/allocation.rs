//! Neyman allocation of a sample budget across strata.
//!
//! Per-stratum targets follow `n_h = min(max(n_threshold, n·W_h·S_h / Σ_k
//! W_k·S_k), N_h)`. The real-valued shares are rounded by largest remainder,
//! clamped to the floor/ceiling, and the surplus or deficit is refit
//! proportionally among the unclamped strata until stable. When every
//! Neyman weight is zero the allocation falls back to proportional
//! (`n_h ∝ N_h`).

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::tree::StratifiedTree;

/// Per-stratum sample counts after allocation and clamping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationPlan {
    counts: Vec<usize>,
    n_requested: usize,
    n_threshold: usize,
    clamped_to_population: bool,
}

impl AllocationPlan {
    #[cfg(test)]
    pub(crate) fn from_raw(
        counts: Vec<usize>,
        n_requested: usize,
        n_threshold: usize,
        clamped_to_population: bool,
    ) -> Self {
        AllocationPlan {
            counts,
            n_requested,
            n_threshold,
            clamped_to_population,
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_strata(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn n_requested(&self) -> usize {
        self.n_requested
    }

    pub fn n_threshold(&self) -> usize {
        self.n_threshold
    }

    /// True when the request exceeded the population and was cut to N.
    pub fn clamped_to_population(&self) -> bool {
        self.clamped_to_population
    }
}

/// Allocate `n` draws across the tree's strata.
pub fn neyman_allocate<F: Real>(
    tree: &StratifiedTree<F>,
    n: usize,
    n_threshold: usize,
) -> Result<AllocationPlan> {
    if n == 0 {
        return Err(Error::invalid("allocation budget must be at least 1"));
    }
    if n_threshold == 0 {
        return Err(Error::invalid("n_threshold must be at least 1"));
    }
    let pop: Vec<usize> = tree.strata().iter().map(|s| s.n_pop()).collect();
    let ney: Vec<F> = tree
        .strata()
        .iter()
        .map(|s| s.weight() * s.s2_proxy().sqrt())
        .collect();
    Ok(allocate_counts(&pop, &ney, n, n_threshold))
}

/// Core allocation over raw per-stratum stats. `neyman_weight[h]` is
/// `W_h·S_h`; all-zero weights trigger the proportional fallback.
pub(crate) fn allocate_counts<F: Real>(
    pop: &[usize],
    neyman_weight: &[F],
    n: usize,
    n_threshold: usize,
) -> AllocationPlan {
    debug_assert_eq!(pop.len(), neyman_weight.len());
    debug_assert!(!pop.is_empty());

    let total_pop: usize = pop.iter().sum();
    let clamped_to_population = n > total_pop;
    let n_eff = n.min(total_pop);
    let len = pop.len();
    let lo: Vec<usize> = pop.iter().map(|&p| n_threshold.min(p)).collect();

    let mut counts: Vec<Option<usize>> = vec![None; len];
    for h in 0..len {
        if pop[h] == 0 {
            counts[h] = Some(0);
        }
    }

    loop {
        let free: Vec<usize> = (0..len).filter(|&h| counts[h].is_none()).collect();
        if free.is_empty() {
            break;
        }
        let fixed_sum: usize = counts.iter().flatten().sum();
        let n_rem = n_eff.saturating_sub(fixed_sum);
        let lo_sum: usize = free.iter().map(|&h| lo[h]).sum();
        let hi_sum: usize = free.iter().map(|&h| pop[h]).sum();

        if n_rem <= lo_sum {
            // Floors saturate what's left; every free stratum takes its floor.
            for &h in &free {
                counts[h] = Some(lo[h]);
            }
            continue;
        }
        if n_rem >= hi_sum {
            for &h in &free {
                counts[h] = Some(pop[h]);
            }
            continue;
        }

        let mut weights: Vec<F> = free.iter().map(|&h| neyman_weight[h]).collect();
        if weights.iter().fold(F::zero(), |a, &b| a + b) <= F::zero() {
            // Proportional fallback.
            weights = free.iter().map(|&h| F::from_count(pop[h])).collect();
        }
        let wsum: F = weights.iter().fold(F::zero(), |a, &b| a + b);
        let shares: Vec<F> = weights
            .iter()
            .map(|&w| F::from_count(n_rem) * w / wsum)
            .collect();
        let cand = largest_remainder(&shares, n_rem);

        let mut any_fixed = false;
        for (j, &h) in free.iter().enumerate() {
            if cand[j] < lo[h] {
                counts[h] = Some(lo[h]);
                any_fixed = true;
            } else if cand[j] > pop[h] {
                counts[h] = Some(pop[h]);
                any_fixed = true;
            }
        }
        if !any_fixed {
            for (j, &h) in free.iter().enumerate() {
                counts[h] = Some(cand[j]);
            }
        }
    }

    AllocationPlan {
        counts: counts.into_iter().map(Option::unwrap).collect(),
        n_requested: n,
        n_threshold,
        clamped_to_population,
    }
}

/// Round non-negative real shares to integers summing exactly to `total`:
/// floor everything, then hand out the remainder by descending fractional
/// part (ties broken by index).
pub(crate) fn largest_remainder<F: Real>(shares: &[F], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = Vec::with_capacity(shares.len());
    let mut fracs: Vec<(F, usize)> = Vec::with_capacity(shares.len());
    for (i, &s) in shares.iter().enumerate() {
        let s = if s.is_finite() && s > F::zero() { s } else { F::zero() };
        let floor = s.floor();
        counts.push(floor.as_f64() as usize);
        fracs.push((s - floor, i));
    }
    let mut assigned: usize = counts.iter().sum();
    // Float noise can push Σfloor past the target; trim from the largest.
    while assigned > total {
        let (j, _) = counts
            .iter()
            .enumerate()
            .max_by_key(|&(i, &c)| (c, usize::MAX - i))
            .unwrap();
        counts[j] -= 1;
        assigned -= 1;
    }
    fracs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut leftover = total - assigned;
    for &(_, i) in &fracs {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}
