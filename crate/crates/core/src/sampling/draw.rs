//! Stratified draws: uniform without-replacement sampling within each
//! stratum, over the *total* pool (labeled units included), with the
//! fresh/reused split that keeps annotation cost accounting honest.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pool::{SamplePool, UnitId};
use crate::scalar::Real;

use super::allocation::AllocationPlan;
use super::tree::StratifiedTree;

/// Result of one stratified draw.
#[derive(Debug, Clone)]
pub struct SampleDraw {
    round: usize,
    per_stratum_ids: Vec<Vec<UnitId>>,
    fresh_ids: Vec<UnitId>,
    reused_ids: Vec<UnitId>,
}

impl SampleDraw {
    /// Iteration index t.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Selected ids, grouped by stratum (each list sorted).
    pub fn per_stratum_ids(&self) -> &[Vec<UnitId>] {
        &self.per_stratum_ids
    }

    /// All selected ids, flattened and sorted.
    pub fn selected_ids(&self) -> Vec<UnitId> {
        let mut all: Vec<UnitId> = self.per_stratum_ids.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    /// Selected units that still need annotation.
    pub fn fresh_ids(&self) -> &[UnitId] {
        &self.fresh_ids
    }

    /// Selected units already labeled in earlier rounds.
    pub fn reused_ids(&self) -> &[UnitId] {
        &self.reused_ids
    }

    pub fn total_selected(&self) -> usize {
        self.per_stratum_ids.iter().map(Vec::len).sum()
    }

    /// Assemble a draw from explicit per-stratum selections, deriving the
    /// fresh/reused split from the pool's current annotation state. Used by
    /// enumeration oracles and the SRS estimation path.
    pub fn assemble<F: Real>(
        pool: &SamplePool<F>,
        round: usize,
        per_stratum_ids: Vec<Vec<UnitId>>,
    ) -> Self {
        let (fresh_ids, reused_ids) = split_fresh(pool, &per_stratum_ids);
        SampleDraw {
            round,
            per_stratum_ids,
            fresh_ids,
            reused_ids,
        }
    }
}

/// Draw `plan.counts()[h]` units uniformly without replacement from each
/// stratum of `tree`. Every unit in stratum h has inclusion probability
/// `n_h / N_h`.
pub fn draw_stratified_sample<F: Real, R: Rng + ?Sized>(
    pool: &SamplePool<F>,
    tree: &StratifiedTree<F>,
    plan: &AllocationPlan,
    round: usize,
    rng: &mut R,
) -> Result<SampleDraw> {
    if plan.num_strata() != tree.num_strata() {
        return Err(Error::mismatch(format!(
            "plan has {} strata, tree has {}",
            plan.num_strata(),
            tree.num_strata()
        )));
    }
    let mut per_stratum_ids = Vec::with_capacity(tree.num_strata());
    for (stratum, &take) in tree.strata().iter().zip(plan.counts()) {
        let members = stratum.member_ids();
        if take > members.len() {
            return Err(Error::invariant(format!(
                "plan demands {take} from a stratum of {}",
                members.len()
            )));
        }
        let mut ids: Vec<UnitId> = rand::seq::index::sample(rng, members.len(), take)
            .into_iter()
            .map(|i| members[i])
            .collect();
        ids.sort_unstable();
        per_stratum_ids.push(ids);
    }
    let (fresh_ids, reused_ids) = split_fresh(pool, &per_stratum_ids);
    Ok(SampleDraw {
        round,
        per_stratum_ids,
        fresh_ids,
        reused_ids,
    })
}

fn split_fresh<F: Real>(
    pool: &SamplePool<F>,
    per_stratum_ids: &[Vec<UnitId>],
) -> (Vec<UnitId>, Vec<UnitId>) {
    let mut fresh = Vec::new();
    let mut reused = Vec::new();
    for ids in per_stratum_ids {
        for &id in ids {
            if pool.is_labeled(id) {
                reused.push(id);
            } else {
                fresh.push(id);
            }
        }
    }
    fresh.sort_unstable();
    reused.sort_unstable();
    (fresh, reused)
}
