//! Sampling design: score collapsing, stratification trees, Neyman
//! allocation, and stratified draws.

mod allocation;
mod draw;
mod tree;

pub use allocation::{neyman_allocate, AllocationPlan};
pub use draw::{draw_stratified_sample, SampleDraw};
pub use tree::{
    build_stratified_tree, candidate_split_objective, guardrail_check, GuardrailScores, Stratum,
    StratifiedTree, TreeParams,
};

pub(crate) use allocation::largest_remainder;

use crate::error::{Error, Result};
use crate::pool::{PositiveSet, SamplePool};
use crate::scalar::Real;

/// Collapse each unit's score vector to the summed probability of the
/// positive classes, yielding the scalar the tree stratifies on. For K = 2
/// with positive class {1} this is the raw positive score.
pub fn collapse_scores<F: Real>(pool: &SamplePool<F>, positive: &PositiveSet) -> Result<Vec<F>> {
    if positive.n_classes() != pool.num_classes() {
        return Err(Error::mismatch(format!(
            "positive set built for {} classes, pool has {}",
            positive.n_classes(),
            pool.num_classes()
        )));
    }
    Ok(pool
        .ids()
        .map(|id| {
            let score = pool.score(id);
            positive
                .classes()
                .iter()
                .fold(F::zero(), |acc, &m| acc + score[m])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_passthrough() {
        let pool = SamplePool::with_scores(vec![0, 1], 2, vec![0.3, 0.7, 0.6, 0.4]).unwrap();
        let positive = PositiveSet::new([1], 2).unwrap();
        let collapsed = collapse_scores(&pool, &positive).unwrap();
        assert_eq!(collapsed, vec![0.7, 0.4]);
    }

    #[test]
    fn simplex_complement() {
        let pool = SamplePool::<f64>::with_scores(vec![0], 3, vec![0.2, 0.5, 0.3]).unwrap();
        let positive = PositiveSet::new([1, 2], 3).unwrap();
        let collapsed = collapse_scores(&pool, &positive).unwrap();
        assert!((collapsed[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn uniform_four_class() {
        let pool = SamplePool::<f64>::with_scores(vec![0], 4, vec![0.25; 4]).unwrap();
        let positive = PositiveSet::new([0, 1, 2], 4).unwrap();
        let collapsed = collapse_scores(&pool, &positive).unwrap();
        assert!((collapsed[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn positive_set_must_match_pool() {
        let pool = SamplePool::<f64>::from_labels(vec![0, 1], 2).unwrap();
        let positive = PositiveSet::new([1], 3).unwrap();
        assert!(collapse_scores(&pool, &positive).is_err());
    }
}
