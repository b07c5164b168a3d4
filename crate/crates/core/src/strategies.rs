//! The three query strategies behind one interface: Neyman stratified
//! random sampling (NSRS), simple random sampling (SRS), and uncertainty
//! entropy sampling (UES).
//!
//! NSRS and SRS are probability designs and support design-based
//! estimation; UES concentrates picks near the decision boundary and does
//! not — its selections must never be fed to the stratified estimator as if
//! they were a design.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pool::{PositiveSet, SamplePool, UnitId};
use crate::sampling::{
    build_stratified_tree, collapse_scores, draw_stratified_sample, neyman_allocate,
    AllocationPlan, GuardrailScores, SampleDraw, StratifiedTree, TreeParams,
};
use crate::scalar::Real;

/// Query strategy selector with strategy-specific parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryStrategy {
    /// Neyman stratified random sampling over the score tree.
    #[serde(rename = "nsrs")]
    Neyman {
        #[serde(default = "default_depth")]
        depth_limit: usize,
        #[serde(default = "default_threshold")]
        n_threshold: usize,
    },
    /// Uniform without-replacement draws from the total pool.
    #[serde(rename = "srs")]
    SimpleRandom,

    /// Top-n unlabeled units by predictive entropy.
    #[serde(rename = "ues")]
    UncertaintyEntropy,
}

fn default_depth() -> usize {
    5
}

fn default_threshold() -> usize {
    2
}

impl QueryStrategy {
    pub fn neyman_default() -> Self {
        QueryStrategy::Neyman {
            depth_limit: default_depth(),
            n_threshold: default_threshold(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            QueryStrategy::Neyman { .. } => "nsrs",
            QueryStrategy::SimpleRandom => "srs",
            QueryStrategy::UncertaintyEntropy => "ues",
        }
    }

    /// Whether selections from this strategy admit design-based estimation.
    pub fn supports_unbiased_estimation(&self) -> bool {
        !matches!(self, QueryStrategy::UncertaintyEntropy)
    }
}

/// Sampling design behind an NSRS selection, kept for estimation.
#[derive(Debug, Clone)]
pub struct DesignInfo<F> {
    pub tree: StratifiedTree<F>,
    pub plan: AllocationPlan,
    pub draw: SampleDraw,
}

/// Outcome of one batch selection.
#[derive(Debug, Clone)]
pub struct SelectionResult<F> {
    pub selected_ids: Vec<UnitId>,
    pub fresh_ids: Vec<UnitId>,
    /// Present for NSRS only.
    pub design: Option<DesignInfo<F>>,
    pub supports_unbiased_estimation: bool,
}

/// Select a batch of `n` units for round `round`.
///
/// NSRS and SRS draw from the total pool (labeled included); UES ranks the
/// current unlabeled units by entropy, ties broken by id, and returns all of
/// them when fewer than `n` remain.
pub fn select_batch<F: Real, R: Rng + ?Sized>(
    strategy: &QueryStrategy,
    pool: &SamplePool<F>,
    positive: &PositiveSet,
    n: usize,
    round: usize,
    guardrail: bool,
    rng: &mut R,
) -> Result<SelectionResult<F>> {
    match *strategy {
        QueryStrategy::Neyman {
            depth_limit,
            n_threshold,
        } => {
            let collapsed = collapse_scores(pool, positive)?;
            let params = TreeParams {
                depth_limit,
                n_budget: n,
                n_threshold,
                max_candidates_per_node: 256,
            };
            let guard = if guardrail {
                Some(GuardrailScores::from_pool(pool, positive)?)
            } else {
                None
            };
            let tree = build_stratified_tree(pool, &collapsed, &params, guard.as_ref())?;
            let plan = neyman_allocate(&tree, n, n_threshold)?;
            let draw = draw_stratified_sample(pool, &tree, &plan, round, rng)?;
            Ok(SelectionResult {
                selected_ids: draw.selected_ids(),
                fresh_ids: draw.fresh_ids().to_vec(),
                design: Some(DesignInfo { tree, plan, draw }),
                supports_unbiased_estimation: true,
            })
        }
        QueryStrategy::SimpleRandom => {
            let take = n.min(pool.n());
            let mut ids: Vec<UnitId> = rand::seq::index::sample(rng, pool.n(), take)
                .into_iter()
                .map(|i| UnitId(i as u32))
                .collect();
            ids.sort_unstable();
            let fresh: Vec<UnitId> = ids
                .iter()
                .copied()
                .filter(|&id| !pool.is_labeled(id))
                .collect();
            Ok(SelectionResult {
                selected_ids: ids,
                fresh_ids: fresh,
                design: None,
                supports_unbiased_estimation: true,
            })
        }
        QueryStrategy::UncertaintyEntropy => {
            let mut ranked: Vec<(F, UnitId)> = pool
                .units()
                .filter(|u| !u.labeled)
                .map(|u| (entropy(u.score), u.id))
                .collect();
            ranked.sort_by(|a, b| {
                b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1))
            });
            ranked.truncate(n);
            let mut ids: Vec<UnitId> = ranked.into_iter().map(|(_, id)| id).collect();
            ids.sort_unstable();
            Ok(SelectionResult {
                selected_ids: ids.clone(),
                fresh_ids: ids,
                design: None,
                supports_unbiased_estimation: false,
            })
        }
    }
}

/// Shannon entropy of a probability vector in nats, with 0·ln 0 = 0.
pub fn entropy<F: Real>(score: &[F]) -> F {
    score.iter().fold(F::zero(), |acc, &p| {
        if p > F::zero() {
            acc - p * p.ln()
        } else {
            acc
        }
    })
}

/// Histogram of selected units' collapsed scores over `bins` equal-width
/// bins in [0, 1]; scores of exactly 1 land in the last bin.
pub fn selection_histogram<F: Real>(
    selected: &[UnitId],
    collapsed: &[F],
    bins: usize,
) -> Vec<u64> {
    assert!(bins >= 2, "need at least 2 bins");
    let mut hist = vec![0u64; bins];
    let width = F::from_count(bins);
    for &id in selected {
        let s = collapsed[id.index()].max(F::zero()).min(F::one());
        let bin = (s * width).floor().as_f64() as usize;
        hist[bin.min(bins - 1)] += 1;
    }
    hist
}
