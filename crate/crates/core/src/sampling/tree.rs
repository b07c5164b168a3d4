//! Variance-minimizing stratification trees over collapsed model scores.
//!
//! A stratified tree partitions [0, 1] into score intervals (strata). Splits
//! are chosen greedily, but each candidate is scored by the *global*
//! objective `Σ_h W_h²·s_h²/n_h` with the Neyman allocation recomputed over
//! the whole candidate stratification — a local split is accepted only if it
//! strictly lowers the stratified design variance everywhere it matters.
//!
//! Because true within-stratum class rates are unknown before labeling, the
//! variance proxy is `p̂_h(1−p̂_h)` with `p̂_h` the mean collapsed score in
//! the stratum (exact in expectation under a calibrated scorer). The
//! optional multiclass guardrail rejects a split whenever any positive
//! class would end up with stratified variance no better than simple random
//! sampling at the same budget.

use crate::error::{Error, Result};
use crate::pool::{PositiveSet, SamplePool, UnitId};
use crate::scalar::Real;

use super::allocation::allocate_counts;

/// Construction parameters for [`build_stratified_tree`].
#[derive(Debug, Clone)]
pub struct TreeParams {
    /// Depth bound k; at most 2^(k−1) strata.
    pub depth_limit: usize,
    /// Sample budget the allocation is evaluated at.
    pub n_budget: usize,
    /// Per-stratum allocation floor.
    pub n_threshold: usize,
    /// Cap on split candidates evaluated per node (evenly-ranked subsample).
    pub max_candidates_per_node: usize,
}

impl TreeParams {
    pub fn new(n_budget: usize) -> Self {
        TreeParams {
            depth_limit: 5,
            n_budget,
            n_threshold: 2,
            max_candidates_per_node: 256,
        }
    }
}

/// One leaf of the tree: a score interval with its population stats.
#[derive(Debug, Clone)]
pub struct Stratum<F> {
    lower: F,
    upper: F,
    member_ids: Vec<UnitId>,
    weight: F,
    s2_proxy: F,
    s2m_proxy: Vec<F>,
}

impl<F: Real> Stratum<F> {
    /// Interval lower bound (inclusive).
    pub fn lower(&self) -> F {
        self.lower
    }

    /// Interval upper bound (exclusive, except the last stratum).
    pub fn upper(&self) -> F {
        self.upper
    }

    pub fn member_ids(&self) -> &[UnitId] {
        &self.member_ids
    }

    /// Population count N_h.
    pub fn n_pop(&self) -> usize {
        self.member_ids.len()
    }

    /// Weight W_h = N_h / N.
    pub fn weight(&self) -> F {
        self.weight
    }

    /// Variance proxy p̂_h(1−p̂_h) from mean collapsed score.
    pub fn s2_proxy(&self) -> F {
        self.s2_proxy
    }

    /// Per-positive-class proxies (empty unless built with guardrail stats).
    pub fn s2m_proxy(&self) -> &[F] {
        &self.s2m_proxy
    }
}

/// Score-interval stratification with per-stratum stats.
#[derive(Debug, Clone)]
pub struct StratifiedTree<F> {
    thresholds: Vec<F>,
    strata: Vec<Stratum<F>>,
    depth_limit: usize,
    objective_value: F,
}

impl<F: Real> StratifiedTree<F> {
    /// Split points x_0=0 < x_1 < … < x_L=1.
    pub fn thresholds(&self) -> &[F] {
        &self.thresholds
    }

    pub fn strata(&self) -> &[Stratum<F>] {
        &self.strata
    }

    pub fn num_strata(&self) -> usize {
        self.strata.len()
    }

    pub fn depth_limit(&self) -> usize {
        self.depth_limit
    }

    /// Minimized Σ_h W_h²·s_h²/n_h at construction.
    pub fn objective_value(&self) -> F {
        self.objective_value
    }

    /// Index of the stratum containing a collapsed score.
    pub fn stratum_of(&self, score: F) -> usize {
        let interior = &self.thresholds[1..self.thresholds.len() - 1];
        interior.partition_point(|&t| t <= score)
    }

    /// Trivial one-stratum tree over the whole pool (the SRS design).
    pub fn single_stratum(
        pool: &SamplePool<F>,
        collapsed: &[F],
        n_budget: usize,
        n_threshold: usize,
    ) -> Result<Self> {
        Self::from_thresholds(pool, collapsed, &[F::zero(), F::one()], n_budget, n_threshold)
    }

    /// Assemble a tree from an explicit threshold list. Strata follow the
    /// interval convention [x_h, x_{h+1}) with the last stratum closed at 1;
    /// every stratum must be nonempty.
    pub fn from_thresholds(
        pool: &SamplePool<F>,
        collapsed: &[F],
        thresholds: &[F],
        n_budget: usize,
        n_threshold: usize,
    ) -> Result<Self> {
        validate_thresholds(thresholds)?;
        if collapsed.len() != pool.n() {
            return Err(Error::mismatch(format!(
                "{} collapsed scores for {} units",
                collapsed.len(),
                pool.n()
            )));
        }
        let num = thresholds.len() - 1;
        let interior = &thresholds[1..num];
        let mut members: Vec<Vec<UnitId>> = vec![Vec::new(); num];
        let mut sums: Vec<F> = vec![F::zero(); num];
        for (i, &s) in collapsed.iter().enumerate() {
            let h = interior.partition_point(|&t| t <= s);
            members[h].push(UnitId(i as u32));
            sums[h] += s;
        }
        if let Some(h) = members.iter().position(|m| m.is_empty()) {
            return Err(Error::invalid(format!("stratum {h} is empty")));
        }
        let n = pool.n();
        let strata: Vec<Stratum<F>> = members
            .into_iter()
            .enumerate()
            .map(|(h, ids)| {
                let mean = sums[h] / F::from_count(ids.len());
                Stratum {
                    lower: thresholds[h],
                    upper: thresholds[h + 1],
                    weight: F::from_count(ids.len()) / F::from_count(n),
                    s2_proxy: bernoulli_var(mean),
                    s2m_proxy: Vec::new(),
                    member_ids: ids,
                }
            })
            .collect();
        let objective_value = objective_of_strata(&strata, n_budget, n_threshold);
        Ok(StratifiedTree {
            thresholds: thresholds.to_vec(),
            strata,
            depth_limit: 1,
            objective_value,
        })
    }
}

/// Per-positive-class score columns plus whole-pool variance proxies,
/// feeding the multiclass guardrail.
#[derive(Debug, Clone)]
pub struct GuardrailScores<F> {
    class_scores: Vec<Vec<F>>,
    global_s2: Vec<F>,
}

impl<F: Real> GuardrailScores<F> {
    pub fn from_pool(pool: &SamplePool<F>, positive: &PositiveSet) -> Result<Self> {
        if positive.n_classes() != pool.num_classes() {
            return Err(Error::mismatch(format!(
                "positive set built for {} classes, pool has {}",
                positive.n_classes(),
                pool.num_classes()
            )));
        }
        let n = pool.n();
        let mut class_scores = Vec::with_capacity(positive.len());
        let mut global_s2 = Vec::with_capacity(positive.len());
        for &m in positive.classes() {
            let col: Vec<F> = pool.ids().map(|id| pool.score(id)[m]).collect();
            let mean = col.iter().fold(F::zero(), |a, &b| a + b) / F::from_count(n);
            class_scores.push(col);
            global_s2.push(bernoulli_var(mean));
        }
        Ok(GuardrailScores {
            class_scores,
            global_s2,
        })
    }

    /// Number of positive classes M.
    pub fn num_positive(&self) -> usize {
        self.class_scores.len()
    }

    /// Whole-pool proxies s_m².
    pub fn global_s2(&self) -> &[F] {
        &self.global_s2
    }
}

/// Eq.-style guardrail predicate: accept unless some positive class m has
/// `Σ_h W_h²·s_hm²/n_h ≥ s_m²/n`. Strata with zero weight are ignored.
pub fn guardrail_check<F: Real>(
    weights: &[F],
    counts: &[usize],
    per_class_s2: &[Vec<F>],
    whole_pool_s2: &[F],
    n_effective: usize,
) -> bool {
    debug_assert_eq!(weights.len(), counts.len());
    debug_assert_eq!(per_class_s2.len(), whole_pool_s2.len());
    debug_assert!(n_effective >= 1);
    for (m, s2m) in per_class_s2.iter().enumerate() {
        debug_assert_eq!(s2m.len(), weights.len());
        let mut lhs = F::zero();
        for h in 0..weights.len() {
            if counts[h] == 0 {
                if weights[h] > F::zero() {
                    return false;
                }
                continue;
            }
            lhs += weights[h] * weights[h] * s2m[h] / F::from_count(counts[h]);
        }
        let rhs = whole_pool_s2[m] / F::from_count(n_effective);
        if lhs >= rhs {
            return false;
        }
    }
    true
}

/// Objective of an explicit stratification over collapsed scores: allocates
/// `n_budget` by Neyman over the candidate strata and returns
/// `Σ_h W_h²·s_h²/n_h`. An empty stratum yields `+∞` (candidate rejected),
/// not an error.
pub fn candidate_split_objective<F: Real>(
    thresholds: &[F],
    collapsed: &[F],
    n_budget: usize,
    n_threshold: usize,
) -> Result<F> {
    validate_thresholds(thresholds)?;
    let num = thresholds.len() - 1;
    let interior = &thresholds[1..num];
    let mut pops = vec![0usize; num];
    let mut sums = vec![F::zero(); num];
    for &s in collapsed {
        let h = interior.partition_point(|&t| t <= s);
        pops[h] += 1;
        sums[h] += s;
    }
    if pops.iter().any(|&p| p == 0) {
        return Ok(F::infinity());
    }
    let n = collapsed.len();
    let mut weights = Vec::with_capacity(num);
    let mut s2 = Vec::with_capacity(num);
    for h in 0..num {
        weights.push(F::from_count(pops[h]) / F::from_count(n));
        s2.push(bernoulli_var(sums[h] / F::from_count(pops[h])));
    }
    Ok(stratified_objective(&pops, &weights, &s2, n_budget, n_threshold))
}

/// Build the stratification tree for one round.
///
/// Splitting stops at the depth bound, on pure nodes (all proxies zero),
/// when no candidate strictly lowers the global objective, or when the
/// guardrail rejects the chosen split.
pub fn build_stratified_tree<F: Real>(
    pool: &SamplePool<F>,
    collapsed: &[F],
    params: &TreeParams,
    guardrail: Option<&GuardrailScores<F>>,
) -> Result<StratifiedTree<F>> {
    let n = pool.n();
    if n == 0 {
        return Err(Error::EmptyPool);
    }
    if collapsed.len() != n {
        return Err(Error::mismatch(format!(
            "{} collapsed scores for {} units",
            collapsed.len(),
            n
        )));
    }
    if params.depth_limit == 0 || params.n_budget == 0 || params.n_threshold == 0 {
        return Err(Error::invalid(
            "depth_limit, n_budget, and n_threshold must all be at least 1",
        ));
    }
    if let Some(g) = guardrail {
        if g.class_scores.iter().any(|c| c.len() != n) {
            return Err(Error::mismatch("guardrail score column length != N"));
        }
    }

    let sorted = SortedView::new(collapsed, guardrail);
    let mut leaves = vec![Leaf {
        start: 0,
        end: n,
        lower: F::zero(),
        upper: F::one(),
        depth: 1,
    }];
    let mut pending = vec![0usize];

    while let Some(idx) = pending.pop() {
        let leaf = leaves[idx];
        if leaf.depth >= params.depth_limit {
            continue;
        }
        if sorted.is_pure(leaf.start, leaf.end) {
            continue;
        }
        let candidates = sorted.candidate_positions(leaf.start, leaf.end, params.max_candidates_per_node);
        if candidates.is_empty() {
            continue;
        }

        // Stats of every other leaf stay fixed while this node's candidates
        // are scored against the whole stratification.
        let mut pops = Vec::with_capacity(leaves.len() + 1);
        let mut weights = Vec::with_capacity(leaves.len() + 1);
        let mut s2 = Vec::with_capacity(leaves.len() + 1);
        for (j, other) in leaves.iter().enumerate() {
            if j != idx {
                let (pop, w, v) = sorted.leaf_stats(other.start, other.end, n);
                pops.push(pop);
                weights.push(w);
                s2.push(v);
            }
        }
        let base = pops.len();
        {
            let (pop, w, v) = sorted.leaf_stats(leaf.start, leaf.end, n);
            pops.push(pop);
            weights.push(w);
            s2.push(v);
        }
        let current =
            stratified_objective(&pops, &weights, &s2, params.n_budget, params.n_threshold);
        pops.truncate(base);
        weights.truncate(base);
        s2.truncate(base);

        let median = sorted.median(leaf.start, leaf.end);
        let mut best: Option<(F, F, F, usize)> = None; // (objective, |t − median|, t, pos)
        for &pos in &candidates {
            let t = sorted.threshold_at(pos);
            pops.truncate(base);
            weights.truncate(base);
            s2.truncate(base);
            for (s, e) in [(leaf.start, pos), (pos, leaf.end)] {
                let (pop, w, v) = sorted.leaf_stats(s, e, n);
                pops.push(pop);
                weights.push(w);
                s2.push(v);
            }
            let obj =
                stratified_objective(&pops, &weights, &s2, params.n_budget, params.n_threshold);
            let dist = (t - median).abs();
            let better = match best {
                None => true,
                Some((bo, bd, bt, _)) => {
                    obj < bo || (obj == bo && (dist < bd || (dist == bd && t < bt)))
                }
            };
            if better {
                best = Some((obj, dist, t, pos));
            }
        }
        let (best_obj, _, best_t, best_pos) = best.unwrap();
        if !(best_obj < current) {
            continue;
        }

        if let Some(g) = guardrail {
            pops.clear();
            weights.clear();
            s2.clear();
            let mut spans: Vec<(usize, usize)> = leaves
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != idx)
                .map(|(_, l)| (l.start, l.end))
                .collect();
            spans.push((leaf.start, best_pos));
            spans.push((best_pos, leaf.end));
            for &(s, e) in &spans {
                let (pop, w, v) = sorted.leaf_stats(s, e, n);
                pops.push(pop);
                weights.push(w);
                s2.push(v);
            }
            let ney: Vec<F> = weights
                .iter()
                .zip(&s2)
                .map(|(&w, &v)| w * v.sqrt())
                .collect();
            let plan = allocate_counts(&pops, &ney, params.n_budget, params.n_threshold);
            let per_class: Vec<Vec<F>> = (0..g.num_positive())
                .map(|m| {
                    spans
                        .iter()
                        .map(|&(s, e)| sorted.class_s2(m, s, e))
                        .collect()
                })
                .collect();
            let n_eff = params.n_budget.min(n);
            if !guardrail_check(&weights, plan.counts(), &per_class, &g.global_s2, n_eff) {
                continue;
            }
        }

        leaves[idx] = Leaf {
            start: leaf.start,
            end: best_pos,
            lower: leaf.lower,
            upper: best_t,
            depth: leaf.depth + 1,
        };
        leaves.push(Leaf {
            start: best_pos,
            end: leaf.end,
            lower: best_t,
            upper: leaf.upper,
            depth: leaf.depth + 1,
        });
        pending.push(leaves.len() - 1);
        pending.push(idx);
    }

    leaves.sort_by_key(|l| l.start);
    let mut thresholds = Vec::with_capacity(leaves.len() + 1);
    thresholds.push(F::zero());
    for l in &leaves {
        thresholds.push(l.upper);
    }
    let strata: Vec<Stratum<F>> = leaves
        .iter()
        .map(|l| {
            let mut ids: Vec<UnitId> = sorted.order[l.start..l.end]
                .iter()
                .map(|&i| UnitId(i))
                .collect();
            ids.sort_unstable();
            let (_, w, v) = sorted.leaf_stats(l.start, l.end, n);
            let s2m = match guardrail {
                Some(g) => (0..g.num_positive())
                    .map(|m| sorted.class_s2(m, l.start, l.end))
                    .collect(),
                None => Vec::new(),
            };
            Stratum {
                lower: l.lower,
                upper: l.upper,
                member_ids: ids,
                weight: w,
                s2_proxy: v,
                s2m_proxy: s2m,
            }
        })
        .collect();
    let objective_value = objective_of_strata(&strata, params.n_budget, params.n_threshold);
    Ok(StratifiedTree {
        thresholds,
        strata,
        depth_limit: params.depth_limit,
        objective_value,
    })
}

#[derive(Debug, Clone, Copy)]
struct Leaf<F> {
    start: usize,
    end: usize,
    lower: F,
    upper: F,
    depth: usize,
}

/// Units sorted by collapsed score with prefix sums for O(1) interval stats.
struct SortedView<F> {
    order: Vec<u32>,
    scores: Vec<F>,
    prefix: Vec<F>,
    class_prefix: Vec<Vec<F>>,
}

impl<F: Real> SortedView<F> {
    fn new(collapsed: &[F], guardrail: Option<&GuardrailScores<F>>) -> Self {
        let n = collapsed.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| {
            collapsed[a as usize]
                .partial_cmp(&collapsed[b as usize])
                .unwrap()
                .then(a.cmp(&b))
        });
        let scores: Vec<F> = order
            .iter()
            .map(|&i| collapsed[i as usize].max(F::zero()).min(F::one()))
            .collect();
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(F::zero());
        for &s in &scores {
            let last = *prefix.last().unwrap();
            prefix.push(last + s);
        }
        let class_prefix = match guardrail {
            Some(g) => g
                .class_scores
                .iter()
                .map(|col| {
                    let mut p = Vec::with_capacity(n + 1);
                    p.push(F::zero());
                    for &i in &order {
                        let last = *p.last().unwrap();
                        p.push(last + col[i as usize]);
                    }
                    p
                })
                .collect(),
            None => Vec::new(),
        };
        SortedView {
            order,
            scores,
            prefix,
            class_prefix,
        }
    }

    fn leaf_stats(&self, start: usize, end: usize, n_total: usize) -> (usize, F, F) {
        let count = end - start;
        let mean = (self.prefix[end] - self.prefix[start]) / F::from_count(count);
        (
            count,
            F::from_count(count) / F::from_count(n_total),
            bernoulli_var(mean),
        )
    }

    fn class_s2(&self, m: usize, start: usize, end: usize) -> F {
        let count = end - start;
        let p = &self.class_prefix[m];
        bernoulli_var((p[end] - p[start]) / F::from_count(count))
    }

    fn is_pure(&self, start: usize, end: usize) -> bool {
        let count = F::from_count(end - start);
        let mean = (self.prefix[end] - self.prefix[start]) / count;
        if bernoulli_var(mean) > F::zero() {
            return false;
        }
        (0..self.class_prefix.len()).all(|m| {
            let p = &self.class_prefix[m];
            bernoulli_var((p[end] - p[start]) / count) <= F::zero()
        })
    }

    /// Positions p in (start, end) where the sorted score strictly
    /// increases, subsampled to at most `max` evenly-spaced ranks.
    fn candidate_positions(&self, start: usize, end: usize, max: usize) -> Vec<usize> {
        let mut positions = Vec::new();
        for p in start + 1..end {
            if self.scores[p - 1] < self.scores[p] {
                positions.push(p);
            }
        }
        if positions.len() > max {
            let count = positions.len();
            let mut picked = Vec::with_capacity(max);
            for j in 0..max {
                picked.push(positions[j * (count - 1) / (max - 1)]);
            }
            picked.dedup();
            return picked;
        }
        positions
    }

    /// Split threshold for a position: midpoint of the straddling scores,
    /// nudged to the upper score when rounding would leave it on the left
    /// value (keeps [lower, t) / [t, upper) consistent with positions).
    fn threshold_at(&self, pos: usize) -> F {
        let a = self.scores[pos - 1];
        let b = self.scores[pos];
        let two = F::one() + F::one();
        let t = (a + b) / two;
        if t <= a {
            b
        } else {
            t
        }
    }

    fn median(&self, start: usize, end: usize) -> F {
        let len = end - start;
        let lo = self.scores[start + (len - 1) / 2];
        let hi = self.scores[start + len / 2];
        let two = F::one() + F::one();
        (lo + hi) / two
    }
}

fn bernoulli_var<F: Real>(mean: F) -> F {
    let quarter = F::from_f64(0.25);
    (mean * (F::one() - mean)).max(F::zero()).min(quarter)
}

fn validate_thresholds<F: Real>(thresholds: &[F]) -> Result<()> {
    if thresholds.len() < 2 {
        return Err(Error::invalid("need at least two thresholds (0 and 1)"));
    }
    if thresholds[0] != F::zero() || *thresholds.last().unwrap() != F::one() {
        return Err(Error::invalid("thresholds must start at 0 and end at 1"));
    }
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("thresholds must be strictly increasing"));
    }
    Ok(())
}

/// `Σ_h W_h²·s_h²/n_h` with counts from the Neyman allocation; `+∞` when a
/// stratum is empty.
fn stratified_objective<F: Real>(
    pops: &[usize],
    weights: &[F],
    s2: &[F],
    n_budget: usize,
    n_threshold: usize,
) -> F {
    if pops.iter().any(|&p| p == 0) {
        return F::infinity();
    }
    let ney: Vec<F> = weights
        .iter()
        .zip(s2)
        .map(|(&w, &v)| w * v.sqrt())
        .collect();
    let plan = allocate_counts(pops, &ney, n_budget, n_threshold);
    let mut obj = F::zero();
    for h in 0..pops.len() {
        obj += weights[h] * weights[h] * s2[h] / F::from_count(plan.counts()[h]);
    }
    obj
}

fn objective_of_strata<F: Real>(strata: &[Stratum<F>], n_budget: usize, n_threshold: usize) -> F {
    let pops: Vec<usize> = strata.iter().map(|s| s.n_pop()).collect();
    let weights: Vec<F> = strata.iter().map(|s| s.weight()).collect();
    let s2: Vec<F> = strata.iter().map(|s| s.s2_proxy()).collect();
    stratified_objective(&pops, &weights, &s2, n_budget, n_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::PositiveSet;

    fn binary_pool(collapsed: &[f64]) -> SamplePool<f64> {
        let labels = vec![0u16; collapsed.len()];
        let scores: Vec<f64> = collapsed.iter().flat_map(|&p| [1.0 - p, p]).collect();
        SamplePool::with_scores(labels, 2, scores).unwrap()
    }

    #[test]
    fn identical_scores_give_single_stratum() {
        let collapsed = vec![0.5; 100];
        let pool = binary_pool(&collapsed);
        let tree =
            build_stratified_tree(&pool, &collapsed, &TreeParams::new(10), None).unwrap();
        assert_eq!(tree.num_strata(), 1);
        assert_eq!(tree.thresholds(), &[0.0, 1.0]);
        assert_eq!(tree.strata()[0].n_pop(), 100);
    }

    #[test]
    fn two_cluster_split_lands_between_clusters() {
        let mut collapsed = vec![0.05; 500];
        collapsed.extend(vec![0.95; 500]);
        let pool = binary_pool(&collapsed);
        let params = TreeParams {
            depth_limit: 2,
            ..TreeParams::new(100)
        };
        let tree = build_stratified_tree(&pool, &collapsed, &params, None).unwrap();
        assert_eq!(tree.num_strata(), 2);
        let t = tree.thresholds()[1];
        assert!(t > 0.05 && t <= 0.95, "threshold {t}");

        let single =
            candidate_split_objective(&[0.0, 1.0], &collapsed, 100, 2).unwrap();
        assert!(tree.objective_value() < single);

        // The chosen split minimizes the objective over every candidate
        // threshold (enumeration oracle).
        let best_enumerated = (1..1000)
            .map(|i| i as f64 / 1000.0)
            .filter(|&t| t > 0.05 && t <= 0.95)
            .map(|t| candidate_split_objective(&[0.0, t, 1.0], &collapsed, 100, 2).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(tree.objective_value() <= best_enumerated + 1e-15);
    }

    #[test]
    fn uniform_scores_beat_single_stratum_and_grid() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let collapsed: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let pool = binary_pool(&collapsed);
        let params = TreeParams::new(100); // depth 5, threshold 2
        let tree = build_stratified_tree(&pool, &collapsed, &params, None).unwrap();
        assert!(tree.num_strata() <= 16);

        let mean = collapsed.iter().sum::<f64>() / 1000.0;
        let single_obj = mean * (1.0 - mean) / 100.0;
        assert!(tree.objective_value() <= single_obj);

        // Exhaustive single-split grid search at 0.01 resolution: five levels
        // of accepted splits must do at least as well as the best of these.
        let grid_best = (1..100)
            .map(|i| i as f64 / 100.0)
            .filter_map(|t| {
                candidate_split_objective(&[0.0, t, 1.0], &collapsed, 100, 2)
                    .ok()
                    .filter(|o| o.is_finite())
            })
            .fold(f64::INFINITY, f64::min);
        assert!(
            tree.objective_value() <= grid_best,
            "tree {} vs grid {}",
            tree.objective_value(),
            grid_best
        );
    }

    #[test]
    fn accepted_splits_never_increase_objective() {
        // Partition + monotonicity invariants on a mixed pool.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4);
        let collapsed: Vec<f64> = (0..400)
            .map(|_| {
                let x: f64 = rng.random();
                x * x
            })
            .collect();
        let pool = binary_pool(&collapsed);
        let params = TreeParams::new(60);
        let tree = build_stratified_tree(&pool, &collapsed, &params, None).unwrap();

        let total: usize = tree.strata().iter().map(|s| s.n_pop()).sum();
        assert_eq!(total, 400);
        let wsum: f64 = tree.strata().iter().map(|s| s.weight()).sum();
        assert!((wsum - 1.0).abs() < 1e-12);

        // Member assignment agrees with stratum_of on every unit.
        for (h, s) in tree.strata().iter().enumerate() {
            for &id in s.member_ids() {
                assert_eq!(tree.stratum_of(collapsed[id.index()]), h);
            }
            assert!(s.s2_proxy() >= 0.0 && s.s2_proxy() <= 0.25);
        }

        let single = candidate_split_objective(&[0.0, 1.0], &collapsed, 60, 2).unwrap();
        assert!(tree.objective_value() <= single);
    }

    #[test]
    fn objective_examples() {
        // Single stratum, p̂ = 0.1, n = 10000 → 9.0e-6.
        let collapsed = vec![0.1f64; 20000];
        let obj = candidate_split_objective(&[0.0, 1.0], &collapsed, 10_000, 2).unwrap();
        assert!(((obj - 9.0e-6) / 9.0e-6).abs() < 1e-12);

        // Two pure strata → 0.
        let mut collapsed = vec![0.0f64; 500];
        collapsed.extend(vec![1.0; 500]);
        let obj = candidate_split_objective(&[0.0, 0.5, 1.0], &collapsed, 100, 2).unwrap();
        assert_eq!(obj, 0.0);

        // Hand evaluation: W = (0.5, 0.5), proxies (0.09, 0.01), n = 100 →
        // allocation (75, 25), objective 0.25·0.09/75 + 0.25·0.01/25 = 4e-4.
        // Scores 0.1 (p(1−p) = 0.09) and ~0.99886 has no closed proxy, so
        // drive the numbers through explicit stats instead.
        let pops = [1000usize, 1000];
        let weights = [0.5f64, 0.5];
        let s2 = [0.09f64, 0.01];
        let obj = stratified_objective(&pops, &weights, &s2, 100, 2);
        assert!((obj - 4.0e-4).abs() < 1e-18, "obj {obj}");
    }

    #[test]
    fn empty_stratum_rejected_as_infinite() {
        let collapsed = vec![0.2f64; 10];
        let obj = candidate_split_objective(&[0.0, 0.5, 1.0], &collapsed, 5, 1).unwrap();
        assert!(obj.is_infinite());
    }

    #[test]
    fn malformed_thresholds_are_errors() {
        let collapsed = vec![0.2f64; 10];
        assert!(candidate_split_objective(&[0.0f64], &collapsed, 5, 1).is_err());
        assert!(candidate_split_objective(&[0.1, 1.0], &collapsed, 5, 1).is_err());
        assert!(candidate_split_objective(&[0.0, 0.5, 0.5, 1.0], &collapsed, 5, 1).is_err());
    }

    #[test]
    fn guardrail_equality_rejects() {
        // Stratification identical to no-split: both sides of the condition
        // are equal and the ≥ comparison rejects.
        let weights = [1.0f64];
        let counts = [100usize];
        let per_class = vec![vec![0.09f64]];
        let global = [0.09f64];
        assert!(!guardrail_check(&weights, &counts, &per_class, &global, 100));
    }

    #[test]
    fn guardrail_perfect_separation_accepts() {
        let weights = [0.5f64, 0.5];
        let counts = [50usize, 50];
        let per_class = vec![vec![0.0f64, 0.0]];
        let global = [0.09f64];
        assert!(guardrail_check(&weights, &counts, &per_class, &global, 100));
    }

    #[test]
    fn guardrail_adversarial_class_rejects() {
        // Two 10% positive classes; the allocation starves stratum 1 where
        // class 2 lives. Class 1 comes out ahead of SRS, class 2 does not,
        // so the split must be rejected. Both sides checked numerically.
        let weights = [0.5f64, 0.5];
        let counts = [98usize, 2];
        let class1 = vec![0.2 * 0.8, 0.0];
        let class2 = vec![0.0, 0.2 * 0.8];
        let global = [0.1 * 0.9, 0.1 * 0.9];
        let n = 100;

        let lhs1: f64 = 0.25 * class1[0] / 98.0;
        let rhs: f64 = global[0] / n as f64;
        assert!(lhs1 < rhs, "class 1 must be helped: {lhs1} vs {rhs}");
        let lhs2: f64 = 0.25 * class2[1] / 2.0;
        assert!(lhs2 >= rhs, "class 2 must be hurt: {lhs2} vs {rhs}");

        assert!(!guardrail_check(
            &weights,
            &counts,
            &[class1.clone(), class2.clone()],
            &global,
            n
        ));
        // Class 2 alone (without the adversarial stratum) would pass.
        assert!(guardrail_check(
            &weights,
            &[50, 50],
            &[class1, vec![0.08, 0.08]],
            &global,
            n
        ));
    }

    #[test]
    fn guardrail_built_tree_satisfies_eq3_strictly() {
        // A tree that does split under the guardrail ends up with every
        // positive class strictly better than SRS at the same budget.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let n = 600;
        let mut labels = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(3 * n);
        for i in 0..n {
            let (label, q) = match i % 10 {
                0 => (1u16, [0.15, 0.7, 0.15]),
                1 => (2u16, [0.2, 0.1, 0.7]),
                _ => (0u16, [0.85, 0.1, 0.05]),
            };
            let jitter: f64 = rng.random::<f64>() * 0.05;
            let mut row = [q[0] - jitter, q[1] + jitter / 2.0, q[2] + jitter / 2.0];
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= sum);
            labels.push(label);
            scores.extend(row);
        }
        let pool = SamplePool::with_scores(labels, 3, scores).unwrap();
        let positive = PositiveSet::new([1, 2], 3).unwrap();
        let collapsed = crate::sampling::collapse_scores(&pool, &positive).unwrap();
        let guard = GuardrailScores::from_pool(&pool, &positive).unwrap();
        let params = TreeParams::new(120);
        let tree = build_stratified_tree(&pool, &collapsed, &params, Some(&guard)).unwrap();
        if tree.num_strata() > 1 {
            let plan = crate::sampling::neyman_allocate(&tree, 120, 2).unwrap();
            for (m, &gs2) in guard.global_s2().iter().enumerate() {
                let lhs: f64 = tree
                    .strata()
                    .iter()
                    .zip(plan.counts())
                    .map(|(s, &nh)| s.weight().powi(2) * s.s2m_proxy()[m] / nh as f64)
                    .sum();
                assert!(lhs < gs2 / 120.0, "class {m}: {lhs} vs {}", gs2 / 120.0);
            }
        } else {
            panic!("expected the guardrail tree to split on this pool");
        }
    }

    #[test]
    fn depth_limit_bounds_strata() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        let collapsed: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let pool = binary_pool(&collapsed);
        for k in 1..=4 {
            let params = TreeParams {
                depth_limit: k,
                ..TreeParams::new(100)
            };
            let tree = build_stratified_tree(&pool, &collapsed, &params, None).unwrap();
            assert!(tree.num_strata() <= 1 << (k - 1));
        }
    }

    #[test]
    fn from_thresholds_assigns_by_interval_convention() {
        let collapsed = vec![0.1, 0.5, 0.5, 0.9, 1.0];
        let pool = binary_pool(&collapsed);
        let tree =
            StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 0.5, 1.0], 4, 1).unwrap();
        // 0.5 sits in the upper stratum ([0.5, 1] closed at 1).
        assert_eq!(tree.strata()[0].n_pop(), 1);
        assert_eq!(tree.strata()[1].n_pop(), 4);
        assert_eq!(tree.stratum_of(1.0), 1);
        assert_eq!(tree.stratum_of(0.5), 1);
        assert_eq!(tree.stratum_of(0.49), 0);
    }
}
