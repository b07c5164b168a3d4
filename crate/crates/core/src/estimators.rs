//! Design-based class-rate estimation: per-round stratified estimates with
//! finite-population-corrected variance, and the cross-round combination.
//!
//! The per-round estimator is `Ŷ_t = Σ_h W_h·ȳ_th`, with `ȳ_th` the
//! positive-label fraction among the stratum's selected units — fresh *and*
//! reused, since both were drawn by the design and dropping reused units
//! would bias strata toward never-before-selected units. Its variance
//! estimate is `Σ_h W_h²(1−n_h/N_h)·s_h²/n_h` with
//! `s_h² = n_h/(n_h−1)·p̂_h(1−p̂_h)` (zero for singleton strata, flagged).
//!
//! Rounds are combined by an unweighted mean; the combined variance uses the
//! independence approximation `(1/T²)Σ_t v_t` and is labeled approximate in
//! every report that carries it.

use crate::error::{Error, Result};
use crate::pool::{PositiveSet, SamplePool};
use crate::sampling::{SampleDraw, StratifiedTree};
use crate::scalar::Real;

/// Per-stratum pieces of a round estimate (one entry per positive class in
/// each vector).
#[derive(Debug, Clone)]
pub struct StratumEstimate<F> {
    pub weight: F,
    pub n_sampled: usize,
    pub n_pop: usize,
    /// ȳ_th per positive class.
    pub class_means: Vec<F>,
    /// Within-stratum sample variance s_th² per positive class.
    pub class_sample_var: Vec<F>,
}

/// Unbiased stratified estimate for one round.
#[derive(Debug, Clone)]
pub struct RoundEstimate<F> {
    pub round: usize,
    /// Ŷ_t per positive class.
    pub estimate: Vec<F>,
    /// Estimated sampling variance per positive class.
    pub variance_est: Vec<F>,
    /// Annotation cost this round.
    pub n_labeled_fresh: usize,
    pub per_stratum: Vec<StratumEstimate<F>>,
    /// True when some stratum had n_h = 1 and its variance was recorded 0.
    pub singleton_strata: bool,
}

/// Cross-round combination of per-round estimates.
#[derive(Debug, Clone)]
pub struct FinalEstimate<F> {
    /// Mean of round estimates, per positive class.
    pub estimate: Vec<F>,
    pub rounds: usize,
    /// (1/T²)·Σ_t variance_est_t — independence approximation.
    pub variance_est: Vec<F>,
    pub per_round: Vec<RoundEstimate<F>>,
}

/// Compute the stratified round estimate from a draw with revealed labels.
pub fn round_estimate<F: Real>(
    pool: &SamplePool<F>,
    tree: &StratifiedTree<F>,
    draw: &SampleDraw,
    positive: &PositiveSet,
) -> Result<RoundEstimate<F>> {
    if draw.per_stratum_ids().len() != tree.num_strata() {
        return Err(Error::mismatch(format!(
            "draw covers {} strata, tree has {}",
            draw.per_stratum_ids().len(),
            tree.num_strata()
        )));
    }
    let m = positive.len();
    let mut estimate = vec![F::zero(); m];
    let mut variance_est = vec![F::zero(); m];
    let mut per_stratum = Vec::with_capacity(tree.num_strata());
    let mut singleton = false;

    for (stratum, ids) in tree.strata().iter().zip(draw.per_stratum_ids()) {
        let n_h = ids.len();
        let w = stratum.weight();
        if n_h == 0 {
            if w > F::zero() {
                return Err(Error::invariant(
                    "stratum with positive weight received no sample",
                ));
            }
            per_stratum.push(StratumEstimate {
                weight: w,
                n_sampled: 0,
                n_pop: stratum.n_pop(),
                class_means: vec![F::zero(); m],
                class_sample_var: vec![F::zero(); m],
            });
            continue;
        }
        let mut counts = vec![0usize; m];
        for &id in ids {
            let label = pool.label(id).ok_or_else(|| {
                Error::invariant(format!("selected unit {id} has no revealed label"))
            })?;
            for (j, &class) in positive.classes().iter().enumerate() {
                if label == class {
                    counts[j] += 1;
                }
            }
        }
        let n_pop = stratum.n_pop();
        let nh = F::from_count(n_h);
        let fpc = F::one() - nh / F::from_count(n_pop);
        let mut class_means = Vec::with_capacity(m);
        let mut class_sample_var = Vec::with_capacity(m);
        for j in 0..m {
            let p_hat = F::from_count(counts[j]) / nh;
            let s2 = if n_h == 1 {
                singleton = true;
                F::zero()
            } else {
                nh / (nh - F::one()) * p_hat * (F::one() - p_hat)
            };
            estimate[j] += w * p_hat;
            variance_est[j] += w * w * fpc * s2 / nh;
            class_means.push(p_hat);
            class_sample_var.push(s2);
        }
        per_stratum.push(StratumEstimate {
            weight: w,
            n_sampled: n_h,
            n_pop,
            class_means,
            class_sample_var,
        });
    }

    Ok(RoundEstimate {
        round: draw.round(),
        estimate,
        variance_est,
        n_labeled_fresh: draw.fresh_ids().len(),
        per_stratum,
        singleton_strata: singleton,
    })
}

/// Unweighted mean of round estimates with the independence-approximation
/// variance.
pub fn combine_rounds<F: Real>(rounds: &[RoundEstimate<F>]) -> Result<FinalEstimate<F>> {
    if rounds.is_empty() {
        return Err(Error::invalid("cannot combine zero rounds"));
    }
    let m = rounds[0].estimate.len();
    if rounds.iter().any(|r| r.estimate.len() != m) {
        return Err(Error::invalid(
            "rounds disagree on the number of positive classes",
        ));
    }
    let t = F::from_count(rounds.len());
    let mut estimate = vec![F::zero(); m];
    let mut variance_est = vec![F::zero(); m];
    for r in rounds {
        for j in 0..m {
            estimate[j] += r.estimate[j];
            variance_est[j] += r.variance_est[j];
        }
    }
    for j in 0..m {
        estimate[j] = estimate[j] / t;
        variance_est[j] = variance_est[j] / (t * t);
    }
    Ok(FinalEstimate {
        estimate,
        rounds: rounds.len(),
        variance_est,
        per_round: rounds.to_vec(),
    })
}

/// Simple-random-sampling reference variance `p(1−p)/n` (the comparison
/// baseline; no finite-population correction).
pub fn srs_reference_variance<F: Real>(p: F, n: usize) -> F {
    debug_assert!(p >= F::zero() && p <= F::one());
    debug_assert!(n >= 1);
    p * (F::one() - p) / F::from_count(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::UnitId;
    use crate::sampling::{draw_stratified_sample, neyman_allocate, StratifiedTree};
    use itertools::Itertools;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Pool with the given hidden binary labels, all revealed up front, and
    /// collapsed scores that put the first `split_at` units below 0.5.
    fn revealed_pool(labels: &[u16], split_at: usize) -> (SamplePool<f64>, Vec<f64>) {
        let collapsed: Vec<f64> = (0..labels.len())
            .map(|i| if i < split_at { 0.2 } else { 0.8 })
            .collect();
        let scores: Vec<f64> = collapsed.iter().flat_map(|&p| [1.0 - p, p]).collect();
        let mut pool = SamplePool::with_scores(labels.to_vec(), 2, scores).unwrap();
        for id in pool.ids().collect::<Vec<_>>() {
            pool.reveal_label(id, 0);
        }
        (pool, collapsed)
    }

    #[test]
    fn census_reproduces_population_rate_exactly() {
        let labels = [1, 0, 0, 1, 0, 0, 1, 1, 0, 1];
        let (pool, collapsed) = revealed_pool(&labels, 5);
        let tree =
            StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 0.5, 1.0], 10, 2).unwrap();
        let plan = neyman_allocate(&tree, 10, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let draw = draw_stratified_sample(&pool, &tree, &plan, 1, &mut rng).unwrap();
        let positive = PositiveSet::new([1], 2).unwrap();
        let est = round_estimate(&pool, &tree, &draw, &positive).unwrap();
        assert!((est.estimate[0] - 0.5).abs() < 1e-15);
        assert_eq!(est.variance_est[0], 0.0, "fpc zeroes a census");
    }

    #[test]
    fn single_stratum_variance_near_table_anchor() {
        // p̂ = 0.1 over n = 10000 from a large pool: variance_est is the
        // p(1−p)/n anchor up to fpc and the n/(n−1) factor.
        let n_pop = 1_000_000usize;
        let mut labels = vec![0u16; n_pop];
        for l in labels.iter_mut().take(n_pop / 10) {
            *l = 1;
        }
        let (pool, collapsed) = revealed_pool(&labels, n_pop);
        let tree =
            StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 1.0], 10_000, 2).unwrap();
        let plan = neyman_allocate(&tree, 10_000, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let draw = draw_stratified_sample(&pool, &tree, &plan, 1, &mut rng).unwrap();
        let positive = PositiveSet::new([1], 2).unwrap();
        let est = round_estimate(&pool, &tree, &draw, &positive).unwrap();
        assert!((est.estimate[0] - 0.1).abs() < 0.01);
        assert!(
            (est.variance_est[0] - 9.0e-6).abs() < 0.5e-6,
            "variance_est {}",
            est.variance_est[0]
        );
    }

    #[test]
    fn enumeration_oracle_exact_unbiasedness() {
        // N = 12, two strata of 6, plan (2, 2): brute-force every draw.
        let labels = [1, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1];
        let (pool, collapsed) = revealed_pool(&labels, 6);
        let tree =
            StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 0.5, 1.0], 4, 2).unwrap();
        let positive = PositiveSet::new([1], 2).unwrap();
        let truth = labels.iter().filter(|&&l| l == 1).count() as f64 / 12.0;

        let strata_ids: Vec<Vec<UnitId>> = tree
            .strata()
            .iter()
            .map(|s| s.member_ids().to_vec())
            .collect();
        let mut estimates = Vec::new();
        let mut var_ests = Vec::new();
        for combo_a in strata_ids[0].iter().copied().combinations(2) {
            for combo_b in strata_ids[1].iter().copied().combinations(2) {
                let draw =
                    SampleDraw::assemble(&pool, 1, vec![combo_a.clone(), combo_b.clone()]);
                let est = round_estimate(&pool, &tree, &draw, &positive).unwrap();
                estimates.push(est.estimate[0]);
                var_ests.push(est.variance_est[0]);
            }
        }
        assert_eq!(estimates.len(), 15 * 15);
        let mean: f64 = estimates.iter().sum::<f64>() / estimates.len() as f64;
        assert!((mean - truth).abs() < 1e-12, "bias {}", mean - truth);

        // Mean estimated variance matches the enumerated design variance.
        let design_var: f64 = estimates
            .iter()
            .map(|e| (e - truth).powi(2))
            .sum::<f64>()
            / estimates.len() as f64;
        let mean_var_est: f64 = var_ests.iter().sum::<f64>() / var_ests.len() as f64;
        assert!(
            (mean_var_est - design_var).abs() / design_var < 0.05,
            "estimated {mean_var_est} vs enumerated {design_var}"
        );
    }

    #[test]
    fn estimate_reconstructs_from_per_stratum() {
        let labels = [1, 0, 1, 0, 0, 0, 1, 1];
        let (pool, collapsed) = revealed_pool(&labels, 4);
        let tree =
            StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 0.5, 1.0], 4, 2).unwrap();
        let plan = neyman_allocate(&tree, 4, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let draw = draw_stratified_sample(&pool, &tree, &plan, 3, &mut rng).unwrap();
        let positive = PositiveSet::new([1], 2).unwrap();
        let est = round_estimate(&pool, &tree, &draw, &positive).unwrap();
        let rebuilt: f64 = est
            .per_stratum
            .iter()
            .map(|s| s.weight * s.class_means[0])
            .sum();
        assert!((est.estimate[0] - rebuilt).abs() < 1e-12);
        assert!(est.estimate[0] >= 0.0 && est.estimate[0] <= 1.0);
        assert!(est.variance_est[0] >= 0.0);
        assert_eq!(est.round, 3);
    }

    #[test]
    fn singleton_stratum_is_flagged_not_fatal() {
        let labels = [1, 0, 0, 1];
        let (pool, collapsed) = revealed_pool(&labels, 2);
        let tree =
            StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 0.5, 1.0], 2, 1).unwrap();
        let draw = SampleDraw::assemble(
            &pool,
            1,
            vec![vec![UnitId(0)], vec![UnitId(2)]],
        );
        let positive = PositiveSet::new([1], 2).unwrap();
        let est = round_estimate(&pool, &tree, &draw, &positive).unwrap();
        assert!(est.singleton_strata);
        assert_eq!(est.variance_est[0], 0.0);
    }

    #[test]
    fn combine_identity_and_mean() {
        let labels = [1, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1];
        let (pool, collapsed) = revealed_pool(&labels, 6);
        let tree =
            StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 0.5, 1.0], 4, 2).unwrap();
        let plan = neyman_allocate(&tree, 4, 2).unwrap();
        let positive = PositiveSet::new([1], 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let draw = draw_stratified_sample(&pool, &tree, &plan, 1, &mut rng).unwrap();
        let r1 = round_estimate(&pool, &tree, &draw, &positive).unwrap();

        let single = combine_rounds(&[r1.clone()]).unwrap();
        assert_eq!(single.estimate, r1.estimate);
        assert_eq!(single.variance_est, r1.variance_est);
        assert_eq!(single.rounds, 1);

        let mut r2 = r1.clone();
        r2.estimate = vec![0.12];
        let mut r1b = r1;
        r1b.estimate = vec![0.08];
        let combined = combine_rounds(&[r1b, r2]).unwrap();
        assert!((combined.estimate[0] - 0.10).abs() < 1e-15);
        // Reconstruction from per_round alone.
        let rebuilt: f64 = combined
            .per_round
            .iter()
            .map(|r| r.estimate[0])
            .sum::<f64>()
            / combined.rounds as f64;
        assert!((combined.estimate[0] - rebuilt).abs() < 1e-12);
    }

    #[test]
    fn combine_rejects_empty_and_mismatched() {
        assert!(combine_rounds::<f64>(&[]).is_err());
        let a = RoundEstimate {
            round: 1,
            estimate: vec![0.1],
            variance_est: vec![0.0],
            n_labeled_fresh: 0,
            per_stratum: vec![],
            singleton_strata: false,
        };
        let mut b = a.clone();
        b.estimate = vec![0.1, 0.2];
        b.variance_est = vec![0.0, 0.0];
        assert!(combine_rounds(&[a, b]).is_err());
    }

    #[test]
    fn monte_carlo_unbiasedness_over_rounds() {
        // T = 4 rounds on a fixed p = 0.1 population; the mean of the
        // combined estimate over replications stays within 3 combined
        // standard errors of the truth.
        let n_pop = 200usize;
        let mut labels = vec![0u16; n_pop];
        for l in labels.iter_mut().take(20) {
            *l = 1;
        }
        let (pool, collapsed) = revealed_pool(&labels, 100);
        let tree =
            StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 0.5, 1.0], 20, 2).unwrap();
        let plan = neyman_allocate(&tree, 20, 2).unwrap();
        let positive = PositiveSet::new([1], 2).unwrap();
        let reps = 2000;
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let mut finals = Vec::with_capacity(reps);
        for _ in 0..reps {
            let rounds: Vec<RoundEstimate<f64>> = (1..=4)
                .map(|t| {
                    let draw = draw_stratified_sample(&pool, &tree, &plan, t, &mut rng).unwrap();
                    round_estimate(&pool, &tree, &draw, &positive).unwrap()
                })
                .collect();
            finals.push(combine_rounds(&rounds).unwrap().estimate[0]);
        }
        let mean: f64 = finals.iter().sum::<f64>() / reps as f64;
        let var: f64 =
            finals.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let tol = 3.0 * (var / reps as f64).sqrt();
        assert!(
            (mean - 0.1).abs() <= tol,
            "mean {mean} deviates from 0.1 beyond {tol}"
        );
    }

    #[test]
    fn srs_reference_examples() {
        assert!((srs_reference_variance(0.1f64, 10_000) - 9.0e-6).abs() < 1e-20);
        assert_eq!(srs_reference_variance(0.0f64, 5), 0.0);
        assert_eq!(srs_reference_variance(1.0f64, 5), 0.0);
        assert!((srs_reference_variance(0.5f64, 4) - 0.0625).abs() < 1e-20);
    }
}
