//! Brute-force unbiasedness oracle over built-in tiny populations.
//!
//! Every stratified draw is enumerated, so the mean of the round estimates
//! is the exact design expectation and their spread is the exact design
//! variance — no Monte Carlo noise anywhere. The single-stratum case is
//! additionally compared against the closed-form without-replacement
//! variance (1 − n/N)·S²/n with S² = N·p(1−p)/(N−1).

use anyhow::anyhow;
use strate::estimators::round_estimate;
use strate::pool::SamplePool;
use strate::sampling::{SampleDraw, StratifiedTree};
use strate::{PositiveSet, UnitId};

use super::{CliError, OracleCheckArgs};

const BIAS_LIMIT: f64 = 1e-12;
const VAR_REL_LIMIT: f64 = 0.05;
const CLOSED_FORM_REL_LIMIT: f64 = 1e-12;

struct CaseResult {
    name: &'static str,
    draws: usize,
    max_bias: f64,
    var_rel_err: f64,
    pass: bool,
}

pub fn execute(_args: OracleCheckArgs) -> Result<(), CliError> {
    let results = vec![
        case_two_strata().map_err(CliError::Runtime)?,
        case_census().map_err(CliError::Runtime)?,
        case_single_stratum_closed_form().map_err(CliError::Runtime)?,
    ];
    let mut all_pass = true;
    for r in &results {
        println!(
            "oracle-check: {:<28} draws={:<5} max|bias|={:.3e} var rel err={:.3e}  {}",
            r.name,
            r.draws,
            r.max_bias,
            r.var_rel_err,
            if r.pass { "PASS" } else { "FAIL" }
        );
        all_pass &= r.pass;
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!(
        "oracle-check: {} ({passed}/{} cases)",
        if all_pass { "PASS" } else { "FAIL" },
        results.len()
    );
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Runtime(anyhow!(
            "oracle-check failed {} of {} cases",
            results.len() - passed,
            results.len()
        )))
    }
}

/// Pool with the given hidden binary labels, everything already annotated,
/// and collapsed scores splitting at 0.5 after `split_at` units.
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

fn combinations(items: &[UnitId], k: usize) -> Vec<Vec<UnitId>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn recurse(
        items: &[UnitId],
        k: usize,
        start: usize,
        current: &mut Vec<UnitId>,
        out: &mut Vec<Vec<UnitId>>,
    ) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..items.len() {
            current.push(items[i]);
            recurse(items, k, i + 1, current, out);
            current.pop();
        }
    }
    recurse(items, k, 0, &mut current, &mut out);
    out
}

/// Enumerate every draw of the design and return (estimates, variance_ests).
fn enumerate_draws(
    pool: &SamplePool<f64>,
    tree: &StratifiedTree<f64>,
    take: &[usize],
    positive: &PositiveSet,
) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let per_stratum: Vec<Vec<Vec<UnitId>>> = tree
        .strata()
        .iter()
        .zip(take)
        .map(|(s, &k)| combinations(s.member_ids(), k))
        .collect();
    let mut estimates = Vec::new();
    let mut var_ests = Vec::new();
    let mut idx = vec![0usize; per_stratum.len()];
    loop {
        let selection: Vec<Vec<UnitId>> = per_stratum
            .iter()
            .zip(&idx)
            .map(|(combos, &i)| combos[i].clone())
            .collect();
        let draw = SampleDraw::assemble(pool, 1, selection);
        let est = round_estimate(pool, tree, &draw, positive)
            .map_err(|e| anyhow!("round_estimate failed: {e}"))?;
        estimates.push(est.estimate[0]);
        var_ests.push(est.variance_est[0]);

        let mut level = per_stratum.len();
        loop {
            if level == 0 {
                return Ok((estimates, var_ests));
            }
            level -= 1;
            idx[level] += 1;
            if idx[level] < per_stratum[level].len() {
                break;
            }
            idx[level] = 0;
        }
    }
}

fn summarize(
    name: &'static str,
    truth: f64,
    estimates: &[f64],
    var_ests: &[f64],
) -> CaseResult {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let max_bias = (mean - truth).abs();
    // Exact design variance: every enumerated draw is equiprobable.
    let design_var = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / n
        - max_bias * max_bias;
    let mean_var_est = var_ests.iter().sum::<f64>() / n;
    let var_rel_err = if design_var > 0.0 {
        (mean_var_est - design_var).abs() / design_var
    } else {
        mean_var_est.abs()
    };
    CaseResult {
        name,
        draws: estimates.len(),
        max_bias,
        var_rel_err,
        pass: max_bias < BIAS_LIMIT && var_rel_err < VAR_REL_LIMIT,
    }
}

/// N = 12, two strata of 6, plan (2, 2): 225 equiprobable draws.
fn case_two_strata() -> anyhow::Result<CaseResult> {
    let labels = [1u16, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1];
    let (pool, collapsed) = revealed_pool(&labels, 6);
    let tree = StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 0.5, 1.0], 4, 2)
        .map_err(|e| anyhow!("tree: {e}"))?;
    let positive = PositiveSet::new([1], 2).map_err(|e| anyhow!("{e}"))?;
    let truth = labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len() as f64;
    let (estimates, var_ests) = enumerate_draws(&pool, &tree, &[2, 2], &positive)?;
    Ok(summarize("two strata (N=12)", truth, &estimates, &var_ests))
}

/// Census: one possible draw, exact estimate, variance exactly zero.
fn case_census() -> anyhow::Result<CaseResult> {
    let labels = [1u16, 0, 1, 0, 0, 0, 1, 0];
    let (pool, collapsed) = revealed_pool(&labels, 4);
    let tree = StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 0.5, 1.0], 8, 2)
        .map_err(|e| anyhow!("tree: {e}"))?;
    let positive = PositiveSet::new([1], 2).map_err(|e| anyhow!("{e}"))?;
    let truth = 3.0 / 8.0;
    let (estimates, var_ests) = enumerate_draws(&pool, &tree, &[4, 4], &positive)?;
    let mut result = summarize("census (N=8)", truth, &estimates, &var_ests);
    // Variance must be exactly zero under full enumeration.
    result.pass = result.pass && var_ests.iter().all(|&v| v == 0.0);
    Ok(result)
}

/// Single stratum, N = 10, n = 3: mean estimated variance must match the
/// closed-form SRSWOR variance to 1e-12 (and the enumeration agrees).
fn case_single_stratum_closed_form() -> anyhow::Result<CaseResult> {
    let labels = [1u16, 0, 0, 1, 0, 1, 0, 0, 1, 0];
    let (pool, collapsed) = revealed_pool(&labels, 10);
    let tree = StratifiedTree::from_thresholds(&pool, &collapsed, &[0.0, 1.0], 3, 1)
        .map_err(|e| anyhow!("tree: {e}"))?;
    let positive = PositiveSet::new([1], 2).map_err(|e| anyhow!("{e}"))?;
    let n_pop = labels.len() as f64;
    let n = 3.0;
    let p = 0.4;
    let truth = p;
    let (estimates, var_ests) = enumerate_draws(&pool, &tree, &[3], &positive)?;
    let mut result = summarize("single stratum (N=10)", truth, &estimates, &var_ests);

    let s2 = n_pop / (n_pop - 1.0) * p * (1.0 - p);
    let closed_form = (1.0 - n / n_pop) * s2 / n;
    let mean_var_est = var_ests.iter().sum::<f64>() / var_ests.len() as f64;
    let rel = (mean_var_est - closed_form).abs() / closed_form;
    println!(
        "oracle-check: single stratum closed form: mean var est {mean_var_est:.12e} vs {closed_form:.12e} (rel {rel:.3e})"
    );
    result.pass = result.pass && rel < CLOSED_FORM_REL_LIMIT;
    Ok(result)
}
