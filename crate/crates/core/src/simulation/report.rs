//! Monte Carlo aggregation: bias, variance, cost, and histogram summaries
//! over replication records.

use serde::{Deserialize, Serialize};

use crate::estimators::srs_reference_variance;

use super::records::ReplicationRecord;
use super::ExperimentConfig;

/// Aggregate for one (strategy, round, positive class) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyRoundAggregate {
    pub strategy: String,
    pub round: usize,
    /// Positive class (original class index).
    pub class: usize,
    pub mean_estimate: f64,
    /// Sample variance of the round estimate across replications.
    pub empirical_variance: f64,
    /// Mean of the per-round estimated variances; absent for UES.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_variance_est: Option<f64>,
    /// p(1−p)/n at this round's budget and the true rate.
    pub srs_reference_variance: f64,
    /// empirical_variance / SRS empirical_variance for the same cell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_ratio_vs_srs: Option<f64>,
    pub mean_fresh_cost: f64,
}

/// Mean selection histogram for one (strategy, round).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramAggregate {
    pub strategy: String,
    pub round: usize,
    /// Mean selected count per bin across replications.
    pub bins: Vec<f64>,
}

/// Aggregate of final (cross-round) estimates per strategy and class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyFinalAggregate {
    pub strategy: String,
    pub class: usize,
    pub true_rate: f64,
    pub mean_final_estimate: f64,
    pub bias: f64,
    pub empirical_variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_variance_est: Option<f64>,
    pub mean_total_cost: f64,
    /// Cost at which this strategy's prefix-combined empirical variance
    /// first drops below SRS's final variance, as a fraction of SRS's total
    /// cost. Design strategies only; absent when never reached.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched_variance_cost_ratio: Option<f64>,
}

/// One cold-start sweep point (an n_init value rerun end to end).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColdStartResult {
    pub n_init: usize,
    pub per_round: Vec<StrategyRoundAggregate>,
    pub finals: Vec<StrategyFinalAggregate>,
    pub replications: Vec<ReplicationRecord>,
}

/// Full machine-readable results of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    /// Realized population rate per positive class (exact by construction).
    pub true_rates: Vec<f64>,
    /// Methodological caveats carried on every report.
    pub notes: Vec<String>,
    pub per_round: Vec<StrategyRoundAggregate>,
    pub histograms: Vec<HistogramAggregate>,
    pub finals: Vec<StrategyFinalAggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cold_start: Vec<ColdStartResult>,
    pub replications: Vec<ReplicationRecord>,
}

pub(super) fn aggregate(
    cfg: &ExperimentConfig,
    true_rates: &[f64],
    records: &[ReplicationRecord],
) -> (
    Vec<StrategyRoundAggregate>,
    Vec<HistogramAggregate>,
    Vec<StrategyFinalAggregate>,
) {
    let n_strategies = cfg.strategies.len();
    let n_classes = true_rates.len();
    let reps = records.len() as f64;
    let mut per_round = Vec::new();
    let mut histograms = Vec::new();
    let mut finals = Vec::new();

    // Per-round cells. Rounds may be truncated by pool exhaustion; aggregate
    // over replications that reached the round.
    for (si, strategy) in cfg.strategies.iter().enumerate() {
        let name = strategy.name().to_string();
        for t in 0..cfg.rounds {
            let rows: Vec<&super::records::RoundRecord> = records
                .iter()
                .filter_map(|r| r.strategies[si].rounds.get(t))
                .collect();
            if rows.is_empty() {
                continue;
            }
            let count = rows.len() as f64;
            for (ci, &class) in cfg.positive_classes.iter().enumerate() {
                let estimates: Vec<f64> = rows.iter().map(|r| r.estimate[ci]).collect();
                let mean = estimates.iter().sum::<f64>() / count;
                let emp_var = sample_variance(&estimates, mean);
                let mean_var_est = if rows.iter().all(|r| r.variance_est.is_some()) {
                    Some(
                        rows.iter()
                            .map(|r| r.variance_est.as_ref().unwrap()[ci])
                            .sum::<f64>()
                            / count,
                    )
                } else {
                    None
                };
                per_round.push(StrategyRoundAggregate {
                    strategy: name.clone(),
                    round: t + 1,
                    class,
                    mean_estimate: mean,
                    empirical_variance: emp_var,
                    mean_variance_est: mean_var_est,
                    srs_reference_variance: srs_reference_variance(
                        true_rates[ci],
                        cfg.batch_sizes[t],
                    ),
                    variance_ratio_vs_srs: None,
                    mean_fresh_cost: rows.iter().map(|r| r.fresh_cost as f64).sum::<f64>()
                        / count,
                });
            }
            let bins = cfg.histogram_bins;
            let mut mean_bins = vec![0.0; bins];
            for r in &rows {
                for (b, &c) in r.histogram.iter().enumerate() {
                    mean_bins[b] += c as f64;
                }
            }
            mean_bins.iter_mut().for_each(|b| *b /= count);
            histograms.push(HistogramAggregate {
                strategy: name.clone(),
                round: t + 1,
                bins: mean_bins,
            });
        }
    }

    // Ratio column against the SRS cell of the same (round, class).
    let srs_cells: Vec<(usize, usize, f64)> = per_round
        .iter()
        .filter(|c| c.strategy == "srs")
        .map(|c| (c.round, c.class, c.empirical_variance))
        .collect();
    for cell in per_round.iter_mut() {
        if let Some(&(_, _, srs_var)) = srs_cells
            .iter()
            .find(|&&(r, cl, _)| r == cell.round && cl == cell.class)
        {
            if srs_var > 0.0 {
                cell.variance_ratio_vs_srs = Some(cell.empirical_variance / srs_var);
            }
        }
    }

    // Finals plus the matched-variance cost ratio against SRS.
    let srs_index = cfg.strategies.iter().position(|s| s.name() == "srs");
    let srs_final_var: Vec<Option<f64>> = (0..n_classes)
        .map(|ci| {
            srs_index.map(|si| {
                let values: Vec<f64> = records
                    .iter()
                    .map(|r| r.strategies[si].final_estimate[ci])
                    .collect();
                let mean = values.iter().sum::<f64>() / reps;
                sample_variance(&values, mean)
            })
        })
        .collect();
    let srs_mean_cost = srs_index.map(|si| {
        records
            .iter()
            .map(|r| r.strategies[si].total_cost as f64)
            .sum::<f64>()
            / reps
    });

    for (si, strategy) in cfg.strategies.iter().enumerate() {
        let name = strategy.name().to_string();
        for (ci, &class) in cfg.positive_classes.iter().enumerate() {
            let values: Vec<f64> = records
                .iter()
                .map(|r| r.strategies[si].final_estimate[ci])
                .collect();
            let mean = values.iter().sum::<f64>() / reps;
            let emp_var = sample_variance(&values, mean);
            let mean_var_est = if records
                .iter()
                .all(|r| r.strategies[si].final_variance_est.is_some())
            {
                Some(
                    records
                        .iter()
                        .map(|r| r.strategies[si].final_variance_est.as_ref().unwrap()[ci])
                        .sum::<f64>()
                        / reps,
                )
            } else {
                None
            };
            let mean_cost = records
                .iter()
                .map(|r| r.strategies[si].total_cost as f64)
                .sum::<f64>()
                / reps;

            let matched = match (strategy.supports_unbiased_estimation(), srs_final_var[ci]) {
                (true, Some(target)) if name != "srs" => matched_variance_ratio(
                    records,
                    si,
                    ci,
                    cfg.rounds,
                    target,
                    srs_mean_cost.unwrap(),
                ),
                _ => None,
            };

            finals.push(StrategyFinalAggregate {
                strategy: name.clone(),
                class,
                true_rate: true_rates[ci],
                mean_final_estimate: mean,
                bias: mean - true_rates[ci],
                empirical_variance: emp_var,
                mean_variance_est: mean_var_est,
                mean_total_cost: mean_cost,
                matched_variance_cost_ratio: matched,
            });
        }
    }
    let _ = n_strategies;

    (per_round, histograms, finals)
}

/// First prefix length t whose combined estimate beats SRS's final
/// variance, reported as mean-cost(t) / mean-SRS-total-cost.
fn matched_variance_ratio(
    records: &[ReplicationRecord],
    si: usize,
    ci: usize,
    rounds: usize,
    srs_final_variance: f64,
    srs_mean_cost: f64,
) -> Option<f64> {
    if srs_mean_cost <= 0.0 {
        return None;
    }
    let reps = records.len() as f64;
    for t in 1..=rounds {
        if records.iter().any(|r| r.strategies[si].rounds.len() < t) {
            return None;
        }
        let prefix: Vec<f64> = records
            .iter()
            .map(|r| {
                r.strategies[si].rounds[..t]
                    .iter()
                    .map(|rr| rr.estimate[ci])
                    .sum::<f64>()
                    / t as f64
            })
            .collect();
        let mean = prefix.iter().sum::<f64>() / reps;
        let var = sample_variance(&prefix, mean);
        if var <= srs_final_variance {
            let mean_cost = records
                .iter()
                .map(|r| r.strategies[si].rounds[t - 1].cumulative_cost as f64)
                .sum::<f64>()
                / reps;
            return Some(mean_cost / srs_mean_cost);
        }
    }
    None
}

fn sample_variance(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}
