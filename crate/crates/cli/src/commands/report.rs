use anyhow::Context;
use strate::simulation::RunReport;

use super::{CliError, ReportArgs};

/// Pretty-print the aggregates of an existing report.json.
pub fn execute(args: ReportArgs) -> Result<(), CliError> {
    let path = args.out.join("report.json");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("read {}", path.display()))
        .map_err(CliError::Runtime)?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;

    println!(
        "experiment: N={} K={} rounds={} replications={} seed={}",
        report.config.population.n,
        report.config.population.k,
        report.config.rounds,
        report.config.replications,
        report.config.seed
    );
    println!(
        "true rates: {}",
        report
            .true_rates
            .iter()
            .map(|r| format!("{r:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!();
    println!(
        "{:<6} {:>5} {:>5} {:>14} {:>14} {:>14} {:>10} {:>10}",
        "strat", "round", "class", "mean est", "emp var", "mean var est", "vs srs", "cost"
    );
    for row in &report.per_round {
        println!(
            "{:<6} {:>5} {:>5} {:>14.6e} {:>14.6e} {:>14} {:>10} {:>10.1}",
            row.strategy,
            row.round,
            row.class,
            row.mean_estimate,
            row.empirical_variance,
            row.mean_variance_est
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_else(|| "-".into()),
            row.variance_ratio_vs_srs
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into()),
            row.mean_fresh_cost,
        );
    }
    println!();
    println!(
        "{:<6} {:>5} {:>14} {:>12} {:>14} {:>10} {:>12}",
        "strat", "class", "final est", "bias", "emp var", "cost", "match ratio"
    );
    for f in &report.finals {
        println!(
            "{:<6} {:>5} {:>14.6e} {:>12.3e} {:>14.6e} {:>10.1} {:>12}",
            f.strategy,
            f.class,
            f.mean_final_estimate,
            f.bias,
            f.empirical_variance,
            f.mean_total_cost,
            f.matched_variance_cost_ratio
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    if !report.cold_start.is_empty() {
        println!();
        println!("cold-start sweep:");
        for cs in &report.cold_start {
            println!("  n_init = {}:", cs.n_init);
            for f in &cs.finals {
                println!(
                    "    {:<6} class {} bias {:.3e} emp var {:.6e}",
                    f.strategy, f.class, f.bias, f.empirical_variance
                );
            }
        }
    }
    Ok(())
}
