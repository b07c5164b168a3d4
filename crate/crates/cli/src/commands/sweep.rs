use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use strate::simulation::{monte_carlo, ExperimentConfig, ModelConfig, RunReport};
use strate::QueryStrategy;

use crate::output::{fmt_opt, fmt_sig, write_run_outputs, SCHEMA_VERSION, SUMMARY_COLUMNS};

use super::{configure_threads, CliError, SweepArgs};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    pub n_init: Vec<usize>,
    pub noise_sigma: Vec<f64>,
    pub miscalibration_gamma: Vec<f64>,
    pub strategy: Vec<QueryStrategy>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub axes: SweepAxes,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_max_points() -> usize {
    256
}

/// One grid point: which axis values apply (None = axis not swept).
#[derive(Debug, Clone)]
struct GridPoint {
    n_init: Option<usize>,
    noise_sigma: Option<f64>,
    miscalibration_gamma: Option<f64>,
    strategy: Option<QueryStrategy>,
}

pub fn execute(args: SweepArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut sweep: SweepConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        sweep.base.seed = seed;
    }
    if let Some(reps) = args.replications {
        sweep.base.replications = reps;
    }
    sweep
        .base
        .validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;

    let oracle_axes =
        !sweep.axes.noise_sigma.is_empty() || !sweep.axes.miscalibration_gamma.is_empty();
    if oracle_axes && !matches!(sweep.base.model, ModelConfig::Oracle { .. }) {
        return Err(CliError::Config(
            "noise_sigma / miscalibration_gamma axes require an oracle model".into(),
        ));
    }

    let points = grid_points(&sweep.axes);
    if points.len() > sweep.max_points {
        return Err(CliError::Config(format!(
            "sweep grid has {} points, above the cap of {} (raise max_points to proceed)",
            points.len(),
            sweep.max_points
        )));
    }
    configure_threads(args.threads);

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("create output directory {}", args.out.display()))
        .map_err(CliError::Runtime)?;

    let mut rows: Vec<(usize, GridPoint, RunReport)> = Vec::with_capacity(points.len());
    for (i, point) in points.into_iter().enumerate() {
        let cfg = apply_point(&sweep.base, &point)
            .map_err(|e| CliError::Config(format!("grid point {i}: {e}")))?;
        let report = monte_carlo(&cfg)
            .with_context(|| format!("grid point {i} failed"))
            .map_err(CliError::Runtime)?;
        let dir = args.out.join(format!("point_{i:03}"));
        write_run_outputs(&dir, &report, args.threads)?;
        rows.push((i, point, report));
    }
    write_sweep_csv(&args.out, &rows).map_err(CliError::Runtime)?;
    println!("sweep complete: {} points → {}", rows.len(), args.out.display());
    Ok(())
}

/// Cartesian product over the non-empty axes; no axes means the single
/// unmodified base point.
fn grid_points(axes: &SweepAxes) -> Vec<GridPoint> {
    fn axis<T: Clone>(values: &[T]) -> Vec<Option<T>> {
        if values.is_empty() {
            vec![None]
        } else {
            values.iter().cloned().map(Some).collect()
        }
    }
    let n_init = axis(&axes.n_init);
    let sigma = axis(&axes.noise_sigma);
    let gamma = axis(&axes.miscalibration_gamma);
    let strategy = axis(&axes.strategy);

    let mut points = Vec::new();
    for &ni in &n_init {
        for &s in &sigma {
            for &g in &gamma {
                for st in &strategy {
                    points.push(GridPoint {
                        n_init: ni,
                        noise_sigma: s,
                        miscalibration_gamma: g,
                        strategy: st.clone(),
                    });
                }
            }
        }
    }
    points
}

fn apply_point(
    base: &ExperimentConfig,
    point: &GridPoint,
) -> Result<ExperimentConfig, strate::Error> {
    let mut cfg = base.clone();
    if let Some(ni) = point.n_init {
        cfg.n_init = ni;
    }
    if point.noise_sigma.is_some() || point.miscalibration_gamma.is_some() {
        if let ModelConfig::Oracle {
            noise_sigma,
            miscalibration_gamma,
        } = &mut cfg.model
        {
            if let Some(s) = point.noise_sigma {
                *noise_sigma = s;
            }
            if let Some(g) = point.miscalibration_gamma {
                *miscalibration_gamma = g;
            }
        }
    }
    if let Some(st) = &point.strategy {
        cfg.strategies = vec![st.clone()];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_sweep_csv(
    dir: &Path,
    rows: &[(usize, GridPoint, RunReport)],
) -> anyhow::Result<()> {
    let file = std::fs::File::create(dir.join("sweep.csv")).context("create sweep.csv")?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "# schema_version={SCHEMA_VERSION} kind=sweep")?;
    writeln!(
        w,
        "point,n_init,noise_sigma,miscalibration_gamma,strategy_axis,{SUMMARY_COLUMNS}"
    )?;
    for (i, point, report) in rows {
        for row in &report.per_round {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                i,
                point.n_init.map(|v| v.to_string()).unwrap_or_default(),
                point.noise_sigma.map(fmt_sig).unwrap_or_default(),
                point.miscalibration_gamma.map(fmt_sig).unwrap_or_default(),
                point
                    .strategy
                    .as_ref()
                    .map(|s| s.name().to_string())
                    .unwrap_or_default(),
                row.strategy,
                row.round,
                row.class,
                fmt_sig(row.mean_estimate),
                fmt_opt(row.mean_variance_est),
                fmt_sig(row.empirical_variance),
                fmt_sig(row.srs_reference_variance),
                fmt_opt(row.variance_ratio_vs_srs),
                fmt_sig(row.mean_fresh_cost),
            )?;
        }
    }
    Ok(())
}
