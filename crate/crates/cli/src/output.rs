//! Deterministic report serialization: fixed-precision CSV (12 significant
//! digits, '.' separator, no locale) and schema-versioned JSON. Timestamps
//! live only in the manifest so every other file is byte-reproducible from
//! config + seed + version.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use strate::simulation::{ExperimentConfig, RunReport};

pub const SCHEMA_VERSION: u32 = 1;

/// 12 significant digits, scientific, locale-independent.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.11e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub tool_name: &'static str,
    pub tool_version: &'static str,
    /// Wall-clock stamp; the only non-reproducible byte in any output.
    pub created_unix: u64,
    pub seed_effective: u64,
    pub population_seed_effective: u64,
    pub replications_effective: usize,
    pub threads: Option<usize>,
    pub notes: &'a [String],
    pub config: &'a ExperimentConfig,
}

pub fn write_manifest(dir: &Path, report: &RunReport, threads: Option<usize>) -> Result<()> {
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool_name: env!("CARGO_PKG_NAME"),
        tool_version: env!("CARGO_PKG_VERSION"),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed_effective: report.config.seed,
        population_seed_effective: report.config.population_seed(),
        replications_effective: report.config.replications,
        threads,
        notes: &report.notes,
        config: &report.config,
    };
    let file = File::create(dir.join("manifest.json")).context("create manifest.json")?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_report_json(dir: &Path, report: &RunReport) -> Result<()> {
    let file = File::create(dir.join("report.json")).context("create report.json")?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, report)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub const SUMMARY_COLUMNS: &str = "strategy,round,class,mean_estimate,mean_variance_est,\
empirical_variance,srs_reference_variance,variance_ratio_vs_srs,mean_fresh_cost";

pub fn write_summary_csv(dir: &Path, report: &RunReport) -> Result<()> {
    let file = File::create(dir.join("summary.csv")).context("create summary.csv")?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# schema_version={SCHEMA_VERSION} kind=summary")?;
    writeln!(w, "{SUMMARY_COLUMNS}")?;
    for row in &report.per_round {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
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
    Ok(())
}

pub fn write_histogram_csv(dir: &Path, report: &RunReport) -> Result<()> {
    let file = File::create(dir.join("histogram.csv")).context("create histogram.csv")?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# schema_version={SCHEMA_VERSION} kind=histogram")?;
    writeln!(w, "strategy,round,bin,lower,upper,mean_selected")?;
    for row in &report.histograms {
        let bins = row.bins.len();
        for (b, &count) in row.bins.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row.strategy,
                row.round,
                b,
                fmt_sig(b as f64 / bins as f64),
                fmt_sig((b + 1) as f64 / bins as f64),
                fmt_sig(count),
            )?;
        }
    }
    Ok(())
}

/// Write the full report set for one run into `dir`.
pub fn write_run_outputs(dir: &Path, report: &RunReport, threads: Option<usize>) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("create output directory {}", dir.display()))?;
    write_report_json(dir, report)?;
    write_summary_csv(dir, report)?;
    write_histogram_csv(dir, report)?;
    write_manifest(dir, report, threads)?;
    Ok(())
}
