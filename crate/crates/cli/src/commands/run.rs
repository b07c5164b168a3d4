use anyhow::Context;
use strate::simulation::monte_carlo;

use crate::output::write_run_outputs;

use super::{configure_threads, load_experiment_config, CliError, RunArgs};

pub fn execute(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = load_experiment_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.replications {
        cfg.replications = reps;
        cfg.validate()
            .map_err(|e| CliError::Config(format!("--replications {reps}: {e}")))?;
    }
    configure_threads(args.threads);

    let report = monte_carlo(&cfg)
        .context("experiment failed")
        .map_err(CliError::Runtime)?;
    write_run_outputs(&args.out, &report, args.threads)?;
    println!(
        "run complete: {} strategies × {} rounds × {} replications → {}",
        cfg.strategies.len(),
        cfg.rounds,
        cfg.replications,
        args.out.display()
    );
    Ok(())
}
