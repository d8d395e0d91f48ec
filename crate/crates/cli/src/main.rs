//! Command-line runner for effective-Hamiltonian pipelines.
//!
//! Verbs map onto pipeline prefixes (each stage is checkpointed, so chaining
//! verbs never recomputes finished work): `validate` stops after the
//! environment checks, `critical-value` after the level bisection,
//! `corrector` after the profile export, `curve` after the effective curve,
//! and `verify` runs everything including the parabolic cross-check and the
//! acceptance gates named in the config. `sweep` repeats the run per seed,
//! `emit` writes plot-ready CSVs from a completed artifact directory.
//!
//! Every flag can also be set through an environment variable with the
//! `HJHOMOG_` prefix (`HJHOMOG_CONFIG`, `HJHOMOG_OUT`, `HJHOMOG_SEED`,
//! `HJHOMOG_WINDOW`, `HJHOMOG_THREADS`, `HJHOMOG_FRESH`,
//! `HJHOMOG_TOL_LAMBDA`); explicit flags win.
//!
//! Exit codes: 0 success, 1 hard error (io), 2 config schema violation,
//! 3 pipeline stage failure or failed acceptance gate.

use clap::{Parser, Subcommand};
use hjhomog::pipeline::{
    emit_plots_data, load_config, refresh_manifest_inventory, run_pipeline, run_sweep,
    PipelineError, RunOptions, StageKind,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "hjhomog",
    version,
    about = "Effective Hamiltonians of degenerate viscous Hamilton-Jacobi equations",
    long_about = "Constructs the effective (homogenized) Hamiltonian of\n\
        u_t = a(x) u_xx + H(x, u_x)\n\
        in periodic or seeded random environments via the corrector construction,\n\
        cross-checked by a long-time parabolic solve.\n\n\
        Flags mirror environment variables with the HJHOMOG_ prefix\n\
        (HJHOMOG_CONFIG, HJHOMOG_OUT, HJHOMOG_SEED, HJHOMOG_WINDOW,\n\
        HJHOMOG_THREADS, HJHOMOG_FRESH, HJHOMOG_TOL_LAMBDA); flags win.\n\n\
        Exit codes: 0 ok, 1 hard error, 2 config schema, 3 stage or gate failure."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Run config (TOML, schema "hjhomog-run-v1").
    #[arg(long, global = true, env = "HJHOMOG_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,

    /// Artifact directory.
    #[arg(long, global = true, env = "HJHOMOG_OUT", value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Override the environment seed.
    #[arg(long, global = true, env = "HJHOMOG_SEED", value_name = "N")]
    seed: Option<u64>,

    /// Override the window with [-L/2, L/2].
    #[arg(long, global = true, env = "HJHOMOG_WINDOW", value_name = "L")]
    window: Option<f64>,

    /// Cap the worker pool (1 = bit-reproducible outputs).
    #[arg(long, global = true, env = "HJHOMOG_THREADS", value_name = "N")]
    threads: Option<usize>,

    /// Discard checkpoints and previous artifacts before running.
    #[arg(long, global = true, env = "HJHOMOG_FRESH")]
    fresh: bool,

    /// Override the critical-level bisection tolerance.
    #[arg(long = "tol-lambda", global = true, env = "HJHOMOG_TOL_LAMBDA", value_name = "X")]
    tol_lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check coefficient bounds, growth envelopes, and the window decomposition.
    Validate,
    /// Bisect for the critical level and persist its certificate.
    CriticalValue,
    /// Build corrector profiles at the configured levels and export them.
    Corrector,
    /// Assemble the effective Hamiltonian curve (wings, flat part, tables).
    Curve,
    /// Full pipeline: curve plus the long-time parabolic cross-check and gates.
    Verify,
    /// One pipeline run per configured seed plus an aggregate spread table.
    Sweep,
    /// Write the four plot-ready CSVs from a completed artifact directory.
    Emit,
}

fn main() {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                PipelineError::Config { .. } => 2,
                PipelineError::Stage { .. } | PipelineError::Gate { .. } => 3,
                PipelineError::Io(_) => 1,
            }
        }
    };
    std::process::exit(code);
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let opts = RunOptions {
        fresh: cli.fresh,
        threads: cli.threads,
        seed: cli.seed,
        window: cli.window,
        tol_lambda: cli.tol_lambda,
        stop_after: match cli.cmd {
            Cmd::Validate => Some(StageKind::Validate),
            Cmd::CriticalValue => Some(StageKind::Critical),
            Cmd::Corrector => Some(StageKind::Correctors),
            Cmd::Curve => Some(StageKind::Curve),
            Cmd::Verify | Cmd::Sweep | Cmd::Emit => None,
        },
    };

    match cli.cmd {
        Cmd::Emit => {
            let written = emit_plots_data(&cli.out)?;
            refresh_manifest_inventory(&cli.out)?;
            println!("emitted {} plot files:", written.len());
            for p in written {
                println!("  {}", p.display());
            }
            Ok(())
        }
        Cmd::Sweep => {
            let config = load_required_config(&cli)?;
            let rows = run_sweep(&config, &cli.out, &opts)?;
            println!("swept {} seeds into {}", rows.len(), cli.out.display());
            println!("seed  lambda0  theta_minus0  theta_plus0");
            for r in &rows {
                println!("{}  {}  {}  {}", r.seed, r.lambda0, r.theta_minus0, r.theta_plus0);
            }
            println!("aggregate table: {}", cli.out.join("aggregate.csv").display());
            Ok(())
        }
        _ => {
            let config = load_required_config(&cli)?;
            let outcome = run_pipeline(&config, &cli.out, &opts)?;
            report(&cli, &outcome.out_dir)?;
            if !outcome.manifest.gates_passed.is_empty() {
                println!("gates passed: {}", outcome.manifest.gates_passed.join(", "));
            }
            println!("artifacts: {}", outcome.out_dir.display());
            Ok(())
        }
    }
}

fn load_required_config(cli: &Cli) -> Result<hjhomog::pipeline::RunConfig, PipelineError> {
    let path = cli.config.as_ref().ok_or_else(|| PipelineError::Config {
        field: "--config".into(),
        why: "this verb needs a run config (flag --config or HJHOMOG_CONFIG)".into(),
    })?;
    load_config(path)
}

/// Print the artifact most relevant to the verb that just ran.
fn report(cli: &Cli, dir: &std::path::Path) -> Result<(), PipelineError> {
    match cli.cmd {
        Cmd::Validate => {
            print!("{}", std::fs::read_to_string(dir.join("validation.txt"))?);
        }
        Cmd::CriticalValue => {
            let text = std::fs::read_to_string(dir.join("critical.json"))?;
            println!("{text}");
        }
        Cmd::Corrector => {
            println!("corrector profiles: {}", dir.join("correctors.csv").display());
        }
        Cmd::Curve => {
            println!("effective curve: {}", dir.join("curve.csv").display());
            println!("hbar table:      {}", dir.join("hbar.csv").display());
        }
        Cmd::Verify => {
            print!("{}", std::fs::read_to_string(dir.join("comparison.txt"))?);
        }
        Cmd::Sweep | Cmd::Emit => {}
    }
    Ok(())
}
