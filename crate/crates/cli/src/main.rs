use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rsc_cli::{apply_override, cmd_crosscheck, cmd_propositions, cmd_solve, cmd_sweep, ConfigError, Report, RunConfig};
use rsc_core::ModelId;

#[derive(Parser, Debug)]
#[command(name = "rsc", version, about = "Screening-contract equilibria for a reverse supply chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration (or a bare parameter object)
    #[arg(long, global = true, value_name = "PATH")]
    params: Option<PathBuf>,

    /// Override one config value, e.g. `f=0` or `options.grid=31`
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Model I to V (default V)
    #[arg(long, global = true)]
    model: Option<ModelId>,

    /// closed_form, oracle or both
    #[arg(long, global = true)]
    source: Option<rsc_cli::SourceSel>,

    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed of the random-draw checks
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Screening feasibility tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve one model
    Solve,
    /// Models IV and V over the policy grid
    Sweep,
    /// Evaluate the eight comparative-statics claims
    Propositions,
    /// Compare closed forms against the oracle
    Crosscheck,
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut tree = match &cli.params {
        Some(p) => RunConfig::tree_from_file(p)?,
        None => serde_json::json!({}),
    };
    for s in &cli.set {
        apply_override(&mut tree, s)?;
    }
    let flags = [
        cli.model.map(|m| format!("model={m}")),
        cli.source.map(|s| format!("source={s}")),
        cli.out.as_ref().map(|o| format!("out={}", serde_json::to_string(o).expect("path"))),
        cli.seed.map(|s| format!("seed={s}")),
        cli.tol.map(|t| format!("options.tol={t:e}")),
    ];
    for f in flags.into_iter().flatten() {
        apply_override(&mut tree, &f)?;
    }
    Ok(RunConfig::from_tree(tree)?)
}

fn run(cli: &Cli) -> anyhow::Result<Report> {
    let cfg = load(cli)?;
    let report = match cli.command {
        Command::Solve => cmd_solve(&cfg),
        Command::Sweep => cmd_sweep(&cfg)?,
        Command::Propositions => cmd_propositions(&cfg),
        Command::Crosscheck => cmd_crosscheck(&cfg),
    };
    report.write(&cfg.out).context("writing outputs")?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.summary);
            match report.error {
                Some(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) if e.is::<ConfigError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
