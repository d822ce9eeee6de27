use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use collapse_spectra_cli::config::parse_grid_text;
use collapse_spectra_cli::verify::{list_scenarios, resolve_out_dir, run_scenario, verify_all, Overrides, OUT_ENV};
use collapse_spectra_cli::{CliError, CliResult};

/// Invariant-form Laplacian spectra on torus bundles: named scenarios,
/// CSV tables and a JSON manifest per run.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on a
/// config error or unknown scenario.
#[derive(Parser, Debug)]
#[command(name = "collapse-spectra", version)]
struct Args {
    /// Scenario name, `list`, or `verify-all`.
    command: String,
    /// TOML config merged over the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides $COLLAPSE_SPECTRA_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated ε values in (0, 1], or `dyadic:a:b`.
    #[arg(long)]
    eps_grid: Option<String>,
}

fn read_config(path: &Option<PathBuf>) -> CliResult<Option<String>> {
    path.as_ref()
        .map(|p| {
            std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })
        })
        .transpose()
}

fn execute(args: &Args) -> CliResult<bool> {
    if args.command == "list" {
        print!("{}", list_scenarios().to_csv());
        return Ok(true);
    }
    let text = read_config(&args.config)?;
    let overrides = Overrides {
        seed: args.seed,
        eps_grid: args
            .eps_grid
            .as_deref()
            .map(|g| parse_grid_text(g).map_err(|m| CliError::config("eps_grid", m)))
            .transpose()?,
    };
    let env = std::env::var(OUT_ENV).ok();
    let (run, lines) = if args.command == "verify-all" {
        let v = verify_all(text.as_deref(), &overrides)?;
        (v.run, v.lines)
    } else {
        let run = run_scenario(&args.command, text.as_deref(), &overrides)?;
        let lines = run.report();
        (run, lines)
    };
    let dir = resolve_out_dir(args.out.as_deref(), env.as_deref(), &run.config).join(&args.command);
    run.write(&dir)?;
    for line in &lines {
        println!("{line}");
    }
    let passed = run.manifest.passed;
    println!(
        "{}: {} ({} artifacts in {})",
        args.command,
        if passed { "PASS" } else { "FAIL" },
        run.manifest.artifacts.len(),
        dir.display()
    );
    Ok(passed)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
