use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opalg_cli::config::{SuiteConfig, SuiteName};

#[derive(Parser)]
#[command(name = "opalg", version, about = "Run the operator-algebra verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config (JSON). Defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for report.json and the CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Multiplies every tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol: f64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    Inequalities,
    Gns,
    Catalog,
    Dynamics,
    All,
    /// Runs the suites listed in the config.
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => match SuiteConfig::load(p) {
            Ok(c) => c,
            Err(errs) => return invalid(&errs),
        },
        None => SuiteConfig::default(),
    };
    let suite = match cli.command {
        Command::Inequalities => Some(SuiteName::Inequalities),
        Command::Gns => Some(SuiteName::Gns),
        Command::Catalog => Some(SuiteName::Catalog),
        Command::Dynamics => Some(SuiteName::Dynamics),
        Command::All => Some(SuiteName::All),
        Command::Run => None,
    };
    if let Some(s) = suite {
        cfg.suites = vec![s];
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    let output = match opalg_cli::run(&cfg, cli.tol) {
        Ok(o) => o,
        Err(errs) => return invalid(&errs),
    };
    if let Err(e) = output.write(&cfg.out) {
        eprintln!("error: writing {}: {e}", cfg.out.display());
        return ExitCode::from(2);
    }
    let s = &output.report.summary;
    println!(
        "{} checks, {} passed, {} failed ({:.0} ms); report in {}",
        s.total,
        s.passed,
        s.failed,
        output.timing.total_ms,
        cfg.out.join("report.json").display()
    );
    for f in &s.failing {
        println!("FAIL {f}");
    }
    if output.report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn invalid(errs: &[String]) -> ExitCode {
    for e in errs {
        eprintln!("error: {e}");
    }
    ExitCode::from(2)
}
