use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcflab_cli::{run, CliError, Command, ExperimentConfig, Overrides};

#[derive(Debug, Parser)]
#[command(
    name = "mcflab",
    version,
    about = "Radial mean curvature flow experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Evolve the initial data and run every monitor.
    Evolve,
    /// Solve and certify a translator or expander profile.
    Soliton,
    /// Blow-up selection, rescaling and translator fit for each window in `rescaling.j_list`.
    Rescale,
    /// Type III / Type IIb hint from `t max|A|^2`.
    Classify,
    /// Tangent-ball noncollapsing along the flow.
    Noncollapse,
    /// Power-graph suite over `table1.alphas`.
    Table1,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Exit with status 3 when an acceptance check fails.
    #[arg(long, global = true)]
    check: bool,
    /// Exponent of the power graph (restricts `table1` to this exponent).
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Dimension n of the base space.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Outer radius of the grid.
    #[arg(long, global = true, allow_negative_numbers = true)]
    rmax: Option<f64>,
    /// Grid spacing.
    #[arg(long, global = true, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Final flow time.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tend: Option<f64>,
}

fn load(cli: &Cli, command: Command) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let c = &cli.common;
    let mut overrides = Overrides {
        alpha: c.alpha,
        dim: c.dim,
        r_max: c.rmax,
        h: c.h,
        t_end: c.tend,
        output_dir: c.out.clone(),
    };
    if command == Command::Table1 {
        if let Some(alpha) = overrides.alpha.take() {
            cfg.table1.alphas = vec![alpha];
        }
    }
    cfg.apply(&overrides)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let command = match cli.command {
        Cmd::Evolve => Command::Evolve,
        Cmd::Soliton => Command::Soliton,
        Cmd::Rescale => Command::Rescale,
        Cmd::Classify => Command::Classify,
        Cmd::Noncollapse => Command::Noncollapse,
        Cmd::Table1 => Command::Table1,
    };
    let result = load(&cli, command).and_then(|cfg| run(command, &cfg, cli.common.check));
    match result {
        Ok(outcome) => {
            let s = &outcome.summary;
            println!(
                "{}: {} -> {}",
                command.name(),
                s.termination.as_deref().unwrap_or("done"),
                outcome.manifest.output_dir.display()
            );
            for (name, c) in &s.checks {
                let tag = if c.passed() { "PASS" } else { "FAIL" };
                println!("{tag} {name}: value {:e}, limit {:e}", c.value, c.limit);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mcflab {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
