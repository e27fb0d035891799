mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Resolved, Settings};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "qswd",
    version,
    about = "State discrimination with quantum stochastic walks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fill in the runtime_s column
    #[arg(long, global = true)]
    timings: bool,
    /// TOML file with experiment keys; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the table here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize P_c over a (p, tau) grid
    Sweep,
    /// Discrimination bounds of an ensemble
    Bounds,
    /// Compare closed forms with numerical evolution
    Analytic {
        #[command(subcommand)]
        case: AnalyticCase,
    },
    /// Monte-Carlo study of state noise or Hamiltonian disorder
    Robustness,
    /// Optimized P_c versus number of intermediate layers
    Depth,
    /// Print the nodes, links and arcs of a model
    Topo,
}

#[derive(Subcommand, Clone, Copy)]
enum AnalyticCase {
    /// Purely coherent walk on 2r-2r-2 with the symmetric ansatz
    P0,
    /// Purely incoherent walk on 2r-2r-2
    P1,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let settings = config::load(&cli.settings, cli.config.as_ref())?;
    let name = match cli.command {
        Command::Sweep => "sweep",
        Command::Bounds => "bounds",
        Command::Analytic {
            case: AnalyticCase::P0,
        } => "analytic-p0",
        Command::Analytic {
            case: AnalyticCase::P1,
        } => "analytic-p1",
        Command::Robustness => "robustness",
        Command::Depth => "depth",
        Command::Topo => "topo",
    };
    let resolved = Resolved::new(name, &settings)?;

    let table = match cli.command {
        Command::Sweep => commands::sweep(&resolved, cli.timings)?,
        Command::Bounds => commands::bounds(&resolved)?,
        Command::Analytic { case } => {
            let (table, worst) = match case {
                AnalyticCase::P0 => commands::analytic_p0(&resolved)?,
                AnalyticCase::P1 => commands::analytic_p1(&resolved)?,
            };
            eprintln!("max |closed form - numeric| = {worst:.3e}");
            table
        }
        Command::Robustness => commands::robustness(&resolved)?,
        Command::Depth => commands::depth(&resolved, cli.timings)?,
        Command::Topo => {
            let mut out = output::open(cli.out.as_deref())?;
            out.write_all(commands::topo_summary(&resolved)?.as_bytes())?;
            return Ok(out.flush()?);
        }
    };
    let mut out = output::open(cli.out.as_deref())?;
    output::write_table(&mut *out, &resolved, &table)?;
    Ok(out.flush()?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qswd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
