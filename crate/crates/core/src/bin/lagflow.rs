use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lagflow::analysis::Axis;
use lagflow::cli;

#[derive(Parser)]
#[command(name = "lagflow", version, about = "Lagrangian minimizing-movement solver for 1D nonlinear diffusion")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configuration, write snapshots and diagnostics, and audit the run.
    Solve { config: PathBuf },
    /// Refinement study in the grid size or the time step.
    Converge {
        config: PathBuf,
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        levels: Vec<f64>,
        #[arg(long)]
        reference: f64,
    },
    /// Re-audit a directory written by `solve`.
    Audit { dir: PathBuf },
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(args: Args) -> lagflow::Result<ExitCode> {
    match args.command {
        Command::Solve { config } => {
            let (cfg, base) = cli::load_config(&config)?;
            let out = cli::run_solve(&cfg, &base)?;
            print!("{}", out.audit);
            println!("wrote {}", out.dir.display());
            Ok(status(out.passed()))
        }
        Command::Converge {
            config,
            axis,
            levels,
            reference,
        } => {
            let (cfg, base) = cli::load_config(&config)?;
            let out = cli::run_convergence(&cfg, &base, axis, &levels, reference, &cli::output_dir(&cfg))?;
            for w in &out.result.warnings {
                eprintln!("warning: {w}");
            }
            println!("idf slope {:.4}", out.result.fitted_slope);
            println!("density slope {:.4}", out.result.density_slope);
            println!("wrote {}", out.csv.display());
            Ok(status(out.passed()))
        }
        Command::Audit { dir } => {
            let report = cli::run_audit(&dir)?;
            print!("{report}");
            Ok(status(report.passed()))
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Command::Converge { levels, .. } = &args.command {
        if levels.len() < 2 {
            eprintln!("error: --levels needs at least two values to fit a slope");
            return ExitCode::from(2);
        }
    }
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
