use std::path::PathBuf;
use std::process::ExitCode;

use checkerboard_cli::{ingest, run, Command, RunOptions};
use clap::Parser;

/// Factorize checkerboard Gram matrices and verify the attached identities.
#[derive(Parser, Debug)]
#[command(name = "checkerboard", version)]
struct Args {
    /// Job file (JSON).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    command: Command,
    /// Largest kernel index `n` for `kernels` and `hankel`.
    #[arg(long)]
    nmax: Option<usize>,
    /// Float-mode comparison tolerance; overrides the job file.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Include L1, D and L2 in the `factorize` output.
    #[arg(long)]
    emit_matrices: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHECKERBOARD_LOG", "warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = args.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            eprintln!("error: tolerance must be positive, got {t}");
            return ExitCode::from(2);
        }
    }
    let job = match ingest(&args.input) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        nmax: args.nmax,
        tolerance: args.tolerance,
        emit_matrices: args.emit_matrices,
    };
    let report = match run(&job, args.command, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for line in &report.failures {
        log::warn!("{line}");
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => println!("{text}"),
    }
    ExitCode::from(report.exit_code() as u8)
}
