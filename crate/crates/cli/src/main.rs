use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qmeasure_cli::{run, CliError, Command, Options, Scenario, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "qmeasure", version, about = "Quantum measure theory experiments from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Decoherence-functional axioms on the scenario's events.
    CheckAxioms(Common),
    /// Dimension of the History Hilbert space and onto-witness status.
    Gns(Common),
    /// Onto-witness search and inversion of random targets.
    Onto(Common),
    /// Regularized composition of propagators.
    Esck(Common),
    /// Constructive reconstruction of a step function.
    Reconstruct(Common),
    /// Interference terms of disjoint events.
    Interference(Common),
}

#[derive(Args)]
struct Common {
    scenario: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "rank-tol")]
    rank_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("QMEASURE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("QMEASURE_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    configure_threads()?;
    let (command, args) = match cli.command {
        Sub::CheckAxioms(a) => (Command::CheckAxioms, a),
        Sub::Gns(a) => (Command::Gns, a),
        Sub::Onto(a) => (Command::Onto, a),
        Sub::Esck(a) => (Command::Esck, a),
        Sub::Reconstruct(a) => (Command::Reconstruct, a),
        Sub::Interference(a) => (Command::Interference, a),
    };
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.scenario.display())))?;
    let scenario = Scenario::parse(&text)?;
    let opts = Options {
        tol: args.tol,
        rank_tol: args.rank_tol,
        seed: args.seed,
    };
    let report = run(command, &scenario, &opts)?;
    print!("{}", report.render());
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_json() + "\n")?;
    }
    Ok(if report.passed() { EXIT_PASS } else { EXIT_FAIL })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qmeasure: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
