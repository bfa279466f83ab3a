use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Parser, Subcommand};

use mechproof::experiment::{self, parse_mechanism, run_suite, run_sweep, write_csv, RunConfig, SolveOutput, Suite};
use mechproof::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "mechproof", version, about = "Misreport- and collusion-proof crowdsourcing mechanisms")]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = experiment::THREADS_ENV)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the requestor-optimal mechanism and print it as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Search a mechanism for profitable deviations; exit 3 if one exists.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mechanism: PathBuf,
    },
    /// Solve every point of the config's axes and write a CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a preset reproduction suite (or `all`); exit 3 if a check fails.
    Repro {
        #[arg(long, value_parser = PossibleValuesParser::new(suite_names()))]
        suite: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn suite_names() -> Vec<&'static str> {
    let mut names = Suite::NAMES.to_vec();
    names.push("all");
    names
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoFeasibleMechanism { .. } => EXIT_INFEASIBLE,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure { code: EXIT_CONFIG, message: format!("cannot read {}: {e}", path.display()) })
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::from_json(&read(path)?)
        .map_err(|e| Failure { code: EXIT_CONFIG, message: format!("{}: {e}", path.display()) })
}

fn solve(config: &Path) -> Result<u8, Failure> {
    let config = load_config(config)?;
    match experiment::solve_config(&config) {
        Ok(report) => {
            println!("{}", SolveOutput::from_report(&report).to_json());
            Ok(0)
        }
        Err(Error::NoFeasibleMechanism { stats }) => {
            println!("{}", SolveOutput::NoFeasibleMechanism { stats }.to_json());
            eprintln!("error: no allocation admits collusion-proof, incentive-compatible rewards");
            Ok(EXIT_INFEASIBLE)
        }
        Err(e) => Err(e.into()),
    }
}

fn verify(config: &Path, mechanism: &Path) -> Result<u8, Failure> {
    let config = load_config(config)?;
    let mech = parse_mechanism(&read(mechanism)?)
        .map_err(|e| Failure { code: EXIT_CONFIG, message: format!("{}: {e}", mechanism.display()) })?;
    let report = experiment::verify_config(&config, &mech)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(if report.passes() { 0 } else { EXIT_FAILED })
}

fn sweep(config: &Path, out: &Path) -> Result<u8, Failure> {
    let config = load_config(config)?;
    let rows = run_sweep(&config)?;
    let file = fs::File::create(out)
        .map_err(|e| Failure { code: EXIT_CONFIG, message: format!("cannot write {}: {e}", out.display()) })?;
    write_csv(&rows, std::io::BufWriter::new(file))?;
    Ok(0)
}

fn repro(suite: &str, out: &Path) -> Result<u8, Failure> {
    let suites: Vec<Suite> =
        if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse::<Suite>()?] };
    let mut all_passed = true;
    for s in suites {
        let output = run_suite(s)?;
        output.write_to(out)?;
        print!("{}", output.summary());
        all_passed &= output.passed();
    }
    Ok(if all_passed { 0 } else { EXIT_FAILED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    experiment::init_thread_pool(cli.threads);
    let result = match &cli.command {
        Command::Solve { config } => solve(config),
        Command::Verify { config, mechanism } => verify(config, mechanism),
        Command::Sweep { config, out } => sweep(config, out),
        Command::Repro { suite, out } => repro(suite, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
