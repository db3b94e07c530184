mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;


#[derive(Parser, Debug)]
#[command(
    name = "parabolic",
    version,
    about = "Pressure, decompositions and dimension for parabolic rational maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Periodic orbits, Ω, preconditions and the Milnor calibration.
    Analyze(RunArgs),
    /// t ↦ P(-t log|f'|) by the tree, periodic and Ulam oracles.
    PressureCurve(RunArgs),
    /// Root of the Bowen equation, with a box-counting cross-check.
    Dimension(RunArgs),
    /// A(Ω, φ) against P(φ).
    GapCheck(RunArgs),
    /// Good/bad decomposition of random orbit segments.
    Decompose(RunArgs),
    /// Transition time and gluing of random segment families.
    VerifySpec(RunArgs),
    /// Contraction along good segments and the Bowen variation bound.
    VerifyBowen(RunArgs),
    /// Entropy and Ω-mass of an approximate equilibrium state.
    Equilibrium(RunArgs),
    /// Fast internal consistency checks.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Tree,
    Periodic,
    Ulam,
    Separated,
}

#[derive(Args, Debug, Clone)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["map", "example"])))]
pub struct RunArgs {
    /// Map file: {"numerator": [[re, im], ...], "denominator": [...]}, ascending degree.
    #[arg(long, value_name = "FILE")]
    pub map: Option<PathBuf>,
    /// Built-in map: square, quad_parabolic, blaschke_parabolic or cheb.
    #[arg(long, value_name = "NAME")]
    pub example: Option<String>,
    /// Potential, e.g. geometric:t=0.5, const:c=0.1 or mix:0.5*geometric:t=1+0.5*const:c=0.
    #[arg(long, value_name = "SPEC")]
    pub potential: Option<String>,
    /// Depth, period scope or segment length, depending on the command.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub t_step: Option<f64>,
    /// Number of segments or families, depending on the command.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the JSON, CSV and SVG artifacts; the JSON report also goes to stdout.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot: bool,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleKind>,
}

#[derive(Args, Debug, Clone)]
pub struct SelftestArgs {
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::PressureCurve(a) => commands::pressure_curve(a),
        Command::Dimension(a) => commands::dimension(a),
        Command::GapCheck(a) => commands::gap_check(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::VerifySpec(a) => commands::verify_spec(a),
        Command::VerifyBowen(a) => commands::verify_bowen(a),
        Command::Equilibrium(a) => commands::equilibrium(a),
        Command::Selftest(a) => commands::selftest(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            println!("{}", failure.to_json());
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.exit_code())
        }
    }
}
