//! Command-line harness for the `steady-ga` crate.
//!
//! Exit codes: 0 on success, 1 when a validation check fails or a run
//! errors, 2 on bad arguments.

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use steady_ga::bounds::EvalMode;
use steady_ga::experiment::OperatorChoice;
use steady_ga::Error;

mod commands;
pub mod output;

use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "steady-ga",
    version,
    about = "Steady-state (mu+1) GA laboratory for OneMax"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replicated GA runs over an (n, mu, operator) grid.
    #[command(after_help = commands::SIMULATE_HELP)]
    SimulateGa(SimulateArgs),
    /// Monte Carlo absorption time of the diversity chain.
    #[command(after_help = commands::MC_HELP)]
    McChain(McArgs),
    /// Build and solve the diversity chain, with diagnostics.
    #[command(after_help = commands::ANALYZE_HELP)]
    AnalyzeChain(AnalyzeArgs),
    /// Leading constants of the runtime bound per population size.
    #[command(after_help = commands::CONSTANTS_HELP)]
    LeadingConstants(ConstantsArgs),
    /// Mutation rate minimising the leading constant.
    #[command(after_help = commands::OPTIMIZE_HELP)]
    OptimizeC(OptimizeArgs),
    /// Data behind the two constant-versus-population-size figures.
    #[command(after_help = commands::FIGURES_HELP)]
    Figures(FiguresArgs),
    /// Empirical one-step drift of the chain potential.
    #[command(after_help = commands::DRIFT_HELP)]
    Drift(DriftArgs),
    /// Run the invariant suite; exits 1 if any check fails.
    #[command(after_help = commands::VALIDATE_HELP)]
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed; every random quantity derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Comma-separated list; integer ranges may be written `a..b` (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl FromStr for List<usize> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim) {
            if let Some((a, b)) = part.split_once("..") {
                let a: usize = a
                    .parse()
                    .map_err(|_| format!("bad range start in {part:?}"))?;
                let b: usize = b
                    .trim_start_matches('=')
                    .parse()
                    .map_err(|_| format!("bad range end in {part:?}"))?;
                if a > b {
                    return Err(format!("empty range {part:?}"));
                }
                out.extend(a..=b);
            } else {
                out.push(
                    part.parse()
                        .map_err(|_| format!("not an integer: {part:?}"))?,
                );
            }
        }
        Ok(Self(out))
    }
}

impl FromStr for List<f64> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| format!("not a number: {p:?}")))
            .collect::<Result<_, _>>()
            .map(Self)
    }
}

/// A rate, or `opt` for the optimal rate of each population size.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates(pub Vec<OperatorChoice>);

impl FromStr for Rates {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| match p.trim() {
                "opt" => Ok(OperatorChoice::OptimalRate),
                v => v
                    .parse()
                    .map(OperatorChoice::Rate)
                    .map_err(|_| format!("rate must be a number or 'opt': {v:?}")),
            })
            .collect::<Result<_, _>>()
            .map(Self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    AllEvals,
    SkipClones,
}

impl From<Mode> for EvalMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::AllEvals => EvalMode::AllEvals,
            Mode::SkipClones => EvalMode::SkipClones,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Problem sizes.
    #[arg(long, default_value = "100")]
    pub n: List<usize>,
    /// Population sizes.
    #[arg(long, default_value = "5")]
    pub mu: List<usize>,
    /// Standard-bit-mutation rates c (rate c/n); `opt` picks the optimum.
    #[arg(long, default_value = "1", conflicts_with = "flips")]
    pub c: Rates,
    /// Explicit flip-count distribution p0,p1,... instead of `--c`.
    #[arg(long)]
    pub flips: Option<List<f64>>,
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
    /// Also run the mutation-only variant.
    #[arg(long)]
    pub mutation_only: bool,
    /// Paired crossover versus mutation-only comparison with a sign test.
    #[arg(long, conflicts_with = "mutation_only")]
    pub paired: bool,
    /// Count-all budget per run [default: max(50 n ln n, 1000)].
    #[arg(long)]
    pub max_evals: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub mu: usize,
    /// Level: number of one-bits of the population.
    #[arg(long)]
    pub j: usize,
    #[arg(long)]
    pub n: usize,
    /// Mutation rate; the chain uses the large-n flip probabilities.
    #[arg(long, conflicts_with_all = ["p0", "p1", "p2"])]
    pub c: Option<f64>,
    /// Probability of flipping no bit (with --p1, --p2 instead of --c).
    #[arg(long, requires_all = ["p1", "p2"])]
    pub p0: Option<f64>,
    #[arg(long, requires_all = ["p0", "p2"])]
    pub p1: Option<f64>,
    #[arg(long, requires_all = ["p0", "p1"])]
    pub p2: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Starting diversity state.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long, default_value_t = 100_000)]
    pub replicates: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    #[arg(long, default_value = "3..50")]
    pub mu: List<usize>,
    /// Standard-bit-mutation rate for the closed-form constants.
    #[arg(long)]
    pub c: Option<f64>,
    /// Flip probabilities for the general constants.
    #[arg(long, requires_all = ["p1", "p2"])]
    pub p0: Option<f64>,
    #[arg(long, requires_all = ["p0", "p2"])]
    pub p1: Option<f64>,
    #[arg(long, requires_all = ["p0", "p1"])]
    pub p2: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[arg(long, default_value = "3..50")]
    pub mu: List<usize>,
    #[arg(long, value_enum, default_value_t = Mode::AllEvals)]
    pub mode: Mode,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct FiguresArgs {
    /// 1: skip-clones constant in the two-flip limit; 2: optimal-rate constant.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub figure: u8,
    #[arg(long, default_value_t = 5)]
    pub mu_min: usize,
    #[arg(long, default_value_t = 50)]
    pub mu_max: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct DriftArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub mu: usize,
    /// Level [default: n/2].
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// One-step samples per diversity state.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// States with fewer usable samples are reported as absent.
    #[arg(long, default_value_t = 100)]
    pub min_samples: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Monte Carlo replicates for the chain check.
    #[arg(long, default_value_t = 200_000)]
    pub replicates: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Run(e) if is_input_error(e) => 2,
            Self::Run(_) | Self::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "{m}"),
            Self::Run(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

/// Errors caused by the parameters rather than by the computation.
fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidConfig(_)
            | Error::InvalidMutation(_)
            | Error::InvalidChain(_)
            | Error::LevelOutOfRange { .. }
            | Error::InvalidExperiment(_)
            | Error::LengthMismatch { .. }
    )
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli.command) {
        Ok(failed) => i32::from(failed),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!("3,5,8".parse::<List<usize>>().unwrap().0, vec![3, 5, 8]);
        assert_eq!("5..8".parse::<List<usize>>().unwrap().0, vec![5, 6, 7, 8]);
        assert_eq!("1,4..=5".parse::<List<usize>>().unwrap().0, vec![1, 4, 5]);
        assert!("8..5".parse::<List<usize>>().is_err());
        assert!("x".parse::<List<usize>>().is_err());
        assert_eq!("0.5, 1".parse::<List<f64>>().unwrap().0, vec![0.5, 1.0]);
        let r: Rates = "1,opt".parse().unwrap();
        assert_eq!(
            r.0,
            vec![OperatorChoice::Rate(1.0), OperatorChoice::OptimalRate]
        );
        assert!("fast".parse::<Rates>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Run(Error::InvalidExperiment("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::Run(Error::NonTermination { steps: 1 }).exit_code(),
            1
        );
    }

    #[test]
    fn parse_errors_exit_2() {
        assert_eq!(run(["steady-ga", "figures", "--bogus"]), 2);
        assert_eq!(run(["steady-ga"]), 2);
        assert_eq!(run(["steady-ga", "figures", "--figure", "3"]), 2);
        assert_eq!(
            run([
                "steady-ga",
                "analyze-chain",
                "--mu",
                "3",
                "--j",
                "1",
                "--n",
                "4",
                "--c",
                "1",
                "--p0",
                "0.5"
            ]),
            2
        );
    }
}
