use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::commands::{construct, discrete, norms, reinforce, report, sanstype, staircase};
use crate::failure::{Failure, Result};
use crate::io::Run;
use crate::parallel;

/// Composed fine-tuning workbench.
///
/// Exit status: 0 on success, 64 on bad usage, 65 on invalid inputs or
/// configuration, 74 on other failures. `sanstype check` exits 0, 1 or 2 for
/// correct, runtime error (including wrong output) and compile error.
#[derive(Debug, Parser)]
#[command(name = "composed-lab", version)]
pub struct Cli {
    #[command(flatten)]
    pub out: OutArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Directory for every output file plus `manifest.json`. Without it the
    /// main result goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spline norms, bounds and the construction check for staircases.
    Norms(norms::NormsArgs),
    /// The low-norm base construction, sampled on a grid.
    Construct(construct::ConstructArgs),
    /// Standard versus composed training on a staircase.
    TrainStaircase(staircase::StaircaseArgs),
    /// Standard, test-time denoiser and composed training on the discrete task.
    TrainDiscrete(discrete::DiscreteArgs),
    /// Compare the score-function gradient estimate with exact enumeration.
    ReinforceCheck(reinforce::ReinforceArgs),
    /// SansType generation, corruption and checking.
    #[command(subcommand)]
    Sanstype(sanstype::SansCommand),
    /// Summarise result files.
    Report(report::ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Norms(_) => "norms",
            Command::Construct(_) => "construct",
            Command::TrainStaircase(_) => "train-staircase",
            Command::TrainDiscrete(_) => "train-discrete",
            Command::ReinforceCheck(_) => "reinforce-check",
            Command::Sanstype(sanstype::SansCommand::Gen(_)) => "sanstype gen",
            Command::Sanstype(sanstype::SansCommand::Corrupt(_)) => "sanstype corrupt",
            Command::Sanstype(sanstype::SansCommand::Check(_)) => "sanstype check",
            Command::Sanstype(sanstype::SansCommand::Stats(_)) => "sanstype stats",
            Command::Sanstype(sanstype::SansCommand::Dataset(_)) => "sanstype dataset",
            Command::Report(_) => "report",
        }
    }
}

pub fn dispatch(cli: Cli, args: Vec<String>) -> Result<u8> {
    let mut run = Run::start(cli.command.name(), args, cli.out.out, parallel::threads())?;
    let code = match &cli.command {
        Command::Norms(a) => norms::run(a, &mut run)?,
        Command::Construct(a) => construct::run(a, &mut run)?,
        Command::TrainStaircase(a) => staircase::run(a, &mut run)?,
        Command::TrainDiscrete(a) => discrete::run(a, &mut run)?,
        Command::ReinforceCheck(a) => reinforce::run(a, &mut run)?,
        Command::Sanstype(c) => sanstype::run(c, &mut run)?,
        Command::Report(a) => report::run(a, &mut run)?,
    };
    run.finish()?;
    Ok(code)
}

/// Parse `argv` and run; returns the process exit status.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => crate::failure::EXIT_USAGE,
            };
        }
    };
    match dispatch(cli, args) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            if matches!(f, Failure::Usage(_)) {
                eprintln!("run with --help for usage");
            }
            f.exit_code()
        }
    }
}
