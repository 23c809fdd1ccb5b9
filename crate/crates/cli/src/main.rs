use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::RunConfig;

/// Entropy estimates, expansivity falsification and periodic-orbit censuses
/// for flows on metric spaces.
#[derive(Parser, Debug)]
#[command(name = "texflow", version)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $TEXFLOW_OUT, else ./texflow-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the built-in fixtures or show one parameter schema.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
    /// Estimate classical entropy or e*.
    Estimate(EstimateArgs),
    /// Separated and spanning sets and beta for one horizon and scale.
    Separate(SeparateArgs),
    /// Search for a witness against an expansivity notion.
    Falsify(FalsifyArgs),
    /// Periodic-orbit census of a suspension fixture.
    Census(CensusArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum FixturesAction {
    List {
        #[arg(long)]
        json: bool,
    },
    Show {
        id: String,
    },
}

#[derive(Args, Debug, Default)]
pub struct FixtureArgs {
    #[arg(long)]
    pub fixture: Option<String>,
    /// Cylinder depth for suspension compacts.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Time scale for `time_scaled`.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Classical,
    EStar,
    EStarSpanning,
    Paired,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub fixture: FixtureArgs,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Integer grid 1..=t_max in fixture time units.
    #[arg(long)]
    pub t_max: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Constant scales (classical sweep and constant e* family).
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct SeparateArgs {
    #[command(flatten)]
    pub fixture: FixtureArgs,
    #[arg(long)]
    pub t: Option<f64>,
    /// Constant scale.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NotionArg {
    Expansive,
    Topological,
    Rescaling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Expect {
    Witness,
    NoWitness,
}

#[derive(Args, Debug)]
pub struct FalsifyArgs {
    #[command(flatten)]
    pub fixture: FixtureArgs,
    #[arg(long, value_enum)]
    pub notion: Option<NotionArg>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Constant scale; otherwise the fixture default for the notion.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub pair_budget: Option<u64>,
    /// Exit with status 2 unless the result matches.
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
}

#[derive(Args, Debug)]
pub struct CensusArgs {
    #[command(flatten)]
    pub fixture: FixtureArgs,
    #[arg(long)]
    pub t_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Sa1,
    Sa2,
    Sa3,
    Sa4,
    #[value(name = "thB", alias = "thb")]
    ThB,
    Lemmas,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub fixture: Option<String>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cfg.out_dir(cli.out.as_deref());
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| match cli.command {
        Command::Fixtures { action: FixturesAction::List { json } } => commands::fixtures_list(json),
        Command::Fixtures { action: FixturesAction::Show { id } } => commands::fixtures_show(&id),
        Command::Estimate(a) => commands::estimate(&cfg, &a, &out),
        Command::Separate(a) => commands::separate(&cfg, &a, &out),
        Command::Falsify(a) => commands::falsify(&cfg, &a, &out),
        Command::Census(a) => commands::census(&cfg, &a, &out),
        Command::Verify(a) => commands::verify(&cfg, &a, &out),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
