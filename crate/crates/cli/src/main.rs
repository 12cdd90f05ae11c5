use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use textquest::runner::{self, BackendKind, Patience, RunConfig, Strategy};
use textquest::{ConfigError, RunError};

/// Text-adventure exploration experiments.
#[derive(Parser)]
#[command(name = "textquest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a strategy over a list of seeds and write its artifacts.
    Run(RunArgs),
    /// Print a game's quest levels, bottlenecks, max score and walkthrough.
    Analyze {
        /// Bundled game name or game file.
        game: String,
    },
    /// Write question-answer records for walkthrough and random states.
    EmitDataset {
        game: String,
        /// Number of states to record.
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a saved policy chain twice and print its trajectory.
    ReplayChain {
        game: String,
        /// Chain directory written by `run`.
        dir: PathBuf,
        #[arg(long, default_value = "oracle")]
        backend: BackendKind,
        /// Seed the backend was built with (matters only for noisy backends).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Step count or `never`.
    #[arg(long)]
    patience: Option<Patience>,
    #[arg(long)]
    buffer_size: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    cell_step: Option<u32>,
    #[arg(long)]
    horizon: Option<u32>,
    /// Output root; defaults to $TEXTQUEST_OUT, then `runs`.
    #[arg(long)]
    out: Option<String>,
    /// Skip the per-step log.
    #[arg(long)]
    no_steps: bool,
}

impl RunArgs {
    fn config(self) -> Result<RunConfig, RunError> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
                RunConfig::from_toml(&text)?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident => $g:ident),*) => {$( if let Some(v) = self.$f { c.$g = v; } )*};
        }
        set!(game => game, strategy => strategy, backend => backend, seeds => seeds, budget => budget,
            batch => batch, patience => patience, buffer_size => buffer_size, epsilon => epsilon,
            gamma => gamma, cell_step => cell_step, horizon => horizon);
        if self.alpha.is_some() {
            c.alpha = self.alpha;
        }
        if self.out.is_some() {
            c.output = self.out;
        }
        if self.no_steps {
            c.record_steps = false;
        }
        Ok(c)
    }
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let (dir, _) = runner::run(&cfg)?;
            print!("{}", fs::read_to_string(dir.join("summary.tsv")).map_err(|source| RunError::Io { path: dir.display().to_string(), source })?);
            println!("artifacts\t{}", dir.display());
        }
        Command::Analyze { game } => print!("{}", runner::analyze(&runner::resolve_game(&game)?)?),
        Command::EmitDataset { game, budget, seed, out } => {
            let text = runner::emit_dataset(&runner::resolve_game(&game)?, budget, seed)?;
            match out {
                Some(path) => fs::write(&path, text).map_err(|source| RunError::Io { path: path.display().to_string(), source })?,
                None => print!("{text}"),
            }
        }
        Command::ReplayChain { game, dir, backend, seed } => {
            print!("{}", runner::replay_chain(&runner::resolve_game(&game)?, &dir, backend, seed)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) | RunError::Game(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
