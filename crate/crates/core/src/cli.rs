//! The `soc` command line.
//!
//! Exit status: 0 on success, 2 for usage or input errors (bad flags,
//! unreadable or malformed files, invalid overrides), 1 for failures while
//! running.

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{ConfigError, Preset, RunConfig};
use crate::env::Maze;
use crate::harness::{self, HarnessError};
use crate::learner::LearnerError;

pub const ECHO_FILE: &str = "config.echo";

#[derive(Debug, Parser)]
#[command(
    name = "soc",
    version,
    about = "Self organizing classifiers in continuous mazes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a batch of experiments and write every CSV output.
    Run(RunArgs),
    /// Run a batch and write only the behavior, fitness and SOM weight maps.
    Maps(RunArgs),
    /// Parse a maze file and report its layout.
    ValidateMaze {
        /// Maze file, or one of the presets `empty-room`, `one-wall`.
        path: String,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Maze preset (`empty-room`, `one-wall`) or maze file path.
    #[arg(long)]
    pub maze: Option<String>,
    /// Parameter preset: paper, test-a, test-b or custom.
    #[arg(long, default_value = "paper")]
    pub preset: String,
    /// key=value configuration file applied on top of the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
    /// Worker threads for independent repetitions.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Override any configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::Learner(LearnerError::InvalidParams(_)) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

/// Builds the effective configuration: preset, then config file, then flags.
pub fn resolve(args: &RunArgs) -> Result<RunConfig, ConfigError> {
    let preset: Preset = args.preset.parse()?;
    let mut config = RunConfig::preset(preset);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::MazeFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        config.apply_text(&text)?;
    }
    if let Some(maze) = &args.maze {
        config.maze = maze.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(reps) = args.repetitions {
        config.repetitions = reps;
    }
    for o in &args.overrides {
        config.apply_assignment(o)?;
    }
    Ok(config)
}

fn run_batch<W: Write>(args: &RunArgs, maps_only: bool, out: &mut W) -> Result<(), Failure> {
    let config = resolve(args)?;
    let experiment = config.experiment()?;
    experiment.validate()?;
    let agg = harness::run_batch(&experiment, args.jobs.max(1))?;
    let dir = &args.out_dir;
    let written = if maps_only {
        harness::write_map_csvs(dir, &agg)?
    } else {
        harness::write_csvs(dir, &agg)?
    };
    let echo = dir.join(ECHO_FILE);
    std::fs::write(&echo, config.echo())
        .map_err(|e| Failure::Runtime(format!("{}: {e}", echo.display())))?;
    for p in written.iter().chain(std::iter::once(&echo)) {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    if let Some(p) = agg.final_performance() {
        let _ = writeln!(
            out,
            "final mean steps (last {} exploit trials): {p:.3}",
            config.metric_window
        );
    }
    Ok(())
}

fn validate_maze<W: Write>(path: &str, out: &mut W) -> Result<(), Failure> {
    let maze = match path {
        "empty-room" | "one-wall" => Maze::preset(path),
        _ => {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            Maze::parse(&text)
        }
    }
    .map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
    let walls = maze.walls().count();
    let free = maze.free_cells().count();
    let goal = maze.goal();
    let _ = writeln!(
        out,
        "{path}: {}x{} cells, {walls} wall, {free} free, goal at ({}, {})",
        maze.width(),
        maze.height(),
        goal.x,
        goal.y
    );
    Ok(())
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T, O, E>(argv: I, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(args) => run_batch(args, false, out),
        Command::Maps(args) => run_batch(args, true, out),
        Command::ValidateMaze { path } => validate_maze(path, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            let _ = writeln!(
                err,
                "usage: soc <run|maps|validate-maze> [OPTIONS]; see soc --help"
            );
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}
