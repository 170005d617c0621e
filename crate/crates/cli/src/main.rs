//! `codesign` command-line runner.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use codesign::cmaes::ScheduleMode;
use codesign::experiment::TargetShape;
use codesign::tasks::{EncoderKind, TaskKind};

#[derive(Debug, Parser)]
#[command(name = "codesign", version, about = "Basis-function co-design experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON experiment config; every section is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `optimizer.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Evaluation threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit material score fields to a target label grid.
    MatchMaterial {
        #[arg(long, value_enum)]
        target: Option<TargetArg>,
        /// Basis functions per axis, so `N_phi` is its square.
        #[arg(long)]
        basis_per_axis: Option<usize>,
    },
    /// Sample random shapes and analyse their Chamfer distance matrix.
    SampleShapes,
    /// Co-optimize morphology, materials and actuation for a task.
    Optimize {
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        #[arg(long, value_enum)]
        encoder: Option<EncoderArg>,
        #[arg(long, value_enum)]
        schedule: Option<ScheduleArg>,
    },
    /// Re-simulate a saved design file.
    Replay {
        #[arg(long)]
        design: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TargetArg {
    Torus,
    Cross,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TaskArg {
    Swim,
    Jump,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EncoderArg {
    Basis,
    Neural,
    Voxel,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScheduleArg {
    Joint,
    Sequential,
}

impl From<TargetArg> for TargetShape {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Torus => TargetShape::Torus,
            TargetArg::Cross => TargetShape::Cross,
        }
    }
}

impl From<TaskArg> for TaskKind {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Swim => TaskKind::Swim,
            TaskArg::Jump => TaskKind::Jump,
        }
    }
}

impl From<EncoderArg> for EncoderKind {
    fn from(e: EncoderArg) -> Self {
        match e {
            EncoderArg::Basis => EncoderKind::Basis,
            EncoderArg::Neural => EncoderKind::Neural,
            EncoderArg::Voxel => EncoderKind::Voxel,
        }
    }
}

impl From<ScheduleArg> for ScheduleMode {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Joint => ScheduleMode::Joint,
            ScheduleArg::Sequential => ScheduleMode::Sequential,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_USAGE } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
