use std::fmt;
use std::fs;

use serde_json::json;

use codesign::experiment::{run_match_material, run_optimize, run_sample_shapes, replay, ExperimentConfig, OptimizeSetup};
use codesign::io::{eigenvalue_csv, loss_csv, novelty_csv, parse_design_file, trajectory_csv, Pgm};
use codesign::Error;

use crate::manifest::{sha256_hex, ArtifactWriter};
use crate::{Cli, Command};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse(_) | Error::InvalidSpec(_) | Error::Json(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(format!("writing output: {e}"))
}

fn json_text(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes") + "\n"
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    match &cli.common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Ok(ExperimentConfig::from_json(&text)?)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

/// Runs one subcommand and returns a one-line summary for stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let workers = cli.common.workers;
    let out = &cli.common.out;
    match &cli.command {
        Command::MatchMaterial { target, basis_per_axis } => {
            let mut cfg = load_config(cli)?;
            if let Some(t) = target {
                cfg.loss.matching.target = (*t).into();
            }
            if let Some(n) = basis_per_axis {
                cfg.loss.matching.basis_per_axis = *n;
            }
            cfg.optimizer.seed = cli.common.seed.unwrap_or(cfg.optimizer.seed);
            cfg.validate()?;
            let seed = cfg.optimizer.seed;
            let outcome = run_match_material(&cfg.loss.matching, &cfg.optimizer, seed, workers)?;
            let grid = cfg.loss.matching.grid;
            let config_text = json_text(&cfg);
            let mut w = ArtifactWriter::create(out).map_err(io_err)?;
            w.write("config.json", config_text.as_bytes()).map_err(io_err)?;
            w.write("loss.csv", loss_csv(&outcome.run.history).as_bytes()).map_err(io_err)?;
            w.write("labels.pgm", &Pgm::from_label_grid(&outcome.labels, grid, grid)?.to_bytes()).map_err(io_err)?;
            w.write("target.pgm", &Pgm::from_label_grid(&outcome.target, grid, grid)?.to_bytes()).map_err(io_err)?;
            let summary = json!({
                "param_count": outcome.param_count,
                "best_loss": outcome.run.best_value,
                "mismatch_fraction": outcome.mismatch,
                "evaluations": outcome.run.evaluations,
            });
            w.write("summary.json", json_text(&summary).as_bytes()).map_err(io_err)?;
            w.finish("match-material", sha256_hex(config_text.as_bytes()), Some(seed)).map_err(io_err)?;
            Ok(format!("mismatch_fraction={}", outcome.mismatch))
        }
        Command::SampleShapes => {
            let mut cfg = load_config(cli)?;
            cfg.optimizer.seed = cli.common.seed.unwrap_or(cfg.optimizer.seed);
            cfg.validate()?;
            let seed = cfg.optimizer.seed;
            let pool = worker_pool(workers)?;
            let analysis = pool.install(|| run_sample_shapes(&cfg.analysis, seed))?;
            let config_text = json_text(&cfg);
            let mut w = ArtifactWriter::create(out).map_err(io_err)?;
            w.write("config.json", config_text.as_bytes()).map_err(io_err)?;
            w.write("eigenvalues.csv", eigenvalue_csv(&analysis.mds).as_bytes()).map_err(io_err)?;
            w.write("novelty.csv", novelty_csv(&analysis.novelty).as_bytes()).map_err(io_err)?;
            let summary = json!({
                "param_count": analysis.param_count,
                "d95": analysis.d95,
                "median_novelty": analysis.median_novelty,
            });
            w.write("summary.json", json_text(&summary).as_bytes()).map_err(io_err)?;
            w.finish("sample-shapes", sha256_hex(config_text.as_bytes()), Some(seed)).map_err(io_err)?;
            Ok(format!("d95={} median_novelty={}", analysis.d95, analysis.median_novelty))
        }
        Command::Optimize { task, encoder, schedule } => {
            let mut cfg = load_config(cli)?;
            let setup = OptimizeSetup::resolve(&cfg, task.map(Into::into), encoder.map(Into::into), schedule.map(Into::into))?;
            cfg.task = Some(setup.task);
            cfg.encoder = Some(setup.encoder.clone());
            cfg.simulator = Some(setup.simulator.clone());
            cfg.optimizer = setup.optimizer.clone();
            cfg.optimizer.seed = cli.common.seed.unwrap_or(cfg.optimizer.seed);
            cfg.validate()?;
            let seed = cfg.optimizer.seed;
            // Construct the encoder before touching the output directory.
            setup.evaluator()?;
            let outcome = run_optimize(&setup, seed, workers)?;
            let config_text = json_text(&cfg);
            let mut w = ArtifactWriter::create(out).map_err(io_err)?;
            w.write("config.json", config_text.as_bytes()).map_err(io_err)?;
            w.write("loss.csv", loss_csv(&outcome.run.history).as_bytes()).map_err(io_err)?;
            w.write("best_design.json", outcome.design.to_json()?.as_bytes()).map_err(io_err)?;
            w.write("trajectory.csv", trajectory_csv(&outcome.trajectory).as_bytes()).map_err(io_err)?;
            let summary = json!({
                "task": setup.task.name(),
                "encoder": setup.encoder.kind().name(),
                "param_count": outcome.design.vector.len(),
                "best_loss": outcome.run.best_value,
                "evaluations": outcome.run.evaluations,
                "metrics": outcome.evaluation.metrics,
            });
            w.write("summary.json", json_text(&summary).as_bytes()).map_err(io_err)?;
            w.finish("optimize", sha256_hex(config_text.as_bytes()), Some(seed)).map_err(io_err)?;
            Ok(format!("best_loss={}", outcome.run.best_value))
        }
        Command::Replay { design } => {
            let text = fs::read_to_string(design).map_err(|e| CliError::Config(format!("cannot read {}: {e}", design.display())))?;
            let file = parse_design_file(&text)?;
            let (evaluation, trajectory) = replay(&file)?;
            let mut w = ArtifactWriter::create(out).map_err(io_err)?;
            w.write("trajectory.csv", trajectory_csv(&trajectory).as_bytes()).map_err(io_err)?;
            let summary = json!({ "loss": evaluation.loss, "recorded_loss": file.loss, "metrics": evaluation.metrics });
            w.write("summary.json", json_text(&summary).as_bytes()).map_err(io_err)?;
            w.finish("replay", sha256_hex(text.as_bytes()), None).map_err(io_err)?;
            Ok(format!("loss={}", evaluation.loss))
        }
    }
}

/// Pool for stages that do not go through the optimizer's own worker handling.
fn worker_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot build worker pool: {e}")))
}
