//! Configuration schema and runners for the three experiment families:
//! material matching, shape sampling analysis and task co-optimization.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{classical_mds, median, novelty_scores, pairwise_chamfer, sample_shapes, MdsResult, ShapeGenerator};
use crate::baselines::{MlpSpec, NeuralMorph};
use crate::basis::{assemble_scalar_basis_matrix, RbfGridSpec};
use crate::cmaes::{run_schedule_with_workers, OptimizationSchedule, OptimizerSettings, RunResult, ScheduleMode};
use crate::encoding::{build_layout, decode_material_labels, EncoderConfig, MorphField};
use crate::error::{Error, Result};
use crate::geometry::{build_grid_mesh, build_sphere_cloud, PointSet};
use crate::io::DesignFile;
use crate::objectives::{material_match_loss, mismatch_fraction, LossWeights};
use crate::sim::{SimulatorConfig, Trajectory};
use crate::tasks::{default_simulator, task_mesh, EncoderKind, EncoderSection, Evaluation, TaskEvaluator, TaskKind, PENALTY_LOSS};

/// Top-level JSON config. Every section is optional; missing sections take
/// their documented defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub task: Option<TaskKind>,
    #[serde(default)]
    pub encoder: Option<EncoderSection>,
    #[serde(default)]
    pub simulator: Option<SimulatorConfig>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub loss: LossSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.loss.weights.validate()?;
        self.loss.matching.validate()?;
        self.analysis.validate()?;
        if let Some(sim) = &self.simulator {
            sim.validate()?;
        }
        Ok(())
    }
}

fn default_lambda() -> Option<usize> {
    Some(50)
}

fn default_generations() -> usize {
    200
}

fn default_first_phase() -> usize {
    150
}

fn default_sigma0() -> f64 {
    0.3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    /// `null` picks the CMA-ES default population for the dimension.
    #[serde(default = "default_lambda")]
    pub lambda: Option<usize>,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_sigma0")]
    pub sigma0: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleMode,
    /// Generations of the morphology phase of a sequential schedule; the
    /// remainder of `generations` goes to actuation.
    #[serde(default = "default_first_phase")]
    pub morphology_generations: usize,
}

fn default_schedule() -> ScheduleMode {
    ScheduleMode::Joint
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            generations: default_generations(),
            sigma0: default_sigma0(),
            seed: 0,
            schedule: default_schedule(),
            morphology_generations: default_first_phase(),
        }
    }
}

impl OptimizerSection {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_some_and(|l| l < 2) {
            return Err(Error::Config("optimizer.lambda must be at least 2".into()));
        }
        if self.generations == 0 {
            return Err(Error::Config("optimizer.generations must be positive".into()));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Config("optimizer.sigma0 must be positive".into()));
        }
        if self.schedule == ScheduleMode::Sequential && self.morphology_generations > self.generations {
            return Err(Error::Config("optimizer.morphology_generations exceeds optimizer.generations".into()));
        }
        Ok(())
    }

    pub fn settings(&self) -> OptimizerSettings {
        OptimizerSettings { lambda: self.lambda, sigma0: self.sigma0 }
    }

    pub fn schedule_for(&self, n: usize, actuation: std::ops::Range<usize>) -> OptimizationSchedule {
        match self.schedule {
            ScheduleMode::Joint => OptimizationSchedule::joint(n, self.generations),
            ScheduleMode::Sequential => OptimizationSchedule::sequential(
                n,
                actuation,
                self.morphology_generations,
                self.generations - self.morphology_generations,
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    #[serde(default)]
    pub weights: LossWeights,
    #[serde(default)]
    pub matching: MatchingSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetShape {
    Torus,
    Cross,
}

/// Material-matching setup on a square grid spanning the unit box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingSection {
    #[serde(default = "default_target")]
    pub target: TargetShape,
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Basis functions per axis and per material, so `N_phi = basis_per_axis^2`.
    #[serde(default = "default_basis_per_axis")]
    pub basis_per_axis: usize,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Annulus radii as fractions of the grid width.
    #[serde(default = "default_torus_radii")]
    pub torus_radii: [f64; 2],
    /// Cross arm width as a fraction of the grid width.
    #[serde(default = "default_cross_arm")]
    pub cross_arm: f64,
    /// Half-length of each cross arm as a fraction of the grid width.
    #[serde(default = "default_cross_reach")]
    pub cross_reach: f64,
}

fn default_target() -> TargetShape {
    TargetShape::Cross
}
fn default_grid() -> usize {
    50
}
fn default_basis_per_axis() -> usize {
    8
}
fn default_overlap() -> f64 {
    1.0
}
fn default_tau() -> f64 {
    0.2
}
fn default_torus_radii() -> [f64; 2] {
    [0.22, 0.38]
}
fn default_cross_arm() -> f64 {
    0.2
}
fn default_cross_reach() -> f64 {
    0.4
}

impl Default for MatchingSection {
    fn default() -> Self {
        Self {
            target: default_target(),
            grid: default_grid(),
            basis_per_axis: default_basis_per_axis(),
            overlap: default_overlap(),
            tau: default_tau(),
            torus_radii: default_torus_radii(),
            cross_arm: default_cross_arm(),
            cross_reach: default_cross_reach(),
        }
    }
}

impl MatchingSection {
    pub fn validate(&self) -> Result<()> {
        if self.grid == 0 || self.grid > 4096 {
            return Err(Error::Config("loss.matching.grid must be in 1..=4096".into()));
        }
        if self.basis_per_axis == 0 {
            return Err(Error::Config("loss.matching.basis_per_axis must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite() && self.overlap > 0.0 && self.overlap.is_finite()) {
            return Err(Error::Config("loss.matching.tau and overlap must be positive".into()));
        }
        let [r0, r1] = self.torus_radii;
        if !(0.0 <= r0 && r0 < r1 && r1 <= 0.5) {
            return Err(Error::Config("loss.matching.torus_radii must satisfy 0 <= inner < outer <= 0.5".into()));
        }
        if !(self.cross_arm > 0.0 && self.cross_arm <= 1.0 && self.cross_reach > 0.0 && self.cross_reach <= 0.5) {
            return Err(Error::Config("loss.matching cross dimensions out of range".into()));
        }
        Ok(())
    }

    /// Target labels (1 = background, 2 = shape), `x` fastest, `y` up.
    pub fn target_labels(&self) -> Vec<u8> {
        let n = self.grid;
        let mut labels = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                let x = (ix as f64 + 0.5) / n as f64 - 0.5;
                let y = (iy as f64 + 0.5) / n as f64 - 0.5;
                let inside = match self.target {
                    TargetShape::Torus => {
                        let r = x.hypot(y);
                        r >= self.torus_radii[0] && r <= self.torus_radii[1]
                    }
                    TargetShape::Cross => {
                        let (ax, ay) = (x.abs(), y.abs());
                        let half = 0.5 * self.cross_arm;
                        (ax <= half && ay <= self.cross_reach) || (ay <= half && ax <= self.cross_reach)
                    }
                };
                labels.push(if inside { 2 } else { 1 });
            }
        }
        labels
    }
}

/// Which shape generator the sampling analysis morphs the sphere with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSection {
    /// `per_axis^3` RBFs over the sphere's bounding box, three coefficients each.
    Basis { per_axis: usize },
    /// Coordinate network; layer sizes must start and end with 3.
    Neural { layers: Vec<usize> },
}

fn default_generator() -> GeneratorSection {
    GeneratorSection::Basis { per_axis: 4 }
}
fn default_n_samples() -> usize {
    600
}
fn default_cloud_size() -> usize {
    200
}
fn default_radius() -> f64 {
    100.0
}
fn default_gamma() -> f64 {
    0.3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_generator")]
    pub generator: GeneratorSection,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_cloud_size")]
    pub cloud_size: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            generator: default_generator(),
            n_samples: default_n_samples(),
            cloud_size: default_cloud_size(),
            radius: default_radius(),
            gamma: default_gamma(),
        }
    }
}

impl AnalysisSection {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::Config("analysis.n_samples must be at least 2".into()));
        }
        if self.cloud_size < 4 {
            return Err(Error::Config("analysis.cloud_size must be at least 4".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Config("analysis.radius must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config("analysis.gamma must lie in (0, 1)".into()));
        }
        match &self.generator {
            GeneratorSection::Basis { per_axis } if *per_axis == 0 => {
                Err(Error::Config("analysis.generator.per_axis must be positive".into()))
            }
            GeneratorSection::Neural { layers } if layers.len() < 2 || layers[0] != 3 || layers[layers.len() - 1] != 3 => {
                Err(Error::Config("analysis.generator.layers must start and end with 3".into()))
            }
            GeneratorSection::Neural { layers } if layers.contains(&0) => {
                Err(Error::Config("analysis.generator.layers must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn build_generator(&self) -> Result<Box<dyn ShapeGenerator>> {
        let cloud = build_sphere_cloud(self.cloud_size, self.radius)?;
        Ok(match &self.generator {
            GeneratorSection::Basis { per_axis } => {
                let r = self.radius;
                let spec = RbfGridSpec::new(vec![*per_axis; 3], vec![-r; 3], vec![r; 3]);
                Box::new(MorphField::new(&spec, &cloud, None, self.gamma)?)
            }
            GeneratorSection::Neural { layers } => Box::new(NeuralMorph::new(MlpSpec::new(layers), &cloud, self.gamma)?),
        })
    }
}

/// Result of one material-matching run.
#[derive(Clone, Debug)]
pub struct MatchOutcome {
    pub run: RunResult,
    pub target: Vec<u8>,
    pub labels: Vec<u8>,
    pub mismatch: f64,
    pub param_count: usize,
}

/// Fits two-material score fields to a procedural target by minimizing the
/// softmax cross-entropy with CMA-ES.
pub fn run_match_material(section: &MatchingSection, optimizer: &OptimizerSection, seed: u64, workers: usize) -> Result<MatchOutcome> {
    section.validate()?;
    optimizer.validate()?;
    let n = section.grid;
    let mesh = build_grid_mesh(&[n, n], 1.0 / n as f64)?;
    let spec = RbfGridSpec::unit(section.basis_per_axis, 2).with_overlap(section.overlap);
    let config = EncoderConfig { tau: section.tau, ..EncoderConfig::materials_only(2, spec.clone()) };
    let layout = build_layout(&config);
    let b = assemble_scalar_basis_matrix(&mesh.element_centers, &spec)?;
    let target = section.target_labels();
    let objective = |c: &[f64]| material_match_loss(c, &target, &b, &layout, section.tau).unwrap_or(PENALTY_LOSS);
    let schedule = OptimizationSchedule::joint(layout.total, optimizer.generations);
    let run = run_schedule_with_workers(&objective, &vec![0.0; layout.total], &schedule, &optimizer.settings(), seed, workers)?;
    let labels = decode_material_labels(&run.best, &b, &layout, None);
    let mismatch = mismatch_fraction(&labels, &target);
    Ok(MatchOutcome { run, target, labels, mismatch, param_count: layout.total })
}

#[derive(Clone, Debug)]
pub struct ShapeAnalysis {
    pub param_count: usize,
    pub mds: MdsResult,
    pub d95: usize,
    pub novelty: Vec<f64>,
    pub median_novelty: f64,
}

/// Samples random shapes, computes their Chamfer distance matrix, its
/// classical MDS spectrum and per-sample novelty.
pub fn run_sample_shapes(section: &AnalysisSection, seed: u64) -> Result<ShapeAnalysis> {
    section.validate()?;
    let generator = section.build_generator()?;
    let shapes: Vec<PointSet> = sample_shapes(generator.as_ref(), section.n_samples, seed);
    let d = pairwise_chamfer(&shapes)?;
    let mds = classical_mds(&d);
    let d95 = mds.d95()?;
    let novelty = novelty_scores(&d)?;
    let median_novelty = median(&novelty);
    Ok(ShapeAnalysis { param_count: generator.param_count(), mds, d95, novelty, median_novelty })
}

/// Fully resolved co-optimization setup.
#[derive(Clone)]
pub struct OptimizeSetup {
    pub task: TaskKind,
    pub encoder: EncoderSection,
    pub simulator: SimulatorConfig,
    pub weights: LossWeights,
    pub optimizer: OptimizerSection,
}

impl OptimizeSetup {
    /// Command-line choices take precedence over the config file.
    pub fn resolve(
        cfg: &ExperimentConfig,
        task: Option<TaskKind>,
        encoder: Option<EncoderKind>,
        schedule: Option<ScheduleMode>,
    ) -> Result<Self> {
        let task = task.or(cfg.task).ok_or_else(|| Error::Config("no task given (use --task or the `task` key)".into()))?;
        let encoder = match (&cfg.encoder, encoder) {
            (Some(section), Some(kind)) if section.kind() != kind => EncoderSection::default_for(task, kind),
            (Some(section), _) => section.clone(),
            (None, kind) => EncoderSection::default_for(task, kind.unwrap_or(EncoderKind::Basis)),
        };
        let mut optimizer = cfg.optimizer.clone();
        if let Some(s) = schedule {
            optimizer.schedule = s;
        }
        optimizer.validate()?;
        Ok(Self {
            task,
            simulator: cfg.simulator.clone().unwrap_or_else(|| default_simulator(task)),
            encoder,
            weights: cfg.loss.weights.clone(),
            optimizer,
        })
    }

    pub fn evaluator(&self) -> Result<TaskEvaluator> {
        let encoder = self.encoder.build(Arc::new(task_mesh(self.task)))?;
        TaskEvaluator::new(self.task, encoder, self.simulator.clone(), self.weights.clone())
    }
}

pub struct OptimizeOutcome {
    pub run: RunResult,
    pub design: DesignFile,
    pub trajectory: Trajectory,
    pub evaluation: Evaluation,
}

/// Co-optimizes one task from the centre of the design box.
pub fn run_optimize(setup: &OptimizeSetup, seed: u64, workers: usize) -> Result<OptimizeOutcome> {
    let evaluator = setup.evaluator()?;
    let n = evaluator.param_count();
    let schedule = setup.optimizer.schedule_for(n, evaluator.encoder.actuation_range());
    let objective = |c: &[f64]| evaluator.loss(c);
    let run = run_schedule_with_workers(&objective, &vec![0.0; n], &schedule, &setup.optimizer.settings(), seed, workers)?;
    let design = DesignFile {
        task: setup.task,
        encoder: setup.encoder.clone(),
        simulator: setup.simulator.clone(),
        loss_weights: setup.weights.clone(),
        vector: run.best.clone(),
        loss: None,
        metrics: None,
    };
    let (evaluation, trajectory) = replay(&design)?;
    let design = DesignFile { loss: Some(evaluation.loss), metrics: Some(evaluation.metrics), ..design };
    Ok(OptimizeOutcome { run, design, trajectory, evaluation })
}

/// Re-simulates a saved design.
pub fn replay(design: &DesignFile) -> Result<(Evaluation, Trajectory)> {
    let encoder = design.encoder.build(Arc::new(task_mesh(design.task)))?;
    let evaluator = TaskEvaluator::new(design.task, encoder, design.simulator.clone(), design.loss_weights.clone())?;
    let decoded = evaluator.encoder.decode(&design.vector)?;
    let trajectory = evaluator.simulate(&decoded)?;
    let evaluation = evaluator.score(&decoded, &trajectory)?;
    Ok((evaluation, trajectory))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg.optimizer.lambda, Some(50));
        assert_eq!(cfg.optimizer.generations, 200);
        assert_eq!(cfg.analysis.n_samples, 600);
        assert_eq!(cfg.analysis.cloud_size, 200);
        assert_eq!(cfg.loss.matching.grid, 50);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ExperimentConfig::from_json(r#"{"optimizer": {"lamda": 4}}"#).unwrap_err();
        assert!(err.to_string().contains("lamda"), "{err}");
        assert!(ExperimentConfig::from_json(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for bad in [
            r#"{"optimizer": {"generations": 0}}"#,
            r#"{"optimizer": {"schedule": "sequential", "generations": 100}}"#,
            r#"{"analysis": {"n_samples": 1}}"#,
            r#"{"analysis": {"generator": {"kind": "neural", "layers": [2, 4, 3]}}}"#,
            r#"{"loss": {"matching": {"torus_radii": [0.4, 0.3]}}}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn targets_have_the_documented_area() {
        let mut m = MatchingSection { grid: 400, target: TargetShape::Torus, ..Default::default() };
        let frac = |m: &MatchingSection| m.target_labels().iter().filter(|&&l| l == 2).count() as f64 / (m.grid * m.grid) as f64;
        let ring = std::f64::consts::PI * (0.38f64.powi(2) - 0.22f64.powi(2));
        assert!((frac(&m) - ring).abs() < 2e-3);
        m.target = TargetShape::Cross;
        // Two 0.2 x 0.8 bars overlapping in a 0.2 x 0.2 square.
        assert!((frac(&m) - (2.0 * 0.16 - 0.04)).abs() < 5e-3);
    }

    #[test]
    fn generator_budgets() {
        let count = |g| AnalysisSection { generator: g, cloud_size: 20, ..Default::default() }.build_generator().unwrap().param_count();
        assert_eq!(count(GeneratorSection::Basis { per_axis: 2 }), 24);
        assert_eq!(count(GeneratorSection::Basis { per_axis: 4 }), 192);
        assert_eq!(count(GeneratorSection::Basis { per_axis: 6 }), 648);
        assert_eq!(count(GeneratorSection::Neural { layers: vec![3, 4, 3] }), 31);
    }

    #[test]
    fn resolve_prefers_command_line() {
        let cfg = ExperimentConfig { task: Some(TaskKind::Swim), ..Default::default() };
        let s = OptimizeSetup::resolve(&cfg, Some(TaskKind::Jump), Some(EncoderKind::Voxel), Some(ScheduleMode::Sequential)).unwrap();
        assert_eq!(s.task, TaskKind::Jump);
        assert_eq!(s.encoder.kind(), EncoderKind::Voxel);
        assert_eq!(s.optimizer.schedule, ScheduleMode::Sequential);
        assert!(OptimizeSetup::resolve(&ExperimentConfig::default(), None, None, None).is_err());
    }

    #[test]
    fn short_match_run_improves_on_the_start() {
        let section = MatchingSection { grid: 20, basis_per_axis: 4, ..Default::default() };
        let opt = OptimizerSection { lambda: Some(12), generations: 30, ..Default::default() };
        let out = run_match_material(&section, &opt, 3, 0).unwrap();
        assert_eq!(out.labels.len(), 400);
        assert_eq!(out.param_count, 32);
        let first = out.run.history[0].best_loss;
        assert!(out.run.best_value < first);
    }

    #[test]
    fn short_jump_run_replays_to_its_recorded_loss() {
        let cfg = ExperimentConfig {
            optimizer: OptimizerSection { lambda: Some(8), generations: 3, ..Default::default() },
            ..Default::default()
        };
        let setup = OptimizeSetup::resolve(&cfg, Some(TaskKind::Jump), None, None).unwrap();
        let out = run_optimize(&setup, 11, 0).unwrap();
        assert_eq!(out.run.history.len(), 3);
        assert_eq!(out.design.loss, Some(out.run.best_value));
        let (again, _) = replay(&out.design).unwrap();
        assert_eq!(again.loss, out.evaluation.loss);
    }
}
