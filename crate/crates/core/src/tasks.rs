//! Default jumper and swimmer setups and their black-box objectives.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::actuation::{ActuationKind, ActuationSpec};
use crate::baselines::{MlpSpec, NeuralFieldConfig, NeuralFieldEncoder, VoxelEncoder, VoxelEncoderSpec};
use crate::basis::RbfGridSpec;
use crate::encoding::{BasisEncoder, DecodedDesign, DesignEncoder, EncoderConfig, MuscleRegions, OccupancyMode};
use crate::error::{Error, Result};
use crate::geometry::{build_grid_mesh, Mesh};
use crate::objectives::{jump_loss, swim_loss, trajectory_metrics, LossWeights, TrajectoryMetrics};
use crate::sim::{simulate_jumper, simulate_swimmer, SimulatorConfig, Trajectory};

/// Loss assigned to designs that cannot be simulated.
pub const PENALTY_LOSS: f64 = 1e3;

pub const JUMPER_CELLS: usize = 7;
pub const JUMPER_SIZE: f64 = 0.1;
pub const SWIMMER_CELLS: [usize; 2] = [12, 4];
pub const SWIMMER_CELL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Swim,
    Jump,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Swim => "swim",
            TaskKind::Jump => "jump",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Basis,
    Neural,
    Voxel,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Basis => "basis",
            EncoderKind::Neural => "neural",
            EncoderKind::Voxel => "voxel",
        }
    }
}

/// Square block of `7 x 7` cells, `0.1 m` wide.
pub fn jumper_mesh() -> Mesh {
    build_grid_mesh(&[JUMPER_CELLS, JUMPER_CELLS], JUMPER_SIZE / JUMPER_CELLS as f64).expect("static grid")
}

/// `12 x 4` grid masked to the inscribed ellipse (semi-axes 0.3 m and 0.1 m).
pub fn swimmer_mesh() -> Mesh {
    let grid = build_grid_mesh(&SWIMMER_CELLS, SWIMMER_CELL).expect("static grid");
    let (a, b) = (0.5 * SWIMMER_CELLS[0] as f64 * SWIMMER_CELL, 0.5 * SWIMMER_CELLS[1] as f64 * SWIMMER_CELL);
    let keep: Vec<bool> = grid
        .element_centers
        .iter()
        .map(|c| ((c[0] - a) / a).powi(2) + ((c[1] - b) / b).powi(2) <= 1.0)
        .collect();
    grid.retain_elements(&keep).expect("mask matches the grid")
}

pub fn task_mesh(task: TaskKind) -> Mesh {
    match task {
        TaskKind::Swim => swimmer_mesh(),
        TaskKind::Jump => jumper_mesh(),
    }
}

pub fn default_simulator(task: TaskKind) -> SimulatorConfig {
    match task {
        TaskKind::Swim => SimulatorConfig::swimmer_default(),
        TaskKind::Jump => SimulatorConfig::jumper_default(),
    }
}

pub fn default_actuation(task: TaskKind) -> ActuationSpec {
    match task {
        TaskKind::Swim => ActuationSpec::new(ActuationKind::SquaredPeriodic, 2),
        TaskKind::Jump => ActuationSpec::new(ActuationKind::GaussianPulse, 1),
    }
}

/// Three materials with 6 x 2 material and morph bases for swimming; two
/// materials with a 3 x 3 basis and derived occupancy for jumping.
pub fn default_basis_config(task: TaskKind) -> EncoderConfig {
    match task {
        TaskKind::Swim => {
            let spec = RbfGridSpec::new(vec![6, 2], vec![0.0, 0.0], vec![0.6, 0.2]);
            EncoderConfig {
                morph_spec: Some(spec.clone()),
                actuation: default_actuation(task),
                muscle_regions: Some(MuscleRegions::Bands { min_fraction: 0.4 }),
                ..EncoderConfig::materials_only(3, spec)
            }
        }
        TaskKind::Jump => {
            let spec = RbfGridSpec::new(vec![3, 3], vec![0.0, 0.0], vec![JUMPER_SIZE, JUMPER_SIZE]);
            EncoderConfig {
                occupancy_mode: OccupancyMode::SumOfMaterials,
                actuation: default_actuation(task),
                ..EncoderConfig::materials_only(2, spec)
            }
        }
    }
}

/// Coordinate networks sized to roughly match the basis swimmer budget.
pub fn default_neural_config(task: TaskKind) -> NeuralFieldConfig {
    let (materials, regions) = match task {
        TaskKind::Swim => (3, Some(MuscleRegions::Bands { min_fraction: 0.4 })),
        TaskKind::Jump => (2, None),
    };
    NeuralFieldConfig {
        materials,
        material_net: MlpSpec::new(&[2, 4, materials]),
        morph_net: Some(MlpSpec::new(&[2, 6, 2])),
        gamma: 0.3,
        actuation: default_actuation(task),
        muscle_regions: regions,
    }
}

/// Encoder section of an experiment config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderSection {
    Basis { config: EncoderConfig },
    Neural { config: NeuralFieldConfig },
    Voxel { spec: VoxelEncoderSpec, actuation: ActuationSpec },
}

impl EncoderSection {
    pub fn default_for(task: TaskKind, kind: EncoderKind) -> Self {
        match kind {
            EncoderKind::Basis => EncoderSection::Basis { config: default_basis_config(task) },
            EncoderKind::Neural => EncoderSection::Neural { config: default_neural_config(task) },
            EncoderKind::Voxel => {
                EncoderSection::Voxel { spec: VoxelEncoderSpec::default(), actuation: default_actuation(task) }
            }
        }
    }

    pub fn kind(&self) -> EncoderKind {
        match self {
            EncoderSection::Basis { .. } => EncoderKind::Basis,
            EncoderSection::Neural { .. } => EncoderKind::Neural,
            EncoderSection::Voxel { .. } => EncoderKind::Voxel,
        }
    }

    pub fn build(&self, mesh: Arc<Mesh>) -> Result<Arc<dyn DesignEncoder>> {
        Ok(match self {
            EncoderSection::Basis { config } => Arc::new(BasisEncoder::new(config.clone(), mesh)?),
            EncoderSection::Neural { config } => Arc::new(NeuralFieldEncoder::new(config.clone(), mesh)?),
            EncoderSection::Voxel { spec, actuation } => {
                Arc::new(VoxelEncoder::new(spec.clone(), actuation.clone(), mesh)?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub loss: f64,
    pub metrics: TrajectoryMetrics,
}

/// Decode, simulate, score.
#[derive(Clone)]
pub struct TaskEvaluator {
    pub task: TaskKind,
    pub encoder: Arc<dyn DesignEncoder>,
    pub sim: SimulatorConfig,
    pub weights: LossWeights,
}

impl TaskEvaluator {
    pub fn new(task: TaskKind, encoder: Arc<dyn DesignEncoder>, sim: SimulatorConfig, weights: LossWeights) -> Result<Self> {
        sim.validate()?;
        weights.validate()?;
        Ok(Self { task, encoder, sim, weights })
    }

    pub fn default_for(task: TaskKind, kind: EncoderKind) -> Result<Self> {
        let mesh = Arc::new(task_mesh(task));
        let encoder = EncoderSection::default_for(task, kind).build(mesh)?;
        Self::new(task, encoder, default_simulator(task), LossWeights::default())
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count()
    }

    pub fn simulate(&self, design: &DecodedDesign) -> Result<Trajectory> {
        match self.task {
            TaskKind::Swim => simulate_swimmer(design, &self.sim),
            TaskKind::Jump => simulate_jumper(design, &self.sim),
        }
    }

    pub fn score(&self, design: &DecodedDesign, traj: &Trajectory) -> Result<Evaluation> {
        let metrics = trajectory_metrics(traj, design)?;
        let loss = match self.task {
            TaskKind::Swim => swim_loss(&metrics, &self.weights),
            TaskKind::Jump => jump_loss(&metrics, &self.weights),
        };
        Ok(Evaluation { loss, metrics })
    }

    pub fn evaluate(&self, c: &[f64]) -> Result<Evaluation> {
        let design = self.encoder.decode(c)?;
        let traj = self.simulate(&design)?;
        self.score(&design, &traj)
    }

    /// Total objective: simulator failures map to [`PENALTY_LOSS`].
    pub fn loss(&self, c: &[f64]) -> f64 {
        match self.evaluate(c) {
            Ok(e) if e.loss.is_finite() => e.loss,
            Ok(_) | Err(Error::EmptyDesign | Error::SimulationDiverged { .. } | Error::DegenerateGeometry(_)) => {
                PENALTY_LOSS
            }
            Err(e) => {
                log::error!("objective evaluation failed: {e}");
                PENALTY_LOSS
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dimensional_budgets() {
        let count = |t, k| TaskEvaluator::default_for(t, k).unwrap().param_count();
        assert_eq!(count(TaskKind::Swim, EncoderKind::Basis), 63);
        assert_eq!(count(TaskKind::Swim, EncoderKind::Neural), 62);
        assert_eq!(count(TaskKind::Jump, EncoderKind::Basis), 21);
        assert_eq!(count(TaskKind::Jump, EncoderKind::Voxel), 52);
        assert!(2 * count(TaskKind::Jump, EncoderKind::Basis) < count(TaskKind::Jump, EncoderKind::Voxel));
    }

    #[test]
    fn swimmer_mesh_is_an_ellipse_of_forty_cells() {
        let m = swimmer_mesh();
        assert_eq!(m.element_count(), 40);
        let (lo, hi) = m.nodes.bounds();
        assert_eq!(lo[0], 0.0);
        assert!((hi[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn empty_jumper_gets_the_penalty() {
        let ev = TaskEvaluator::default_for(TaskKind::Jump, EncoderKind::Voxel).unwrap();
        let mut c = vec![-1.0; ev.param_count()];
        let n = c.len();
        c[n - 3..].iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(ev.loss(&c), PENALTY_LOSS);
    }

    #[test]
    fn zero_designs_score_finitely() {
        for (t, k) in [
            (TaskKind::Swim, EncoderKind::Basis),
            (TaskKind::Swim, EncoderKind::Neural),
            (TaskKind::Jump, EncoderKind::Basis),
            (TaskKind::Jump, EncoderKind::Voxel),
        ] {
            let ev = TaskEvaluator::default_for(t, k).unwrap();
            let loss = ev.loss(&vec![0.0; ev.param_count()]);
            assert!(loss.is_finite() && loss < PENALTY_LOSS);
        }
    }

    #[test]
    fn encoder_sections_round_trip_through_json() {
        for (t, k) in [(TaskKind::Swim, EncoderKind::Neural), (TaskKind::Jump, EncoderKind::Basis), (TaskKind::Jump, EncoderKind::Voxel)] {
            let s = EncoderSection::default_for(t, k);
            let json = serde_json::to_string(&s).unwrap();
            let back: EncoderSection = serde_json::from_str(&json).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.kind(), k);
        }
    }
}
