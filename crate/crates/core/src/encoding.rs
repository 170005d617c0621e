//! The basis-function design embedding: layout of the flat design vector and
//! its decoding into occupancy, material labels, morphed nodes and actuation.
//!
//! Every block of the design vector lives in the box `[-1, 1]`; decoding clamps
//! coordinates into that box (NaN decodes as 0) before use.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::actuation::{Actuation, ActuationSpec};
use crate::basis::{
    assemble_scalar_with, assemble_vector_with, sup_gradient_estimate, RbfBasis, RbfGridSpec,
    ScalarBasisMatrix, VectorBasisMatrix,
};
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::{Mesh, PointSet};

#[inline]
pub fn box_clamp(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-1.0, 1.0)
    }
}

pub fn clamp_to_box(c: &[f64]) -> Vec<f64> {
    c.iter().map(|&x| box_clamp(x)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupancyMode {
    None,
    Independent,
    SumOfMaterials,
}

/// Where muscle materials (index >= 2) may appear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuscleRegions {
    /// Muscles only where `|y - y_mid| >= min_fraction * half_height` of the
    /// reference body.
    Bands { min_fraction: f64 },
    /// Explicit allowed-element masks, one per material (material 1's mask is ignored).
    Masks(Vec<Vec<bool>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub materials: usize,
    pub material_spec: RbfGridSpec,
    #[serde(default)]
    pub morph_spec: Option<RbfGridSpec>,
    pub occupancy_mode: OccupancyMode,
    #[serde(default)]
    pub occupancy_spec: Option<RbfGridSpec>,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub actuation: ActuationSpec,
    #[serde(default)]
    pub external_count: usize,
    #[serde(default)]
    pub muscle_regions: Option<MuscleRegions>,
}

fn default_tau() -> f64 {
    1.0
}

fn default_gamma() -> f64 {
    0.3
}

impl EncoderConfig {
    /// Material fields only, no morph, occupancy, actuation or externals.
    pub fn materials_only(materials: usize, material_spec: RbfGridSpec) -> Self {
        Self {
            materials,
            material_spec,
            morph_spec: None,
            occupancy_mode: OccupancyMode::None,
            occupancy_spec: None,
            theta: 0.0,
            tau: default_tau(),
            gamma: default_gamma(),
            actuation: ActuationSpec::none(),
            external_count: 0,
            muscle_regions: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.materials == 0 || self.materials > u8::MAX as usize {
            return Err(Error::Config("material count must be in 1..=255".into()));
        }
        self.material_spec.validate()?;
        if let Some(m) = &self.morph_spec {
            m.validate()?;
        }
        match (self.occupancy_mode, &self.occupancy_spec) {
            (OccupancyMode::Independent, None) => {
                return Err(Error::Config("independent occupancy needs occupancy_spec".into()))
            }
            (_, Some(s)) => s.validate()?,
            _ => {}
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config("gamma must lie in (0, 1)".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config("tau must be positive".into()));
        }
        if !self.theta.is_finite() {
            return Err(Error::Config("theta must be finite".into()));
        }
        self.actuation.validate()?;
        if let Some(MuscleRegions::Masks(m)) = &self.muscle_regions {
            if m.len() != self.materials {
                return Err(Error::Config("muscle masks need one entry per material".into()));
            }
        }
        Ok(())
    }
}

/// Contiguous blocks of the design vector, in the fixed order
/// material -> morph -> occupancy -> actuation -> external.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignVectorLayout {
    pub total: usize,
    pub materials: usize,
    pub material_block: usize,
    pub material: Range<usize>,
    pub morph: Range<usize>,
    pub occupancy: Range<usize>,
    pub actuation: Range<usize>,
    pub external: Range<usize>,
}

impl DesignVectorLayout {
    pub fn from_block_sizes(
        materials: usize,
        material_block: usize,
        morph: usize,
        occupancy: usize,
        actuation: usize,
        external: usize,
    ) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let material = take(materials * material_block);
        let morph = take(morph);
        let occupancy = take(occupancy);
        let actuation = take(actuation);
        let external = take(external);
        Self { total: at, materials, material_block, material, morph, occupancy, actuation, external }
    }

    pub fn material_k(&self, k: usize) -> Range<usize> {
        let s = self.material.start + k * self.material_block;
        s..s + self.material_block
    }

    /// Blocks in layout order; concatenating them reproduces the vector.
    pub fn blocks(&self) -> [Range<usize>; 5] {
        [
            self.material.clone(),
            self.morph.clone(),
            self.occupancy.clone(),
            self.actuation.clone(),
            self.external.clone(),
        ]
    }

    /// Coordinates outside the actuation block.
    pub fn non_actuation_mask(&self) -> Vec<bool> {
        (0..self.total).map(|i| !self.actuation.contains(&i)).collect()
    }
}

pub fn build_layout(config: &EncoderConfig) -> DesignVectorLayout {
    let n_phi = config.material_spec.count();
    let n_psi = config.morph_spec.as_ref().map_or(0, |s| s.dim() * s.count());
    let n_occ = match config.occupancy_mode {
        OccupancyMode::Independent => config.occupancy_spec.as_ref().map_or(0, |s| s.count()),
        _ => 0,
    };
    DesignVectorLayout::from_block_sizes(
        config.materials,
        n_phi,
        n_psi,
        n_occ,
        config.actuation.param_count(),
        config.external_count,
    )
}

/// Decoded design consumed by simulators.
///
/// `labels[e]` is `0` for removed elements and the 1-based material index
/// otherwise; material 1 is passive and material `k >= 2` is driven by
/// actuation group `k - 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedDesign {
    pub mesh: Arc<Mesh>,
    pub occupancy: Vec<bool>,
    pub labels: Vec<u8>,
    pub materials: usize,
    pub morphed_nodes: PointSet,
    pub actuation: Actuation,
    pub external: Vec<f64>,
}

impl DecodedDesign {
    pub fn is_empty(&self) -> bool {
        !self.occupancy.iter().any(|&o| o)
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn muscle_fraction(&self) -> f64 {
        let occupied = self.occupied_count();
        if occupied == 0 {
            return 0.0;
        }
        let muscle = self.labels.iter().filter(|&&l| l >= 2).count();
        muscle as f64 / occupied as f64
    }

    /// Every label invariant the decoders promise.
    pub fn check_invariants(&self) -> Result<()> {
        if self.morphed_nodes.len() != self.mesh.node_count() {
            return Err(invalid_arg("morphed node count differs from reference"));
        }
        if self.labels.len() != self.mesh.element_count() || self.occupancy.len() != self.labels.len() {
            return Err(invalid_arg("per-element vectors have the wrong length"));
        }
        for (&o, &l) in self.occupancy.iter().zip(&self.labels) {
            if o != (l != 0) || l as usize > self.materials {
                return Err(invalid_arg("labels must exist exactly on occupied elements"));
            }
        }
        Ok(())
    }
}

/// Anything that maps a flat parameter vector to a design.
pub trait DesignEncoder: Send + Sync {
    fn param_count(&self) -> usize;
    /// Range of the actuation parameters inside the vector.
    fn actuation_range(&self) -> Range<usize>;
    fn decode(&self, c: &[f64]) -> Result<DecodedDesign>;
}

/// Row-stochastic softmax weights `w[j, k]` of the material score fields.
pub fn decode_material_weights(
    c: &[f64],
    b: &ScalarBasisMatrix,
    layout: &DesignVectorLayout,
    tau: f64,
) -> DMatrix<f64> {
    let scores = material_scores(c, b, layout);
    softmax_rows(&scores, tau)
}

pub(crate) fn softmax_rows(scores: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let mut w = scores.clone();
    for mut row in w.row_iter_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = ((*v - max) / tau).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    w
}

/// `N_e x K` score matrix `[B c^(1) ... B c^(K)]` with coefficients clamped to the box.
pub fn material_scores(c: &[f64], b: &ScalarBasisMatrix, layout: &DesignVectorLayout) -> DMatrix<f64> {
    let k = layout.materials;
    let mut coeffs = DMatrix::zeros(layout.material_block, k);
    for m in 0..k {
        for (i, &v) in c[layout.material_k(m)].iter().enumerate() {
            coeffs[(i, m)] = box_clamp(v);
        }
    }
    &b.values * coeffs
}

/// Hard argmax labels (1-based, ties to the lowest index) for every element.
pub fn decode_material_labels(
    c: &[f64],
    b: &ScalarBasisMatrix,
    layout: &DesignVectorLayout,
    masks: Option<&[Vec<bool>]>,
) -> Vec<u8> {
    let scores = material_scores(c, b, layout);
    labels_from_scores(&scores, masks)
}

pub(crate) fn labels_from_scores(scores: &DMatrix<f64>, masks: Option<&[Vec<bool>]>) -> Vec<u8> {
    (0..scores.nrows())
        .map(|j| {
            let mut best = 0;
            for k in 1..scores.ncols() {
                if scores[(j, k)] > scores[(j, best)] {
                    best = k;
                }
            }
            if let Some(masks) = masks {
                if best > 0 && !masks[best][j] {
                    best = 0;
                }
            }
            (best + 1) as u8
        })
        .collect()
}

/// Elementwise occupancy test `phi_Omega >= theta`.
pub fn decode_occupancy(
    c: &[f64],
    material_b: &ScalarBasisMatrix,
    occupancy_b: Option<&ScalarBasisMatrix>,
    layout: &DesignVectorLayout,
    config: &EncoderConfig,
) -> Vec<bool> {
    let n = material_b.rows();
    match config.occupancy_mode {
        OccupancyMode::None => vec![true; n],
        OccupancyMode::Independent => {
            let b = occupancy_b.expect("independent occupancy requires its own basis matrix");
            let coeffs = clamp_to_box(&c[layout.occupancy.clone()]);
            b.apply(&coeffs).iter().map(|&v| v >= config.theta).collect()
        }
        OccupancyMode::SumOfMaterials => {
            let scores = material_scores(c, material_b, layout);
            scores.row_iter().map(|r| r.sum() >= config.theta).collect()
        }
    }
}

/// Precomputed morphing operator for a fixed reference node set.
#[derive(Clone, Debug)]
pub struct MorphField {
    pub basis: RbfBasis,
    pub matrix: VectorBasisMatrix,
    /// Points where the small-strain bound is enforced.
    pub samples: PointSet,
    pub reference: PointSet,
    pub gamma: f64,
}

impl MorphField {
    /// `extra_samples` are checked for the gradient bound along with the nodes.
    pub fn new(spec: &RbfGridSpec, reference: &PointSet, extra_samples: Option<&PointSet>, gamma: f64) -> Result<Self> {
        let basis = RbfBasis::new(spec)?;
        let matrix = assemble_vector_with(reference, &basis, reference.dim())?;
        let samples = match extra_samples {
            Some(extra) => reference.concat(extra),
            None => reference.clone(),
        };
        Ok(Self { basis, matrix, samples, reference: reference.clone(), gamma })
    }

    pub fn coeff_count(&self) -> usize {
        self.matrix.values.ncols()
    }

    /// Clamps `q` to the box, then rescales it so the gradient bound holds.
    pub fn clamped_coefficients(&self, q: &[f64]) -> Vec<f64> {
        let mut q = clamp_to_box(q);
        let g = sup_gradient_estimate(&self.basis, &q, &self.samples);
        if g > self.gamma {
            let s = self.gamma / g;
            q.iter_mut().for_each(|v| *v *= s);
        }
        q
    }

    pub fn apply(&self, q: &[f64]) -> PointSet {
        let q = self.clamped_coefficients(q);
        let v = self.matrix.apply(&q);
        let mut out = self.reference.clone();
        for (x, dv) in out.coords_mut().iter_mut().zip(v.iter()) {
            *x += dv;
        }
        out
    }
}

/// Morphed node positions `x + A q` under the small-strain clamp.
pub fn decode_morph(c: &[f64], morph: &MorphField, layout: &DesignVectorLayout) -> PointSet {
    morph.apply(&c[layout.morph.clone()])
}

/// Element masks for the band restriction of muscle materials.
pub fn band_masks(mesh: &Mesh, materials: usize, min_fraction: f64) -> Vec<Vec<bool>> {
    let (lo, hi) = mesh.nodes.bounds();
    let axis = 1.min(mesh.dim() - 1);
    let mid = 0.5 * (lo[axis] + hi[axis]);
    let half = 0.5 * (hi[axis] - lo[axis]);
    let band: Vec<bool> = mesh
        .element_centers
        .iter()
        .map(|c| (c[axis] - mid).abs() >= min_fraction * half)
        .collect();
    let mut masks = vec![band; materials];
    masks[0] = vec![true; mesh.element_count()];
    masks
}

/// The basis-function encoder bound to one reference mesh.
#[derive(Clone, Debug)]
pub struct BasisEncoder {
    pub config: EncoderConfig,
    pub layout: DesignVectorLayout,
    pub mesh: Arc<Mesh>,
    pub material_matrix: ScalarBasisMatrix,
    pub occupancy_matrix: Option<ScalarBasisMatrix>,
    pub morph: Option<MorphField>,
    pub muscle_masks: Option<Vec<Vec<bool>>>,
}

impl BasisEncoder {
    pub fn new(config: EncoderConfig, mesh: Arc<Mesh>) -> Result<Self> {
        config.validate()?;
        let layout = build_layout(&config);
        let material_basis = RbfBasis::new(&config.material_spec)?;
        let material_matrix = assemble_scalar_with(&mesh.element_centers, &material_basis)?;
        let occupancy_matrix = match (config.occupancy_mode, &config.occupancy_spec) {
            (OccupancyMode::Independent, Some(spec)) => {
                Some(assemble_scalar_with(&mesh.element_centers, &RbfBasis::new(spec)?)?)
            }
            _ => None,
        };
        let morph = match &config.morph_spec {
            Some(spec) => Some(MorphField::new(spec, &mesh.nodes, Some(&mesh.element_centers), config.gamma)?),
            None => None,
        };
        let muscle_masks = match &config.muscle_regions {
            None => None,
            Some(MuscleRegions::Bands { min_fraction }) => Some(band_masks(&mesh, config.materials, *min_fraction)),
            Some(MuscleRegions::Masks(m)) => {
                if m.iter().any(|row| row.len() != mesh.element_count()) {
                    return Err(Error::Config("muscle mask length differs from element count".into()));
                }
                Some(m.clone())
            }
        };
        Ok(Self { config, layout, mesh, material_matrix, occupancy_matrix, morph, muscle_masks })
    }

    pub fn material_weights(&self, c: &[f64]) -> DMatrix<f64> {
        decode_material_weights(c, &self.material_matrix, &self.layout, self.config.tau)
    }

    pub fn material_labels(&self, c: &[f64]) -> Vec<u8> {
        decode_material_labels(c, &self.material_matrix, &self.layout, self.muscle_masks.as_deref())
    }

    pub fn occupancy(&self, c: &[f64]) -> Vec<bool> {
        decode_occupancy(c, &self.material_matrix, self.occupancy_matrix.as_ref(), &self.layout, &self.config)
    }

    pub fn morphed_nodes(&self, c: &[f64]) -> PointSet {
        match &self.morph {
            Some(m) => decode_morph(c, m, &self.layout),
            None => self.mesh.nodes.clone(),
        }
    }
}

impl DesignEncoder for BasisEncoder {
    fn param_count(&self) -> usize {
        self.layout.total
    }

    fn actuation_range(&self) -> Range<usize> {
        self.layout.actuation.clone()
    }

    fn decode(&self, c: &[f64]) -> Result<DecodedDesign> {
        if c.len() != self.layout.total {
            return Err(invalid_arg(format!(
                "design vector has {} entries, layout expects {}",
                c.len(),
                self.layout.total
            )));
        }
        let occupancy = self.occupancy(c);
        let labels = self
            .material_labels(c)
            .into_iter()
            .zip(&occupancy)
            .map(|(l, &o)| if o { l } else { 0 })
            .collect();
        Ok(DecodedDesign {
            mesh: self.mesh.clone(),
            occupancy,
            labels,
            materials: self.config.materials,
            morphed_nodes: self.morphed_nodes(c),
            actuation: self.config.actuation.decode(&c[self.layout.actuation.clone()]),
            external: c[self.layout.external.clone()].to_vec(),
        })
    }
}
