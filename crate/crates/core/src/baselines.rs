//! Comparison encoders: a coordinate-network ("neural field") encoder and a
//! per-voxel encoder. Both decode into the same [`DecodedDesign`] as the
//! basis encoder.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::actuation::ActuationSpec;
use crate::encoding::{
    band_masks, box_clamp, clamp_to_box, labels_from_scores, DecodedDesign, DesignEncoder, DesignVectorLayout,
    MuscleRegions,
};
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::{Mesh, PointSet};

/// Fully connected network: tanh hidden layers, linear output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
}

impl MlpSpec {
    pub fn new(layer_sizes: &[usize]) -> Self {
        Self { layer_sizes: layer_sizes.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(Error::Config("an MLP needs at least two positive layer sizes".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn widest(&self) -> usize {
        self.layer_sizes.iter().copied().max().unwrap_or(0)
    }
}

pub fn mlp_param_count(spec: &MlpSpec) -> usize {
    spec.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Forward pass. Per layer the weights are stored row-major `(out x in)`,
/// followed by the `out` biases.
pub fn mlp_forward(spec: &MlpSpec, weights: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    if weights.len() != mlp_param_count(spec) {
        return Err(invalid_arg(format!(
            "MLP expects {} weights, got {}",
            mlp_param_count(spec),
            weights.len()
        )));
    }
    if x.len() != spec.input_dim() {
        return Err(invalid_arg("MLP input dimension mismatch"));
    }
    let mut scratch = MlpScratch::new(spec);
    Ok(forward_unchecked(spec, weights, x, &mut scratch).to_vec())
}

struct MlpScratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl MlpScratch {
    fn new(spec: &MlpSpec) -> Self {
        Self { a: vec![0.0; spec.widest()], b: vec![0.0; spec.widest()] }
    }
}

fn forward_unchecked<'s>(spec: &MlpSpec, weights: &[f64], x: &[f64], s: &'s mut MlpScratch) -> &'s [f64] {
    let layers = spec.layer_sizes.len() - 1;
    s.a[..x.len()].copy_from_slice(x);
    let mut at = 0;
    for l in 0..layers {
        let (n_in, n_out) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
        let w = &weights[at..at + n_in * n_out];
        let bias = &weights[at + n_in * n_out..at + n_in * n_out + n_out];
        at += n_in * n_out + n_out;
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut z = bias[o];
            for (wi, xi) in row.iter().zip(&s.a[..n_in]) {
                z += wi * xi;
            }
            s.b[o] = if l + 1 < layers { z.tanh() } else { z };
        }
        std::mem::swap(&mut s.a, &mut s.b);
    }
    &s.a[..spec.output_dim()]
}

/// Forward pass that also returns the input Jacobian `dy/dx`, row-major
/// `(out x in)`, in `jac`.
fn forward_with_jacobian(spec: &MlpSpec, weights: &[f64], x: &[f64], jac: &mut [f64]) -> Vec<f64> {
    let d = x.len();
    let layers = spec.layer_sizes.len() - 1;
    let mut a = x.to_vec();
    let mut j = DMatrix::<f64>::identity(d, d);
    let mut at = 0;
    for l in 0..layers {
        let (n_in, n_out) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
        let w = DMatrix::from_row_slice(n_out, n_in, &weights[at..at + n_in * n_out]);
        let bias = &weights[at + n_in * n_out..at + n_in * n_out + n_out];
        at += n_in * n_out + n_out;
        let mut next = vec![0.0; n_out];
        let mut jn = &w * &j;
        for o in 0..n_out {
            let mut z = bias[o];
            for i in 0..n_in {
                z += w[(o, i)] * a[i];
            }
            if l + 1 < layers {
                next[o] = z.tanh();
                let slope = 1.0 - next[o] * next[o];
                jn.row_mut(o).iter_mut().for_each(|v| *v *= slope);
            } else {
                next[o] = z;
            }
        }
        a = next;
        j = jn;
    }
    for r in 0..j.nrows() {
        for c in 0..d {
            jac[r * d + c] = j[(r, c)];
        }
    }
    a
}

/// Maps points into `[-1, 1]^d` using a reference bounding box.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxNormalizer {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxNormalizer {
    pub fn from_points(points: &PointSet) -> Self {
        let (lo, hi) = points.bounds();
        Self { lo, hi }
    }

    pub fn normalize(&self, x: &[f64], out: &mut [f64]) {
        for a in 0..x.len() {
            let ext = self.hi[a] - self.lo[a];
            out[a] = if ext > 0.0 { 2.0 * (x[a] - self.lo[a]) / ext - 1.0 } else { 0.0 };
        }
    }

    /// `d normalize(x)_a / d x_a`; zero on a degenerate axis.
    pub fn derivative(&self, a: usize) -> f64 {
        let ext = self.hi[a] - self.lo[a];
        if ext > 0.0 {
            2.0 / ext
        } else {
            0.0
        }
    }

    /// Half of the smallest non-degenerate box extent.
    pub fn scale(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .filter(|e| *e > 0.0)
            .fold(f64::INFINITY, f64::min)
            * 0.5
    }
}

/// Coordinate network that displaces nodes by `gamma * tanh(net(x)) * scale`.
///
/// With strain samples set, the whole field is scaled down whenever its
/// largest displacement gradient over those samples exceeds `gamma`, which is
/// the bound the basis morph enforces.
#[derive(Clone, Debug)]
pub struct NeuralMorph {
    pub net: MlpSpec,
    pub reference: PointSet,
    pub normalizer: BoxNormalizer,
    pub gamma: f64,
    pub scale: f64,
    pub strain_samples: Option<PointSet>,
}

impl NeuralMorph {
    pub fn new(net: MlpSpec, reference: &PointSet, gamma: f64) -> Result<Self> {
        net.validate()?;
        let d = reference.dim();
        if net.input_dim() != d || net.output_dim() != d {
            return Err(Error::Config(format!("morph network must map {d}-D points to {d}-D displacements")));
        }
        let normalizer = BoxNormalizer::from_points(reference);
        let scale = normalizer.scale();
        Ok(Self { net, reference: reference.clone(), normalizer, gamma, scale, strain_samples: None })
    }

    pub fn with_strain_limit(mut self, samples: PointSet) -> Self {
        self.strain_samples = Some(samples);
        self
    }

    pub fn param_count(&self) -> usize {
        mlp_param_count(&self.net)
    }

    pub fn apply(&self, weights: &[f64]) -> PointSet {
        let w = clamp_to_box(weights);
        let d = self.reference.dim();
        let amplitude = match &self.strain_samples {
            Some(samples) => {
                let g = self.sup_gradient(&w, samples);
                if g > self.gamma {
                    self.gamma * self.scale * self.gamma / g
                } else {
                    self.gamma * self.scale
                }
            }
            None => self.gamma * self.scale,
        };
        let mut scratch = MlpScratch::new(&self.net);
        let mut xn = vec![0.0; d];
        let mut out = self.reference.clone();
        for i in 0..out.len() {
            self.normalizer.normalize(self.reference.point(i), &mut xn);
            let y = forward_unchecked(&self.net, &w, &xn, &mut scratch);
            let p = out.point_mut(i);
            for a in 0..d {
                p[a] += amplitude * y[a].tanh();
            }
        }
        out
    }

    /// Largest max-row-sum norm of the unscaled displacement Jacobian
    /// `d(gamma * scale * tanh(net(n(x)))) / dx` over `samples`.
    pub fn sup_gradient(&self, weights: &[f64], samples: &PointSet) -> f64 {
        let d = self.reference.dim();
        let chain: Vec<f64> = (0..d).map(|b| self.normalizer.derivative(b)).collect();
        let mut xn = vec![0.0; d];
        let mut jac = vec![0.0; d * d];
        let mut best: f64 = 0.0;
        for x in samples.iter() {
            self.normalizer.normalize(x, &mut xn);
            let y = forward_with_jacobian(&self.net, weights, &xn, &mut jac);
            for a in 0..d {
                let outer = self.gamma * self.scale * (1.0 - y[a].tanh().powi(2));
                let row: f64 = (0..d).map(|b| (outer * jac[a * d + b] * chain[b]).abs()).sum();
                best = best.max(row);
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralFieldConfig {
    pub materials: usize,
    pub material_net: MlpSpec,
    #[serde(default)]
    pub morph_net: Option<MlpSpec>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub actuation: ActuationSpec,
    #[serde(default)]
    pub muscle_regions: Option<MuscleRegions>,
}

fn default_gamma() -> f64 {
    0.3
}

/// Layout `[material net | morph net | actuation]`.
pub fn neural_layout(config: &NeuralFieldConfig) -> DesignVectorLayout {
    let n_mat = mlp_param_count(&config.material_net);
    let n_morph = config.morph_net.as_ref().map_or(0, mlp_param_count);
    DesignVectorLayout::from_block_sizes(1, n_mat, n_morph, 0, config.actuation.param_count(), 0)
}

#[derive(Clone, Debug)]
pub struct NeuralFieldEncoder {
    pub config: NeuralFieldConfig,
    pub layout: DesignVectorLayout,
    pub mesh: Arc<Mesh>,
    normalized_centers: PointSet,
    morph: Option<NeuralMorph>,
    muscle_masks: Option<Vec<Vec<bool>>>,
}

impl NeuralFieldEncoder {
    pub fn new(config: NeuralFieldConfig, mesh: Arc<Mesh>) -> Result<Self> {
        config.material_net.validate()?;
        config.actuation.validate()?;
        let d = mesh.dim();
        if config.material_net.input_dim() != d || config.material_net.output_dim() != config.materials {
            return Err(Error::Config(format!(
                "material network must map {d}-D points to {} scores",
                config.materials
            )));
        }
        if !(config.gamma > 0.0 && config.gamma < 1.0) {
            return Err(Error::Config("gamma must lie in (0, 1)".into()));
        }
        let normalizer = BoxNormalizer::from_points(&mesh.nodes);
        let mut normalized_centers = mesh.element_centers.clone();
        let mut buf = vec![0.0; d];
        for i in 0..normalized_centers.len() {
            normalizer.normalize(mesh.element_centers.point(i), &mut buf);
            normalized_centers.point_mut(i).copy_from_slice(&buf);
        }
        let morph = match &config.morph_net {
            Some(net) => Some(
                NeuralMorph::new(net.clone(), &mesh.nodes, config.gamma)?
                    .with_strain_limit(mesh.nodes.concat(&mesh.element_centers)),
            ),
            None => None,
        };
        let muscle_masks = match &config.muscle_regions {
            None => None,
            Some(MuscleRegions::Bands { min_fraction }) => Some(band_masks(&mesh, config.materials, *min_fraction)),
            Some(MuscleRegions::Masks(m)) => Some(m.clone()),
        };
        let layout = neural_layout(&config);
        Ok(Self { config, layout, mesh, normalized_centers, morph, muscle_masks })
    }
}

impl DesignEncoder for NeuralFieldEncoder {
    fn param_count(&self) -> usize {
        self.layout.total
    }

    fn actuation_range(&self) -> Range<usize> {
        self.layout.actuation.clone()
    }

    fn decode(&self, c: &[f64]) -> Result<DecodedDesign> {
        decode_neural_field(self, c)
    }
}

/// Material labels are the argmax of the material network at element
/// centers; displacements come from the morph network at nodes.
pub fn decode_neural_field(enc: &NeuralFieldEncoder, c: &[f64]) -> Result<DecodedDesign> {
    if c.len() != enc.layout.total {
        return Err(invalid_arg(format!("expected {} weights, got {}", enc.layout.total, c.len())));
    }
    let net = &enc.config.material_net;
    let w = clamp_to_box(&c[enc.layout.material.clone()]);
    let k = enc.config.materials;
    let mut scores = DMatrix::zeros(enc.mesh.element_count(), k);
    let mut scratch = MlpScratch::new(net);
    for (j, x) in enc.normalized_centers.iter().enumerate() {
        let y = forward_unchecked(net, &w, x, &mut scratch);
        for m in 0..k {
            scores[(j, m)] = y[m];
        }
    }
    let labels = labels_from_scores(&scores, enc.muscle_masks.as_deref());
    let morphed_nodes = match &enc.morph {
        Some(m) => m.apply(&c[enc.layout.morph.clone()]),
        None => enc.mesh.nodes.clone(),
    };
    Ok(DecodedDesign {
        mesh: enc.mesh.clone(),
        occupancy: vec![true; labels.len()],
        labels,
        materials: k,
        morphed_nodes,
        actuation: enc.config.actuation.decode(&c[enc.layout.actuation.clone()]),
        external: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoxelEncoderSpec {
    #[serde(default = "default_theta_remove")]
    pub theta_remove: f64,
    #[serde(default = "default_theta_muscle")]
    pub theta_muscle: f64,
    #[serde(default = "default_true")]
    pub includes_occupancy: bool,
}

fn default_theta_remove() -> f64 {
    -0.25
}

fn default_theta_muscle() -> f64 {
    0.25
}

fn default_true() -> bool {
    true
}

impl Default for VoxelEncoderSpec {
    fn default() -> Self {
        Self {
            theta_remove: default_theta_remove(),
            theta_muscle: default_theta_muscle(),
            includes_occupancy: true,
        }
    }
}

/// One value per element followed by the actuation block; two materials.
#[derive(Clone, Debug)]
pub struct VoxelEncoder {
    pub spec: VoxelEncoderSpec,
    pub actuation: ActuationSpec,
    pub layout: DesignVectorLayout,
    pub mesh: Arc<Mesh>,
}

impl VoxelEncoder {
    pub fn new(spec: VoxelEncoderSpec, actuation: ActuationSpec, mesh: Arc<Mesh>) -> Result<Self> {
        if !(spec.theta_remove < spec.theta_muscle) {
            return Err(Error::Config("theta_remove must be below theta_muscle".into()));
        }
        actuation.validate()?;
        let layout =
            DesignVectorLayout::from_block_sizes(1, mesh.element_count(), 0, 0, actuation.param_count(), 0);
        Ok(Self { spec, actuation, layout, mesh })
    }
}

impl DesignEncoder for VoxelEncoder {
    fn param_count(&self) -> usize {
        self.layout.total
    }

    fn actuation_range(&self) -> Range<usize> {
        self.layout.actuation.clone()
    }

    fn decode(&self, c: &[f64]) -> Result<DecodedDesign> {
        decode_per_voxel(self, c)
    }
}

pub fn decode_per_voxel(enc: &VoxelEncoder, c: &[f64]) -> Result<DecodedDesign> {
    if c.len() != enc.layout.total {
        return Err(invalid_arg(format!("expected {} values, got {}", enc.layout.total, c.len())));
    }
    let s = &enc.spec;
    let labels: Vec<u8> = c[enc.layout.material.clone()]
        .iter()
        .map(|&raw| {
            let v = box_clamp(raw);
            if s.includes_occupancy {
                if v < s.theta_remove {
                    0
                } else if v < s.theta_muscle {
                    1
                } else {
                    2
                }
            } else if v > 0.0 {
                2
            } else {
                1
            }
        })
        .collect();
    Ok(DecodedDesign {
        mesh: enc.mesh.clone(),
        occupancy: labels.iter().map(|&l| l != 0).collect(),
        labels,
        materials: 2,
        morphed_nodes: enc.mesh.nodes.clone(),
        actuation: enc.actuation.decode(&c[enc.layout.actuation.clone()]),
        external: Vec::new(),
    })
}
