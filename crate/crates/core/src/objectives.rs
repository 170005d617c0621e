//! Trajectory metrics and the swim, jump and material-matching losses.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::ScalarBasisMatrix;
use crate::encoding::{decode_material_weights, DecodedDesign, DesignVectorLayout};
use crate::error::{invalid_arg, Error, Result};
use crate::sim::{largest_component, Trajectory};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    /// Forward centre-of-mass displacement over the body length.
    pub disp: f64,
    /// Absolute lateral centre-of-mass displacement over the body length.
    pub drift: f64,
    /// Accumulated absolute rotation (rad).
    pub rot: f64,
    /// Largest centre-of-mass height gain over the body length.
    pub jump: f64,
    pub muscle_frac: f64,
}

/// Angle of the best-fit rotation taking the centred `reference` frame onto
/// the centred `current` frame (both flat `x, y` lists of equal length).
pub fn rigid_rotation_angle(reference: &[f64], current: &[f64]) -> f64 {
    let (r0, r1) = (centroid2(reference), centroid2(current));
    let (mut cross, mut dot) = (0.0, 0.0);
    for (p, q) in reference.chunks_exact(2).zip(current.chunks_exact(2)) {
        let (ax, ay) = (p[0] - r0[0], p[1] - r0[1]);
        let (bx, by) = (q[0] - r1[0], q[1] - r1[1]);
        cross += ax * by - ay * bx;
        dot += ax * bx + ay * by;
    }
    cross.atan2(dot)
}

fn centroid2(x: &[f64]) -> [f64; 2] {
    let n = (x.len() / 2) as f64;
    let mut c = [0.0; 2];
    for p in x.chunks_exact(2) {
        c[0] += p[0];
        c[1] += p[1];
    }
    [c[0] / n, c[1] / n]
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

pub fn trajectory_metrics(traj: &Trajectory, design: &DecodedDesign) -> Result<TrajectoryMetrics> {
    if traj.step_count() == 0 || traj.node_count() == 0 {
        return Err(invalid_arg("empty trajectory"));
    }
    let axis = traj.locomotion_axis;
    let lateral = 1 - axis;
    let first = traj.frame(0);
    let (lo, hi) = first
        .chunks_exact(2)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[axis]), h.max(p[axis])));
    let length = hi - lo;
    if !(length > 0.0) {
        return Err(Error::DegenerateGeometry("body has zero extent along the locomotion axis".into()));
    }
    let c0 = traj.com(0);
    let last = traj.step_count() - 1;
    let c1 = traj.com(last);
    let mut rise: f64 = 0.0;
    let mut rot = 0.0;
    let mut prev = 0.0;
    for s in 1..=last {
        rise = rise.max(traj.com(s)[1] - c0[1]);
        let theta = rigid_rotation_angle(first, traj.frame(s));
        rot += wrap_angle(theta - prev).abs();
        prev = theta;
    }
    Ok(TrajectoryMetrics {
        disp: (c1[axis] - c0[axis]) / length,
        drift: (c1[lateral] - c0[lateral]).abs() / length,
        rot,
        jump: rise / length,
        muscle_frac: simulated_muscle_fraction(design),
    })
}

/// Muscle share of the elements the simulators keep. Detached fragments are
/// dropped before simulation, so they do not dilute the fraction either.
pub fn simulated_muscle_fraction(design: &DecodedDesign) -> f64 {
    let keep = largest_component(design);
    let kept = keep.iter().filter(|&&k| k).count();
    if kept == 0 {
        return 0.0;
    }
    let muscle = keep.iter().zip(&design.labels).filter(|(&k, &l)| k && l >= 2).count();
    muscle as f64 / kept as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    #[serde(default = "default_alpha")]
    pub alpha: [f64; 4],
    #[serde(default = "default_beta")]
    pub beta: [f64; 3],
}

fn default_alpha() -> [f64; 4] {
    [6.0, 0.2, 1.0, 1.0]
}

fn default_beta() -> [f64; 3] {
    [12.0, 1.0, 1.0]
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: default_alpha(), beta: default_beta() }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().chain(&self.beta).any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config("loss weights must be finite and non-negative".into()));
        }
        Ok(())
    }
}

pub fn swim_loss(m: &TrajectoryMetrics, w: &LossWeights) -> f64 {
    let a = &w.alpha;
    -a[0] * m.disp + a[1] * m.drift + a[2] * m.rot + a[3] * m.muscle_frac
}

pub fn jump_loss(m: &TrajectoryMetrics, w: &LossWeights) -> f64 {
    let b = &w.beta;
    -b[0] * m.jump - b[1] * m.rot + b[2] * m.muscle_frac
}

/// Mean cross-entropy of the softmax material weights against target labels
/// (1-based, one per row of `b`).
pub fn material_match_loss(
    c: &[f64],
    target: &[u8],
    b: &ScalarBasisMatrix,
    layout: &DesignVectorLayout,
    tau: f64,
) -> Result<f64> {
    if target.len() != b.rows() {
        return Err(invalid_arg("target length differs from the grid size"));
    }
    if c.len() < layout.material.end {
        return Err(invalid_arg("design vector shorter than its material block"));
    }
    if let Some(bad) = target.iter().find(|&&l| l == 0 || l as usize > layout.materials) {
        return Err(invalid_arg(format!("target label {bad} outside 1..={}", layout.materials)));
    }
    let w = decode_material_weights(c, b, layout, tau);
    let total: f64 = target
        .iter()
        .enumerate()
        .map(|(j, &l)| -w[(j, l as usize - 1)].max(f64::MIN_POSITIVE).ln())
        .sum();
    Ok(total / target.len() as f64)
}

/// Share of cells whose label differs from the target.
pub fn mismatch_fraction(labels: &[u8], target: &[u8]) -> f64 {
    let wrong = labels.iter().zip(target).filter(|(a, b)| a != b).count();
    wrong as f64 / target.len().max(1) as f64
}
