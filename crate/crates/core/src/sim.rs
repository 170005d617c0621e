//! Deterministic 2D mass-spring simulators for the jumping and swimming tasks.
//!
//! Every occupied quad contributes four edge springs and two diagonal braces.
//! Muscle cells shorten the rest length of their springs along the task axis
//! by `l0 * (1 - kappa * u(t))`. Integration is semi-implicit Euler.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::encoding::DecodedDesign;
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::PointSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatorConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Acceleration along `-y` (m/s^2).
    pub gravity: f64,
    pub stiffness_passive: f64,
    pub stiffness_muscle: f64,
    /// Axial damping per spring (N s/m).
    pub damping: f64,
    pub node_mass: f64,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub friction: f64,
    /// Normal drag per unit boundary length (N s/m^2).
    pub drag: f64,
    /// Peak fractional rest-length contraction of a fully activated muscle.
    /// At 0.3 neither toy body gains enough from its muscles to pay for them.
    pub kappa: f64,
}

impl SimulatorConfig {
    pub fn jumper_default() -> Self {
        Self {
            dt: 1e-3,
            n_steps: 500,
            gravity: 9.81,
            stiffness_passive: 1000.0,
            stiffness_muscle: 1000.0,
            damping: 0.5,
            node_mass: 0.01,
            contact_stiffness: 1e6,
            contact_damping: 50.0,
            friction: 0.8,
            drag: 0.0,
            kappa: 0.5,
        }
    }

    pub fn swimmer_default() -> Self {
        Self {
            dt: 1e-3,
            n_steps: 2000,
            gravity: 0.0,
            stiffness_passive: 100.0,
            stiffness_muscle: 1000.0,
            damping: 0.5,
            node_mass: 0.01,
            contact_stiffness: 0.0,
            contact_damping: 0.0,
            friction: 0.0,
            drag: 5.0,
            kappa: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.dt, self.stiffness_passive, self.stiffness_muscle, self.node_mass];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("dt, stiffnesses and node mass must be positive".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        let non_negative = [
            self.damping,
            self.contact_stiffness,
            self.contact_damping,
            self.friction,
            self.drag,
            self.kappa,
        ];
        if non_negative.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || !self.gravity.is_finite() {
            return Err(Error::Config("simulator coefficients must be finite and non-negative".into()));
        }
        if self.kappa >= 1.0 {
            return Err(Error::Config("kappa must be below 1".into()));
        }
        Ok(())
    }
}

/// Node positions at every step, including the initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Reference mesh index of each simulated node.
    pub node_ids: Vec<usize>,
    /// `steps x nodes x 2`, row-major.
    pub positions: Vec<f64>,
    /// 0 for `x`, 1 for `y`.
    pub locomotion_axis: usize,
}

impl Trajectory {
    pub fn step_count(&self) -> usize {
        self.times.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn frame(&self, step: usize) -> &[f64] {
        let n = 2 * self.node_count();
        &self.positions[step * n..(step + 1) * n]
    }

    pub fn frame_points(&self, step: usize) -> PointSet {
        PointSet::new(2, self.frame(step).to_vec()).expect("frames hold 2D points")
    }

    pub fn com(&self, step: usize) -> [f64; 2] {
        let f = self.frame(step);
        let n = self.node_count() as f64;
        let (mut x, mut y) = (0.0, 0.0);
        for p in f.chunks_exact(2) {
            x += p[0];
            y += p[1];
        }
        [x / n, y / n]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug)]
struct Spring {
    a: u32,
    b: u32,
    k: f64,
    rest: f64,
    damping: f64,
    /// Slot in the per-step rest-length factor table; the last slot is passive.
    slot: u32,
}

/// The simulated part of a design: its largest face-connected component.
#[derive(Clone, Debug)]
pub struct Body {
    pub node_ids: Vec<usize>,
    pub positions: Vec<[f64; 2]>,
    springs: Vec<Spring>,
    /// Directed boundary edges, oriented counter-clockwise around the body.
    boundary: Vec<(u32, u32)>,
    groups: usize,
    pub element_count: usize,
}

impl Body {
    pub fn spring_count(&self) -> usize {
        self.springs.len()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.boundary.len()
    }
}

/// Occupied elements of the largest face-connected component; ties go to
/// the component containing the lowest element index.
pub fn largest_component(design: &DecodedDesign) -> Vec<bool> {
    let n = design.occupancy.len();
    let neighbors = design.mesh.face_neighbors();
    let mut comp = vec![usize::MAX; n];
    let mut best: Option<(usize, usize)> = None;
    let mut stack = Vec::new();
    let mut id = 0;
    for seed in 0..n {
        if !design.occupancy[seed] || comp[seed] != usize::MAX {
            continue;
        }
        let mut size = 0;
        comp[seed] = id;
        stack.push(seed);
        while let Some(e) = stack.pop() {
            size += 1;
            for &nb in &neighbors[e] {
                if design.occupancy[nb] && comp[nb] == usize::MAX {
                    comp[nb] = id;
                    stack.push(nb);
                }
            }
        }
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((id, size));
        }
        id += 1;
    }
    match best {
        Some((keep, _)) => comp.iter().map(|&c| c == keep).collect(),
        None => vec![false; n],
    }
}

fn build_body(design: &DecodedDesign, cfg: &SimulatorConfig, muscle_axis: Axis) -> Result<Body> {
    design.check_invariants()?;
    let mesh = &design.mesh;
    if mesh.dim() != 2 || mesh.nodes_per_element() != 4 {
        return Err(invalid_arg("the simulators need a 2D quad mesh"));
    }
    let keep = largest_component(design);
    if !keep.iter().any(|&k| k) {
        return Err(Error::EmptyDesign);
    }
    let groups = design.actuation.groups;
    let mut remap = vec![usize::MAX; mesh.node_count()];
    let mut node_ids = Vec::new();
    let mut positions: Vec<[f64; 2]> = Vec::new();
    let mut springs: Vec<Spring> = Vec::new();
    // Edges shared by two cells with the same actuation become one spring.
    let mut spring_index: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut edge_use: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();
    let mut element_count = 0;
    for (e, corners) in mesh.elements().enumerate() {
        if !keep[e] {
            continue;
        }
        element_count += 1;
        let mut local = [0usize; 4];
        for (slot, &n) in corners.iter().enumerate() {
            if remap[n] == usize::MAX {
                remap[n] = node_ids.len();
                node_ids.push(n);
                let p = design.morphed_nodes.point(n);
                positions.push([p[0], p[1]]);
            }
            local[slot] = remap[n];
        }
        let label = design.labels[e] as usize;
        let muscle = label >= 2 && label - 2 < groups;
        let k = if label >= 2 { cfg.stiffness_muscle } else { cfg.stiffness_passive };
        // Corners run counter-clockwise from the lower-left node.
        let pairs = [(0, 1, Axis::X), (3, 2, Axis::X), (1, 2, Axis::Y), (0, 3, Axis::Y), (0, 2, Axis::X), (1, 3, Axis::X)];
        for (idx, &(i, j, axis)) in pairs.iter().enumerate() {
            let (a, b) = (local[i], local[j]);
            let actuated = muscle && idx < 4 && axis == muscle_axis;
            let slot = if actuated { label - 2 } else { groups };
            let key = (a.min(b), a.max(b), slot);
            if let Some(&existing) = spring_index.get(&key) {
                springs[existing].k += k;
                springs[existing].damping += cfg.damping;
                continue;
            }
            spring_index.insert(key, springs.len());
            springs.push(Spring {
                a: a as u32,
                b: b as u32,
                k,
                rest: dist(positions[a], positions[b]),
                damping: cfg.damping,
                slot: slot as u32,
            });
        }
        for s in 0..4 {
            let (a, b) = (local[s], local[(s + 1) % 4]);
            let key = (a.min(b), a.max(b));
            edge_use.entry(key).and_modify(|u| u.2 += 1).or_insert((a, b, 1));
        }
    }
    let mut boundary: Vec<(u32, u32)> = edge_use
        .values()
        .filter(|(_, _, uses)| *uses == 1)
        .map(|&(a, b, _)| (a as u32, b as u32))
        .collect();
    boundary.sort_unstable();
    Ok(Body { node_ids, positions, springs, boundary, groups, element_count })
}

#[inline]
fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    let dx = q[0] - p[0];
    let dy = q[1] - p[1];
    (dx * dx + dy * dy).sqrt()
}

/// Builds the body the jumper would simulate (largest component, springs, boundary).
pub fn jumper_body(design: &DecodedDesign, cfg: &SimulatorConfig) -> Result<Body> {
    build_body(design, cfg, Axis::Y)
}

pub fn swimmer_body(design: &DecodedDesign, cfg: &SimulatorConfig) -> Result<Body> {
    build_body(design, cfg, Axis::X)
}

struct Integrator<'a> {
    cfg: &'a SimulatorConfig,
    body: Body,
    vel: Vec<[f64; 2]>,
    force: Vec<[f64; 2]>,
    signal: Vec<f64>,
    /// Rest-length factor per actuation group, plus 1.0 for passive springs.
    factor: Vec<f64>,
}

impl<'a> Integrator<'a> {
    fn new(cfg: &'a SimulatorConfig, body: Body) -> Self {
        let n = body.positions.len();
        let groups = body.groups;
        Self {
            cfg,
            body,
            vel: vec![[0.0; 2]; n],
            force: vec![[0.0; 2]; n],
            signal: vec![0.0; groups],
            factor: vec![1.0; groups + 1],
        }
    }

    fn spring_forces(&mut self) {
        let x = &self.body.positions;
        let v = &self.vel;
        let f = &mut self.force;
        let factor = &self.factor;
        for s in &self.body.springs {
            let (a, b) = (s.a as usize, s.b as usize);
            let (xa, xb) = (x[a], x[b]);
            let dx = xb[0] - xa[0];
            let dy = xb[1] - xa[1];
            let len = (dx * dx + dy * dy).sqrt();
            if len <= 0.0 {
                continue;
            }
            let inv = 1.0 / len;
            let (ux, uy) = (dx * inv, dy * inv);
            let rest = s.rest * factor[s.slot as usize];
            let (va, vb) = (v[a], v[b]);
            let rel = (vb[0] - va[0]) * ux + (vb[1] - va[1]) * uy;
            let mag = s.k * (len - rest) + s.damping * rel;
            let (fx, fy) = (mag * ux, mag * uy);
            f[a][0] += fx;
            f[a][1] += fy;
            f[b][0] -= fx;
            f[b][1] -= fy;
        }
    }

    /// Normal drag on every boundary edge, split evenly between its nodes.
    fn drag_forces(&mut self) {
        let cd = self.cfg.drag;
        if cd == 0.0 {
            return;
        }
        let x = &self.body.positions;
        let v = &self.vel;
        for &(a, b) in &self.body.boundary {
            let (a, b) = (a as usize, b as usize);
            let ex = x[b][0] - x[a][0];
            let ey = x[b][1] - x[a][1];
            let len = (ex * ex + ey * ey).sqrt();
            if len <= 0.0 {
                continue;
            }
            // Outward normal of a counter-clockwise edge.
            let (nx, ny) = (ey / len, -ex / len);
            let vx = 0.5 * (v[a][0] + v[b][0]);
            let vy = 0.5 * (v[a][1] + v[b][1]);
            let vn = vx * nx + vy * ny;
            let fmag = -cd * vn * len * 0.5;
            for n in [a, b] {
                self.force[n][0] += fmag * nx;
                self.force[n][1] += fmag * ny;
            }
        }
    }

    fn step(&mut self, t: f64, actuation: &crate::actuation::Actuation, ground: bool) {
        if !self.signal.is_empty() {
            actuation.eval_into(t, &mut self.signal);
            for (f, u) in self.factor.iter_mut().zip(&self.signal) {
                *f = 1.0 - self.cfg.kappa * u;
            }
        }
        self.force.iter_mut().for_each(|f| *f = [0.0; 2]);
        self.spring_forces();
        self.drag_forces();
        let cfg = self.cfg;
        let (dt, m) = (cfg.dt, cfg.node_mass);
        let contact_denom = 1.0 + dt * dt * cfg.contact_stiffness / m + dt * cfg.contact_damping / m;
        for ((x, v), f) in self.body.positions.iter_mut().zip(self.vel.iter_mut()).zip(&self.force) {
            let fy = f[1] - m * cfg.gravity;
            let y = x[1];
            let mut vx = v[0] + dt * f[0] / m;
            let vy;
            if ground && y < 0.0 {
                // Penalty contact solved implicitly in the normal direction.
                vy = (v[1] + dt / m * (fy - cfg.contact_stiffness * y)) / contact_denom;
                let normal = (-cfg.contact_stiffness * (y + dt * vy) - cfg.contact_damping * vy).max(0.0);
                let slip = cfg.friction * normal * dt / m;
                vx = if vx.abs() <= slip { 0.0 } else { vx - slip * vx.signum() };
            } else {
                vy = v[1] + dt * fy / m;
            }
            *v = [vx, vy];
            x[0] += dt * vx;
            x[1] += dt * vy;
        }
    }

    fn run(mut self, design: &DecodedDesign, ground: bool, locomotion_axis: usize) -> Result<Trajectory> {
        let steps = self.cfg.n_steps;
        let n = self.body.positions.len();
        let mut positions = Vec::with_capacity((steps + 1) * n * 2);
        positions.extend(self.body.positions.iter().flatten());
        let mut times = Vec::with_capacity(steps + 1);
        times.push(0.0);
        for s in 0..steps {
            let t = s as f64 * self.cfg.dt;
            self.step(t, &design.actuation, ground);
            if self.body.positions.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                return Err(Error::SimulationDiverged { step: s + 1 });
            }
            positions.extend(self.body.positions.iter().flatten());
            times.push((s + 1) as f64 * self.cfg.dt);
        }
        Ok(Trajectory { times, node_ids: self.body.node_ids, positions, locomotion_axis })
    }
}

/// Vertical jumper: gravity along `-y`, ground at `y = 0`, the body resting
/// on the ground at `t = 0`, muscles acting on vertical springs.
pub fn simulate_jumper(design: &DecodedDesign, cfg: &SimulatorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut body = jumper_body(design, cfg)?;
    let min_y = body.positions.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    body.positions.iter_mut().for_each(|p| p[1] -= min_y);
    Integrator::new(cfg, body).run(design, true, 1)
}

/// Swimmer: no gravity, normal drag on boundary edges, muscles acting on
/// horizontal springs.
pub fn simulate_swimmer(design: &DecodedDesign, cfg: &SimulatorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let body = swimmer_body(design, cfg)?;
    Integrator::new(cfg, body).run(design, false, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::{ActuationKind, ActuationSpec};
    use crate::encoding::{BasisEncoder, DesignEncoder, EncoderConfig, OccupancyMode};
    use crate::basis::RbfGridSpec;
    use crate::geometry::{build_grid_mesh, Mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn block(dims: [usize; 2], cell: f64, labels: Vec<u8>, actuation: crate::actuation::Actuation) -> DecodedDesign {
        let mesh = Arc::new(build_grid_mesh(&dims, cell).unwrap());
        DecodedDesign {
            occupancy: labels.iter().map(|&l| l != 0).collect(),
            labels,
            materials: 3,
            morphed_nodes: mesh.nodes.clone(),
            mesh,
            actuation,
            external: Vec::new(),
        }
    }

    fn pulse(amplitude: f64) -> crate::actuation::Actuation {
        crate::actuation::Actuation::new(ActuationKind::GaussianPulse, 1, vec![0.1, amplitude, 0.03]).unwrap()
    }

    fn ellipse_mesh() -> Arc<Mesh> {
        let grid = build_grid_mesh(&[12, 4], 0.05).unwrap();
        let keep: Vec<bool> = grid
            .element_centers
            .iter()
            .map(|c| ((c[0] - 0.3) / 0.3).powi(2) + ((c[1] - 0.1) / 0.1).powi(2) <= 1.0)
            .collect();
        Arc::new(grid.retain_elements(&keep).unwrap())
    }

    fn swimmer_design(labels: Vec<u8>, act: crate::actuation::Actuation) -> DecodedDesign {
        let mesh = ellipse_mesh();
        DecodedDesign {
            occupancy: labels.iter().map(|&l| l != 0).collect(),
            labels,
            materials: 3,
            morphed_nodes: mesh.nodes.clone(),
            mesh,
            actuation: act,
            external: Vec::new(),
        }
    }

    fn periodic(f1: f64, f2: f64, dphi: f64) -> crate::actuation::Actuation {
        crate::actuation::Actuation::new(ActuationKind::SquaredPeriodic, 2, vec![f1, f2, dphi]).unwrap()
    }

    #[test]
    fn springs_and_boundary_of_a_block() {
        let d = block([2, 1], 1.0, vec![1, 1], pulse(0.0));
        let body = jumper_body(&d, &SimulatorConfig::jumper_default()).unwrap();
        assert_eq!(body.node_ids.len(), 6);
        // Twelve cell springs, the shared edge merged into one.
        assert_eq!(body.spring_count(), 11);
        assert_eq!(body.boundary_edge_count(), 6);
    }

    #[test]
    fn largest_component_keeps_the_bigger_piece() {
        // Row of five: [1, 0, 1, 1, 0] keeps elements 2 and 3.
        let d = block([5, 1], 1.0, vec![1, 0, 1, 1, 0], pulse(0.0));
        assert_eq!(largest_component(&d), vec![false, false, true, true, false]);
        // Equal pieces: the one holding the lowest index wins.
        let d = block([5, 1], 1.0, vec![1, 0, 1, 0, 0], pulse(0.0));
        assert_eq!(largest_component(&d), vec![true, false, false, false, false]);
        // Diagonal contact is not a face.
        let d = block([2, 2], 1.0, vec![1, 0, 0, 1], pulse(0.0));
        assert_eq!(largest_component(&d).iter().filter(|&&k| k).count(), 1);
    }

    #[test]
    fn empty_design_is_reported() {
        let d = block([3, 3], 0.1, vec![0; 9], pulse(1.0));
        assert!(matches!(simulate_jumper(&d, &SimulatorConfig::jumper_default()), Err(Error::EmptyDesign)));
        assert!(matches!(simulate_swimmer(&d, &SimulatorConfig::swimmer_default()), Err(Error::EmptyDesign)));
    }

    #[test]
    fn trajectory_has_initial_state_and_all_steps() {
        let d = block([7, 7], 0.1 / 7.0, vec![1; 49], pulse(0.0));
        let cfg = SimulatorConfig::jumper_default();
        let t = simulate_jumper(&d, &cfg).unwrap();
        assert_eq!(t.step_count(), cfg.n_steps + 1);
        assert_eq!(t.times[0], 0.0);
        assert!(t.positions.iter().all(|v| v.is_finite()));
    }

    fn max_rise(t: &Trajectory) -> f64 {
        let y0 = t.com(0)[1];
        (0..t.step_count()).map(|s| t.com(s)[1] - y0).fold(0.0, f64::max)
    }

    #[test]
    fn passive_jumper_settles_without_rising() {
        let d = block([7, 7], 0.1 / 7.0, vec![1; 49], pulse(0.0));
        let t = simulate_jumper(&d, &SimulatorConfig::jumper_default()).unwrap();
        assert!(max_rise(&t) / 0.1 <= 0.02);
        let cell = 0.1 / 7.0;
        let last = t.frame(t.step_count() - 1);
        assert!(last.chunks_exact(2).all(|p| p[1] >= -1e-3 * cell));
    }

    #[test]
    fn double_gravity_still_rests() {
        let d = block([7, 7], 0.1 / 7.0, vec![1; 49], pulse(0.0));
        let mut cfg = SimulatorConfig::jumper_default();
        cfg.gravity *= 2.0;
        let t = simulate_jumper(&d, &cfg).unwrap();
        let last = t.frame(t.step_count() - 1);
        assert!(last.chunks_exact(2).all(|p| p[1].is_finite() && p[1] > -0.01 * 0.1));
    }

    #[test]
    fn muscle_pulse_lifts_the_body() {
        let d = block([7, 7], 0.1 / 7.0, vec![2; 49], pulse(1.0));
        let t = simulate_jumper(&d, &SimulatorConfig::jumper_default()).unwrap();
        assert!(max_rise(&t) > 0.0);
    }

    #[test]
    fn simulations_are_bit_identical() {
        let d = block([7, 7], 0.1 / 7.0, vec![2; 49], pulse(1.0));
        let cfg = SimulatorConfig::jumper_default();
        assert_eq!(simulate_jumper(&d, &cfg).unwrap(), simulate_jumper(&d, &cfg).unwrap());
        let labels: Vec<u8> = (0..40).map(|i| 1 + (i % 3) as u8).collect();
        let s = swimmer_design(labels, periodic(1.5, 2.0, 0.7));
        let cfg = SimulatorConfig::swimmer_default();
        assert_eq!(simulate_swimmer(&s, &cfg).unwrap(), simulate_swimmer(&s, &cfg).unwrap());
    }

    #[test]
    fn ellipse_has_forty_cells() {
        assert_eq!(ellipse_mesh().element_count(), 40);
    }

    #[test]
    fn unactuated_swimmer_stays_put() {
        let s = swimmer_design(vec![1; 40], periodic(2.0, 2.0, 0.0));
        let t = simulate_swimmer(&s, &SimulatorConfig::swimmer_default()).unwrap();
        let (a, b) = (t.com(0), t.com(t.step_count() - 1));
        assert!((b[0] - a[0]).abs() / 0.6 <= 0.01);
    }

    #[test]
    fn mirrored_swimmer_does_not_drift_sideways() {
        let mesh = ellipse_mesh();
        let labels: Vec<u8> = mesh
            .element_centers
            .iter()
            .map(|c| if (c[1] - 0.1).abs() > 0.04 { if c[0] < 0.3 { 2 } else { 3 } } else { 1 })
            .collect();
        let s = swimmer_design(labels, periodic(2.0, 2.0, 0.0));
        let t = simulate_swimmer(&s, &SimulatorConfig::swimmer_default()).unwrap();
        let (a, b) = (t.com(0), t.com(t.step_count() - 1));
        assert!((b[1] - a[1]).abs() / 0.6 <= 0.02);
    }

    #[test]
    fn momentum_is_conserved_without_drag() {
        let labels: Vec<u8> = (0..40).map(|i| 1 + (i % 2) as u8).collect();
        let s = swimmer_design(labels, periodic(2.0, 2.0, 0.0));
        let mut cfg = SimulatorConfig::swimmer_default();
        cfg.drag = 0.0;
        cfg.n_steps = 300;
        // Zero actuation; perturb the initial shape so springs carry load.
        let mut s0 = s.clone();
        s0.actuation = periodic(0.0, 0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for v in s0.morphed_nodes.coords_mut() {
            *v += rng.gen_range(-0.002..0.002);
        }
        let body = swimmer_body(&s0, &cfg).unwrap();
        let mut integ = Integrator::new(&cfg, body.clone());
        // Give the body some internal motion by stretching one node.
        integ.body.positions[0][0] += 0.003;
        let mut prev: Option<[f64; 2]> = None;
        for step in 0..cfg.n_steps {
            integ.step(step as f64 * cfg.dt, &s0.actuation, false);
            let mut p = [0.0; 2];
            for v in &integ.vel {
                p[0] += cfg.node_mass * v[0];
                p[1] += cfg.node_mass * v[1];
            }
            if let Some(q) = prev {
                let scale = integ.vel.iter().map(|v| v[0].abs() + v[1].abs()).sum::<f64>() * cfg.node_mass;
                assert!((p[0] - q[0]).abs() <= 1e-8 * scale.max(1e-12));
                assert!((p[1] - q[1]).abs() <= 1e-8 * scale.max(1e-12));
            }
            prev = Some(p);
        }
    }

    fn random_basis_jumper(rng: &mut ChaCha8Rng) -> (BasisEncoder, Vec<f64>) {
        let mesh = Arc::new(build_grid_mesh(&[7, 7], 0.1 / 7.0).unwrap());
        let spec = RbfGridSpec::new(vec![3, 3], vec![0.0; 2], vec![0.1; 2]);
        let cfg = EncoderConfig {
            occupancy_mode: OccupancyMode::SumOfMaterials,
            actuation: ActuationSpec::new(ActuationKind::GaussianPulse, 1),
            ..EncoderConfig::materials_only(2, spec)
        };
        let enc = BasisEncoder::new(cfg, mesh).unwrap();
        let c = (0..enc.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (enc, c)
    }

    #[test]
    fn random_designs_stay_stable() {
        let cfg = SimulatorConfig::jumper_default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut simulated = 0;
        for _ in 0..1000 {
            let (enc, c) = random_basis_jumper(&mut rng);
            let d = enc.decode(&c).unwrap();
            let t = match simulate_jumper(&d, &cfg) {
                Err(Error::EmptyDesign) => continue,
                other => other.unwrap(),
            };
            simulated += 1;
            let n = 2 * t.node_count();
            for s in 1..t.step_count() {
                let (a, b) = (&t.positions[(s - 1) * n..s * n], &t.positions[s * n..(s + 1) * n]);
                for (p, q) in a.chunks_exact(2).zip(b.chunks_exact(2)) {
                    let speed = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt() / cfg.dt;
                    assert!(speed < 100.0);
                }
            }
        }
        assert!(simulated > 500);
    }
}
