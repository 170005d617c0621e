//! Reference geometries and body-frame measurements.
//!
//! Meshes are axis-aligned uniform grids anchored at the origin. Nodes and
//! elements are numbered with the first axis varying fastest. Quad corners run
//! counter-clockwise starting at the lowest corner; hex corners list the bottom
//! face counter-clockwise followed by the top face.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};

/// A flat, dimension-tagged list of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid_arg("point dimension must be positive"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(invalid_arg(format!(
                "coordinate count {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    pub fn from_points<'a, I>(dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut set = Self::empty(dim);
        for p in points {
            if p.len() != dim {
                return Err(invalid_arg(format!("point of length {} in a {dim}-D set", p.len())));
            }
            set.coords.extend_from_slice(p);
        }
        Ok(set)
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(p);
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Axis-aligned bounding box as `(lo, hi)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter() {
            for a in 0..self.dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.iter() {
            for (ca, pa) in c.iter_mut().zip(p) {
                *ca += pa;
            }
        }
        let n = self.len().max(1) as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// Concatenates two sets of equal dimension.
    pub fn concat(&self, other: &PointSet) -> PointSet {
        assert_eq!(self.dim, other.dim);
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        PointSet { dim: self.dim, coords }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dims: Vec<usize>,
    pub cell_size: f64,
}

/// Element mesh with fixed connectivity. `grid` is set only for full,
/// unmasked grids, where `element count = prod(dims)` holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: PointSet,
    pub element_centers: PointSet,
    nodes_per_element: usize,
    element_nodes: Vec<usize>,
    pub grid: Option<GridInfo>,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.nodes.dim()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.element_centers.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.nodes_per_element
    }

    #[inline]
    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.nodes_per_element;
        &self.element_nodes[e * k..(e + 1) * k]
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.element_nodes.chunks_exact(self.nodes_per_element)
    }

    /// Keeps the elements flagged in `keep` and drops nodes no longer
    /// referenced. The result is no longer a full grid.
    pub fn retain_elements(&self, keep: &[bool]) -> Result<Mesh> {
        if keep.len() != self.element_count() {
            return Err(invalid_arg("element mask length mismatch"));
        }
        let mut remap = vec![usize::MAX; self.node_count()];
        let mut nodes = PointSet::empty(self.dim());
        let mut element_nodes = Vec::new();
        let mut centers = PointSet::empty(self.dim());
        for (e, _) in keep.iter().enumerate().filter(|(_, k)| **k) {
            for &n in self.element(e) {
                if remap[n] == usize::MAX {
                    remap[n] = nodes.len();
                    nodes.push(self.nodes.point(n));
                }
                element_nodes.push(remap[n]);
            }
            centers.push(self.element_centers.point(e));
        }
        Ok(Mesh {
            nodes,
            element_centers: centers,
            nodes_per_element: self.nodes_per_element,
            element_nodes,
            grid: None,
        })
    }

    /// For each element, the elements sharing a full face with it
    /// (an edge in 2D, a quad face in 3D).
    pub fn face_neighbors(&self) -> Vec<Vec<usize>> {
        let shared_needed = self.nodes_per_element / 2;
        let mut node_elems: Vec<Vec<usize>> = vec![Vec::new(); self.node_count()];
        for (e, nodes) in self.elements().enumerate() {
            for &n in nodes {
                node_elems[n].push(e);
            }
        }
        let mut out = vec![Vec::new(); self.element_count()];
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for (e, nodes) in self.elements().enumerate() {
            counts.clear();
            for &n in nodes {
                for &other in &node_elems[n] {
                    if other != e {
                        *counts.entry(other).or_insert(0) += 1;
                    }
                }
            }
            let mut nb: Vec<usize> = counts
                .iter()
                .filter(|(_, c)| **c >= shared_needed.max(1))
                .map(|(o, _)| *o)
                .collect();
            nb.sort_unstable();
            out[e] = nb;
        }
        out
    }
}

/// Axis-aligned uniform grid mesh anchored at the origin.
pub fn build_grid_mesh(dims: &[usize], cell_size: f64) -> Result<Mesh> {
    let d = dims.len();
    if !(1..=3).contains(&d) {
        return Err(invalid_arg(format!("grid meshes support 1 to 3 axes, got {d}")));
    }
    if dims.contains(&0) {
        return Err(invalid_arg("every grid axis needs at least one element"));
    }
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(invalid_arg("cell size must be positive"));
    }
    let node_dims: Vec<usize> = dims.iter().map(|n| n + 1).collect();
    let node_count: usize = node_dims.iter().product();
    let elem_count: usize = dims.iter().product();

    let mut nodes = PointSet::empty(d);
    let mut idx = vec![0usize; d];
    for flat in 0..node_count {
        unflatten(flat, &node_dims, &mut idx);
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 * cell_size).collect();
        nodes.push(&p);
    }

    let corners = corner_offsets(d);
    let node_index = |ix: &[usize]| -> usize {
        let mut flat = 0;
        for a in (0..d).rev() {
            flat = flat * node_dims[a] + ix[a];
        }
        flat
    };
    let mut element_nodes = Vec::with_capacity(elem_count * corners.len());
    let mut centers = PointSet::empty(d);
    let mut corner = vec![0usize; d];
    for flat in 0..elem_count {
        unflatten(flat, dims, &mut idx);
        for off in &corners {
            for a in 0..d {
                corner[a] = idx[a] + off[a];
            }
            element_nodes.push(node_index(&corner));
        }
        let c: Vec<f64> = idx.iter().map(|&i| (i as f64 + 0.5) * cell_size).collect();
        centers.push(&c);
    }
    Ok(Mesh {
        nodes,
        element_centers: centers,
        nodes_per_element: corners.len(),
        element_nodes,
        grid: Some(GridInfo { dims: dims.to_vec(), cell_size }),
    })
}

fn unflatten(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for (a, &n) in dims.iter().enumerate() {
        out[a] = flat % n;
        flat /= n;
    }
}

fn corner_offsets(d: usize) -> Vec<Vec<usize>> {
    match d {
        1 => vec![vec![0], vec![1]],
        2 => vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![0, 1]],
        _ => vec![
            vec![0, 0, 0],
            vec![1, 0, 0],
            vec![1, 1, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![1, 0, 1],
            vec![1, 1, 1],
            vec![0, 1, 1],
        ],
    }
}

/// Deterministic Fibonacci-spiral layout of `n` points on a sphere centered
/// at the origin.
pub fn build_sphere_cloud(n: usize, radius: f64) -> Result<PointSet> {
    if n < 4 {
        return Err(invalid_arg("sphere cloud needs at least 4 points"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid_arg("sphere radius must be positive"));
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut cloud = PointSet::empty(3);
    for i in 0..n {
        let z = 1.0 - (2 * i + 1) as f64 / n as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden_angle * i as f64;
        let (s, c) = phi.sin_cos();
        let p = [r * c, r * s, z];
        // Renormalise so |p| = 1 holds to rounding.
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        cloud.push(&[radius * p[0] / norm, radius * p[1] / norm, radius * p[2] / norm]);
    }
    Ok(cloud)
}

/// Centroid, principal-axis orientation in `[0, pi)` and extent along that
/// axis of a 2-D node set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyFrame {
    pub com: [f64; 2],
    pub orientation: f64,
    pub length: f64,
}

pub fn body_frame_metrics(nodes: &PointSet) -> Result<BodyFrame> {
    if nodes.dim() != 2 {
        return Err(invalid_arg("body frames are defined for 2-D node sets"));
    }
    if nodes.len() < 2 {
        return Err(Error::DegenerateGeometry("need at least two nodes".into()));
    }
    let c = nodes.centroid();
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in nodes.iter() {
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let n = nodes.len() as f64;
    sxx /= n;
    syy /= n;
    sxy /= n;
    let trace = sxx + syy;
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::DegenerateGeometry("all nodes coincide".into()));
    }
    let anisotropy = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    // Near-isotropic clouds have no dominant axis; pick the smallest angle.
    let orientation = if anisotropy <= 1e-12 * trace {
        0.0
    } else {
        fold_half_turn(0.5 * (2.0 * sxy).atan2(sxx - syy))
    };
    let (s, co) = orientation.sin_cos();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in nodes.iter() {
        let t = (p[0] - c[0]) * co + (p[1] - c[1]) * s;
        lo = lo.min(t);
        hi = hi.max(t);
    }
    Ok(BodyFrame { com: [c[0], c[1]], orientation, length: hi - lo })
}

/// Maps an angle into `[0, pi)`.
pub fn fold_half_turn(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut t = theta.rem_euclid(pi);
    if t >= pi {
        t -= pi;
    }
    t
}

/// Signed area of a quad given counter-clockwise corners.
pub fn quad_signed_area(p: [&[f64]; 4]) -> f64 {
    let mut a = 0.0;
    for i in 0..4 {
        let (u, v) = (p[i], p[(i + 1) % 4]);
        a += u[0] * v[1] - v[0] * u[1];
    }
    0.5 * a
}

/// Jacobian determinants of a trilinear hex at its eight corners.
pub fn hex_corner_jacobians(p: [&[f64]; 8]) -> [f64; 8] {
    // For each corner: the three neighbouring corners along +xi, +eta, +zeta
    // in reference orientation, with sign flips where the neighbour lies on
    // the negative side.
    const NB: [[(usize, f64); 3]; 8] = [
        [(1, 1.0), (3, 1.0), (4, 1.0)],
        [(0, -1.0), (2, 1.0), (5, 1.0)],
        [(3, -1.0), (1, -1.0), (6, 1.0)],
        [(2, 1.0), (0, -1.0), (7, 1.0)],
        [(5, 1.0), (7, 1.0), (0, -1.0)],
        [(4, -1.0), (6, 1.0), (1, -1.0)],
        [(7, -1.0), (5, -1.0), (2, -1.0)],
        [(6, 1.0), (4, -1.0), (3, -1.0)],
    ];
    let mut out = [0.0; 8];
    for (c, nb) in NB.iter().enumerate() {
        let mut cols = [[0.0; 3]; 3];
        for (k, &(n, s)) in nb.iter().enumerate() {
            for a in 0..3 {
                cols[k][a] = s * (p[n][a] - p[c][a]);
            }
        }
        out[c] = det3(cols[0], cols[1], cols[2]);
    }
    out
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}
