//! Expressiveness analysis: Chamfer distances between decoded shapes,
//! classical MDS, the d95 dimensionality proxy and novelty scores.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::NeuralMorph;
use crate::encoding::MorphField;
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::PointSet;

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Brute-force nearest-neighbour distance from `p` to `set`.
pub fn nearest_distance_brute(p: &[f64], set: &PointSet) -> f64 {
    set.iter().map(|q| dist_sq(p, q)).fold(f64::INFINITY, f64::min).sqrt()
}

/// Uniform bucket grid over a point set for exact nearest-neighbour queries.
#[derive(Clone, Debug)]
pub struct NeighborGrid {
    points: PointSet,
    lo: Vec<f64>,
    cell: f64,
    dims: Vec<usize>,
    /// Prefix offsets into `order`, one slot per cell plus a sentinel.
    starts: Vec<usize>,
    order: Vec<usize>,
}

impl NeighborGrid {
    pub fn new(points: &PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid_arg("cannot index an empty point set"));
        }
        let d = points.dim();
        let (lo, hi) = points.bounds();
        let extents: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
        let max_ext = extents.iter().cloned().fold(0.0, f64::max);
        let cell = if max_ext > 0.0 {
            let live: Vec<f64> = extents.iter().map(|e| e.max(max_ext * 1e-3)).collect();
            let volume: f64 = live.iter().product();
            (volume / points.len() as f64).powf(1.0 / d as f64).max(max_ext * 1e-3)
        } else {
            1.0
        };
        let dims: Vec<usize> = extents.iter().map(|e| (e / cell).floor() as usize + 1).collect();
        let total: usize = dims.iter().product();
        let mut counts = vec![0usize; total + 1];
        let mut cell_of = Vec::with_capacity(points.len());
        let mut idx = vec![0usize; d];
        for p in points.iter() {
            cell_coords(p, &lo, cell, &dims, &mut idx);
            let c = flat_index(&idx, &dims);
            cell_of.push(c);
            counts[c + 1] += 1;
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut order = vec![0; points.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            order[fill[c]] = i;
            fill[c] += 1;
        }
        Ok(Self { points: points.clone(), lo, cell, dims, starts: counts, order })
    }

    /// Distance from `p` to its nearest indexed point; equal to the brute-force value.
    pub fn nearest_distance(&self, p: &[f64]) -> f64 {
        let d = self.dims.len();
        let mut center = vec![0usize; d];
        cell_coords(p, &self.lo, self.cell, &self.dims, &mut center);
        let max_ring = self.dims.iter().copied().max().unwrap_or(1);
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; d];
        for r in 0..=max_ring {
            self.visit_ring(&center, r, &mut idx, 0, false, p, &mut best);
            match self.unsearched_gap(p, &center, r) {
                None => break,
                Some(gap) if best <= gap * gap => break,
                _ => {}
            }
        }
        best.sqrt()
    }

    #[allow(clippy::too_many_arguments)]
    fn visit_ring(
        &self,
        center: &[usize],
        r: usize,
        idx: &mut [usize],
        axis: usize,
        on_shell: bool,
        p: &[f64],
        best: &mut f64,
    ) {
        if axis == center.len() {
            if !on_shell && r > 0 {
                return;
            }
            let c = flat_index(idx, &self.dims);
            for &i in &self.order[self.starts[c]..self.starts[c + 1]] {
                let d2 = dist_sq(p, self.points.point(i));
                if d2 < *best {
                    *best = d2;
                }
            }
            return;
        }
        let c = center[axis] as isize;
        let (lo, hi) = ((c - r as isize).max(0), (c + r as isize).min(self.dims[axis] as isize - 1));
        for v in lo..=hi {
            idx[axis] = v as usize;
            let shell = on_shell || (v - c).unsigned_abs() == r;
            self.visit_ring(center, r, idx, axis + 1, shell, p, best);
        }
    }

    /// Lower bound on the distance from `p` to any cell outside the searched
    /// block of radius `r`, or `None` when every cell has been searched.
    fn unsearched_gap(&self, p: &[f64], center: &[usize], r: usize) -> Option<f64> {
        let mut gap: Option<f64> = None;
        // Slack absorbs rounding in the cell assignment of boundary points.
        let slack = 1e-9 * self.cell;
        for a in 0..center.len() {
            let c = center[a];
            if c > r {
                let edge = self.lo[a] + (c - r) as f64 * self.cell;
                let g = (p[a] - edge - slack).max(0.0);
                gap = Some(gap.map_or(g, |x: f64| x.min(g)));
            }
            if c + r + 1 < self.dims[a] {
                let edge = self.lo[a] + (c + r + 1) as f64 * self.cell;
                let g = (edge - p[a] - slack).max(0.0);
                gap = Some(gap.map_or(g, |x: f64| x.min(g)));
            }
        }
        gap
    }
}

fn cell_coords(p: &[f64], lo: &[f64], cell: f64, dims: &[usize], out: &mut [usize]) {
    for a in 0..dims.len() {
        let v = ((p[a] - lo[a]) / cell).floor();
        out[a] = if v.is_finite() && v > 0.0 { (v as usize).min(dims[a] - 1) } else { 0 };
    }
}

fn flat_index(idx: &[usize], dims: &[usize]) -> usize {
    let mut flat = 0;
    for a in (0..dims.len()).rev() {
        flat = flat * dims[a] + idx[a];
    }
    flat
}

fn mean_nearest(from: &PointSet, to: &NeighborGrid) -> f64 {
    from.iter().map(|p| to.nearest_distance(p)).sum::<f64>() / from.len() as f64
}

/// Symmetric Chamfer distance: the average of the two mean nearest-neighbour
/// distances (Euclidean, not squared).
pub fn chamfer_distance(p: &PointSet, q: &PointSet) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(invalid_arg("Chamfer distance needs non-empty point sets"));
    }
    if p.dim() != q.dim() {
        return Err(invalid_arg("point sets differ in dimension"));
    }
    let gp = NeighborGrid::new(p)?;
    let gq = NeighborGrid::new(q)?;
    Ok(0.5 * (mean_nearest(p, &gq) + mean_nearest(q, &gp)))
}

/// Symmetric matrix with zero diagonal, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub n: usize,
    pub values: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(invalid_arg("distance matrix must be square"));
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(invalid_arg("distance matrix diagonal must be zero"));
            }
            for j in 0..i {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if !(a >= 0.0) || (a - b).abs() > 1e-12 {
                    return Err(invalid_arg("distance matrix must be symmetric and non-negative"));
                }
            }
        }
        Ok(Self { n, values })
    }

    /// Distances between collinear 1-D coordinates, handy for small checks.
    pub fn from_points(points: &PointSet) -> Self {
        let n = points.len();
        let values = DMatrix::from_fn(n, n, |i, j| dist_sq(points.point(i), points.point(j)).sqrt());
        Self { n, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

/// Point coordinates split by axis, for the dense pairwise kernel.
struct AxisMajor {
    axes: Vec<Vec<f64>>,
    len: usize,
}

impl AxisMajor {
    fn new(points: &PointSet) -> Self {
        let d = points.dim();
        let axes = (0..d).map(|a| points.iter().map(|p| p[a]).collect()).collect();
        Self { axes, len: points.len() }
    }
}

/// Chamfer distance by exhaustive search in both directions at once.
///
/// Produces the same value as [`chamfer_distance`] bit for bit: squared
/// distances are accumulated in the same axis order and the means are summed
/// in point order.
fn dense_chamfer(p: &AxisMajor, q: &AxisMajor, scratch: &mut Vec<f64>, col_min: &mut Vec<f64>) -> f64 {
    scratch.resize(q.len, 0.0);
    col_min.clear();
    col_min.resize(q.len, f64::INFINITY);
    let mut forward = 0.0;
    for i in 0..p.len {
        scratch.iter_mut().for_each(|s| *s = 0.0);
        for (pa, qa) in p.axes.iter().zip(&q.axes) {
            let x = pa[i];
            for (s, &y) in scratch.iter_mut().zip(qa) {
                let t = x - y;
                *s += t * t;
            }
        }
        let mut row = f64::INFINITY;
        for (c, &s) in col_min.iter_mut().zip(scratch.iter()) {
            row = if s < row { s } else { row };
            *c = if s < *c { s } else { *c };
        }
        forward += row.sqrt();
    }
    let backward: f64 = col_min.iter().map(|c| c.sqrt()).sum();
    0.5 * (forward / p.len as f64 + backward / q.len as f64)
}

/// All pairwise Chamfer distances, computed in parallel over rows.
pub fn pairwise_chamfer(shapes: &[PointSet]) -> Result<DistanceMatrix> {
    let n = shapes.len();
    if let Some(first) = shapes.first() {
        if shapes.iter().any(|s| s.is_empty() || s.dim() != first.dim()) {
            return Err(invalid_arg("shapes must be non-empty and share one dimension"));
        }
    }
    let split: Vec<AxisMajor> = shapes.iter().map(AxisMajor::new).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(scratch, col_min), i| (i + 1..n).map(|j| dense_chamfer(&split[i], &split[j], scratch, col_min)).collect(),
        )
        .collect();
    let mut values = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            values[(i, i + 1 + k)] = v;
            values[(i + 1 + k, i)] = v;
        }
    }
    Ok(DistanceMatrix { n, values })
}

/// A parameterized deformation of a fixed reference cloud.
pub trait ShapeGenerator: Sync {
    fn param_count(&self) -> usize;
    fn generate(&self, c: &[f64]) -> PointSet;
}

impl ShapeGenerator for MorphField {
    fn param_count(&self) -> usize {
        self.coeff_count()
    }

    fn generate(&self, c: &[f64]) -> PointSet {
        self.apply(c)
    }
}

impl ShapeGenerator for NeuralMorph {
    fn param_count(&self) -> usize {
        NeuralMorph::param_count(self)
    }

    fn generate(&self, c: &[f64]) -> PointSet {
        self.apply(c)
    }
}

/// Draws `n_samples` vectors uniformly from `[-1, 1]^N`, decodes each into a
/// shape and returns the shapes in draw order.
pub fn sample_shapes(generator: &dyn ShapeGenerator, n_samples: usize, seed: u64) -> Vec<PointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = generator.param_count();
    let draws: Vec<Vec<f64>> = (0..n_samples).map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
    draws.par_iter().map(|c| generator.generate(c)).collect()
}

pub fn sample_design_distances(generator: &dyn ShapeGenerator, n_samples: usize, seed: u64) -> Result<DistanceMatrix> {
    if n_samples < 2 {
        return Err(invalid_arg("need at least two samples"));
    }
    pairwise_chamfer(&sample_shapes(generator, n_samples, seed))
}

#[derive(Clone, Debug)]
pub struct MdsResult {
    /// All eigenvalues of the double-centred matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Cumulative share of the positive eigenvalue mass, aligned with `eigenvalues`.
    pub cumulative: Vec<f64>,
    /// Eigenvectors in the same order as `eigenvalues` (columns).
    pub eigenvectors: DMatrix<f64>,
}

impl MdsResult {
    pub fn positive_count(&self) -> usize {
        self.eigenvalues.iter().filter(|&&v| v > 0.0).count()
    }

    /// Coordinates of the first `m` components.
    pub fn embedding(&self, m: usize) -> DMatrix<f64> {
        let n = self.eigenvectors.nrows();
        let m = m.min(self.positive_count());
        DMatrix::from_fn(n, m, |i, k| self.eigenvectors[(i, k)] * self.eigenvalues[k].sqrt())
    }

    pub fn d95(&self) -> Result<usize> {
        d95(self)
    }
}

/// Classical MDS. Eigenvalues below a relative noise floor count as zero.
pub fn classical_mds(d: &DistanceMatrix) -> MdsResult {
    let n = d.n;
    let sq = d.values.map(|v| v * v);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let gram = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let gram = 0.5 * (&gram + gram.transpose());
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = scale * 1e-10;
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&k| {
            let v = eig.eigenvalues[k];
            if v.abs() <= floor {
                0.0
            } else {
                v
            }
        })
        .collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    let total: f64 = eigenvalues.iter().filter(|&&v| v > 0.0).sum();
    let mut acc = 0.0;
    let cumulative = eigenvalues
        .iter()
        .map(|&v| {
            if v > 0.0 {
                acc += v;
            }
            if total > 0.0 {
                (acc / total).min(1.0)
            } else {
                0.0
            }
        })
        .collect();
    MdsResult { eigenvalues, cumulative, eigenvectors }
}

/// Smallest component count explaining at least 95% of the positive variance.
pub fn d95(result: &MdsResult) -> Result<usize> {
    d_fraction(result, 0.95)
}

pub fn d_fraction(result: &MdsResult, fraction: f64) -> Result<usize> {
    if result.positive_count() == 0 {
        return Err(Error::DegenerateInput("no positive MDS eigenvalues".into()));
    }
    let m = result.cumulative.iter().position(|&c| c >= fraction).unwrap_or(result.positive_count() - 1);
    Ok(m + 1)
}

/// Nearest-neighbour distance of every sample within the set.
pub fn novelty_scores(d: &DistanceMatrix) -> Result<Vec<f64>> {
    if d.n < 2 {
        return Err(invalid_arg("novelty needs at least two samples"));
    }
    Ok((0..d.n)
        .map(|i| (0..d.n).filter(|&j| j != i).map(|j| d.get(i, j)).fold(f64::INFINITY, f64::min))
        .collect())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::{
        chamfer_distance, classical_mds, d95, dist_sq, median, nearest_distance_brute, novelty_scores,
        pairwise_chamfer, DistanceMatrix, MdsResult, NeighborGrid,
    };
    use crate::geometry::PointSet;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(dim: usize, coords: &[f64]) -> PointSet {
        PointSet::new(dim, coords.to_vec()).unwrap()
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, spread: f64) -> PointSet {
        cloud(dim, &(0..n * dim).map(|_| rng.gen_range(-spread..spread)).collect::<Vec<_>>())
    }

    #[test]
    fn chamfer_hand_cases() {
        let p = cloud(1, &[0.0]);
        let q = cloud(1, &[3.0]);
        assert_eq!(chamfer_distance(&p, &q).unwrap(), 3.0);
        let r = cloud(2, &[0.0, 0.0, 1.0, 2.0, -3.0, 0.5]);
        assert_eq!(chamfer_distance(&r, &r).unwrap(), 0.0);
        assert!(chamfer_distance(&p, &PointSet::empty(1)).is_err());
        // {0, 1} vs {0}: means 0.5 and 0.
        assert_eq!(chamfer_distance(&cloud(1, &[0.0, 1.0]), &cloud(1, &[0.0])).unwrap(), 0.25);
    }

    #[test]
    fn chamfer_is_symmetric_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = random_cloud(&mut rng, 40, 3, 1.0);
            let b = random_cloud(&mut rng, 25, 3, 2.0);
            assert_eq!(chamfer_distance(&a, &b).unwrap(), chamfer_distance(&b, &a).unwrap());
        }
    }

    #[test]
    fn grid_matches_brute_force_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dim in 1..=3 {
            for trial in 0..20 {
                let set = random_cloud(&mut rng, 1 + trial * 13, dim, 1.0 + trial as f64);
                let grid = NeighborGrid::new(&set).unwrap();
                for _ in 0..100 {
                    let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-40.0..40.0)).collect();
                    assert_eq!(grid.nearest_distance(&q), nearest_distance_brute(&q, &set));
                }
                for p in set.iter() {
                    assert_eq!(grid.nearest_distance(p), 0.0);
                }
            }
        }
    }

    #[test]
    fn grid_handles_degenerate_layouts() {
        let flat = cloud(3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 5.0, 0.0, 0.0]);
        let grid = NeighborGrid::new(&flat).unwrap();
        for q in [[0.4, 3.0, -1.0], [4.0, 0.0, 0.0], [-9.0, 0.1, 0.2]] {
            assert_eq!(grid.nearest_distance(&q), nearest_distance_brute(&q, &flat));
        }
        let single = cloud(2, &[1.0, 1.0, 1.0, 1.0]);
        let grid = NeighborGrid::new(&single).unwrap();
        assert_eq!(grid.nearest_distance(&[4.0, 5.0]), 5.0);
    }

    #[test]
    fn equilateral_triangle_eigenvalues() {
        // Oracle: explicit coordinates, centred Gram matrix, diagonalised.
        let h = 3f64.sqrt() / 2.0;
        let pts = cloud(2, &[0.0, 0.0, 1.0, 0.0, 0.5, h]);
        let centroid = pts.centroid();
        let centred: Vec<f64> = pts.iter().flat_map(|p| [p[0] - centroid[0], p[1] - centroid[1]]).collect();
        let x = DMatrix::from_row_slice(3, 2, &centred);
        let gram = &x * x.transpose();
        let mut oracle: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().cloned().collect();
        oracle.sort_by(|a, b| b.total_cmp(a));

        let d = DistanceMatrix::from_points(&pts);
        let mds = classical_mds(&d);
        for (got, want) in mds.eigenvalues.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-9);
        }
        for (got, want) in mds.eigenvalues.iter().zip([0.5, 0.5, 0.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(mds.d95().unwrap(), 2);
    }

    #[test]
    fn collinear_points_have_one_positive_eigenvalue() {
        let d = DistanceMatrix::from_points(&cloud(1, &[0.0, 1.0, 3.0]));
        let mds = classical_mds(&d);
        assert_eq!(mds.positive_count(), 1);
        assert_eq!(mds.d95().unwrap(), 1);
        assert_eq!(*mds.cumulative.last().unwrap(), 1.0);
    }

    #[test]
    fn embedding_round_trips_euclidean_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_cloud(&mut rng, 30, 4, 1.0);
        let d = DistanceMatrix::from_points(&pts);
        let mds = classical_mds(&d);
        assert_eq!(mds.positive_count(), 4);
        let y = mds.embedding(4);
        for i in 0..30 {
            for j in 0..30 {
                let e = (y.row(i) - y.row(j)).norm();
                assert!((e - d.get(i, j)).abs() < 1e-9);
            }
        }
        // Positive eigenvalue mass equals the total centred variance.
        let c = pts.centroid();
        let var: f64 = pts.iter().map(|p| dist_sq(p, &c)).sum();
        let mass: f64 = mds.eigenvalues.iter().filter(|&&v| v > 0.0).sum();
        assert!((var - mass).abs() < 1e-9);
    }

    fn mds_from(eigs: &[f64]) -> MdsResult {
        let total: f64 = eigs.iter().filter(|&&v| v > 0.0).sum();
        let mut acc = 0.0;
        let cumulative = eigs
            .iter()
            .map(|&v| {
                acc += v.max(0.0);
                acc / total
            })
            .collect();
        MdsResult { eigenvalues: eigs.to_vec(), cumulative, eigenvectors: DMatrix::zeros(0, 0) }
    }

    #[test]
    fn d95_hand_cases() {
        assert_eq!(d95(&mds_from(&[0.5, 0.5, 0.0])).unwrap(), 2);
        assert_eq!(d95(&mds_from(&[2.0])).unwrap(), 1);
        assert_eq!(d95(&mds_from(&[0.96, 0.04])).unwrap(), 1);
        let none = MdsResult { eigenvalues: vec![0.0, -1.0], cumulative: vec![0.0, 0.0], eigenvectors: DMatrix::zeros(0, 0) };
        assert!(d95(&none).is_err());
    }

    #[test]
    fn novelty_hand_cases() {
        let d = DistanceMatrix::from_points(&cloud(1, &[0.0, 1.0, 3.0]));
        assert_eq!(novelty_scores(&d).unwrap(), vec![1.0, 1.0, 2.0]);
        let dup = DistanceMatrix::from_points(&cloud(1, &[2.0, 2.0, 7.0]));
        assert_eq!(novelty_scores(&dup).unwrap()[0], 0.0);
    }

    #[test]
    fn pairwise_matrix_is_valid_and_matches_direct_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shapes: Vec<PointSet> = (0..8).map(|_| random_cloud(&mut rng, 30, 3, 1.0)).collect();
        let d = pairwise_chamfer(&shapes).unwrap();
        DistanceMatrix::new(d.values.clone()).unwrap();
        for i in 0..8 {
            for j in i + 1..8 {
                assert_eq!(d.get(i, j), chamfer_distance(&shapes[i], &shapes[j]).unwrap());
            }
        }
        assert!(pairwise_chamfer(&[shapes[0].clone(), PointSet::empty(3)]).is_err());
        let nu = novelty_scores(&d).unwrap();
        for i in 0..8 {
            assert!(nu[i] >= 0.0);
            for j in 0..8 {
                if i != j {
                    assert!(nu[i] <= d.get(i, j));
                }
            }
        }
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    proptest! {
        #[test]
        fn appending_zero_eigenvalue_keeps_d95(eigs in proptest::collection::vec(0.01f64..10.0, 1..12)) {
            let mut sorted = eigs.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let base = d95(&mds_from(&sorted)).unwrap();
            sorted.push(0.0);
            prop_assert_eq!(d95(&mds_from(&sorted)).unwrap(), base);
        }

        #[test]
        fn chamfer_identity_and_symmetry(a in proptest::collection::vec(-5.0f64..5.0, 2..40),
                                         b in proptest::collection::vec(-5.0f64..5.0, 2..40)) {
            let p = cloud(2, &a[..a.len() / 2 * 2]);
            let q = cloud(2, &b[..b.len() / 2 * 2]);
            prop_assert_eq!(chamfer_distance(&p, &p).unwrap(), 0.0);
            let pq = chamfer_distance(&p, &q).unwrap();
            prop_assert!(pq >= 0.0);
            prop_assert_eq!(pq, chamfer_distance(&q, &p).unwrap());
        }
    }
}
