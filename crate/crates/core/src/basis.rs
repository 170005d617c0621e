//! Gaussian radial basis spaces and their precomputed evaluation matrices.
//!
//! A basis is a uniform grid of Gaussian bumps `b_i(x) = exp(-|x - mu_i|^2 / (2 sigma^2))`
//! sharing one isotropic width. Centers sit at the cell midpoints of a uniform
//! partition of the domain box, first axis varying fastest.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::geometry::PointSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfGridSpec {
    pub dims_per_axis: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
}

fn default_overlap() -> f64 {
    1.0
}

impl RbfGridSpec {
    pub fn new(dims_per_axis: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { dims_per_axis, lo, hi, overlap: default_overlap() }
    }

    pub fn with_overlap(mut self, overlap: f64) -> Self {
        self.overlap = overlap;
        self
    }

    /// Unit box `[0,1]^d` with `n` centers per axis.
    pub fn unit(n: usize, d: usize) -> Self {
        Self::new(vec![n; d], vec![0.0; d], vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.dims_per_axis.len()
    }

    pub fn count(&self) -> usize {
        self.dims_per_axis.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims_per_axis.len();
        if d == 0 || self.lo.len() != d || self.hi.len() != d {
            return Err(Error::InvalidSpec("axis count mismatch between dims and domain".into()));
        }
        if self.dims_per_axis.contains(&0) {
            return Err(Error::InvalidSpec("every axis needs at least one center".into()));
        }
        for a in 0..d {
            let ext = self.hi[a] - self.lo[a];
            if !(ext > 0.0 && ext.is_finite()) {
                return Err(Error::InvalidSpec(format!("domain extent along axis {a} is not positive")));
            }
        }
        if !(self.overlap > 0.0 && self.overlap.is_finite()) {
            return Err(Error::InvalidSpec("overlap must be positive".into()));
        }
        Ok(())
    }
}

/// Placed centers plus the shared width.
#[derive(Clone, Debug, PartialEq)]
pub struct RbfBasis {
    pub centers: PointSet,
    pub sigma: f64,
}

impl RbfBasis {
    pub fn new(spec: &RbfGridSpec) -> Result<Self> {
        let (centers, sigma) = place_rbf_centers(spec)?;
        Ok(Self { centers, sigma })
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Scalar field `sum_i coeffs[i] b_i(x)`.
    pub fn field(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(coeffs)
            .map(|(mu, c)| c * eval_scalar_basis(x, mu, self.sigma))
            .sum()
    }

    /// Jacobian of the vector field `v(x) = sum_j sum_a q[j*d + a] b_j(x) e_a`,
    /// row-major `d x d` (row = output component, column = derivative axis).
    pub fn vector_field_jacobian(&self, q: &[f64], x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        let inv_s2 = 1.0 / (self.sigma * self.sigma);
        for (j, mu) in self.centers.iter().enumerate() {
            let b = eval_scalar_basis(x, mu, self.sigma);
            if b == 0.0 {
                continue;
            }
            for beta in 0..d {
                let db = -b * (x[beta] - mu[beta]) * inv_s2;
                for alpha in 0..d {
                    out[alpha * d + beta] += q[j * d + alpha] * db;
                }
            }
        }
    }
}

/// Centers at the midpoints of a uniform partition of the domain and
/// `sigma = overlap * (largest axis spacing)`.
pub fn place_rbf_centers(spec: &RbfGridSpec) -> Result<(PointSet, f64)> {
    spec.validate()?;
    let d = spec.dim();
    let spacing: Vec<f64> =
        (0..d).map(|a| (spec.hi[a] - spec.lo[a]) / spec.dims_per_axis[a] as f64).collect();
    let sigma = spec.overlap * spacing.iter().cloned().fold(0.0, f64::max);
    let mut centers = PointSet::empty(d);
    let mut idx = vec![0usize; d];
    let mut p = vec![0.0; d];
    for mut flat in 0..spec.count() {
        for a in 0..d {
            idx[a] = flat % spec.dims_per_axis[a];
            flat /= spec.dims_per_axis[a];
            p[a] = spec.lo[a] + (idx[a] as f64 + 0.5) * spacing[a];
        }
        centers.push(&p);
    }
    Ok((centers, sigma))
}

#[inline]
pub fn eval_scalar_basis(x: &[f64], center: &[f64], sigma: f64) -> f64 {
    let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
    (-r2 / (2.0 * sigma * sigma)).exp()
}

/// `B[j, i] = b_i(points_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarBasisMatrix {
    pub values: DMatrix<f64>,
}

impl ScalarBasisMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// Field values at the evaluation points for one coefficient block.
    pub fn apply(&self, coeffs: &[f64]) -> DVector<f64> {
        assert_eq!(coeffs.len(), self.cols(), "coefficient block length mismatch");
        &self.values * DVector::from_column_slice(coeffs)
    }
}

pub fn assemble_scalar_basis_matrix(points: &PointSet, spec: &RbfGridSpec) -> Result<ScalarBasisMatrix> {
    let basis = RbfBasis::new(spec)?;
    assemble_scalar_with(points, &basis)
}

pub fn assemble_scalar_with(points: &PointSet, basis: &RbfBasis) -> Result<ScalarBasisMatrix> {
    if points.is_empty() {
        return Err(invalid_arg("no evaluation points"));
    }
    if points.dim() != basis.dim() {
        return Err(invalid_arg(format!(
            "points are {}-D but the basis is {}-D",
            points.dim(),
            basis.dim()
        )));
    }
    let values = DMatrix::from_fn(points.len(), basis.len(), |j, i| {
        eval_scalar_basis(points.point(j), basis.centers.point(i), basis.sigma)
    });
    Ok(ScalarBasisMatrix { values })
}

/// `A[(i*d + a), (j*d + b)] = b_j(x_i) * [a == b]`: column `(j, a)` moves
/// every node along axis `a` by `b_j` evaluated at that node.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorBasisMatrix {
    pub values: DMatrix<f64>,
    pub dim: usize,
}

impl VectorBasisMatrix {
    pub fn apply(&self, q: &[f64]) -> DVector<f64> {
        assert_eq!(q.len(), self.values.ncols(), "morph coefficient length mismatch");
        &self.values * DVector::from_column_slice(q)
    }
}

pub fn assemble_vector_basis_matrix(nodes: &PointSet, spec: &RbfGridSpec, d: usize) -> Result<VectorBasisMatrix> {
    let basis = RbfBasis::new(spec)?;
    assemble_vector_with(nodes, &basis, d)
}

pub fn assemble_vector_with(nodes: &PointSet, basis: &RbfBasis, d: usize) -> Result<VectorBasisMatrix> {
    if nodes.dim() != d || basis.dim() != d {
        return Err(invalid_arg(format!(
            "dimension mismatch: d = {d}, nodes {}-D, basis {}-D",
            nodes.dim(),
            basis.dim()
        )));
    }
    if nodes.is_empty() {
        return Err(invalid_arg("no nodes"));
    }
    let mut values = DMatrix::zeros(d * nodes.len(), d * basis.len());
    for (i, x) in nodes.iter().enumerate() {
        for (j, mu) in basis.centers.iter().enumerate() {
            let b = eval_scalar_basis(x, mu, basis.sigma);
            for a in 0..d {
                values[(i * d + a, j * d + a)] = b;
            }
        }
    }
    Ok(VectorBasisMatrix { values, dim: d })
}

/// Largest infinity-operator norm (max absolute row sum) of the analytic
/// displacement Jacobian over the sample points.
pub fn sup_gradient_estimate(basis: &RbfBasis, q: &[f64], samples: &PointSet) -> f64 {
    let d = basis.dim();
    assert_eq!(q.len(), d * basis.len(), "morph coefficient length mismatch");
    let mut jac = vec![0.0; d * d];
    let mut best: f64 = 0.0;
    for x in samples.iter() {
        basis.vector_field_jacobian(q, x, &mut jac);
        for row in jac.chunks_exact(d) {
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            best = best.max(s);
        }
    }
    best
}
