//! CMA-ES with an ask/tell interface, plus a driver for joint and sequential
//! optimization schedules with parallel, order-preserving evaluation.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};

const MIN_EIGENVALUE: f64 = 1e-14;

pub fn default_lambda(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

#[derive(Clone, Debug)]
pub struct CmaState {
    pub n: usize,
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub ps: DVector<f64>,
    pub pc: DVector<f64>,
    pub generation: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mueff: f64,
    pub cc: f64,
    pub cs: f64,
    pub c1: f64,
    pub cmu: f64,
    pub damps: f64,
    pub chi_n: f64,
    /// Eigenvectors of `cov` (columns).
    basis: DMatrix<f64>,
    /// Square roots of the eigenvalues of `cov`.
    scales: DVector<f64>,
    rng: ChaCha8Rng,
    jitter_events: usize,
}

impl CmaState {
    pub fn new(mean0: &[f64], sigma0: f64, lambda: Option<usize>, seed: u64) -> Result<Self> {
        let n = mean0.len();
        if n == 0 {
            return Err(invalid_arg("CMA-ES needs at least one dimension"));
        }
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(invalid_arg("sigma0 must be positive"));
        }
        let lambda = lambda.unwrap_or_else(|| default_lambda(n));
        if lambda < 2 {
            return Err(invalid_arg("population size must be at least 2"));
        }
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let nf = n as f64;
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Ok(Self {
            n,
            mean: DVector::from_column_slice(mean0),
            sigma: sigma0,
            cov: DMatrix::identity(n, n),
            ps: DVector::zeros(n),
            pc: DVector::zeros(n),
            generation: 0,
            lambda,
            mu,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            rng: ChaCha8Rng::seed_from_u64(seed),
            jitter_events: 0,
        })
    }

    /// Number of times the covariance had to be lifted to stay positive definite.
    pub fn jitter_events(&self) -> usize {
        self.jitter_events
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.scales.iter().map(|s| s * s).collect()
    }

    /// Draws `lambda` candidates from `N(mean, sigma^2 C)`.
    pub fn ask(&mut self) -> Vec<Vec<f64>> {
        let mut z = DVector::zeros(self.n);
        (0..self.lambda)
            .map(|_| {
                for (zi, s) in z.iter_mut().zip(self.scales.iter()) {
                    let g: f64 = StandardNormal.sample(&mut self.rng);
                    *zi = s * g;
                }
                let y = &self.basis * &z;
                (&self.mean + self.sigma * y).as_slice().to_vec()
            })
            .collect()
    }

    /// Rank-based update from evaluated candidates. Non-finite values rank last.
    pub fn tell(&mut self, candidates: &[Vec<f64>], values: &[f64]) -> Result<()> {
        if candidates.len() != values.len() || candidates.len() != self.lambda {
            return Err(invalid_arg(format!(
                "tell expects {} candidates and values, got {} and {}",
                self.lambda,
                candidates.len(),
                values.len()
            )));
        }
        if candidates.iter().any(|c| c.len() != self.n) {
            return Err(invalid_arg("candidate dimension mismatch"));
        }
        let order = rank_order(values);
        let n = self.n;
        let old_mean = self.mean.clone();
        let ys: Vec<DVector<f64>> = order[..self.mu]
            .iter()
            .map(|&i| (DVector::from_column_slice(&candidates[i]) - &old_mean) / self.sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in self.weights.iter().zip(&ys) {
            y_w.axpy(*w, y, 1.0);
        }
        self.mean = &old_mean + self.sigma * &y_w;

        // C^{-1/2} y_w through the cached eigendecomposition.
        let mut t = self.basis.tr_mul(&y_w);
        for (ti, s) in t.iter_mut().zip(self.scales.iter()) {
            *ti /= s;
        }
        let inv_sqrt_y = &self.basis * t;
        self.ps = (1.0 - self.cs) * &self.ps + (self.cs * (2.0 - self.cs) * self.mueff).sqrt() * inv_sqrt_y;
        let gen = (self.generation + 1) as f64;
        let ps_norm = self.ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - self.cs).powf(2.0 * gen)).sqrt() / self.chi_n
            < 1.4 + 2.0 / (n as f64 + 1.0);
        let hsig_f = if hsig { 1.0 } else { 0.0 };
        self.pc = (1.0 - self.cc) * &self.pc + hsig_f * (self.cc * (2.0 - self.cc) * self.mueff).sqrt() * &y_w;

        let mut cov = (1.0 - self.c1 - self.cmu) * &self.cov;
        cov += self.c1 * (&self.pc * self.pc.transpose() + (1.0 - hsig_f) * self.cc * (2.0 - self.cc) * &self.cov);
        for (w, y) in self.weights.iter().zip(&ys) {
            cov.ger(self.cmu * w, y, y, 1.0);
        }
        self.cov = cov;
        self.sigma *= ((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0)).exp();
        self.generation += 1;
        self.refresh_eigen()
    }

    fn refresh_eigen(&mut self) -> Result<()> {
        let sym = 0.5 * (&self.cov + self.cov.transpose());
        if sym.iter().any(|v| !v.is_finite()) || !self.sigma.is_finite() {
            return Err(Error::DegenerateInput("CMA-ES state became non-finite".into()));
        }
        let eig = SymmetricEigen::new(sym);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut values = eig.eigenvalues.clone();
        if min <= MIN_EIGENVALUE {
            self.jitter_events += 1;
            log::warn!("covariance eigenvalue {min:e} lifted to keep C positive definite");
            values.iter_mut().for_each(|v| *v = v.max(2.0 * MIN_EIGENVALUE));
        }
        let vecs = eig.eigenvectors;
        let mut cov = &vecs * DMatrix::from_diagonal(&values) * vecs.transpose();
        cov = 0.5 * (&cov + cov.transpose());
        self.cov = cov;
        self.scales = values.map(f64::sqrt);
        self.basis = vecs;
        Ok(())
    }
}

/// Indices sorted by value, ties broken by index.
fn rank_order(values: &[f64]) -> Vec<usize> {
    let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| key(values[a]).total_cmp(&key(values[b])).then(a.cmp(&b)));
    order
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    Joint,
    Sequential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub generations: usize,
    /// `true` for coordinates optimized in this phase; the rest stay pinned.
    pub free: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSchedule {
    pub mode: ScheduleMode,
    pub phases: Vec<Phase>,
}

impl OptimizationSchedule {
    pub fn joint(n: usize, generations: usize) -> Self {
        Self { mode: ScheduleMode::Joint, phases: vec![Phase { generations, free: vec![true; n] }] }
    }

    /// Everything except `actuation` first, then `actuation` alone.
    pub fn sequential(n: usize, actuation: Range<usize>, morphology_gens: usize, actuation_gens: usize) -> Self {
        let second: Vec<bool> = (0..n).map(|i| actuation.contains(&i)).collect();
        let first = second.iter().map(|f| !f).collect();
        Self {
            mode: ScheduleMode::Sequential,
            phases: vec![
                Phase { generations: morphology_gens, free: first },
                Phase { generations: actuation_gens, free: second },
            ],
        }
    }

    pub fn total_generations(&self) -> usize {
        self.phases.iter().map(|p| p.generations).sum()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::Config("a schedule needs at least one phase".into()));
        }
        for p in &self.phases {
            if p.free.len() != n {
                return Err(Error::Config("freeze mask length differs from the design dimension".into()));
            }
            if p.generations > 0 && !p.free.iter().any(|&f| f) {
                return Err(Error::Config("a phase with generations must free at least one coordinate".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    #[serde(default)]
    pub lambda: Option<usize>,
    #[serde(default = "default_sigma0")]
    pub sigma0: f64,
}

fn default_sigma0() -> f64 {
    0.3
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { lambda: None, sigma0: default_sigma0() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best objective value seen so far, over all phases.
    pub best_loss: f64,
    pub mean_loss: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub history: Vec<GenerationRecord>,
    pub best: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
}

/// Runs every phase of `schedule` starting from `base`.
///
/// Each phase restarts CMA-ES on its free coordinates, initialised from the
/// best vector found so far; pinned coordinates are copied from that vector.
/// Candidates of one generation are evaluated in parallel and collected in
/// index order, so results do not depend on the thread count.
pub fn run_schedule<F>(
    objective: &F,
    base: &[f64],
    schedule: &OptimizationSchedule,
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<RunResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    schedule.validate(base.len())?;
    let mut best = base.to_vec();
    let mut best_value = f64::INFINITY;
    let mut history = Vec::with_capacity(schedule.total_generations());
    let mut evaluations = 0;
    for (phase_index, phase) in schedule.phases.iter().enumerate() {
        if phase.generations == 0 {
            continue;
        }
        let free: Vec<usize> = (0..base.len()).filter(|&i| phase.free[i]).collect();
        let pinned = best.clone();
        let mean0: Vec<f64> = free.iter().map(|&i| pinned[i]).collect();
        let phase_seed = seed ^ (phase_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut state = CmaState::new(&mean0, settings.sigma0, settings.lambda, phase_seed)?;
        let embed = |sub: &[f64]| {
            let mut full = pinned.clone();
            for (&i, &v) in free.iter().zip(sub) {
                full[i] = v;
            }
            full
        };
        for _ in 0..phase.generations {
            let candidates = state.ask();
            let full: Vec<Vec<f64>> = candidates.iter().map(|c| embed(c)).collect();
            let values: Vec<f64> = full.par_iter().map(|x| objective(x)).collect();
            evaluations += values.len();
            for (x, &v) in full.iter().zip(&values) {
                if v < best_value {
                    best_value = v;
                    best.clone_from(x);
                }
            }
            let mean_loss = values.iter().sum::<f64>() / values.len() as f64;
            state.tell(&candidates, &values)?;
            history.push(GenerationRecord { generation: history.len(), best_loss: best_value, mean_loss, sigma: state.sigma });
        }
    }
    Ok(RunResult { history, best, best_value, evaluations })
}

/// [`run_schedule`] inside a dedicated pool of `workers` threads
/// (`0` uses the global pool).
pub fn run_schedule_with_workers<F>(
    objective: &F,
    base: &[f64],
    schedule: &OptimizationSchedule,
    settings: &OptimizerSettings,
    seed: u64,
    workers: usize,
) -> Result<RunResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if workers == 0 {
        return run_schedule(objective, base, schedule, settings, seed);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_schedule(objective, base, schedule, settings, seed))
}
