//! Lasso by cyclic coordinate descent with warm starts along a λ grid.

use ndarray::{Array1, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{marginal_on, top_k, SolverOutput};
use crate::error::{Error, Result};
use crate::linalg::{spd_solve, CoefficientVector, DesignMatrix, SupportSet};

/// Convergence threshold on the largest coordinate change per sweep.
pub const CD_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    pub coefficients: Vec<CoefficientVector>,
    /// Whether coordinate descent met [`CD_TOL`] at each λ.
    pub converged: Vec<bool>,
}

impl LassoPath {
    pub fn supports(&self) -> impl Iterator<Item = &SupportSet> {
        self.coefficients.iter().map(|c| &c.support)
    }
}

/// `‖Xᵀy‖_∞ / n`, the smallest λ with an all-zero solution.
pub fn lambda_max(y: ArrayView1<'_, f64>, x: &DesignMatrix) -> f64 {
    x.t_dot(y).iter().fold(0.0, |m: f64, v| m.max(v.abs())) / x.n() as f64
}

/// `len` log-spaced values from `lmax` down to `ratio · lmax`.
pub fn log_grid(lmax: f64, ratio: f64, len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![lmax];
    }
    let (hi, lo) = (lmax.ln(), (lmax * ratio).ln());
    (0..len)
        .map(|t| (hi + (lo - hi) * t as f64 / (len - 1) as f64).exp())
        .collect()
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn check_inputs(y: ArrayView1<'_, f64>, x: &DesignMatrix) -> Result<()> {
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {}, X has {} rows",
            y.len(),
            x.n()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Coordinate descent state for one design: the current coefficients and
/// residual, carried between λ values as a warm start.
struct Cd<'a> {
    x: &'a DesignMatrix,
    y: ArrayView1<'a, f64>,
    diag: Vec<f64>,
    beta: Array1<f64>,
    resid: Array1<f64>,
}

/// Active-set sweeps between attempts at the closed-form step.
const SWEEPS_PER_JUMP: usize = 8;

impl<'a> Cd<'a> {
    fn new(y: ArrayView1<'a, f64>, x: &'a DesignMatrix) -> Self {
        let n = x.n() as f64;
        Self {
            x,
            y,
            diag: (0..x.p()).map(|j| x.column_norm_sq(j) / n).collect(),
            beta: Array1::zeros(x.p()),
            resid: y.to_owned(),
        }
    }

    /// With the active set and signs held fixed the objective is quadratic,
    /// with minimizer `G_AA b = X_Aᵀy/n − λ s_A`. Moves from `β` towards `b`;
    /// if a coordinate would change sign it stops at zero there, drops it
    /// and re-solves. Every move lowers the objective. Returns whether a
    /// sign-consistent minimizer was reached; the caller's full sweep still
    /// decides optimality over all coordinates.
    fn jump(&mut self, active: &[usize], lambda: f64) -> bool {
        let n = self.x.n() as f64;
        let mut act = active.to_vec();
        let mut moved = false;
        let reached = loop {
            if act.is_empty() {
                break true;
            }
            if act.len() > self.x.n() {
                // X_A has a null space: slide along it (residual fixed,
                // ‖β‖₁ decreasing) until a coordinate reaches zero
                let Some((step, d)) = self.null_direction(&act) else {
                    break false;
                };
                for (&j, &v) in act.iter().zip(&d) {
                    self.beta[j] -= step * v;
                }
                let t = act
                    .iter()
                    .zip(&d)
                    .enumerate()
                    .filter(|(_, (&j, &v))| v * self.beta[j].signum() >= 0.0 || self.beta[j] == 0.0)
                    .map(|(t, (&j, _))| (self.beta[j].abs(), t))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, t)| t)
                    .expect("some coordinate blocks");
                self.beta[act[t]] = 0.0;
                act.remove(t);
                moved = true;
                continue;
            }
            let xa = self.x.select(&act);
            let rhs = Array1::from_iter(
                act.iter()
                    .zip(xa.t().dot(&self.y))
                    .map(|(&j, c)| c / n - lambda * self.beta[j].signum()),
            );
            let Some(b) = spd_solve(&self.x.gram(&act), &rhs) else {
                break false;
            };
            let block = act
                .iter()
                .zip(&b)
                .enumerate()
                .filter(|(_, (&j, &v))| v * self.beta[j] <= 0.0)
                .map(|(t, (&j, &v))| (self.beta[j] / (self.beta[j] - v), t))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            moved = true;
            match block {
                None => {
                    for (&j, &v) in act.iter().zip(&b) {
                        self.beta[j] = v;
                    }
                    break true;
                }
                Some((step, t)) => {
                    for (&j, &v) in act.iter().zip(&b) {
                        self.beta[j] += step * (v - self.beta[j]);
                    }
                    self.beta[act[t]] = 0.0;
                    act.remove(t);
                }
            }
        };
        if moved {
            self.resid = &self.y - &self.x.dot(self.beta.view());
        }
        reached
    }

    /// For `|A| > n`: `d = (I − X_A⁺X_A) s_A` and the step that first zeroes
    /// a coordinate of `β_A − t·d`.
    fn null_direction(&self, act: &[usize]) -> Option<(f64, Array1<f64>)> {
        let xa = self.x.select(act);
        let s = Array1::from_iter(act.iter().map(|&j| self.beta[j].signum()));
        let z = spd_solve(&xa.dot(&xa.t()), &xa.dot(&s))?;
        let d = &s - &xa.t().dot(&z);
        act.iter()
            .zip(&d)
            .filter(|(&j, &v)| v * self.beta[j] > 0.0)
            .map(|(&j, &v)| self.beta[j] / v)
            .min_by(f64::total_cmp)
            .map(|step| (step, d))
    }

    /// One pass over `coords`; returns the largest scaled change.
    fn sweep(&mut self, coords: &[usize], lambda: f64) -> f64 {
        let n = self.x.n() as f64;
        let mut worst: f64 = 0.0;
        for &j in coords {
            let d = self.diag[j];
            if d == 0.0 {
                continue;
            }
            let col = self.x.column(j);
            let old = self.beta[j];
            let z = col.dot(&self.resid) / n + d * old;
            let new = soft_threshold(z, lambda) / d;
            if new != old {
                self.resid.scaled_add(old - new, &col);
                self.beta[j] = new;
                worst = worst.max((new - old).abs() * d.sqrt());
            }
        }
        worst
    }

    /// Alternates active-set sweeps with full sweeps until a full sweep
    /// changes nothing beyond the tolerance.
    fn solve(&mut self, lambda: f64) -> bool {
        let all: Vec<usize> = (0..self.x.p()).collect();
        let mut sweeps = 0;
        loop {
            let change = self.sweep(&all, lambda);
            sweeps += 1;
            if change <= CD_TOL {
                return true;
            }
            let active: Vec<usize> = all.iter().copied().filter(|&j| self.beta[j] != 0.0).collect();
            let mut inner = 0;
            loop {
                let c = self.sweep(&active, lambda);
                sweeps += 1;
                inner += 1;
                if c <= CD_TOL || sweeps >= MAX_SWEEPS {
                    break;
                }
                if inner % SWEEPS_PER_JUMP == 0 && self.jump(&active, lambda) {
                    break;
                }
            }
            if sweeps >= MAX_SWEEPS {
                return false;
            }
        }
    }

    fn coefficients(&self) -> CoefficientVector {
        let idx = (0..self.x.p()).filter(|&j| self.beta[j] != 0.0);
        CoefficientVector {
            values: self.beta.clone(),
            support: SupportSet::new(idx, self.x.p()).expect("indices are in range"),
        }
    }
}

/// Solves the Lasso at every λ in `lambdas` (strictly decreasing), or on the
/// default 100-point grid down to `1e-3 · λ_max` when `lambdas` is `None`.
pub fn lasso_path(
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    lambdas: Option<&[f64]>,
) -> Result<LassoPath> {
    check_inputs(y, x)?;
    let lambdas = match lambdas {
        Some(l) => {
            if l.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidSpec("lambdas must be positive and finite".into()));
            }
            if l.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::InvalidSpec("lambdas must be strictly decreasing".into()));
            }
            l.to_vec()
        }
        None => default_grid(y, x, 100),
    };
    let mut cd = Cd::new(y, x);
    let mut coefficients = Vec::with_capacity(lambdas.len());
    let mut converged = Vec::with_capacity(lambdas.len());
    for &lam in &lambdas {
        converged.push(cd.solve(lam));
        coefficients.push(cd.coefficients());
    }
    Ok(LassoPath {
        lambdas,
        coefficients,
        converged,
    })
}

fn default_grid(y: ArrayView1<'_, f64>, x: &DesignMatrix, len: usize) -> Vec<f64> {
    let lmax = lambda_max(y, x);
    if lmax == 0.0 {
        // y is orthogonal to every column; any positive grid gives β = 0
        return log_grid(1.0, 1e-3, len);
    }
    log_grid(lmax, 1e-3, len)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LassoCv {
    pub lambda_star: f64,
    pub coefficients: CoefficientVector,
    pub lambdas: Vec<f64>,
    pub cv_mse: Vec<f64>,
}

/// `folds`-fold cross-validation over a `grid`-point λ grid. Folds are
/// contiguous blocks of a seeded permutation of the rows; ties in mean
/// validation error go to the larger λ.
pub fn lasso_cv(
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    folds: usize,
    grid: usize,
    seed: u64,
) -> Result<LassoCv> {
    check_inputs(y, x)?;
    let n = x.n();
    if folds < 2 || n < folds {
        return Err(Error::TooFewSamples { n, folds });
    }
    if grid == 0 {
        return Err(Error::InvalidSpec("grid must be non-empty".into()));
    }
    let lambdas = default_grid(y, x, grid);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut sse = vec![0.0; lambdas.len()];
    for f in 0..folds {
        let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
        let mut test: Vec<usize> = perm[lo..hi].to_vec();
        let mut train: Vec<usize> = perm[..lo].iter().chain(&perm[hi..]).copied().collect();
        test.sort_unstable();
        train.sort_unstable();
        let x_train = DesignMatrix::new(x.data().select(Axis(0), &train))?;
        let y_train = y.select(Axis(0), &train);
        let x_test = x.data().select(Axis(0), &test);
        let y_test = y.select(Axis(0), &test);
        let path = lasso_path(y_train.view(), &x_train, Some(&lambdas))?;
        for (t, coef) in path.coefficients.iter().enumerate() {
            let r = &y_test - &x_test.dot(&coef.values);
            sse[t] += r.dot(&r);
        }
    }
    let cv_mse: Vec<f64> = sse.iter().map(|s| s / n as f64).collect();
    let mut best = 0;
    for t in 1..cv_mse.len() {
        if cv_mse[t] < cv_mse[best] {
            best = t;
        }
    }
    let full = lasso_path(y, x, Some(&lambdas[..=best]))?;
    Ok(LassoCv {
        lambda_star: lambdas[best],
        coefficients: full.coefficients.into_iter().last().expect("non-empty path"),
        lambdas,
        cv_mse,
    })
}

/// The `k` largest `|β̂_i|` of the cross-validated fit.
pub fn tlasso(
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    k: usize,
    folds: usize,
    grid: usize,
    seed: u64,
) -> Result<SolverOutput> {
    if k > x.p() {
        return Err(Error::InvalidSpec(format!("k = {k} exceeds p = {}", x.p())));
    }
    let cv = lasso_cv(y, x, folds, grid, seed)?;
    let nnz = cv.coefficients.support.len();
    let mut out = SolverOutput::new(top_k(cv.coefficients.values.view(), k, x.p()));
    out.notes.lambda = Some(cv.lambda_star);
    out.notes.degenerate = nnz < k;
    Ok(out)
}

/// Support at the largest λ with at least `k` active variables, pruned to
/// the `k` largest coefficients. If the path never reaches `k`, the densest
/// support is padded by marginal regression on its residual.
pub fn support_at_sparsity(
    path: &LassoPath,
    k: usize,
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
) -> Result<SolverOutput> {
    let p = x.p();
    if k > p {
        return Err(Error::InvalidSpec(format!("k = {k} exceeds p = {p}")));
    }
    if let Some(t) = path.coefficients.iter().position(|c| c.support.len() >= k) {
        let mut out = SolverOutput::new(top_k(path.coefficients[t].values.view(), k, p));
        out.notes.lambda = Some(path.lambdas[t]);
        return Ok(out);
    }
    let densest = (0..path.coefficients.len())
        .max_by(|&a, &b| {
            path.coefficients[a]
                .support
                .len()
                .cmp(&path.coefficients[b].support.len())
                .then(b.cmp(&a))
        })
        .ok_or_else(|| Error::InvalidSpec("empty Lasso path".into()))?;
    let coef = &path.coefficients[densest];
    let resid = &y - &x.dot(coef.values.view());
    let have = coef.support.len();
    let extra = marginal_on(resid.view(), x, k - have, &coef.support);
    let support = SupportSet::new(coef.support.iter().chain(extra), p)?;
    let mut out = SolverOutput::new(support);
    out.notes.lambda = Some(path.lambdas[densest]);
    out.notes.padded = k - have;
    Ok(out)
}
