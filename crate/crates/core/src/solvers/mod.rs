//! Sparse regression estimators used to initialize and benchmark swapping.

mod greedy;
mod lasso;

pub use greedy::{cosamp, foba, omp};
pub use lasso::{
    lambda_max, lasso_cv, lasso_path, log_grid, support_at_sparsity, tlasso, LassoCv, LassoPath,
    CD_TOL,
};

use ndarray::ArrayView1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DesignMatrix, SupportSet};

/// Side information a solver reports next to its support.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverNotes {
    /// The fit had fewer than `k` nonzeros, so ties filled the rest.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
    /// Variables appended by marginal regression to reach `k`.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub padded: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_steps: Option<usize>,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOutput {
    pub support: SupportSet,
    pub notes: SolverNotes,
}

impl SolverOutput {
    pub(crate) fn new(support: SupportSet) -> Self {
        Self {
            support,
            notes: SolverNotes::default(),
        }
    }
}

fn default_folds() -> usize {
    5
}
fn default_grid() -> usize {
    100
}
fn default_nu() -> f64 {
    0.5
}
fn default_max_iter() -> usize {
    100
}

/// A solver and its settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SolverChoice {
    /// Lasso path, matched to sparsity `k` by [`support_at_sparsity`].
    Lasso {
        #[serde(default = "default_grid")]
        grid: usize,
    },
    /// Top-`k` coefficients of the cross-validated Lasso.
    TLasso {
        #[serde(default = "default_folds")]
        folds: usize,
        #[serde(default = "default_grid")]
        grid: usize,
    },
    FoBa {
        #[serde(default = "default_nu")]
        nu: f64,
    },
    CoSaMP {
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    MaR,
    Random,
    #[serde(rename = "OMP")]
    Omp,
}

impl SolverChoice {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SolverChoice::Lasso { grid } if grid == 0 => {
                Err(Error::InvalidSpec("Lasso grid must be non-empty".into()))
            }
            SolverChoice::TLasso { folds, grid } if folds < 2 || grid == 0 => Err(
                Error::InvalidSpec("TLasso needs at least 2 folds and a non-empty grid".into()),
            ),
            SolverChoice::FoBa { nu } if !(nu > 0.0 && nu < 1.0) => {
                Err(Error::InvalidSpec(format!("FoBa nu must lie in (0, 1), got {nu}")))
            }
            SolverChoice::CoSaMP { max_iter } if max_iter == 0 => {
                Err(Error::InvalidSpec("CoSaMP max_iter must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Lasso { .. } => "Lasso",
            SolverChoice::TLasso { .. } => "TLasso",
            SolverChoice::FoBa { .. } => "FoBa",
            SolverChoice::CoSaMP { .. } => "CoSaMP",
            SolverChoice::MaR => "MaR",
            SolverChoice::Random => "Random",
            SolverChoice::Omp => "OMP",
        }
    }

    /// Parses a bare solver name with default settings.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "lasso" => SolverChoice::Lasso { grid: default_grid() },
            "tlasso" => SolverChoice::TLasso {
                folds: default_folds(),
                grid: default_grid(),
            },
            "foba" => SolverChoice::FoBa { nu: default_nu() },
            "cosamp" => SolverChoice::CoSaMP {
                max_iter: default_max_iter(),
            },
            "mar" => SolverChoice::MaR,
            "random" => SolverChoice::Random,
            "omp" => SolverChoice::Omp,
            _ => return Err(Error::InvalidSpec(format!("unknown solver {name:?}"))),
        })
    }

    /// Estimates a size-`k` support. `seed` drives CV folds and random draws.
    pub fn solve(
        &self,
        y: ArrayView1<'_, f64>,
        x: &DesignMatrix,
        k: usize,
        seed: u64,
    ) -> Result<SolverOutput> {
        self.validate()?;
        match *self {
            SolverChoice::Lasso { grid } => {
                let lmax = lambda_max(y, x);
                let lambdas = log_grid(if lmax > 0.0 { lmax } else { 1.0 }, 1e-3, grid);
                let path = lasso_path(y, x, Some(&lambdas))?;
                support_at_sparsity(&path, k, y, x)
            }
            SolverChoice::TLasso { folds, grid } => tlasso(y, x, k, folds, grid, seed),
            SolverChoice::FoBa { nu } => foba(y, x, k, nu),
            SolverChoice::CoSaMP { max_iter } => cosamp(y, x, k, max_iter),
            SolverChoice::MaR => Ok(SolverOutput::new(marginal_regression(y, x, k)?)),
            SolverChoice::Random => Ok(SolverOutput::new(random_support(x.p(), k, seed)?)),
            SolverChoice::Omp => omp(y, x, k),
        }
    }
}

/// Indices of the `k` largest `|v_i|`, ties to the smaller index.
pub fn top_k(v: ArrayView1<'_, f64>, k: usize, p: usize) -> SupportSet {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    SupportSet::new(idx, p).expect("indices are distinct and in range")
}

/// The `k` largest `|X_jᵀ r|` over `j` outside `exclude`.
pub(crate) fn marginal_on(
    r: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    k: usize,
    exclude: &SupportSet,
) -> Vec<usize> {
    let scores = x.t_dot(r);
    let mut idx: Vec<usize> = (0..x.p()).filter(|&j| !exclude.contains(j)).collect();
    idx.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Marginal regression: the `k` largest `|X_jᵀ y|`.
pub fn marginal_regression(y: ArrayView1<'_, f64>, x: &DesignMatrix, k: usize) -> Result<SupportSet> {
    if k > x.p() {
        return Err(Error::InvalidSpec(format!("k = {k} exceeds p = {}", x.p())));
    }
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {}, X has {} rows",
            y.len(),
            x.n()
        )));
    }
    Ok(top_k(x.t_dot(y).view(), k, x.p()))
}

/// Uniform size-`k` subset of `0..p` by a seeded partial Fisher–Yates shuffle.
pub fn random_support(p: usize, k: usize, seed: u64) -> Result<SupportSet> {
    if k > p {
        return Err(Error::InvalidSpec(format!("k = {k} exceeds p = {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..p).collect();
    for i in 0..k {
        let j = rng.random_range(i..p);
        idx.swap(i, j);
    }
    idx.truncate(k);
    SupportSet::new(idx, p)
}
