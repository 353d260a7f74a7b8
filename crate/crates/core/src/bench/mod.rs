//! Experiment runner: sweeps over correlation and sample size, runs solver
//! ensembles with and without swap refinement, and persists the results.

mod path;
mod summary;

pub use path::{run_path_mode, solution_path_mode, write_path, PathResult, PathRow};
pub use summary::{
    read_results, summarize, write_summary, Quartiles, Stat, SummaryRow, SUMMARY_FILES,
};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{
    derive_seed, exact_gram_design, instance_from_design, instance_with_beta, place_support, synthesize_scaled,
    CovarianceSpec, SupportLayout, SyntheticInstance, SEED_SUPPORT,
};
use crate::error::{Error, Result};
use crate::ingest::{cluster_support, kmeans_columns, load_matrix_csv, write_matrix_csv, MatrixFile};
use crate::linalg::{fit_support, DesignMatrix, SupportSet};
use crate::solvers::{SolverChoice, SolverNotes};
use crate::swap::{swap_m_run, SwapOptions};

const TAG_INSTANCE: u64 = 0x1157;
const TAG_SOLVER: u64 = 0x501e;
const TAG_KMEANS: u64 = 0x6b6d;

/// Fraction of the true support recovered: `|Ŝ ∩ S*| / |S*|`.
pub fn tpr(s_hat: &SupportSet, s_star: &SupportSet) -> Result<f64> {
    if s_star.is_empty() {
        return Err(Error::EmptyTrueSupport);
    }
    Ok(s_hat.intersection_len(s_star) as f64 / s_star.len() as f64)
}

fn default_one() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_kmeans_iter() -> usize {
    100
}
fn default_layout() -> SupportLayout {
    SupportLayout::OnePerBlock
}

/// Where the design matrices come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSource {
    /// Equicorrelated blocks; `a` comes from the grid. Blocks default to
    /// size `p / k`.
    Block {
        p: usize,
        #[serde(default)]
        block_size: Option<usize>,
        #[serde(default = "default_layout")]
        layout: SupportLayout,
    },
    Identity { p: usize },
    /// The bordered covariance with support on the first `k` variables.
    /// With `exact_gram` the design is `√p·Σ^{1/2}` and `n_grid` must be
    /// empty.
    Example44 {
        p: usize,
        #[serde(default = "default_true")]
        exact_gram: bool,
        /// All active coefficients share the sign `+`, which is what
        /// lets the bordered variable mislead the Lasso.
        #[serde(default = "default_true")]
        same_sign: bool,
    },
    /// A matrix on disk; supports are drawn from k-means clusters of its
    /// columns.
    Csv {
        file: MatrixFile,
        n_clusters: usize,
        clusters_to_pick: usize,
        per_cluster: usize,
        #[serde(default = "default_kmeans_iter")]
        kmeans_max_iter: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub solver: SolverChoice,
    /// Refine the solver's support with swapping.
    #[serde(default = "default_true")]
    pub wrap: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Record wall-clock time per row. Off by default because it makes
    /// result files differ between runs.
    #[serde(default)]
    pub timing: bool,
}

/// A sweep over `a_grid × n_grid × trials × solvers`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub k: usize,
    #[serde(default = "default_one")]
    pub sigma: f64,
    /// Magnitude of the nonzero coefficients.
    #[serde(default = "default_one")]
    pub beta_min: f64,
    pub trials: usize,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub a_grid: Vec<f64>,
    pub design: DesignSource,
    pub solvers: Vec<SolverEntry>,
    #[serde(default)]
    pub swap: SwapOptions,
    #[serde(default)]
    pub output: OutputOptions,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return bad("at least one solver is required".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be finite and non-negative, got {}", self.sigma));
        }
        if !(self.beta_min > 0.0 && self.beta_min.is_finite()) {
            return bad(format!("beta_min must be positive, got {}", self.beta_min));
        }
        for e in &self.solvers {
            e.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        self.swap.validate().map_err(|e| Error::Config(e.to_string()))?;
        let needs_a = matches!(self.design, DesignSource::Block { .. } | DesignSource::Example44 { .. });
        let needs_n = !matches!(
            self.design,
            DesignSource::Csv { .. } | DesignSource::Example44 { exact_gram: true, .. }
        );
        if needs_a == self.a_grid.is_empty() {
            return bad(if needs_a {
                "a_grid must be non-empty for this design".into()
            } else {
                "a_grid must be empty for this design".into()
            });
        }
        if needs_n == self.n_grid.is_empty() {
            return bad(if needs_n {
                "n_grid must be non-empty for this design".into()
            } else {
                "n_grid must be empty for this design".into()
            });
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < self.k) {
            return bad(format!("n = {n} is smaller than k = {}", self.k));
        }
        for (idx, &a) in self.a_grid.iter().enumerate() {
            let spec = self.covariance(idx)?.expect("a-grid designs have a covariance");
            spec.validate().map_err(|e| Error::Config(format!("a = {a}: {e}")))?;
        }
        match &self.design {
            DesignSource::Block { p, layout, .. } => {
                let spec = self.covariance(0)?.expect("block design");
                place_support(&spec, self.k, layout, 0)
                    .map_err(|e| Error::Config(format!("support layout: {e}")))?;
                if self.k > *p {
                    return bad(format!("k = {} exceeds p = {p}", self.k));
                }
            }
            DesignSource::Identity { p } | DesignSource::Example44 { p, .. } if self.k > *p => {
                return bad(format!("k = {} exceeds p = {p}", self.k));
            }
            DesignSource::Csv {
                n_clusters,
                clusters_to_pick,
                per_cluster,
                ..
            } => {
                if clusters_to_pick * per_cluster != self.k {
                    return bad(format!(
                        "{clusters_to_pick} clusters × {per_cluster} per cluster ≠ k = {}",
                        self.k
                    ));
                }
                if *n_clusters == 0 || clusters_to_pick > n_clusters {
                    return bad(format!("cannot pick {clusters_to_pick} of {n_clusters} clusters"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn covariance(&self, a_idx: usize) -> Result<Option<CovarianceSpec>> {
        let a = self.a_grid.get(a_idx).copied();
        Ok(match (&self.design, a) {
            (DesignSource::Block { p, block_size, .. }, Some(a)) => {
                let bs = match block_size {
                    Some(b) => *b,
                    None if p % self.k == 0 => p / self.k,
                    None => {
                        return Err(Error::Config(format!(
                            "p = {p} is not divisible by k = {}; set block_size",
                            self.k
                        )))
                    }
                };
                Some(CovarianceSpec::BlockDiagonal { p: *p, block_size: bs, a })
            }
            (DesignSource::Identity { p }, _) => Some(CovarianceSpec::Identity { p: *p }),
            (DesignSource::Example44 { p, .. }, Some(a)) => {
                Some(CovarianceSpec::Example44 { p: *p, k: self.k, a })
            }
            _ => None,
        })
    }

    /// Hex digest of the canonical JSON form, excluding output settings.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output = OutputOptions::default();
        let json = serde_json::to_string(&canon).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    fn a_values(&self) -> Vec<Option<f64>> {
        if self.a_grid.is_empty() {
            vec![None]
        } else {
            self.a_grid.iter().map(|&a| Some(a)).collect()
        }
    }

    fn n_values(&self) -> Vec<Option<usize>> {
        if self.n_grid.is_empty() {
            vec![None]
        } else {
            self.n_grid.iter().map(|&n| Some(n)).collect()
        }
    }

    /// Every `(a, n, trial)` cell in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (a_index, a) in self.a_values().into_iter().enumerate() {
            for (n_index, n) in self.n_values().into_iter().enumerate() {
                for trial in 0..self.trials {
                    out.push(Cell {
                        a_index,
                        a,
                        n_index,
                        n,
                        trial,
                    });
                }
            }
        }
        out
    }

    /// Instance seeds ignore the `a` index, so every correlation level sees
    /// the same underlying normals, supports and signs.
    pub fn instance_seed(&self, cell: &Cell) -> u64 {
        derive_seed(self.master_seed, &[TAG_INSTANCE, cell.n_index as u64, cell.trial as u64])
    }

    /// Also independent of `a`, so random starts and CV folds are shared
    /// across correlation levels.
    pub fn solver_seed(&self, cell: &Cell, solver_index: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &[TAG_SOLVER, cell.n_index as u64, cell.trial as u64, solver_index as u64],
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub a_index: usize,
    pub a: Option<f64>,
    pub n_index: usize,
    pub n: Option<usize>,
    pub trial: usize,
}

/// Loaded once per experiment for file-backed designs.
pub struct Workspace {
    fixed: Option<(DesignMatrix, Vec<usize>)>,
}

impl Workspace {
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        let fixed = match &cfg.design {
            DesignSource::Csv {
                file,
                n_clusters,
                kmeans_max_iter,
                ..
            } => {
                let x = load_matrix_csv(file)?;
                if x.n() < cfg.k {
                    return Err(Error::Config(format!("n = {} is smaller than k = {}", x.n(), cfg.k)));
                }
                let km = kmeans_columns(
                    &x,
                    *n_clusters,
                    derive_seed(cfg.master_seed, &[TAG_KMEANS]),
                    *kmeans_max_iter,
                )?;
                Some((x, km.labels))
            }
            _ => None,
        };
        Ok(Workspace { fixed })
    }

    /// Cluster labels of a file-backed design.
    pub fn labels(&self) -> Option<&[usize]> {
        self.fixed.as_ref().map(|(_, l)| l.as_slice())
    }

    pub fn instance(&self, cfg: &ExperimentConfig, cell: &Cell) -> Result<SyntheticInstance> {
        let seed = cfg.instance_seed(cell);
        let support_seed = derive_seed(seed, &[SEED_SUPPORT]);
        match &cfg.design {
            DesignSource::Block { .. } | DesignSource::Identity { .. } => {
                let spec = cfg.covariance(cell.a_index)?.expect("synthetic design");
                let layout = match &cfg.design {
                    DesignSource::Block { layout, .. } => layout.clone(),
                    _ => SupportLayout::OnePerBlock,
                };
                let n = cell.n.expect("n grid is set");
                synthesize_scaled(&spec, n, cfg.k, cfg.sigma, cfg.beta_min, &layout, seed)
            }
            DesignSource::Example44 {
                exact_gram, same_sign, ..
            } => {
                let spec = cfg.covariance(cell.a_index)?.expect("bordered design");
                let mut inst = if *exact_gram {
                    let x = exact_gram_design(&spec)?;
                    let s = place_support(&spec, cfg.k, &SupportLayout::Leading, support_seed)?;
                    instance_from_design(x, s, cfg.beta_min, cfg.sigma, seed)?
                } else {
                    let n = cell.n.expect("n grid is set");
                    synthesize_scaled(&spec, n, cfg.k, cfg.sigma, cfg.beta_min, &SupportLayout::Leading, seed)?
                };
                if *same_sign {
                    let mut beta = inst.beta_star.clone();
                    beta.values.mapv_inplace(f64::abs);
                    inst = instance_with_beta(inst.x, beta, cfg.sigma, seed)?;
                }
                inst.spec = Some(spec);
                Ok(inst)
            }
            DesignSource::Csv {
                clusters_to_pick,
                per_cluster,
                ..
            } => {
                let (x, labels) = self.fixed.as_ref().expect("workspace prepared for csv design");
                let s = cluster_support(labels, *clusters_to_pick, *per_cluster, support_seed)?;
                instance_from_design(x.clone(), s, cfg.beta_min, cfg.sigma, seed)
            }
        }
    }
}

/// One `(a, n, trial, solver)` outcome. `base_*` describe the solver's own
/// support; the unprefixed fields describe the reported estimate, which is
/// the swap-refined support when `wrapped` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub config_hash: String,
    pub a_index: usize,
    pub a: Option<f64>,
    pub n_index: usize,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub trial: usize,
    pub solver_index: usize,
    pub solver: String,
    pub wrapped: bool,
    pub instance_seed: u64,
    pub s_star: SupportSet,
    pub base_support: SupportSet,
    pub base_tpr: f64,
    pub base_loss: f64,
    pub support: SupportSet,
    pub tpr: f64,
    pub loss: f64,
    pub swap_iterations: usize,
    pub swap_converged: bool,
    #[serde(default)]
    pub notes: SolverNotes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl TrialResult {
    fn key(&self) -> (usize, usize, usize, usize) {
        (self.a_index, self.n_index, self.trial, self.solver_index)
    }
}

/// A row that could not be produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub a_index: usize,
    pub n_index: usize,
    pub trial: usize,
    /// Absent when the instance itself failed.
    pub solver_index: Option<usize>,
    pub solver: Option<String>,
    pub error: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<TrialResult>,
    pub errors: Vec<ErrorRow>,
}

/// Runs one solver on an instance and optionally refines it.
pub fn run_solver(
    inst: &SyntheticInstance,
    entry: &SolverEntry,
    k: usize,
    swap: &SwapOptions,
    seed: u64,
) -> Result<(crate::solvers::SolverOutput, SupportSet, f64, f64, usize, bool)> {
    let y: ArrayView1<'_, f64> = inst.y.view();
    let out = entry.solver.solve(y, &inst.x, k, seed)?;
    let base_loss = fit_support(y, &inst.x, &out.support)?.loss();
    if !entry.wrap {
        let s = out.support.clone();
        return Ok((out, s, base_loss, base_loss, 0, true));
    }
    let trace = swap_m_run(y, &inst.x, &out.support, swap)?;
    let s = trace.final_support().clone();
    Ok((out, s, base_loss, trace.final_loss(), trace.swaps(), trace.converged))
}

fn run_cell(
    cfg: &ExperimentConfig,
    ws: &Workspace,
    hash: &str,
    cell: &Cell,
) -> (Vec<TrialResult>, Vec<ErrorRow>) {
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let inst = match ws.instance(cfg, cell) {
        Ok(i) => i,
        Err(e) => {
            errors.push(ErrorRow {
                a_index: cell.a_index,
                n_index: cell.n_index,
                trial: cell.trial,
                solver_index: None,
                solver: None,
                error: e.to_string(),
            });
            return (rows, errors);
        }
    };
    for (si, entry) in cfg.solvers.iter().enumerate() {
        let start = Instant::now();
        let res = run_solver(&inst, entry, cfg.k, &cfg.swap, cfg.solver_seed(cell, si)).and_then(
            |(out, support, base_loss, loss, iters, conv)| {
                Ok(TrialResult {
                    config_hash: hash.to_string(),
                    a_index: cell.a_index,
                    a: cell.a,
                    n_index: cell.n_index,
                    n: inst.x.n(),
                    p: inst.x.p(),
                    k: cfg.k,
                    trial: cell.trial,
                    solver_index: si,
                    solver: entry.solver.name().to_string(),
                    wrapped: entry.wrap,
                    instance_seed: inst.seed,
                    s_star: inst.s_star.clone(),
                    base_tpr: tpr(&out.support, &inst.s_star)?,
                    base_support: out.support,
                    base_loss,
                    tpr: tpr(&support, &inst.s_star)?,
                    support,
                    loss,
                    swap_iterations: iters,
                    swap_converged: conv,
                    notes: out.notes,
                    wall_time_ms: cfg
                        .output
                        .timing
                        .then(|| start.elapsed().as_secs_f64() * 1e3),
                })
            },
        );
        match res {
            Ok(r) => rows.push(r),
            Err(e) => errors.push(ErrorRow {
                a_index: cell.a_index,
                n_index: cell.n_index,
                trial: cell.trial,
                solver_index: Some(si),
                solver: Some(entry.solver.name().to_string()),
                error: e.to_string(),
            }),
        }
    }
    (rows, errors)
}

/// Builds a pool with `threads` workers, or rayon's default when `None` or 0.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads.filter(|&t| t > 0) {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every cell and solver. Per-row failures are collected, not fatal.
/// Rows come back sorted by `(a, n, trial, solver)` whatever the schedule.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let ws = Workspace::prepare(cfg)?;
    let hash = cfg.hash();
    let cells = cfg.cells();
    let pool = thread_pool(threads)?;
    let parts: Vec<(Vec<TrialResult>, Vec<ErrorRow>)> =
        pool.install(|| cells.par_iter().map(|c| run_cell(cfg, &ws, &hash, c)).collect());
    let mut out = ExperimentOutput::default();
    for (r, e) in parts {
        out.rows.extend(r);
        out.errors.extend(e);
    }
    out.rows.sort_by_key(TrialResult::key);
    out.errors
        .sort_by_key(|e| (e.a_index, e.n_index, e.trial, e.solver_index));
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Files written by [`write_experiment`].
#[derive(Clone, Debug)]
pub struct WrittenFiles {
    pub results: PathBuf,
    pub errors: PathBuf,
    pub summaries: Vec<PathBuf>,
}

/// Writes `results-<hash>.jsonl`, `errors-<hash>.jsonl` and the summary
/// tables into `dir`.
pub fn write_experiment(cfg: &ExperimentConfig, out: &ExperimentOutput, dir: &Path) -> Result<WrittenFiles> {
    std::fs::create_dir_all(dir)?;
    let hash = cfg.hash();
    let results = dir.join(format!("results-{hash}.jsonl"));
    let errors = dir.join(format!("errors-{hash}.jsonl"));
    write_jsonl(&results, &out.rows)?;
    write_jsonl(&errors, &out.errors)?;
    let summaries = write_summary(dir, &hash, &summarize(&out.rows))?;
    Ok(WrittenFiles {
        results,
        errors,
        summaries,
    })
}

#[derive(Serialize)]
struct InstanceMeta<'a> {
    a: Option<f64>,
    n: usize,
    p: usize,
    trial: usize,
    seed: u64,
    sigma: f64,
    s_star: &'a SupportSet,
    beta_star: Vec<f64>,
    spec: &'a Option<CovarianceSpec>,
}

/// Writes each instance as `X.csv`, `y.csv` and `instance.json` under
/// `dir/a<i>_n<j>_t<trial>/`.
pub fn generate_instances(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let ws = Workspace::prepare(cfg)?;
    let mut written = Vec::new();
    for cell in cfg.cells() {
        let inst = ws.instance(cfg, &cell)?;
        let sub = dir.join(format!("a{}_n{}_t{}", cell.a_index, cell.n_index, cell.trial));
        std::fs::create_dir_all(&sub)?;
        write_matrix_csv(&sub.join("X.csv"), inst.x.data())?;
        let y = inst.y.clone().into_shape_with_order((inst.y.len(), 1)).expect("column vector");
        write_matrix_csv(&sub.join("y.csv"), &y)?;
        let meta = InstanceMeta {
            a: cell.a,
            n: inst.x.n(),
            p: inst.x.p(),
            trial: cell.trial,
            seed: inst.seed,
            sigma: inst.sigma,
            s_star: &inst.s_star,
            beta_star: inst.beta_star.values.to_vec(),
            spec: &inst.spec,
        };
        std::fs::write(sub.join("instance.json"), serde_json::to_string_pretty(&meta)?)?;
        written.push(sub);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::brute_force_best;

    fn tiny(solvers: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
master_seed = 7
k = 2
sigma = 0.0
trials = 3
n_grid = [10]
a_grid = [0.5]
design = {{ kind = "block", p = 8, block_size = 4 }}
{solvers}
"#
        ))
        .unwrap()
    }

    #[test]
    fn tpr_examples() {
        let s = |v: &[usize]| SupportSet::new(v.iter().copied(), 10).unwrap();
        assert_eq!(tpr(&s(&[1, 2, 3]), &s(&[1, 2, 3])).unwrap(), 1.0);
        assert!((tpr(&s(&[1, 2, 4]), &s(&[1, 2, 3])).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(tpr(&s(&[5, 6]), &s(&[1, 2])).unwrap(), 0.0);
        assert!(matches!(tpr(&s(&[1]), &SupportSet::empty()), Err(Error::EmptyTrueSupport)));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let base = r#"
master_seed = 1
k = 2
trials = 1
n_grid = [10]
a_grid = [0.5]
design = { kind = "block", p = 8 }
solvers = [{ solver = { kind = "MaR" } }]
"#;
        assert!(ExperimentConfig::from_toml(base).is_ok());
        assert!(ExperimentConfig::from_toml(&format!("{base}\nbogus = 3\n")).is_err());
        let bad_design = base.replace("p = 8 }", "p = 8, q = 1 }");
        assert!(ExperimentConfig::from_toml(&bad_design).is_err());
        let no_trials = base.replace("trials = 1", "trials = 0");
        assert!(matches!(ExperimentConfig::from_toml(&no_trials), Err(Error::Config(_))));
        let no_grid = base.replace("a_grid = [0.5]", "a_grid = []");
        assert!(ExperimentConfig::from_toml(&no_grid).is_err());
        let indivisible = base.replace("p = 8", "p = 9");
        assert!(ExperimentConfig::from_toml(&indivisible).is_err());
    }

    #[test]
    fn swap_never_hurts_random_start() {
        let cfg = tiny("solvers = [{ solver = { kind = \"Random\" } }]");
        let out = run_experiment(&cfg, Some(1)).unwrap();
        assert!(out.errors.is_empty());
        assert_eq!(out.rows.len(), 3);
        let ws = Workspace::prepare(&cfg).unwrap();
        for (row, cell) in out.rows.iter().zip(cfg.cells()) {
            assert!(row.tpr >= row.base_tpr);
            assert!(row.loss <= row.base_loss);
            // noiseless and p = 8: the optimum is S* itself
            let inst = ws.instance(&cfg, &cell).unwrap();
            let (best, _) = brute_force_best(&inst.y, &inst.x, 2);
            assert_eq!(best, inst.s_star);
        }
    }

    #[test]
    fn rows_and_counts() {
        let cfg = tiny(
            r#"solvers = [
  { solver = { kind = "MaR" }, wrap = false },
  { solver = { kind = "FoBa" } },
  { solver = { kind = "CoSaMP" } },
]"#,
        );
        let out = run_experiment(&cfg, Some(2)).unwrap();
        // CoSaMP needs 2k ≤ n, which holds here
        assert_eq!(out.rows.len() + out.errors.len(), 3 * 3);
        for r in &out.rows {
            if !r.wrapped {
                assert_eq!(r.support, r.base_support);
                assert_eq!(r.swap_iterations, 0);
            }
            let recomputed = tpr(&r.support, &r.s_star).unwrap();
            assert_eq!(recomputed, r.tpr);
        }
        let keys: Vec<_> = out.rows.iter().map(TrialResult::key).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn common_random_numbers_across_a() {
        let cfg = ExperimentConfig::from_toml(
            r#"
master_seed = 3
k = 2
trials = 2
n_grid = [12]
a_grid = [0.3, 0.7]
design = { kind = "block", p = 8 }
solvers = [{ solver = { kind = "MaR" } }]
"#,
        )
        .unwrap();
        let ws = Workspace::prepare(&cfg).unwrap();
        let cells = cfg.cells();
        let lo = ws.instance(&cfg, &cells[0]).unwrap();
        let hi = ws.instance(&cfg, &cells[2]).unwrap();
        assert_eq!(cells[2].a_index, 1);
        assert_eq!(lo.s_star, hi.s_star);
        assert_eq!(lo.beta_star.values, hi.beta_star.values);
        assert_ne!(lo.x.data(), hi.x.data());
    }

    #[test]
    fn hash_ignores_output_section() {
        let mut cfg = tiny("solvers = [{ solver = { kind = \"MaR\" } }]");
        let h = cfg.hash();
        cfg.output.dir = Some("elsewhere".into());
        cfg.output.timing = true;
        assert_eq!(cfg.hash(), h);
        cfg.trials += 1;
        assert_ne!(cfg.hash(), h);
    }

    #[test]
    fn written_files_are_identical_across_runs() {
        let cfg = tiny("solvers = [{ solver = { kind = \"TLasso\", folds = 2 } }, { solver = { kind = \"Random\" } }]");
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let f1 = write_experiment(&cfg, &run_experiment(&cfg, Some(1)).unwrap(), d1.path()).unwrap();
        let f2 = write_experiment(&cfg, &run_experiment(&cfg, Some(3)).unwrap(), d2.path()).unwrap();
        assert_eq!(std::fs::read(&f1.results).unwrap(), std::fs::read(&f2.results).unwrap());
        let back = read_results(&f1.results).unwrap();
        assert_eq!(back.len(), 6);
        assert!(f1.results.file_name().unwrap().to_str().unwrap().contains(&cfg.hash()));
    }

    #[test]
    fn generate_writes_instances() {
        let cfg = tiny("solvers = [{ solver = { kind = \"MaR\" } }]");
        let d = tempfile::tempdir().unwrap();
        let dirs = generate_instances(&cfg, d.path()).unwrap();
        assert_eq!(dirs.len(), 3);
        let x = crate::ingest::read_matrix_csv(&MatrixFile::new(dirs[0].join("X.csv"))).unwrap();
        assert_eq!(x.dim(), (10, 8));
    }
}
