//! Supports of increasing size, each refined by swapping.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{thread_pool, tpr, write_jsonl, ErrorRow, ExperimentConfig, Workspace};
use crate::error::{Error, Result};
use crate::linalg::{fit_support, DesignMatrix, SupportSet};
use crate::solvers::SolverChoice;
use crate::swap::{swap_m_run, SwapOptions, SwapTrace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub k: usize,
    pub base_support: SupportSet,
    pub base_loss: f64,
    pub base_tpr: Option<f64>,
    pub support: SupportSet,
    pub loss: f64,
    pub tpr: Option<f64>,
    pub swap_iterations: usize,
}

/// For `k' = 1..=k_max`: the solver's size-`k'` support and its swap
/// refinement. The refinement also starts from the previous refined support
/// plus its best single addition and keeps whichever run ends lower, so the
/// refined losses never increase with `k'`.
pub fn solution_path_mode(
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    k_max: usize,
    solver: &SolverChoice,
    s_star: Option<&SupportSet>,
    swap: &SwapOptions,
    seed: u64,
) -> Result<Vec<PathRow>> {
    let limit = x.n().min(x.p());
    if k_max == 0 || k_max > limit {
        return Err(Error::InvalidSpec(format!("k_max must lie in 1..={limit}, got {k_max}")));
    }
    let rate = |s: &SupportSet| s_star.map(|t| tpr(s, t)).transpose();
    let mut rows: Vec<PathRow> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let base = solver.solve(y, x, k, seed)?.support;
        let base_loss = fit_support(y, x, &base)?.loss();
        let mut best: SwapTrace = swap_m_run(y, x, &base, swap)?;
        if let Some(prev) = rows.last() {
            let fit = fit_support(y, x, &prev.support)?;
            let add = prev
                .support
                .complement(x.p())
                .into_iter()
                .map(|j| (fit.loss_with_added(x, &[j]), j))
                .filter(|(l, _)| l.is_finite())
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, j)) = add {
                let grown = prev.support.swapped(&[], &[j]);
                let alt = swap_m_run(y, x, &grown, swap)?;
                if alt.final_loss() < best.final_loss() {
                    best = alt;
                }
            }
        }
        let support = best.final_support().clone();
        rows.push(PathRow {
            k,
            base_tpr: rate(&base)?,
            base_support: base,
            base_loss,
            tpr: rate(&support)?,
            support,
            loss: best.final_loss(),
            swap_iterations: best.swaps(),
        });
    }
    Ok(rows)
}

/// One path row tagged with its cell and solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub config_hash: String,
    pub a_index: usize,
    pub a: Option<f64>,
    pub n_index: usize,
    pub n: usize,
    pub trial: usize,
    pub solver_index: usize,
    pub solver: String,
    #[serde(flatten)]
    pub row: PathRow,
}

/// Runs [`solution_path_mode`] for every cell and solver of `cfg`.
pub fn run_path_mode(
    cfg: &ExperimentConfig,
    k_max: usize,
    threads: Option<usize>,
) -> Result<(Vec<PathResult>, Vec<ErrorRow>)> {
    cfg.validate()?;
    let ws = Workspace::prepare(cfg)?;
    let hash = cfg.hash();
    let cells = cfg.cells();
    let pool = thread_pool(threads)?;
    let parts: Vec<(Vec<PathResult>, Vec<ErrorRow>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let mut rows = Vec::new();
                let mut errors = Vec::new();
                let err = |si: Option<usize>, e: Error| ErrorRow {
                    a_index: cell.a_index,
                    n_index: cell.n_index,
                    trial: cell.trial,
                    solver_index: si,
                    solver: si.map(|i| cfg.solvers[i].solver.name().to_string()),
                    error: e.to_string(),
                };
                let inst = match ws.instance(cfg, cell) {
                    Ok(i) => i,
                    Err(e) => {
                        errors.push(err(None, e));
                        return (rows, errors);
                    }
                };
                for (si, entry) in cfg.solvers.iter().enumerate() {
                    let seed = cfg.solver_seed(cell, si);
                    match solution_path_mode(inst.y.view(), &inst.x, k_max, &entry.solver, Some(&inst.s_star), &cfg.swap, seed) {
                        Ok(path) => rows.extend(path.into_iter().map(|row| PathResult {
                            config_hash: hash.clone(),
                            a_index: cell.a_index,
                            a: cell.a,
                            n_index: cell.n_index,
                            n: inst.x.n(),
                            trial: cell.trial,
                            solver_index: si,
                            solver: entry.solver.name().to_string(),
                            row,
                        })),
                        Err(e) => errors.push(err(Some(si), e)),
                    }
                }
                (rows, errors)
            })
            .collect()
    });
    let (mut rows, mut errors) = (Vec::new(), Vec::new());
    for (r, e) in parts {
        rows.extend(r);
        errors.extend(e);
    }
    Ok((rows, errors))
}

/// Writes `path-<tag>.jsonl` and `path-summary-<tag>.csv` (mean TPR per
/// `k'`, before and after swapping).
pub fn write_path(dir: &Path, tag: &str, rows: &[PathResult], errors: &[ErrorRow]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let jsonl = dir.join(format!("path-{tag}.jsonl"));
    let errs = dir.join(format!("path-errors-{tag}.jsonl"));
    let table = dir.join(format!("path-summary-{tag}.csv"));
    write_jsonl(&jsonl, rows)?;
    write_jsonl(&errs, errors)?;
    let mut groups: BTreeMap<(usize, usize, usize, usize), Vec<&PathResult>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.a_index, r.n_index, r.solver_index, r.row.k))
            .or_default()
            .push(r);
    }
    let io = |e: csv::Error| Error::Io(e.into());
    let mut w = csv::Writer::from_path(&table).map_err(io)?;
    w.write_record(["a", "n", "solver", "k", "trials", "base_tpr_mean", "tpr_mean", "loss_mean"])
        .map_err(io)?;
    for g in groups.values() {
        let m = g.len() as f64;
        let mean = |f: &dyn Fn(&PathResult) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / m;
        w.write_record([
            g[0].a.map(|a| format!("{a:?}")).unwrap_or_default(),
            g[0].n.to_string(),
            g[0].solver.clone(),
            g[0].row.k.to_string(),
            g.len().to_string(),
            format!("{:?}", mean(&|r| r.row.base_tpr.unwrap_or(f64::NAN))),
            format!("{:?}", mean(&|r| r.row.tpr.unwrap_or(f64::NAN))),
            format!("{:?}", mean(&|r| r.row.loss)),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(vec![jsonl, errs, table])
}
