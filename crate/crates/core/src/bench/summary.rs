//! Grouped means and paired differences of trial results.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::TrialResult;
use crate::error::{Error, Result};

/// Prefixes of the tables written by [`write_summary`].
pub const SUMMARY_FILES: [&str; 3] = ["tpr", "iterations", "paired"];

/// Mean and standard error of the mean (0 for a single value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(v: &[f64]) -> Stat {
        let m = v.len() as f64;
        let mean = v.iter().sum::<f64>() / m;
        let se = if v.len() > 1 {
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        } else {
            0.0
        };
        Stat { mean, se }
    }
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(v: &[f64]) -> Quartiles {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let at = |q: f64| {
            let h = q * (s.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            s[lo] + (h - lo as f64) * (s[hi] - s[lo])
        };
        Quartiles {
            min: s[0],
            q1: at(0.25),
            median: at(0.5),
            q3: at(0.75),
            max: s[s.len() - 1],
        }
    }
}

/// Aggregates for one `(a, n, solver)` group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub a: Option<f64>,
    pub n: usize,
    pub solver_index: usize,
    pub solver: String,
    pub wrapped: bool,
    pub trials: usize,
    pub base_tpr: Stat,
    pub tpr: Stat,
    pub base_loss: Stat,
    pub loss: Stat,
    pub swap_iterations: Stat,
    pub iterations_range: (usize, usize),
    /// Per-trial `tpr − base_tpr` on the same instance.
    pub paired_diff: Stat,
    pub paired_quartiles: Quartiles,
}

/// Groups rows by `(a, n, solver)` in index order.
pub fn summarize(rows: &[TrialResult]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, usize, usize), Vec<&TrialResult>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.a_index, r.n_index, r.solver_index)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let col = |f: &dyn Fn(&TrialResult) -> f64| g.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let diffs = col(&|r| r.tpr - r.base_tpr);
            let iters: Vec<usize> = g.iter().map(|r| r.swap_iterations).collect();
            SummaryRow {
                a: g[0].a,
                n: g[0].n,
                solver_index: g[0].solver_index,
                solver: g[0].solver.clone(),
                wrapped: g[0].wrapped,
                trials: g.len(),
                base_tpr: Stat::of(&col(&|r| r.base_tpr)),
                tpr: Stat::of(&col(&|r| r.tpr)),
                base_loss: Stat::of(&col(&|r| r.base_loss)),
                loss: Stat::of(&col(&|r| r.loss)),
                swap_iterations: Stat::of(&col(&|r| r.swap_iterations as f64)),
                iterations_range: (
                    *iters.iter().min().expect("non-empty group"),
                    *iters.iter().max().expect("non-empty group"),
                ),
                paired_quartiles: Quartiles::of(&diffs),
                paired_diff: Stat::of(&diffs),
            }
        })
        .collect()
}

/// Parses a results file written by the runner.
pub fn read_results(path: &Path) -> Result<Vec<TrialResult>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            row: i + 1,
            col: e.column(),
            msg: e.to_string(),
        })?);
    }
    Ok(rows)
}

fn fmt_a(a: Option<f64>) -> String {
    a.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn write_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `tpr-<tag>.csv` (mean TPR by `a` and `n`), `iterations-<tag>.csv`
/// and `paired-<tag>.csv` (box-plot data of wrapped minus base TPR).
pub fn write_summary(dir: &Path, tag: &str, summary: &[SummaryRow]) -> Result<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = SUMMARY_FILES.iter().map(|f| dir.join(format!("{f}-{tag}.csv"))).collect();
    let key = |s: &SummaryRow| vec![fmt_a(s.a), s.n.to_string(), s.solver.clone(), s.wrapped.to_string(), s.trials.to_string()];
    write_table(
        &paths[0],
        &["a", "n", "solver", "wrapped", "trials", "base_tpr_mean", "base_tpr_se", "tpr_mean", "tpr_se", "base_loss_mean", "loss_mean"],
        summary.iter().map(|s| {
            let mut r = key(s);
            for v in [s.base_tpr.mean, s.base_tpr.se, s.tpr.mean, s.tpr.se, s.base_loss.mean, s.loss.mean] {
                r.push(format!("{v:?}"));
            }
            r
        }),
    )?;
    write_table(
        &paths[1],
        &["a", "n", "solver", "wrapped", "trials", "iterations_mean", "iterations_se", "iterations_min", "iterations_max"],
        summary.iter().map(|s| {
            let mut r = key(s);
            r.push(format!("{:?}", s.swap_iterations.mean));
            r.push(format!("{:?}", s.swap_iterations.se));
            r.push(s.iterations_range.0.to_string());
            r.push(s.iterations_range.1.to_string());
            r
        }),
    )?;
    write_table(
        &paths[2],
        &["a", "n", "solver", "wrapped", "trials", "diff_mean", "diff_se", "min", "q1", "median", "q3", "max"],
        summary.iter().map(|s| {
            let mut r = key(s);
            let q = s.paired_quartiles;
            for v in [s.paired_diff.mean, s.paired_diff.se, q.min, q.q1, q.median, q.q3, q.max] {
                r.push(format!("{v:?}"));
            }
            r
        }),
    )?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SupportSet;

    fn row(a_index: usize, solver_index: usize, trial: usize, base: f64, tpr: f64, iters: usize) -> TrialResult {
        let s = SupportSet::new([0], 4).unwrap();
        TrialResult {
            config_hash: "x".into(),
            a_index,
            a: Some(0.5 + a_index as f64 / 10.0),
            n_index: 0,
            n: 10,
            p: 4,
            k: 1,
            trial,
            solver_index,
            solver: format!("s{solver_index}"),
            wrapped: true,
            instance_seed: 0,
            s_star: s.clone(),
            base_support: s.clone(),
            base_tpr: base,
            base_loss: 1.0,
            support: s,
            tpr,
            loss: 0.5,
            swap_iterations: iters,
            swap_converged: true,
            notes: Default::default(),
            wall_time_ms: None,
        }
    }

    #[test]
    fn single_trial_mean() {
        let s = summarize(&[row(0, 0, 0, 0.4, 0.8, 3)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].tpr, Stat { mean: 0.8, se: 0.0 });
        assert_eq!(s[0].swap_iterations.mean, 3.0);
    }

    #[test]
    fn self_difference_is_zero() {
        let rows: Vec<_> = (0..5).map(|t| row(0, 0, t, 0.2 * t as f64, 0.2 * t as f64, 0)).collect();
        let s = &summarize(&rows)[0];
        assert_eq!(s.paired_diff.mean, 0.0);
        let q = s.paired_quartiles;
        assert!([q.min, q.q1, q.median, q.q3, q.max].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn means_match_recomputation() {
        let mut rows = Vec::new();
        for a in 0..2 {
            for sv in 0..3 {
                for t in 0..7 {
                    let b = ((a * 31 + sv * 7 + t * 3) % 10) as f64 / 10.0;
                    let w = ((a * 13 + sv * 5 + t * 11) % 10) as f64 / 10.0;
                    rows.push(row(a, sv, t, b, w, t + sv));
                }
            }
        }
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 6);
        for s in &summary {
            let g: Vec<&TrialResult> = rows
                .iter()
                .filter(|r| r.a == s.a && r.solver_index == s.solver_index)
                .collect();
            let mean = |f: fn(&TrialResult) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / g.len() as f64;
            assert!((s.tpr.mean - mean(|r| r.tpr)).abs() < 1e-15);
            assert!((s.base_tpr.mean - mean(|r| r.base_tpr)).abs() < 1e-15);
            assert!((s.paired_diff.mean - mean(|r| r.tpr - r.base_tpr)).abs() < 1e-15);
            assert!((s.swap_iterations.mean - mean(|r| r.swap_iterations as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn quartiles_interpolate() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let q = Quartiles::of(&[1.0, 2.0]);
        assert_eq!((q.q1, q.median, q.q3), (1.25, 1.5, 1.75));
    }

    #[test]
    fn standard_error() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        // sample variance 5/3, se = sqrt(5/12)
        assert!((s.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quartiles_are_ordered_and_bracket_the_mean(v in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
                let q = Quartiles::of(&v);
                prop_assert!(q.min <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= q.max);
                let s = Stat::of(&v);
                prop_assert!(q.min - 1e-9 <= s.mean && s.mean <= q.max + 1e-9);
                prop_assert!(s.se >= 0.0);
            }
        }
    }
}
