//! The swap iterations and their group generalization.

use std::cmp::Ordering;

use itertools::Itertools;
use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{commit, fit_support, ActiveFit, DesignMatrix, SupportSet};
use crate::theory::binom;

/// Largest group-swap neighborhood `swap_m_run` will enumerate.
pub const MAX_NEIGHBORHOOD: u128 = 10_000_000;

/// Below this many candidate evaluations (times `n`) the scan stays serial.
const PARALLEL_WORK: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwapOptions {
    /// Cap on accepted swaps; `None` means `p·k`.
    pub max_iterations: Option<usize>,
    /// A swap must lower the loss by more than `epsilon_rel · max(L, 1e-300)`.
    pub epsilon_rel: f64,
    /// Largest group size exchanged in one step.
    pub m: usize,
    /// Per outgoing variable, only score this many incoming candidates,
    /// ranked by `|X_jᵀ r|` against the downdated residual.
    pub candidate_limit: Option<usize>,
}

impl Default for SwapOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            epsilon_rel: 1e-12,
            m: 1,
            candidate_limit: None,
        }
    }
}

impl SwapOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidSpec("max_iterations must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidSpec("m must be at least 1".into()));
        }
        if !(self.epsilon_rel >= 0.0 && self.epsilon_rel.is_finite()) {
            return Err(Error::InvalidSpec("epsilon_rel must be finite and non-negative".into()));
        }
        if self.candidate_limit == Some(0) {
            return Err(Error::InvalidSpec("candidate_limit must be at least 1".into()));
        }
        Ok(())
    }

    fn cap(&self, p: usize, k: usize) -> usize {
        self.max_iterations.unwrap_or((p * k).max(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    NoImprovingSwap,
    MaxIterations,
}

/// One iterate. The first iterate of a trace has empty swap lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapStep {
    pub support: SupportSet,
    pub loss: f64,
    pub swapped_out: Vec<usize>,
    pub swapped_in: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapTrace {
    pub iterates: Vec<SwapStep>,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl SwapTrace {
    pub fn final_support(&self) -> &SupportSet {
        &self.iterates.last().expect("trace is never empty").support
    }

    pub fn final_loss(&self) -> f64 {
        self.iterates.last().expect("trace is never empty").loss
    }

    /// Number of accepted swaps.
    pub fn swaps(&self) -> usize {
        self.iterates.len() - 1
    }
}

/// A scored candidate move. Ordered by loss, then group size, then the
/// outgoing and incoming index lists.
#[derive(Clone, Debug)]
struct Move {
    loss: f64,
    out: Vec<usize>,
    inc: Vec<usize>,
}

impl Move {
    fn key_cmp(&self, other: &Move) -> Ordering {
        self.loss
            .total_cmp(&other.loss)
            .then(self.out.len().cmp(&other.out.len()))
            .then_with(|| self.out.cmp(&other.out))
            .then_with(|| self.inc.cmp(&other.inc))
    }

    fn min(a: Option<Move>, b: Option<Move>) -> Option<Move> {
        match (a, b) {
            (Some(a), Some(b)) => Some(if b.key_cmp(&a) == Ordering::Less { b } else { a }),
            (a, None) => a,
            (None, b) => b,
        }
    }
}

fn improves(new: f64, cur: f64, eps: f64) -> bool {
    new < cur - eps * cur.max(1e-300)
}

/// Best single swap out of `i`.
fn best_for(
    fit: &ActiveFit,
    i: usize,
    complement: &[usize],
    x: &DesignMatrix,
    limit: Option<usize>,
) -> Result<Option<Move>> {
    let down = fit.remove(i)?;
    let ranked;
    let candidates: &[usize] = match limit {
        Some(l) if l < complement.len() => {
            let r = down.residual();
            let mut scored: Vec<(f64, usize)> = complement
                .iter()
                .map(|&j| (x.column(j).dot(&r).abs(), j))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut keep: Vec<usize> = scored[..l].iter().map(|&(_, j)| j).collect();
            keep.sort_unstable();
            ranked = keep;
            &ranked
        }
        _ => complement,
    };
    let mut best: Option<Move> = None;
    for &j in candidates {
        let loss = down.candidate_loss(x.column(j));
        if !loss.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| loss < b.loss) {
            best = Some(Move {
                loss,
                out: vec![i],
                inc: vec![j],
            });
        }
    }
    Ok(best)
}

fn best_single_swap(
    fit: &ActiveFit,
    x: &DesignMatrix,
    limit: Option<usize>,
) -> Result<Option<Move>> {
    let support = fit.support().as_slice();
    let complement = fit.support().complement(x.p());
    let work = support.len() * complement.len() * x.n();
    if work < PARALLEL_WORK {
        let mut best = None;
        for &i in support {
            best = Move::min(best, best_for(fit, i, &complement, x, limit)?);
        }
        Ok(best)
    } else {
        support
            .par_iter()
            .map(|&i| best_for(fit, i, &complement, x, limit))
            .try_reduce(|| None, |a, b| Ok(Move::min(a, b)))
    }
}

fn initial_step(fit: &ActiveFit) -> SwapStep {
    SwapStep {
        support: fit.support().clone(),
        loss: fit.loss(),
        swapped_out: Vec::new(),
        swapped_in: Vec::new(),
    }
}

/// Runs single-variable swaps from `s_init` until no swap strictly lowers the
/// loss or the iteration cap is reached.
///
/// Among all improving swaps the one with the smallest resulting loss is
/// taken; exact ties go to the lexicographically smallest `(i, i')`.
pub fn swap_run(
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    s_init: &SupportSet,
    opts: &SwapOptions,
) -> Result<SwapTrace> {
    opts.validate()?;
    let mut fit = fit_support(y, x, s_init)?;
    let cap = opts.cap(x.p(), s_init.len());
    let mut iterates = vec![initial_step(&fit)];
    loop {
        let best = best_single_swap(&fit, x, opts.candidate_limit)?;
        let Some(mv) = best.filter(|m| improves(m.loss, fit.loss(), opts.epsilon_rel)) else {
            return Ok(SwapTrace {
                iterates,
                converged: true,
                stop_reason: StopReason::NoImprovingSwap,
            });
        };
        if iterates.len() > cap {
            return Ok(SwapTrace {
                iterates,
                converged: false,
                stop_reason: StopReason::MaxIterations,
            });
        }
        let down = fit.remove(mv.out[0])?;
        fit = commit(&down, mv.inc[0], y, x)?;
        iterates.push(SwapStep {
            support: fit.support().clone(),
            loss: fit.loss(),
            swapped_out: mv.out,
            swapped_in: mv.inc,
        });
    }
}

/// Number of supports reachable by exchanging between 1 and `m` variables.
pub fn group_neighborhood_size(s: usize, p: usize, m: usize) -> u128 {
    (1..=m).map(|t| binom(s, t).saturating_mul(binom(p - s, t))).sum()
}

fn best_group_swap(
    fit: &ActiveFit,
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    m: usize,
) -> Result<Option<Move>> {
    let support = fit.support().as_slice();
    let complement = fit.support().complement(x.p());
    let outs: Vec<Vec<usize>> = (1..=m)
        .flat_map(|t| support.iter().copied().combinations(t))
        .collect();
    outs.par_iter()
        .map(|out| -> Result<Option<Move>> {
            let reduced = fit.support().swapped(out, &[]);
            let base = fit_support(y, x, &reduced)?;
            let mut best: Option<Move> = None;
            for inc in complement.iter().copied().combinations(out.len()) {
                let loss = base.loss_with_added(x, &inc);
                if !loss.is_finite() {
                    continue;
                }
                if best.as_ref().is_none_or(|b| loss < b.loss) {
                    best = Some(Move {
                        loss,
                        out: out.clone(),
                        inc,
                    });
                }
            }
            Ok(best)
        })
        .try_reduce(|| None, |a, b| Ok(Move::min(a, b)))
}

/// Swaps groups of up to `opts.m` variables at a time. With `m = 1` this is
/// exactly [`swap_run`].
pub fn swap_m_run(
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    s_init: &SupportSet,
    opts: &SwapOptions,
) -> Result<SwapTrace> {
    opts.validate()?;
    if opts.m == 1 {
        return swap_run(y, x, s_init, opts);
    }
    let (s, p) = (s_init.len(), x.p());
    if opts.m > s {
        return Err(Error::InvalidSpec(format!(
            "group size m = {} exceeds support size {s}",
            opts.m
        )));
    }
    let count = group_neighborhood_size(s, p, opts.m);
    if count > MAX_NEIGHBORHOOD {
        return Err(Error::CombinatorialBlowup {
            count,
            limit: MAX_NEIGHBORHOOD,
        });
    }
    let mut fit = fit_support(y, x, s_init)?;
    let cap = opts.cap(p, s);
    let mut iterates = vec![initial_step(&fit)];
    loop {
        let best = best_group_swap(&fit, y, x, opts.m)?;
        let Some(mv) = best.filter(|mv| improves(mv.loss, fit.loss(), opts.epsilon_rel)) else {
            return Ok(SwapTrace {
                iterates,
                converged: true,
                stop_reason: StopReason::NoImprovingSwap,
            });
        };
        if iterates.len() > cap {
            return Ok(SwapTrace {
                iterates,
                converged: false,
                stop_reason: StopReason::MaxIterations,
            });
        }
        fit = fit_support(y, x, &fit.support().swapped(&mv.out, &mv.inc))?;
        iterates.push(SwapStep {
            support: fit.support().clone(),
            loss: fit.loss(),
            swapped_out: mv.out,
            swapped_in: mv.inc,
        });
    }
}
