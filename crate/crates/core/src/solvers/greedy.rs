//! Greedy pursuit estimators: FoBa, OMP and CoSaMP.

use ndarray::{Array1, ArrayView1};

use super::{top_k, SolverOutput};
use crate::error::{Error, Result};
use crate::linalg::{fit_support, ActiveFit, DesignMatrix, SupportSet};

fn check_k(k: usize, x: &DesignMatrix) -> Result<()> {
    if k > x.n() || k > x.p() {
        return Err(Error::InvalidSpec(format!(
            "k = {k} exceeds min(n, p) = {}",
            x.n().min(x.p())
        )));
    }
    Ok(())
}

/// Adds the unselected column most correlated with the residual, skipping
/// columns that would make the support rank deficient. Returns the new fit
/// and the drop in loss.
fn forward(fit: &ActiveFit, y: ArrayView1<'_, f64>, x: &DesignMatrix) -> Result<Option<(ActiveFit, f64)>> {
    let r = fit.residual();
    let mut scored: Vec<(f64, usize)> = fit
        .support()
        .complement(x.p())
        .into_iter()
        .map(|j| (x.column(j).dot(&r).abs() / x.column_norm_sq(j).sqrt(), j))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, j) in scored {
        if fit.loss_with_added(x, &[j]).is_finite() {
            let next = fit_support(y, x, &fit.support().swapped(&[], &[j]))?;
            let gain = fit.loss() - next.loss();
            return Ok(Some((next, gain)));
        }
    }
    Ok(None)
}

/// The support member whose removal raises the loss least, with that rise.
fn least_harmful(fit: &ActiveFit) -> Result<Option<(usize, f64)>> {
    let mut best: Option<(usize, f64)> = None;
    for i in fit.support().iter() {
        let rise = fit.remove(i)?.loss() - fit.loss();
        if best.is_none_or(|(_, b)| rise < b) {
            best = Some((i, rise));
        }
    }
    Ok(best)
}

/// Adaptive forward-backward greedy selection targeted at `k` variables.
///
/// Forward steps add the column most correlated with the residual. After
/// each forward step, variables are removed while the cheapest removal
/// costs less than `nu` times the gain of the latest surviving forward step.
/// Once `k` variables are selected, each round looks one step ahead to
/// `k + 1` and prunes the cheapest variable back to `k`; the run ends when a
/// round leaves the support unchanged.
pub fn foba(y: ArrayView1<'_, f64>, x: &DesignMatrix, k: usize, nu: f64) -> Result<SolverOutput> {
    check_k(k, x)?;
    let p = x.p();
    let mut fit = fit_support(y, x, &SupportSet::empty())?;
    let (mut fwd, mut back, mut prune) = (0usize, 0usize, 0usize);
    if k == 0 {
        let mut out = SolverOutput::new(SupportSet::empty());
        out.notes.forward_steps = Some(0);
        out.notes.backward_steps = Some(0);
        out.notes.prune_steps = Some(0);
        return Ok(out);
    }
    let mut gains: Vec<f64> = Vec::new();
    let max_rounds = 4 * p + 4 * k + 16;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let before = fit.support().clone();
        // the lookahead needs room for k + 1 columns
        if fit.support().len() == k && k + 1 > x.n().min(p) {
            break;
        }
        let Some((next, gain)) = forward(&fit, y, x)? else {
            break;
        };
        fit = next;
        gains.push(gain);
        fwd += 1;
        while fit.support().len() > 1 {
            let Some((i, rise)) = least_harmful(&fit)? else {
                break;
            };
            let last = *gains.last().expect("a forward step preceded");
            if !(rise < nu * last) {
                break;
            }
            fit = fit_support(y, x, &fit.support().swapped(&[i], &[]))?;
            gains.pop();
            back += 1;
            if gains.is_empty() {
                break;
            }
        }
        while fit.support().len() > k {
            let (i, _) = least_harmful(&fit)?.expect("support is non-empty");
            fit = fit_support(y, x, &fit.support().swapped(&[i], &[]))?;
            gains.pop();
            prune += 1;
        }
        if fit.support().len() == k && *fit.support() == before {
            break;
        }
        if rounds >= max_rounds {
            break;
        }
    }
    // a forward step can only fail when every remaining column is dependent
    while fit.support().len() < k {
        match forward(&fit, y, x)? {
            Some((next, _)) => fit = next,
            None => break,
        }
    }
    let mut out = SolverOutput::new(fit.support().clone());
    out.notes.iterations = Some(rounds);
    out.notes.forward_steps = Some(fwd);
    out.notes.backward_steps = Some(back);
    out.notes.prune_steps = Some(prune);
    Ok(out)
}

/// Orthogonal matching pursuit: `k` forward steps, no removals.
pub fn omp(y: ArrayView1<'_, f64>, x: &DesignMatrix, k: usize) -> Result<SolverOutput> {
    check_k(k, x)?;
    let mut fit = fit_support(y, x, &SupportSet::empty())?;
    while fit.support().len() < k {
        match forward(&fit, y, x)? {
            Some((next, _)) => fit = next,
            None => break,
        }
    }
    let mut out = SolverOutput::new(fit.support().clone());
    out.notes.forward_steps = Some(fit.support().len());
    Ok(out)
}

/// Least squares on `cols`, dropping any column that is dependent on the
/// ones before it. Returns a `p`-vector of coefficients.
fn greedy_ls(y: ArrayView1<'_, f64>, x: &DesignMatrix, cols: &[usize]) -> Result<Array1<f64>> {
    let mut fit = fit_support(y, x, &SupportSet::empty())?;
    for &j in cols {
        if fit.loss_with_added(x, &[j]).is_finite() {
            fit = fit_support(y, x, &fit.support().swapped(&[], &[j]))?;
        }
    }
    Ok(fit.coefficients(x.p()).values)
}

/// CoSaMP with a `2k` proxy. Iterations counts support changes; the run stops
/// when the support repeats or after `max_iter` iterations.
pub fn cosamp(
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    k: usize,
    max_iter: usize,
) -> Result<SolverOutput> {
    let (n, p) = (x.n(), x.p());
    if 2 * k > n || k > p {
        return Err(Error::InvalidSpec(format!(
            "CoSaMP needs 2k ≤ n and k ≤ p (k = {k}, n = {n}, p = {p})"
        )));
    }
    let mut support = SupportSet::empty();
    let mut resid = y.to_owned();
    let mut changes = 0;
    for _ in 0..max_iter {
        let proxy = x.t_dot(resid.view());
        let omega = top_k(proxy.view(), (2 * k).min(p), p);
        let mut merged: Vec<usize> = omega.iter().chain(support.iter()).collect();
        merged.sort_unstable();
        merged.dedup();
        if merged.len() > n {
            // keep current support, then the strongest proxy entries
            let mut keep: Vec<usize> = support.as_slice().to_vec();
            let mut rest: Vec<usize> = merged.iter().copied().filter(|j| !support.contains(*j)).collect();
            rest.sort_by(|&a, &b| proxy[b].abs().total_cmp(&proxy[a].abs()).then(a.cmp(&b)));
            keep.extend(rest.into_iter().take(n - support.len()));
            keep.sort_unstable();
            merged = keep;
        }
        let b = greedy_ls(y, x, &merged)?;
        let next = top_k(b.view(), k, p);
        let mut pruned = Array1::zeros(p);
        for j in next.iter() {
            pruned[j] = b[j];
        }
        resid = &y - &x.dot(pruned.view());
        if next == support {
            break;
        }
        support = next;
        changes += 1;
    }
    let mut out = SolverOutput::new(support);
    out.notes.iterations = Some(changes);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{brute_force_best, gaussian_design};
    use ndarray::{array, Array2};

    fn orthonormal(n: usize) -> DesignMatrix {
        DesignMatrix::new(Array2::eye(n) * (n as f64).sqrt()).unwrap()
    }

    fn sparse_signal(x: &DesignMatrix, s: &[usize], v: f64) -> Array1<f64> {
        let mut b = Array1::zeros(x.p());
        for &i in s {
            b[i] = v;
        }
        x.dot(b.view())
    }

    #[test]
    fn foba_orthogonal_design_needs_no_backward_steps() {
        let x = orthonormal(8);
        let y = sparse_signal(&x, &[1, 4, 6], 1.0);
        let out = foba(y.view(), &x, 3, 0.5).unwrap();
        assert_eq!(out.support.as_slice(), &[1, 4, 6]);
        assert_eq!(out.notes.backward_steps, Some(0));
    }

    /// y = x0 + x1 where x2 leans towards both, so greedy picks x2 first.
    fn three_column_trap() -> (DesignMatrix, Array1<f64>) {
        let a = array![1.0, 0.0, 0.0, 0.0];
        let b = array![0.0, 1.0, 0.0, 0.0];
        let e = array![0.0, 0.0, 1.0, 0.0];
        let f = array![0.0, 0.0, 0.0, 1.0];
        let mut data = Array2::zeros((4, 4));
        data.column_mut(0).assign(&a);
        data.column_mut(1).assign(&b);
        data.column_mut(2).assign(&((&a + &b) * (0.8 / 2f64.sqrt()) + &e * 0.6));
        data.column_mut(3).assign(&(&f + &e * 0.1));
        let x = DesignMatrix::new(data).unwrap().normalize_columns().unwrap();
        let y = &x.column(0) + &x.column(1);
        (x, y)
    }

    #[test]
    fn foba_backward_step_removes_wrong_first_pick() {
        let (x, y) = three_column_trap();
        let scores = x.t_dot(y.view());
        let first = (0..4).max_by(|&a, &b| scores[a].abs().total_cmp(&scores[b].abs())).unwrap();
        assert_eq!(first, 2, "fixture should lure the greedy step");
        let (best, _) = brute_force_best(&y, &x, 2);
        assert_eq!(best.as_slice(), &[0, 1]);
        let out = foba(y.view(), &x, 2, 0.5).unwrap();
        assert_eq!(out.support, best);
        assert!(out.notes.backward_steps.unwrap() + out.notes.prune_steps.unwrap() >= 1);
        let plain = omp(y.view(), &x, 2).unwrap();
        assert!(plain.support.contains(2));
    }

    #[test]
    fn foba_k_zero() {
        let (x, y) = three_column_trap();
        assert!(foba(y.view(), &x, 0, 0.5).unwrap().support.is_empty());
    }

    #[test]
    fn cosamp_orthonormal_one_iteration() {
        let x = orthonormal(12);
        let y = sparse_signal(&x, &[0, 5, 7], 2.0);
        let out = cosamp(y.view(), &x, 3, 100).unwrap();
        assert_eq!(out.support.as_slice(), &[0, 5, 7]);
        assert_eq!(out.notes.iterations, Some(1));
    }

    #[test]
    fn cosamp_exact_recovery_rate() {
        let (n, p, k) = (60, 100, 5);
        let mut exact = 0;
        for t in 0..100u64 {
            let x = gaussian_design(n, p, 300 + t);
            let s: Vec<usize> = crate::solvers::random_support(p, k, 900 + t).unwrap().into_vec();
            let y = sparse_signal(&x, &s, 1.0);
            if cosamp(y.view(), &x, k, 100).unwrap().support.as_slice() == s.as_slice() {
                exact += 1;
            }
        }
        assert!(exact >= 95, "exact recovery in {exact}/100");
    }

    #[test]
    fn cosamp_requires_room() {
        let x = gaussian_design(5, 10, 1);
        let y = Array1::zeros(5);
        assert!(cosamp(y.view(), &x, 3, 10).is_err());
    }
}
