//! Enumeration-based evaluation of the recovery-condition quantities:
//! the exhaustive search decoder, restricted eigenvalues, the projected
//! correlation parameters γ_d and ν_d, irrepresentability ζ, and the
//! sufficient conditions built from them.
//!
//! Everything here enumerates supports and is meant for small `p`. Each
//! enumeration checks its size against [`ENUM_LIMIT`] up front.
//!
//! Notation: `Σ^B = Xᵀ Π⊥[B] X / n`, with `Σ = Σ^∅`.

use std::collections::BTreeMap;

use itertools::Itertools;
use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fit_support, min_eigenvalue, spd_solve, DesignMatrix, Projector, SupportSet};

pub const ENUM_LIMIT: u128 = 1_000_000;

/// Diagonal entries of `Σ^B` below this are treated as zero.
pub const DEGENERATE_TOL: f64 = 1e-12;

pub(crate) fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc.saturating_mul((n - t) as u128) / (t as u128 + 1);
    }
    acc
}

fn ln_binom(n: usize, k: usize) -> f64 {
    (0..k).map(|t| ((n - t) as f64).ln() - ((t + 1) as f64).ln()).sum()
}

fn guard(count: u128) -> Result<()> {
    if count > ENUM_LIMIT {
        return Err(Error::CombinatorialBlowup {
            count,
            limit: ENUM_LIMIT,
        });
    }
    Ok(())
}

fn check_truth(x: &DesignMatrix, s_star: &SupportSet) -> Result<()> {
    if s_star.is_empty() {
        return Err(Error::EmptyTrueSupport);
    }
    if s_star.iter().any(|i| i >= x.p()) {
        return Err(Error::InvalidSupport(format!("{s_star} out of range for p = {}", x.p())));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsdResult {
    pub support: SupportSet,
    pub loss: f64,
    /// Smallest loss among the other supports; `None` when there is only one.
    pub runner_up_loss: Option<f64>,
    /// The minimizer beats the runner-up by more than `1e-10 · ‖y‖²`.
    pub unique: bool,
    pub evaluated: u128,
}

/// Exhaustive search decoder: the size-`k` support of smallest loss, ties
/// broken by lexicographic order of the supports.
pub fn esd(y: ArrayView1<'_, f64>, x: &DesignMatrix, k: usize) -> Result<EsdResult> {
    let p = x.p();
    if k > p {
        return Err(Error::InvalidSpec(format!("k = {k} exceeds p = {p}")));
    }
    let count = binom(p, k);
    guard(count)?;
    let supports: Vec<Vec<usize>> = (0..p).combinations(k).collect();
    let losses: Vec<f64> = supports
        .par_iter()
        .map(|s| match fit_support(y, x, &SupportSet::from_sorted(s.clone())) {
            Ok(fit) => Ok(fit.loss()),
            Err(Error::RankDeficient { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for t in 1..losses.len() {
        if losses[t] < losses[best] {
            best = t;
        }
    }
    if !losses[best].is_finite() {
        return Err(Error::rank_deficient(&supports[best]));
    }
    let runner_up = losses
        .iter()
        .enumerate()
        .filter(|&(t, _)| t != best)
        .map(|(_, &l)| l)
        .min_by(f64::total_cmp);
    let scale = y.dot(&y).max(f64::MIN_POSITIVE);
    Ok(EsdResult {
        support: SupportSet::from_sorted(supports[best].clone()),
        loss: losses[best],
        runner_up_loss: runner_up,
        unique: runner_up.is_none_or(|r| r - losses[best] > 1e-10 * scale),
        evaluated: count,
    })
}

/// Supports that contain `s_star` plus `ell` extra indices.
fn supersets(s_star: &SupportSet, p: usize, ell: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
    s_star
        .complement(p)
        .into_iter()
        .combinations(ell)
        .map(move |extra| s_star.swapped(&[], &extra).into_vec())
}

/// `ρ_{k+ℓ}`: the smallest `λ_min(X_AᵀX_A/n)` over `A ⊇ S*` with
/// `|A| = k + ℓ`. Enlarging `A` can only lower `λ_min`, so this equals the
/// infimum over `|A| ≤ k + ℓ`.
pub fn rho_plus(x: &DesignMatrix, s_star: &SupportSet, ell: usize) -> Result<f64> {
    check_truth(x, s_star)?;
    let (p, k) = (x.p(), s_star.len());
    if k + ell > p {
        return Err(Error::Domain(format!("k + ℓ = {} exceeds p = {p}", k + ell)));
    }
    guard(binom(p - k, ell))?;
    let sets: Vec<Vec<usize>> = supersets(s_star, p, ell).collect();
    Ok(sets
        .par_iter()
        .map(|a| min_eigenvalue(&x.gram(a)))
        .reduce(|| f64::INFINITY, f64::min))
}

/// Size-`size` supports with at least `ell` members of `s_star`, in
/// lexicographic order of (active part, inactive part).
fn with_active_at_least(
    s_star: &SupportSet,
    p: usize,
    size: usize,
    ell: usize,
) -> Result<Vec<Vec<usize>>> {
    let k = s_star.len();
    let inactive = s_star.complement(p);
    let lo = ell.max(size.saturating_sub(p - k));
    let hi = size.min(k);
    let count: u128 = (lo..=hi).map(|t| binom(k, t) * binom(p - k, size - t)).sum();
    guard(count)?;
    let mut out = Vec::with_capacity(count as usize);
    for t in lo..=hi {
        for act in s_star.iter().combinations(t) {
            for ina in inactive.iter().copied().combinations(size - t) {
                let mut a: Vec<usize> = act.iter().chain(&ina).copied().collect();
                a.sort_unstable();
                out.push(a);
            }
        }
    }
    Ok(out)
}

/// `ρ_{k,ℓ}`: the smallest `λ_min(X_AᵀX_A/n)` over `|A| = k` with
/// `|A ∩ S*| ≥ ℓ`.
pub fn rho_cap(x: &DesignMatrix, s_star: &SupportSet, ell: usize) -> Result<f64> {
    rho_cap_sized(x, s_star, s_star.len(), ell)
}

/// [`rho_cap`] with the support size decoupled from `|S*|`; `ρ_{k-1,0}` is
/// `rho_cap_sized(x, s_star, k - 1, 0)`.
pub fn rho_cap_sized(x: &DesignMatrix, s_star: &SupportSet, size: usize, ell: usize) -> Result<f64> {
    check_truth(x, s_star)?;
    if size == 0 || size > x.p() {
        return Err(Error::Domain(format!("support size {size} must lie in 1..={}", x.p())));
    }
    if ell > size.min(s_star.len()) {
        return Err(Error::Domain(format!("ℓ = {ell} exceeds min(size, k)")));
    }
    let sets = with_active_at_least(s_star, x.p(), size, ell)?;
    Ok(sets
        .par_iter()
        .map(|a| min_eigenvalue(&x.gram(a)))
        .reduce(|| f64::INFINITY, f64::min))
}

/// `Σ^B` restricted to `cols`, from residuals of least-squares fits on `X_B`.
pub fn projected_gram(x: &DesignMatrix, b: &[usize], cols: &[usize]) -> Array2<f64> {
    let proj = Projector::new(x, b);
    let n = x.n();
    let mut r = Array2::zeros((n, cols.len()));
    for (t, &j) in cols.iter().enumerate() {
        r.column_mut(t).assign(&proj.residual(x.column(j)));
    }
    r.t().dot(&r) / n as f64
}

/// `‖Σ_{t,S̄} Σ_{S̄,S̄}⁻¹‖₁²` read off a Gram matrix whose last rows/columns
/// index `S̄` and whose row `t` is the target. `None` if the block is singular.
fn regression_l1_sq(g: &Array2<f64>, t: usize, sbar: std::ops::Range<usize>) -> Option<f64> {
    let idx: Vec<usize> = sbar.collect();
    let block = Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| g[[idx[a], idx[b]]]);
    let rhs = Array1::from_iter(idx.iter().map(|&a| g[[a, t]]));
    let z = spd_solve(&block, &rhs)?;
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    Some(l1 * l1)
}

/// A max–min parameter value with its maximizing support and bookkeeping.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamValue {
    pub value: f64,
    /// Support attaining the maximum (first in enumeration order on ties).
    pub argmax: Option<SupportSet>,
    pub supports_evaluated: usize,
    /// Supports for which no term could be evaluated.
    pub supports_skipped: usize,
    /// Terms dropped because an inner block was singular.
    pub singular_blocks: usize,
    /// Terms dropped because a diagonal of `Σ^B` fell below [`DEGENERATE_TOL`].
    pub degenerate_denominators: usize,
}

#[derive(Default)]
struct Tally {
    singular: usize,
    degenerate: usize,
}

/// Supports of size `k` missing between 1 and `d` members of `s_star`,
/// i.e. `Ω_{k,d} \ {S*}`.
fn omega_minus_truth(s_star: &SupportSet, p: usize, d: usize) -> Result<Vec<Vec<usize>>> {
    let k = s_star.len();
    let inactive = s_star.complement(p);
    let d = d.min(k).min(p - k);
    let count: u128 = (1..=d).map(|t| binom(k, k - t) * binom(p - k, t)).sum();
    guard(count)?;
    let mut out = Vec::new();
    for t in 1..=d {
        for act in s_star.iter().combinations(k - t) {
            for ina in inactive.iter().copied().combinations(t) {
                let mut s: Vec<usize> = act.iter().chain(&ina).copied().collect();
                s.sort_unstable();
                out.push(s);
            }
        }
    }
    Ok(out)
}

fn max_over_supports<F>(supports: &[Vec<usize>], per_support: F) -> ParamValue
where
    F: Fn(&SupportSet, &mut Tally) -> Option<f64> + Sync,
{
    let results: Vec<(Option<f64>, Tally)> = supports
        .par_iter()
        .map(|s| {
            let mut tally = Tally::default();
            let v = per_support(&SupportSet::from_sorted(s.clone()), &mut tally);
            (v, tally)
        })
        .collect();
    let mut out = ParamValue::default();
    let mut best: Option<(f64, usize)> = None;
    for (t, (v, tally)) in results.iter().enumerate() {
        out.singular_blocks += tally.singular;
        out.degenerate_denominators += tally.degenerate;
        match v {
            Some(v) => {
                out.supports_evaluated += 1;
                if best.is_none_or(|(b, _)| *v > b) {
                    best = Some((*v, t));
                }
            }
            None => out.supports_skipped += 1,
        }
    }
    if let Some((v, t)) = best {
        out.value = v;
        out.argmax = Some(SupportSet::from_sorted(supports[t].clone()));
    }
    out
}

fn min_some(acc: Option<f64>, v: f64) -> Option<f64> {
    Some(acc.map_or(v, |a| a.min(v)))
}

fn max_some(acc: Option<f64>, v: f64) -> Option<f64> {
    Some(acc.map_or(v, |a| a.max(v)))
}

/// `γ_d = max_{S ∈ Ω_{k,d}\S*} min_{i ∈ S\S*} ‖Σ^{S\i}_{i,S̄}(Σ^{S\i}_{S̄,S̄})⁻¹‖₁² / Σ^{S\i}_{i,i}`
/// with `S̄ = S* \ S`.
pub fn gamma_d(x: &DesignMatrix, s_star: &SupportSet, d: usize) -> Result<ParamValue> {
    check_truth(x, s_star)?;
    let supports = omega_minus_truth(s_star, x.p(), d)?;
    Ok(max_over_supports(&supports, |s, tally| {
        let sbar = s_star.difference(s);
        let mut best: Option<f64> = None;
        for i in s.difference(s_star) {
            let b = s.swapped(&[i], &[]);
            let cols: Vec<usize> = std::iter::once(i).chain(sbar.iter().copied()).collect();
            let g = projected_gram(x, b.as_slice(), &cols);
            if g[[0, 0]] < DEGENERATE_TOL {
                tally.degenerate += 1;
                continue;
            }
            match regression_l1_sq(&g, 0, 1..cols.len()) {
                Some(num) => best = min_some(best, num / g[[0, 0]]),
                None => tally.singular += 1,
            }
        }
        best
    }))
}

/// Which inner index set ν_d regresses on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMode {
    /// `S̄_j = (S* \ S) ∪ {j}`, the set the recovery argument actually uses.
    #[default]
    Appendix,
    /// `S̄ = (S \ i) ∪ {j}` read literally. Contains `S \ {i, j}`, whose
    /// projected columns vanish, so the inner block is singular once `k ≥ 3`.
    MainText,
}

/// `ν_d = max_S min_i max_{j,j'} (‖Σ^A_{i,S̄_j}(Σ^A_{S̄_j,S̄_j})⁻¹‖₁² + ‖Σ^A_{j',S̄_j}(Σ^A_{S̄_j,S̄_j})⁻¹‖₁²) / min(Σ^A_{i,i}, Σ^A_{j',j'})`
/// with `A = S \ {i, j}`, `i ∈ S \ S*`, `j ∈ S \ {i}` and `j' ∉ S ∪ S*`.
///
/// `j = i` is excluded: `i ∈ S̄_i`, so the first term would be identically 1.
/// With `k = 1` no `j` remains and every support is skipped.
pub fn nu_d(x: &DesignMatrix, s_star: &SupportSet, d: usize, mode: NuMode) -> Result<ParamValue> {
    check_truth(x, s_star)?;
    let p = x.p();
    let supports = omega_minus_truth(s_star, p, d)?;
    Ok(max_over_supports(&supports, |s, tally| {
        let outside: Vec<usize> = s.complement(p).into_iter().filter(|j| !s_star.contains(*j)).collect();
        let mut min_i: Option<f64> = None;
        for i in s.difference(s_star) {
            let mut max_jj: Option<f64> = None;
            for j in s.iter().filter(|&j| j != i) {
                let a = s.swapped(&[i, j], &[]);
                let sbar: Vec<usize> = match mode {
                    NuMode::Appendix => s_star.difference(s).into_iter().chain([j]).sorted().collect(),
                    NuMode::MainText => s.swapped(&[i], &[j]).into_vec(),
                };
                for &jp in &outside {
                    let cols: Vec<usize> = [i, jp].into_iter().chain(sbar.iter().copied()).collect();
                    let g = projected_gram(x, a.as_slice(), &cols);
                    let denom = g[[0, 0]].min(g[[1, 1]]);
                    if denom < DEGENERATE_TOL {
                        tally.degenerate += 1;
                        continue;
                    }
                    let (Some(t1), Some(t2)) = (
                        regression_l1_sq(&g, 0, 2..cols.len()),
                        regression_l1_sq(&g, 1, 2..cols.len()),
                    ) else {
                        tally.singular += 1;
                        continue;
                    };
                    max_jj = max_some(max_jj, (t1 + t2) / denom);
                }
            }
            if let Some(v) = max_jj {
                min_i = min_some(min_i, v);
            }
        }
        min_i
    }))
}

/// `ζ = max_{i ∉ S*} ‖Σ_{i,S*} Σ_{S*,S*}⁻¹‖₁²` (the ℓ₁ norm is squared).
pub fn zeta(x: &DesignMatrix, s_star: &SupportSet) -> Result<f64> {
    check_truth(x, s_star)?;
    let k = s_star.len();
    let block = x.gram(s_star.as_slice());
    let chol = nalgebra::Cholesky::new(crate::linalg::to_dmatrix(&block)).ok_or(
        Error::NotPositiveDefinite {
            min_eigenvalue: min_eigenvalue(&block),
        },
    )?;
    let xs = x.select(s_star.as_slice());
    let n = x.n() as f64;
    let mut worst: f64 = 0.0;
    for i in s_star.complement(x.p()) {
        let c = xs.t().dot(&x.column(i)) / n;
        let z = chol.solve(&nalgebra::DVector::from_iterator(k, c.iter().copied()));
        let l1: f64 = z.iter().map(|v| v.abs()).sum();
        worst = worst.max(l1 * l1);
    }
    Ok(worst)
}

/// `g(δ, ρ, c) = (δ - 1) + 2c(√δ + 1/√ρ) + 2c²`.
pub fn g_eval(delta: f64, rho: f64, c: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("g requires δ ≥ 0, got {delta}")));
    }
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("g requires ρ > 0, got {rho}")));
    }
    Ok((delta - 1.0) + 2.0 * c * (delta.sqrt() + 1.0 / rho.sqrt()) + 2.0 * c * c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventCheck {
    pub holds: bool,
    pub s1_loss: f64,
    /// Smallest loss over the comparison family; `+∞` if it is empty.
    pub family_min: f64,
    pub family_argmin: Option<SupportSet>,
    pub family_size: usize,
}

/// The partial-optimality event `ℰ_{k,d}`: `S1` has strictly smaller loss
/// than every other size-`k` support missing at least `d` members of `S*`.
/// With `d = 0` the family is every size-`k` support.
pub fn check_event_ekd(
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    s1: &SupportSet,
    s_star: &SupportSet,
    d: usize,
) -> Result<EventCheck> {
    check_truth(x, s_star)?;
    let (p, k) = (x.p(), s1.len());
    let keep = k.min(s_star.len()).saturating_sub(d);
    let family: Vec<Vec<usize>> = if d > s_star.len() {
        Vec::new()
    } else {
        // at most `|S*| - d` active members
        let inactive = s_star.complement(p);
        let count: u128 = (0..=keep).map(|t| binom(s_star.len(), t) * binom(p - s_star.len(), k.saturating_sub(t))).sum();
        guard(count)?;
        let mut out = Vec::new();
        for t in 0..=keep.min(k) {
            if k - t > inactive.len() {
                continue;
            }
            for act in s_star.iter().combinations(t) {
                for ina in inactive.iter().copied().combinations(k - t) {
                    let s: Vec<usize> = act.iter().chain(&ina).copied().sorted().collect();
                    if s.as_slice() != s1.as_slice() {
                        out.push(s);
                    }
                }
            }
        }
        out.sort();
        out
    };
    let s1_loss = fit_support(y, x, s1)?.loss();
    let losses: Vec<f64> = family
        .par_iter()
        .map(|s| {
            fit_support(y, x, &SupportSet::from_sorted(s.clone()))
                .map(|f| f.loss())
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    let mut best: Option<usize> = None;
    for t in 0..losses.len() {
        if best.is_none_or(|b| losses[t] < losses[b]) {
            best = Some(t);
        }
    }
    let family_min = best.map_or(f64::INFINITY, |b| losses[b]);
    Ok(EventCheck {
        holds: s1_loss < family_min,
        s1_loss,
        family_min,
        family_argmin: best.map(|b| SupportSet::from_sorted(family[b].clone())),
        family_size: family.len(),
    })
}

/// One inequality with both sides recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Condition {
    fn less(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }

    fn less_eq(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremPredicate {
    pub name: String,
    pub holds: bool,
    pub conditions: Vec<Condition>,
    /// Why the predicate could not be evaluated, if it could not.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unavailable: Option<String>,
}

impl TheoremPredicate {
    fn from_conditions(name: &str, conditions: Vec<Condition>) -> Self {
        Self {
            name: name.into(),
            holds: conditions.iter().all(|c| c.holds),
            conditions,
            unavailable: None,
        }
    }

    fn unavailable(name: &str, why: String) -> Self {
        Self {
            name: name.into(),
            holds: false,
            conditions: Vec::new(),
            unavailable: Some(why),
        }
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRecord {
    pub label: String,
    pub delta: f64,
    pub rho: f64,
    pub c: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryOptions {
    pub ells: Vec<usize>,
    pub ds: Vec<usize>,
    pub nu_mode: NuMode,
    pub sigma: f64,
    /// Constant in the sufficient conditions; defaults to the largest value
    /// allowed by `c² ≤ 1/(18σ²)`, or 1 when `σ = 0`.
    pub c: Option<f64>,
    /// Distance `|S* \ S⁽¹⁾|` of the initial support, for the conditions
    /// that depend on it.
    pub d_init: Option<usize>,
}

impl Default for TheoryOptions {
    fn default() -> Self {
        Self {
            ells: Vec::new(),
            ds: Vec::new(),
            nu_mode: NuMode::Appendix,
            sigma: 0.0,
            c: None,
            d_init: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub s_star: SupportSet,
    pub rho_plus: BTreeMap<usize, f64>,
    pub rho_cap: BTreeMap<usize, f64>,
    /// `ρ_{k-1,0}`; absent when `k = 1`.
    pub rho_km1_0: Option<f64>,
    pub gamma: BTreeMap<usize, ParamValue>,
    pub nu: BTreeMap<usize, ParamValue>,
    pub nu_mode: NuMode,
    pub zeta: f64,
    pub beta_min: Option<f64>,
    pub sigma: f64,
    pub c: f64,
    pub d_init: Option<usize>,
    pub g_values: Vec<GRecord>,
    pub predicates: Vec<TheoremPredicate>,
}

impl TheoryReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn predicate(&self, name: &str) -> Option<&TheoremPredicate> {
        self.predicates.iter().find(|p| p.name == name)
    }
}

/// Computes every quantity the sufficient conditions need (plus any extra
/// `ℓ` and `d` requested) and evaluates the conditions.
pub fn theory_report(
    x: &DesignMatrix,
    s_star: &SupportSet,
    beta: Option<ArrayView1<'_, f64>>,
    opts: &TheoryOptions,
) -> Result<TheoryReport> {
    check_truth(x, s_star)?;
    let (n, p, k) = (x.n(), x.p(), s_star.len());
    if !(opts.sigma >= 0.0 && opts.sigma.is_finite()) {
        return Err(Error::Domain(format!("σ must be finite and non-negative, got {}", opts.sigma)));
    }
    let c = match opts.c {
        Some(c) => c,
        None if opts.sigma > 0.0 => 1.0 / (18.0 * opts.sigma * opts.sigma).sqrt(),
        None => 1.0,
    };
    let mut ells: Vec<usize> = opts.ells.clone();
    if 2 * k <= p {
        ells.push(k);
    }
    ells.sort_unstable();
    ells.dedup();
    let mut rho_plus_map = BTreeMap::new();
    for &l in &ells {
        if k + l <= p {
            rho_plus_map.insert(l, rho_plus(x, s_star, l)?);
        }
    }
    let mut rho_cap_map = BTreeMap::new();
    for l in [0, 1].into_iter().chain(opts.ells.iter().copied()) {
        if l <= k {
            rho_cap_map.insert(l, rho_cap(x, s_star, l)?);
        }
    }
    let rho_km1_0 = if k > 1 { Some(rho_cap_sized(x, s_star, k - 1, 0)?) } else { None };
    let mut ds: Vec<usize> = opts.ds.clone();
    ds.push(k);
    if let Some(d) = opts.d_init {
        if d >= 2 {
            ds.push(d - 1);
        }
        ds.push(d);
    }
    ds.retain(|&d| d >= 1 && d <= k);
    ds.sort_unstable();
    ds.dedup();
    let mut gamma = BTreeMap::new();
    for &d in &ds {
        gamma.insert(d, gamma_d(x, s_star, d)?);
    }
    let mut nu = BTreeMap::new();
    let nu_ds: Vec<usize> = opts.d_init.into_iter().chain(opts.ds.iter().copied()).filter(|&d| d >= 1 && d <= k).collect();
    for d in nu_ds {
        nu.entry(d).or_insert(nu_d(x, s_star, d, opts.nu_mode)?);
    }
    let beta_min = match beta {
        Some(b) => {
            if b.len() != p {
                return Err(Error::DimensionMismatch(format!("β has length {}, p = {p}", b.len())));
            }
            Some(s_star.iter().map(|i| b[i].abs()).fold(f64::INFINITY, f64::min))
        }
        None => None,
    };
    let mut report = TheoryReport {
        n,
        p,
        k,
        s_star: s_star.clone(),
        rho_plus: rho_plus_map,
        rho_cap: rho_cap_map,
        rho_km1_0,
        gamma,
        nu,
        nu_mode: opts.nu_mode,
        zeta: zeta(x, s_star)?,
        beta_min,
        sigma: opts.sigma,
        c,
        d_init: opts.d_init,
        g_values: Vec::new(),
        predicates: Vec::new(),
    };
    let (g_values, predicates) = theorem_predicates(&report, n, p, k, opts.sigma, c);
    report.g_values = g_values;
    report.predicates = predicates;
    Ok(report)
}

/// Evaluates the sufficient conditions of the recovery results against the
/// quantities in `report`. Purely diagnostic.
pub fn theorem_predicates(
    report: &TheoryReport,
    n: usize,
    p: usize,
    k: usize,
    sigma: f64,
    c: f64,
) -> (Vec<GRecord>, Vec<TheoremPredicate>) {
    let nf = n as f64;
    let kf = k as f64;
    let log_kkp = (kf * kf * (p - k) as f64).ln();
    let cs = c * sigma;
    let mut g_values = Vec::new();
    let mut g_cond = |label: &str, delta: f64, rho: f64| -> Condition {
        let value = g_eval(delta, rho, cs).unwrap_or(f64::NAN);
        g_values.push(GRecord {
            label: label.into(),
            delta,
            rho,
            c: cs,
            value,
        });
        Condition::less(label, value, 0.0)
    };
    let c_adm = |strict: bool| {
        let bound = if sigma > 0.0 { 1.0 / (18.0 * sigma * sigma) } else { f64::INFINITY };
        if strict {
            Condition::less("c² < 1/(18σ²)", c * c, bound)
        } else {
            Condition::less_eq("c² ≤ 1/(18σ²)", c * c, bound)
        }
    };
    let rho_2k = report.rho_plus.get(&k).copied();
    let mut preds = Vec::new();
    let Some(beta_min) = report.beta_min else {
        let why = "β* not supplied, so β_min is unknown".to_string();
        for name in ["prop2", "thm1", "thm2", "thm3", "thm4"] {
            preds.push(TheoremPredicate::unavailable(name, why.clone()));
        }
        return (g_values, preds);
    };
    let cb = c * c * beta_min * beta_min;
    match rho_2k {
        Some(r) => {
            preds.push(TheoremPredicate::from_conditions(
                "prop2",
                vec![
                    c_adm(false),
                    Condition::less("ρ_2k > 0", 0.0, r),
                    Condition::less("sample size", (4.0 + log_kkp) / (cb * r), nf),
                ],
            ));
            preds.push(TheoremPredicate::from_conditions(
                "thm1",
                vec![
                    c_adm(false),
                    Condition::less("sample size", (4.0 + log_kkp) / (cb * r / 2.0), nf),
                ],
            ));
        }
        None => {
            let why = format!("ρ_2k needs 2k ≤ p (k = {k}, p = {p})");
            preds.push(TheoremPredicate::unavailable("prop2", why.clone()));
            preds.push(TheoremPredicate::unavailable("thm1", why));
        }
    }
    let rho_k1 = report.rho_cap.get(&1).copied();
    match (rho_2k, rho_k1, report.gamma.get(&k)) {
        (Some(r), Some(rk1), Some(gk)) => {
            let lbin = ln_binom(p, k);
            preds.push(TheoremPredicate::from_conditions(
                "thm2",
                vec![
                    c_adm(true),
                    g_cond("g(γ_k, ρ_k1, cσ)", gk.value, rk1),
                    Condition::less("log C(p,k) > 4 + log(k²(p-k))", 4.0 + log_kkp, lbin),
                    Condition::less("sample size", 2.0 * lbin / (cb * r * r), nf),
                ],
            ));
        }
        _ => preds.push(TheoremPredicate::unavailable("thm2", "ρ_2k, ρ_k1 or γ_k missing".into())),
    }
    match report.d_init {
        Some(d) if d > 1 => match (rho_2k, rho_k1, report.gamma.get(&(d - 1))) {
            (Some(r), Some(rk1), Some(gd)) => {
                let lbin = ln_binom(p, d);
                preds.push(TheoremPredicate::from_conditions(
                    "thm3",
                    vec![
                        c_adm(true),
                        g_cond("g(γ_{d-1}, ρ_k1, cσ)", gd.value, rk1),
                        Condition::less("3 log C(p,d) > 4 + log(k²(p-k))", 4.0 + log_kkp, 3.0 * lbin),
                        Condition::less("sample size", 6.0 * lbin / (cb * r * r), nf),
                    ],
                ));
            }
            _ => preds.push(TheoremPredicate::unavailable("thm3", "ρ_2k, ρ_k1 or γ_{d-1} missing".into())),
        },
        _ => preds.push(TheoremPredicate::unavailable(
            "thm3",
            "requires an initial support with d > 1".into(),
        )),
    }
    match (report.d_init, rho_2k, report.rho_km1_0) {
        (Some(d), Some(r), Some(rk)) if report.nu.contains_key(&d) => {
            let nu = report.nu[&d].value;
            preds.push(TheoremPredicate::from_conditions(
                "thm4",
                vec![
                    c_adm(true),
                    g_cond("g(ν_d, ρ_{k-1,0}/2, cσ)", nu, rk / 2.0),
                    Condition::less(
                        "sample size",
                        (2.0 * kf + (kf * (p - k) as f64).ln()) / (cb * r * r / 4.0),
                        nf,
                    ),
                ],
            ));
        }
        _ => preds.push(TheoremPredicate::unavailable(
            "thm4",
            "requires d, ν_d, ρ_2k and ρ_{k-1,0} (k ≥ 2)".into(),
        )),
    }
    (g_values, preds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{brute_force_best, gaussian_design, gaussian_vec};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orthonormal(n: usize, p: usize) -> DesignMatrix {
        let mut data = Array2::zeros((n, p));
        for j in 0..p {
            data[[j, j]] = (n as f64).sqrt();
        }
        DesignMatrix::new(data).unwrap()
    }

    fn ss(v: &[usize], p: usize) -> SupportSet {
        SupportSet::new(v.iter().copied(), p).unwrap()
    }

    /// `Xᵀ Π⊥[B] X / n` with `Π⊥[B] = I - X_B (X_BᵀX_B)⁻¹ X_Bᵀ` formed densely.
    fn dense_sigma(x: &DesignMatrix, b: &[usize]) -> DMatrix<f64> {
        let n = x.n();
        let xm = DMatrix::from_fn(n, x.p(), |i, j| x.data()[[i, j]]);
        let proj = if b.is_empty() {
            DMatrix::identity(n, n)
        } else {
            let xb = DMatrix::from_fn(n, b.len(), |i, j| x.data()[[i, b[j]]]);
            let inv = (xb.transpose() * &xb).try_inverse().unwrap();
            DMatrix::identity(n, n) - &xb * inv * xb.transpose()
        };
        xm.transpose() * proj * xm / n as f64
    }

    fn dense_ratio(sig: &DMatrix<f64>, t: usize, sbar: &[usize]) -> f64 {
        let m = DMatrix::from_fn(sbar.len(), sbar.len(), |a, b| sig[(sbar[a], sbar[b])]);
        let v = DVector::from_iterator(sbar.len(), sbar.iter().map(|&a| sig[(t, a)]));
        let z = m.try_inverse().unwrap() * v;
        z.iter().map(|v| v.abs()).sum::<f64>().powi(2)
    }

    fn dense_gamma(x: &DesignMatrix, s_star: &[usize], d: usize) -> f64 {
        let (p, k) = (x.p(), s_star.len());
        let mut worst: f64 = 0.0;
        for s in (0..p).combinations(k) {
            let missing: Vec<usize> = s_star.iter().copied().filter(|i| !s.contains(i)).collect();
            if missing.is_empty() || missing.len() > d {
                continue;
            }
            let mut best = f64::INFINITY;
            for &i in s.iter().filter(|i| !s_star.contains(i)) {
                let b: Vec<usize> = s.iter().copied().filter(|&j| j != i).collect();
                let sig = dense_sigma(x, &b);
                best = best.min(dense_ratio(&sig, i, &missing) / sig[(i, i)]);
            }
            worst = worst.max(best);
        }
        worst
    }

    fn dense_nu(x: &DesignMatrix, s_star: &[usize], d: usize) -> f64 {
        let (p, k) = (x.p(), s_star.len());
        let mut worst: f64 = 0.0;
        for s in (0..p).combinations(k) {
            let missing: Vec<usize> = s_star.iter().copied().filter(|i| !s.contains(i)).collect();
            if missing.is_empty() || missing.len() > d {
                continue;
            }
            let mut best = f64::INFINITY;
            for &i in s.iter().filter(|i| !s_star.contains(i)) {
                let mut inner = f64::NEG_INFINITY;
                for &j in s.iter().filter(|&&j| j != i) {
                    let a: Vec<usize> = s.iter().copied().filter(|&t| t != i && t != j).collect();
                    let sig = dense_sigma(x, &a);
                    let mut sbar = missing.clone();
                    sbar.push(j);
                    sbar.sort_unstable();
                    for jp in (0..p).filter(|t| !s.contains(t) && !s_star.contains(t)) {
                        let num = dense_ratio(&sig, i, &sbar) + dense_ratio(&sig, jp, &sbar);
                        inner = inner.max(num / sig[(i, i)].min(sig[(jp, jp)]));
                    }
                }
                best = best.min(inner);
            }
            worst = worst.max(best);
        }
        worst
    }

    /// Covariance with unit diagonal and `a` between the last index and
    /// each of the first `k`.
    fn bordered(p: usize, k: usize, a: f64) -> Array2<f64> {
        let mut s = Array2::eye(p);
        for i in 0..k {
            s[[i, p - 1]] = a;
            s[[p - 1, i]] = a;
        }
        s
    }

    fn exact_gram(sigma: &Array2<f64>) -> DesignMatrix {
        let p = sigma.nrows();
        let eig = crate::linalg::to_dmatrix(sigma).symmetric_eigen();
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let data = Array2::from_shape_fn((p, p), |(i, j)| root[(i, j)] * (p as f64).sqrt());
        DesignMatrix::new(data).unwrap()
    }

    #[test]
    fn esd_recovers_noiseless_truth() {
        let x = gaussian_design(10, 9, 1);
        let mut beta = Array1::zeros(9);
        beta[2] = 1.0;
        beta[6] = -0.7;
        let y = x.dot(beta.view());
        let res = esd(y.view(), &x, 2).unwrap();
        assert_eq!(res.support.as_slice(), &[2, 6]);
        assert!(res.loss < 1e-20);
        assert!(res.unique);
        assert_eq!(res.evaluated, 36);
    }

    #[test]
    fn esd_ties_and_trivial_cases() {
        let x = gaussian_design(6, 4, 2);
        let y = Array1::zeros(6);
        assert_eq!(esd(y.view(), &x, 2).unwrap().support.as_slice(), &[0, 1]);
        let y = gaussian_vec(6, 3);
        assert_eq!(esd(y.view(), &x, 4).unwrap().support.as_slice(), &[0, 1, 2, 3]);
    }

    #[test]
    fn esd_matches_brute_force_and_beats_random_supports() {
        let x = gaussian_design(12, 10, 4);
        let y = gaussian_vec(12, 5);
        let res = esd(y.view(), &x, 3).unwrap();
        let (bf, bf_loss) = brute_force_best(&y, &x, 3);
        assert_eq!(res.support, bf);
        assert!((res.loss - bf_loss).abs() <= 1e-9 * bf_loss);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let s = crate::solvers::random_support(10, 3, rng.random()).unwrap();
            assert!(fit_support(y.view(), &x, &s).unwrap().loss() >= res.loss);
        }
    }

    #[test]
    fn esd_guard() {
        let x = gaussian_design(30, 60, 7);
        let y = gaussian_vec(30, 8);
        assert!(matches!(
            esd(y.view(), &x, 10),
            Err(Error::CombinatorialBlowup { .. })
        ));
    }

    #[test]
    fn orthonormal_quantities() {
        let x = orthonormal(10, 8);
        let s = ss(&[1, 3, 5], 8);
        for l in 0..=3 {
            assert!((rho_plus(&x, &s, l).unwrap() - 1.0).abs() < 1e-12);
            assert!((rho_cap(&x, &s, l).unwrap() - 1.0).abs() < 1e-12);
        }
        for d in 1..=3 {
            assert!(gamma_d(&x, &s, d).unwrap().value.abs() < 1e-20);
            assert!(nu_d(&x, &s, d, NuMode::Appendix).unwrap().value.abs() < 1e-20);
        }
        assert!(zeta(&x, &s).unwrap().abs() < 1e-20);
    }

    #[test]
    fn bordered_restricted_eigenvalues() {
        let (p, k, a) = (12, 4, 0.4);
        let x = exact_gram(&bordered(p, k, a));
        let s = ss(&[0, 1, 2, 3], p);
        assert!((rho_plus(&x, &s, 0).unwrap() - 1.0).abs() < 1e-10);
        for l in 1..=3 {
            let r = rho_plus(&x, &s, l).unwrap();
            assert!((r - (1.0 - a * (k as f64).sqrt())).abs() < 1e-10, "ℓ = {l}: {r}");
        }
    }

    #[test]
    fn bordered_zeta_closed_form() {
        let (p, k, a) = (12, 4, 0.4);
        let x = exact_gram(&bordered(p, k, a));
        let z = zeta(&x, &ss(&[0, 1, 2, 3], p)).unwrap();
        assert!((z - (k as f64 * a).powi(2)).abs() < 1e-10);
    }

    #[test]
    fn bordered_gamma_closed_form() {
        // The worst support drops one active j and adds the bordered column:
        // ratio = a² / (1 - (k-1)a²). No other support has an inactive
        // column correlated with the missing actives.
        let (p, k, a) = (12, 4, 0.4);
        let x = exact_gram(&bordered(p, k, a));
        let s = ss(&[0, 1, 2, 3], p);
        let g = gamma_d(&x, &s, k).unwrap();
        let expect = a * a / (1.0 - (k as f64 - 1.0) * a * a);
        assert!((g.value - expect).abs() < 1e-10, "γ_k = {}", g.value);
        assert!(g.value < 1.0);
        assert!(g.argmax.unwrap().contains(p - 1));
    }

    #[test]
    fn rho_cap_matches_explicit_enumeration() {
        let x = gaussian_design(20, 12, 9);
        let s = ss(&[0, 4, 9], 12);
        for l in 0..=3 {
            let mut oracle = f64::INFINITY;
            for a in (0..12).combinations(3) {
                if a.iter().filter(|i| s.contains(**i)).count() < l {
                    continue;
                }
                let xa = DMatrix::from_fn(20, 3, |i, j| x.data()[[i, a[j]]]);
                let g = xa.transpose() * &xa / 20.0;
                oracle = oracle.min(g.symmetric_eigenvalues().min());
            }
            assert!((rho_cap(&x, &s, l).unwrap() - oracle).abs() < 1e-10);
        }
        assert_eq!(
            rho_cap(&x, &s, 3).unwrap(),
            min_eigenvalue(&x.gram(s.as_slice()))
        );
    }

    #[test]
    fn gamma_and_nu_match_dense_projector() {
        for seed in 0..3u64 {
            let x = gaussian_design(14, 8, 20 + seed);
            let star = [1usize, 4, 6];
            let s = ss(&star, 8);
            for d in 1..=3 {
                let g = gamma_d(&x, &s, d).unwrap().value;
                let oracle = dense_gamma(&x, &star, d);
                assert!((g - oracle).abs() <= 1e-9 * oracle.max(1.0), "γ_{d}: {g} vs {oracle}");
                let nu = nu_d(&x, &s, d, NuMode::Appendix).unwrap().value;
                let oracle = dense_nu(&x, &star, d);
                assert!((nu - oracle).abs() <= 1e-9 * oracle.max(1.0), "ν_{d}: {nu} vs {oracle}");
            }
        }
    }

    #[test]
    fn gamma_is_monotone_in_d() {
        let x = gaussian_design(15, 10, 30);
        let s = ss(&[0, 2, 5, 7], 10);
        let vals: Vec<f64> = (1..=4).map(|d| gamma_d(&x, &s, d).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn nu_single_active_has_no_swap_partner() {
        let x = gaussian_design(10, 6, 31);
        let v = nu_d(&x, &ss(&[2], 6), 1, NuMode::Appendix).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.supports_evaluated, 0);
        assert_eq!(v.supports_skipped, 5);
    }

    #[test]
    fn nu_two_variable_hand_formula() {
        // k = 2, S = {j, i} with j active and i inactive: A = ∅ and
        // S̄_j = {m, j} where m is the missing active. Each term is the
        // squared ℓ₁ norm of a 2×2 solve against Σ.
        let x = gaussian_design(12, 5, 32);
        let star = [0usize, 1];
        let sig = x.gram(&(0..5).collect::<Vec<_>>());
        let solve2 = |t: usize, m: usize, j: usize| {
            let (a, b, c) = (sig[[m, m]], sig[[m, j]], sig[[j, j]]);
            let det = a * c - b * b;
            let (u, v) = (sig[[t, m]], sig[[t, j]]);
            let z0 = (c * u - b * v) / det;
            let z1 = (a * v - b * u) / det;
            (z0.abs() + z1.abs()).powi(2)
        };
        let mut worst: f64 = 0.0;
        for s in (0..5).combinations(2) {
            let active: Vec<usize> = s.iter().copied().filter(|i| star.contains(i)).collect();
            if active.len() != 1 {
                continue;
            }
            let j = active[0];
            let i = s.iter().copied().find(|t| !star.contains(t)).unwrap();
            let m = star.iter().copied().find(|t| !s.contains(t)).unwrap();
            let mut inner = f64::NEG_INFINITY;
            for jp in (2..5).filter(|t| *t != i) {
                let num = solve2(i, m, j) + solve2(jp, m, j);
                inner = inner.max(num / sig[[i, i]].min(sig[[jp, jp]]));
            }
            worst = worst.max(inner);
        }
        let v = nu_d(&x, &ss(&star, 5), 1, NuMode::Appendix).unwrap().value;
        assert!((v - worst).abs() <= 1e-10 * worst.max(1.0));
    }

    #[test]
    fn nu_main_text_mode_is_singular_for_larger_k() {
        let x = gaussian_design(15, 8, 33);
        let v = nu_d(&x, &ss(&[0, 1, 2], 8), 1, NuMode::MainText).unwrap();
        assert!(v.singular_blocks > 0);
        assert_eq!(v.supports_evaluated, 0);
    }

    #[test]
    fn zeta_matches_direct_solve() {
        let x = gaussian_design(25, 9, 34);
        let star = [2usize, 3, 8];
        let s = ss(&star, 9);
        let xs = DMatrix::from_fn(25, 3, |i, j| x.data()[[i, star[j]]]);
        let inv = (xs.transpose() * &xs / 25.0).try_inverse().unwrap();
        let mut oracle: f64 = 0.0;
        for i in (0..9).filter(|i| !star.contains(i)) {
            let xi = DVector::from_iterator(25, x.column(i).iter().copied());
            let z = &inv * (xs.transpose() * xi / 25.0);
            oracle = oracle.max(z.iter().map(|v| v.abs()).sum::<f64>().powi(2));
        }
        assert!((zeta(&x, &s).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn g_values() {
        assert_eq!(g_eval(1.0, 0.3, 0.0).unwrap(), 0.0);
        assert_eq!(g_eval(0.0, 1.0, 0.0).unwrap(), -1.0);
        assert!((g_eval(0.25, 1.0, 0.1).unwrap() - (-0.43)).abs() < 1e-12);
        assert!(g_eval(-0.1, 1.0, 0.0).is_err());
        assert!(g_eval(0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn event_check() {
        let x = gaussian_design(10, 8, 35);
        let star = ss(&[1, 5], 8);
        let mut beta = Array1::zeros(8);
        beta[1] = 1.0;
        beta[5] = 1.0;
        let y = x.dot(beta.view());
        let ev = check_event_ekd(y.view(), &x, &star, &star, 0).unwrap();
        assert!(ev.holds);
        assert_eq!(ev.family_size, 27);

        // noisy instance: compare with a brute-force re-enumeration
        let y = gaussian_vec(10, 36);
        let s1 = ss(&[1, 2], 8);
        for d in 0..=2 {
            let ev = check_event_ekd(y.view(), &x, &s1, &star, d).unwrap();
            let mut min = f64::INFINITY;
            let mut size = 0;
            for s in (0..8).combinations(2) {
                let missing = star.iter().filter(|i| !s.contains(i)).count();
                if missing >= d && s != s1.as_slice() {
                    size += 1;
                    min = min.min(crate::testutil::normal_eq_loss(&y, &x, &s).unwrap());
                }
            }
            assert_eq!(ev.family_size, size);
            assert!((ev.family_min - min).abs() <= 1e-9 * min);
            let s1_loss = crate::testutil::normal_eq_loss(&y, &x, s1.as_slice()).unwrap();
            assert_eq!(ev.holds, s1_loss < min);
        }
    }

    #[test]
    fn predicates_noiseless_bordered() {
        let (p, k, a) = (12, 4, 0.4);
        let x = exact_gram(&bordered(p, k, a));
        let s = ss(&[0, 1, 2, 3], p);
        let mut beta = Array1::zeros(p);
        for i in 0..k {
            beta[i] = 1.0;
        }
        let opts = TheoryOptions {
            d_init: Some(2),
            ..TheoryOptions::default()
        };
        let rep = theory_report(&x, &s, Some(beta.view()), &opts).unwrap();
        let thm2 = rep.predicate("thm2").unwrap();
        assert!(thm2.condition("g(γ_k, ρ_k1, cσ)").unwrap().holds);
        let json: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        for key in ["rho_plus", "rho_cap", "gamma", "nu", "zeta", "beta_min", "predicates"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn predicates_fail_with_too_few_samples() {
        let x = gaussian_design(10, 8, 37);
        let s = ss(&[0, 1], 8);
        let mut beta = Array1::zeros(8);
        beta[0] = 0.1;
        beta[1] = 0.1;
        let opts = TheoryOptions {
            sigma: 1.0,
            ..TheoryOptions::default()
        };
        let rep = theory_report(&x, &s, Some(beta.view()), &opts).unwrap();
        let prop = rep.predicate("prop2").unwrap();
        assert!(!prop.condition("sample size").unwrap().holds);
        assert!(!prop.holds);
    }
}
