//! Least-squares kernel over column subsets of a design matrix.
//!
//! The central object is [`ActiveFit`], a thin QR factorization of `X_S`
//! together with the projected residual of `y`. Swapping one column out and
//! another in is done without refactorizing: the outgoing column is removed
//! with Givens rotations and the incoming column is projected against the
//! remaining orthonormal basis, which is the rank-one projection update
//!
//! ```text
//! Π[S] = Π[S\i] + (Π⊥[S\i] x_i)(Π⊥[S\i] x_i)ᵀ / (x_iᵀ Π⊥[S\i] x_i)
//! ```
//!
//! written in terms of the orthonormal factor.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative rank tolerance: a support is invalid once an `R` diagonal drops
/// below `RANK_TOL * sqrt(n)`.
pub const RANK_TOL: f64 = 1e-10;

/// Committed swaps between forced refactorizations.
pub const REBUILD_INTERVAL: usize = 64;

/// Largest tolerated `max |QᵀQ - I|` before the factorization is rebuilt.
pub const ORTHO_TOL: f64 = 1e-8;

/// The `n × p` measurement matrix, stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    data: Array2<f64>,
    normalized: bool,
}

impl DesignMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, p) = data.dim();
        if n == 0 || p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "design matrix must be non-empty, got {n}x{p}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut colmajor = Array2::zeros((n, p).f());
        colmajor.assign(&data);
        Ok(Self {
            data: colmajor,
            normalized: false,
        })
    }

    /// Builds from a column-major buffer of length `n * p`.
    pub fn from_column_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {n}x{p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        let data = Array2::from_shape_vec((n, p).f(), values)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Self::new(data)
    }

    /// Marks the matrix as normalized after checking `|‖X_i‖²/n - 1| ≤ 1e-12`.
    pub fn into_normalized(mut self) -> Result<Self> {
        let n = self.n() as f64;
        for j in 0..self.p() {
            let dev = (self.column_norm_sq(j) / n - 1.0).abs();
            if dev > 1e-12 {
                return Err(Error::InvalidSpec(format!(
                    "column {j} is not normalized (|‖X_j‖²/n - 1| = {dev:.3e})"
                )));
            }
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.data.column(j)
    }

    pub fn column_norm_sq(&self, j: usize) -> f64 {
        let c = self.column(j);
        c.dot(&c)
    }

    /// `Xᵀv`.
    pub fn t_dot(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        self.data.t().dot(&v)
    }

    /// `Xβ`.
    pub fn dot(&self, beta: ArrayView1<'_, f64>) -> Array1<f64> {
        self.data.dot(&beta)
    }

    /// The sub-matrix `X_A` with columns in the order given.
    pub fn select(&self, cols: &[usize]) -> Array2<f64> {
        self.data.select(Axis(1), cols)
    }

    /// `X_AᵀX_A / n`.
    pub fn gram(&self, cols: &[usize]) -> Array2<f64> {
        let xa = self.select(cols);
        xa.t().dot(&xa) / self.n() as f64
    }

    /// Keeps the given columns (in that order).
    pub fn subset_columns(&self, cols: &[usize]) -> Result<Self> {
        let mut out = Self::new(self.select(cols))?;
        out.normalized = self.normalized;
        Ok(out)
    }

    pub fn normalize_columns(&self) -> Result<Self> {
        normalize_columns(self)
    }
}

/// Rescales every column to `‖X_i‖² = n`.
pub fn normalize_columns(x: &DesignMatrix) -> Result<DesignMatrix> {
    let n = x.n() as f64;
    let mut data = x.data.clone();
    for (j, mut col) in data.axis_iter_mut(Axis(1)).enumerate() {
        let norm = col.dot(&col).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        let scale = n.sqrt() / norm;
        col.mapv_inplace(|v| v * scale);
    }
    Ok(DesignMatrix {
        data,
        normalized: true,
    })
}

/// A strictly increasing list of column indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    /// Sorts the indices; rejects duplicates and indices `≥ p`.
    pub fn new(indices: impl IntoIterator<Item = usize>, p: usize) -> Result<Self> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidSupport(format!("duplicate index {}", w[0])));
        }
        if let Some(&last) = v.last() {
            if last >= p {
                return Err(Error::InvalidSupport(format!(
                    "index {last} out of range for p = {p}"
                )));
            }
        }
        Ok(Self(v))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Caller guarantees the input is strictly increasing.
    pub(crate) fn from_sorted(v: Vec<usize>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Indices in `0..p` not in the support, ascending.
    pub fn complement(&self, p: usize) -> Vec<usize> {
        (0..p).filter(|&j| !self.contains(j)).collect()
    }

    pub fn intersection_len(&self, other: &SupportSet) -> usize {
        self.iter().filter(|&i| other.contains(i)).count()
    }

    /// Elements of `self` missing from `other`.
    pub fn difference(&self, other: &SupportSet) -> Vec<usize> {
        self.iter().filter(|&i| !other.contains(i)).collect()
    }

    /// `(S \ out) ∪ inc`.
    pub fn swapped(&self, out: &[usize], inc: &[usize]) -> SupportSet {
        let mut v: Vec<usize> = self.iter().filter(|i| !out.contains(i)).collect();
        v.extend_from_slice(inc);
        v.sort_unstable();
        v.dedup();
        SupportSet(v)
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl std::fmt::Display for SupportSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A `p`-vector whose nonzeros are confined to `support`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub values: Array1<f64>,
    pub support: SupportSet,
}

impl CoefficientVector {
    pub fn zeros(p: usize) -> Self {
        Self {
            values: Array1::zeros(p),
            support: SupportSet::empty(),
        }
    }

    /// Smallest nonzero magnitude; `None` for the zero vector.
    pub fn min_abs_nonzero(&self) -> Option<f64> {
        self.support
            .iter()
            .map(|i| self.values[i].abs())
            .filter(|v| *v > 0.0)
            .min_by(f64::total_cmp)
    }
}

fn rank_tol(n: usize) -> f64 {
    RANK_TOL * (n as f64).sqrt()
}

/// Two passes of classical Gram–Schmidt of `v` against the rows of `qt`.
/// Returns the accumulated coefficients `Qᵀv`.
fn orthogonalize(qt: ArrayView2<'_, f64>, v: &mut Array1<f64>) -> Array1<f64> {
    let mut coeffs = Array1::zeros(qt.nrows());
    if qt.nrows() == 0 {
        return coeffs;
    }
    for _ in 0..2 {
        let c = qt.dot(&*v);
        *v -= &qt.t().dot(&c);
        coeffs += &c;
    }
    coeffs
}

/// Orthonormal basis for the span of a set of columns, tolerant of
/// dependent columns (they are skipped).
#[derive(Clone, Debug)]
pub struct Projector {
    qt: Array2<f64>,
}

impl Projector {
    pub fn new(x: &DesignMatrix, cols: &[usize]) -> Self {
        let n = x.n();
        let tol = rank_tol(n) * (n as f64).sqrt().max(1.0);
        let mut rows: Vec<Array1<f64>> = Vec::with_capacity(cols.len());
        let mut qt = Array2::zeros((0, n));
        for &j in cols {
            let mut v = x.column(j).to_owned();
            let scale = v.dot(&v).sqrt();
            orthogonalize(qt.view(), &mut v);
            let rho = v.dot(&v).sqrt();
            if rho <= tol.min(1e-10 * scale.max(f64::MIN_POSITIVE)).max(1e-14 * scale) {
                continue;
            }
            rows.push(v / rho);
            qt = stack_rows(&rows, n);
        }
        Self { qt }
    }

    pub fn rank(&self) -> usize {
        self.qt.nrows()
    }

    /// `Π⊥ v`.
    pub fn residual(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut out = v.to_owned();
        orthogonalize(self.qt.view(), &mut out);
        out
    }
}

fn stack_rows(rows: &[Array1<f64>], n: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), n));
    for (k, r) in rows.iter().enumerate() {
        out.row_mut(k).assign(r);
    }
    out
}

/// Thin QR factorization of `X_S` plus the projected residual of `y`.
///
/// Columns of the factorization are kept in insertion order (`order`);
/// `support` is the same set sorted.
#[derive(Clone, Debug)]
pub struct ActiveFit {
    support: SupportSet,
    order: Vec<usize>,
    /// Rows are the orthonormal columns of `Q`.
    qt: Array2<f64>,
    r: Array2<f64>,
    qty: Array1<f64>,
    residual: Array1<f64>,
    loss: f64,
    y_norm_sq: f64,
    swaps_since_rebuild: usize,
}

impl ActiveFit {
    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    /// `L(S; y, X) = ‖Π⊥[S] y‖²`.
    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn residual_norm_sq(&self) -> f64 {
        self.loss
    }

    pub fn residual(&self) -> ArrayView1<'_, f64> {
        self.residual.view()
    }

    /// `Qᵀy`, in factorization order.
    pub fn qty(&self) -> ArrayView1<'_, f64> {
        self.qty.view()
    }

    /// Column indices in factorization order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn q(&self) -> Array2<f64> {
        self.qt.t().to_owned()
    }

    pub fn r(&self) -> ArrayView2<'_, f64> {
        self.r.view()
    }

    pub fn y_norm_sq(&self) -> f64 {
        self.y_norm_sq
    }

    /// `max |QᵀQ - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let g = self.qt.dot(&self.qt.t());
        let mut worst: f64 = 0.0;
        for ((i, j), v) in g.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
        worst
    }

    /// Least-squares coefficients on the support, as a `p`-vector.
    pub fn coefficients(&self, p: usize) -> CoefficientVector {
        let s = self.order.len();
        let mut alpha = Array1::<f64>::zeros(s);
        for i in (0..s).rev() {
            let mut acc = self.qty[i];
            for j in i + 1..s {
                acc -= self.r[[i, j]] * alpha[j];
            }
            alpha[i] = acc / self.r[[i, i]];
        }
        let mut values = Array1::zeros(p);
        for (k, &col) in self.order.iter().enumerate() {
            values[col] = alpha[k];
        }
        CoefficientVector {
            values,
            support: self.support.clone(),
        }
    }

    /// Loss after appending `cols` to the support, without committing; `+∞`
    /// if the enlarged support is rank deficient.
    pub fn loss_with_added(&self, x: &DesignMatrix, cols: &[usize]) -> f64 {
        let n = x.n();
        let mut rows: Vec<Array1<f64>> = Vec::with_capacity(cols.len());
        let mut residual = self.residual.clone();
        for &j in cols {
            let mut w = x.column(j).to_owned();
            orthogonalize(self.qt.view(), &mut w);
            for _ in 0..2 {
                for q in &rows {
                    let c = q.dot(&w);
                    w.scaled_add(-c, q);
                }
            }
            let rho = w.dot(&w).sqrt();
            if !(rho >= rank_tol(n)) {
                return f64::INFINITY;
            }
            let q = w / rho;
            let c = q.dot(&residual);
            residual.scaled_add(-c, &q);
            rows.push(q);
        }
        residual.dot(&residual)
    }

    /// Removes `var` from the factorization by Givens rotations.
    pub fn remove(&self, var: usize) -> Result<Downdated> {
        let pos = self
            .order
            .iter()
            .position(|&c| c == var)
            .ok_or_else(|| Error::InvalidSupport(format!("{var} is not in {}", self.support)))?;
        let s = self.order.len();
        let n = self.residual.len();
        let mut r = Array2::<f64>::zeros((s, s - 1));
        for (dst, src) in (0..s).filter(|&c| c != pos).enumerate() {
            r.column_mut(dst).assign(&self.r.column(src));
        }
        let mut qt = self.qt.clone();
        let mut qty = self.qty.clone();
        for j in pos..s - 1 {
            let a = r[[j, j]];
            let b = r[[j + 1, j]];
            let h = a.hypot(b);
            if h == 0.0 {
                continue;
            }
            let (c, sn) = (a / h, b / h);
            for col in j..s - 1 {
                let (u, v) = (r[[j, col]], r[[j + 1, col]]);
                r[[j, col]] = c * u + sn * v;
                r[[j + 1, col]] = -sn * u + c * v;
            }
            r[[j + 1, j]] = 0.0;
            for t in 0..n {
                let (u, v) = (qt[[j, t]], qt[[j + 1, t]]);
                qt[[j, t]] = c * u + sn * v;
                qt[[j + 1, t]] = -sn * u + c * v;
            }
            let (u, v) = (qty[j], qty[j + 1]);
            qty[j] = c * u + sn * v;
            qty[j + 1] = -sn * u + c * v;
        }
        let dropped_q = qt.row(s - 1).to_owned();
        let dropped_c = qty[s - 1];
        let residual = &self.residual + &(dropped_q * dropped_c);
        let loss = residual.dot(&residual);
        let mut order = self.order.clone();
        order.remove(pos);
        let tol = rank_tol(n);
        let valid = (0..s - 1).all(|j| r[[j, j]].abs() >= tol);
        Ok(Downdated {
            removed: var,
            order,
            qt: qt.slice(s![..s - 1, ..]).to_owned(),
            r: r.slice(s![..s - 1, ..]).to_owned(),
            qty: qty.slice(s![..s - 1]).to_owned(),
            residual,
            loss,
            valid,
            y_norm_sq: self.y_norm_sq,
            swaps_since_rebuild: self.swaps_since_rebuild,
        })
    }
}

/// An [`ActiveFit`] with one column removed, ready to score incoming columns.
#[derive(Clone, Debug)]
pub struct Downdated {
    removed: usize,
    order: Vec<usize>,
    qt: Array2<f64>,
    r: Array2<f64>,
    qty: Array1<f64>,
    residual: Array1<f64>,
    loss: f64,
    valid: bool,
    y_norm_sq: f64,
    swaps_since_rebuild: usize,
}

impl Downdated {
    pub fn removed(&self) -> usize {
        self.removed
    }

    /// `‖Π⊥[S\i] y‖²`.
    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn residual(&self) -> ArrayView1<'_, f64> {
        self.residual.view()
    }

    /// Loss after appending column `x`, or `+∞` if `x` is (numerically) in
    /// the span of the remaining columns.
    pub fn candidate_loss(&self, x: ArrayView1<'_, f64>) -> f64 {
        if !self.valid {
            return f64::INFINITY;
        }
        let n = x.len();
        let xx = x.dot(&x);
        let c = self.qt.dot(&x);
        let w_sq_fast = xx - c.dot(&c);
        let (w_sq, proj) = if w_sq_fast >= 1e-4 * xx {
            (w_sq_fast, x.dot(&self.residual))
        } else {
            let mut w = x.to_owned();
            orthogonalize(self.qt.view(), &mut w);
            (w.dot(&w), w.dot(&self.residual))
        };
        if !(w_sq.sqrt() >= rank_tol(n)) {
            return f64::INFINITY;
        }
        (self.loss - proj * proj / w_sq).max(0.0)
    }

    /// Commits column `j` of `x`, producing a fit on `(S\i) ∪ {j}`.
    fn append(&self, x: &DesignMatrix, j: usize, loss: f64) -> Result<ActiveFit> {
        let n = x.n();
        let mut w = x.column(j).to_owned();
        let coeffs = orthogonalize(self.qt.view(), &mut w);
        let rho = w.dot(&w).sqrt();
        if !(rho >= rank_tol(n)) || !self.valid {
            let mut cols = self.order.clone();
            cols.push(j);
            cols.sort_unstable();
            return Err(Error::rank_deficient(&cols));
        }
        let q = w / rho;
        let s = self.order.len();
        let mut qt = Array2::zeros((s + 1, n));
        qt.slice_mut(s![..s, ..]).assign(&self.qt);
        qt.row_mut(s).assign(&q);
        let mut r = Array2::zeros((s + 1, s + 1));
        r.slice_mut(s![..s, ..s]).assign(&self.r);
        r.slice_mut(s![..s, s]).assign(&coeffs);
        r[[s, s]] = rho;
        let c = q.dot(&self.residual);
        let mut qty = Array1::zeros(s + 1);
        qty.slice_mut(s![..s]).assign(&self.qty);
        qty[s] = c;
        let residual = &self.residual - &(&q * c);
        let mut order = self.order.clone();
        order.push(j);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        Ok(ActiveFit {
            support: SupportSet::from_sorted(sorted),
            order,
            qt,
            r,
            qty,
            residual,
            loss,
            y_norm_sq: self.y_norm_sq,
            swaps_since_rebuild: self.swaps_since_rebuild + 1,
        })
    }
}

fn check_y(y: ArrayView1<'_, f64>, x: &DesignMatrix) -> Result<()> {
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

/// Factorizes `X_S` and computes `L(S; y, X)`.
pub fn fit_support(y: ArrayView1<'_, f64>, x: &DesignMatrix, s: &SupportSet) -> Result<ActiveFit> {
    check_y(y, x)?;
    let n = x.n();
    if s.iter().any(|i| i >= x.p()) {
        return Err(Error::InvalidSupport(format!("{s} out of range for p = {}", x.p())));
    }
    if s.len() > n {
        return Err(Error::rank_deficient(s.as_slice()));
    }
    let tol = rank_tol(n);
    let k = s.len();
    let mut qt = Array2::<f64>::zeros((k, n));
    let mut r = Array2::<f64>::zeros((k, k));
    for (pos, j) in s.iter().enumerate() {
        let mut w = x.column(j).to_owned();
        let coeffs = orthogonalize(qt.slice(s![..pos, ..]), &mut w);
        let rho = w.dot(&w).sqrt();
        if !(rho >= tol) {
            return Err(Error::rank_deficient(s.as_slice()));
        }
        qt.row_mut(pos).assign(&(w / rho));
        r.slice_mut(s![..pos, pos]).assign(&coeffs);
        r[[pos, pos]] = rho;
    }
    let mut residual = y.to_owned();
    let qty = orthogonalize(qt.view(), &mut residual);
    let loss = residual.dot(&residual);
    Ok(ActiveFit {
        support: s.clone(),
        order: s.as_slice().to_vec(),
        qt,
        r,
        qty,
        residual,
        loss,
        y_norm_sq: y.dot(&y),
        swaps_since_rebuild: 0,
    })
}

fn check_swap(fit: &ActiveFit, i: usize, i_new: usize, x: &DesignMatrix) -> Result<()> {
    if !fit.support.contains(i) {
        return Err(Error::InvalidSupport(format!("{i} is not in {}", fit.support)));
    }
    if fit.support.contains(i_new) {
        return Err(Error::InvalidSupport(format!("{i_new} is already in {}", fit.support)));
    }
    if i_new >= x.p() {
        return Err(Error::InvalidSupport(format!("{i_new} out of range for p = {}", x.p())));
    }
    Ok(())
}

/// `L((S\i) ∪ {i_new}; y, X)` without mutating `fit`; `+∞` when the swapped
/// support is rank deficient.
pub fn swap_loss(fit: &ActiveFit, i: usize, i_new: usize, x: &DesignMatrix) -> Result<f64> {
    check_swap(fit, i, i_new, x)?;
    Ok(fit.remove(i)?.candidate_loss(x.column(i_new)))
}

/// Commits the swap previewed by [`swap_loss`].
pub fn apply_swap(
    fit: &ActiveFit,
    i: usize,
    i_new: usize,
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
) -> Result<ActiveFit> {
    check_swap(fit, i, i_new, x)?;
    let down = fit.remove(i)?;
    commit(&down, i_new, y, x)
}

/// Appends `j` to a downdated fit, rebuilding the factorization when it is
/// due or has lost orthogonality.
pub(crate) fn commit(
    down: &Downdated,
    j: usize,
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
) -> Result<ActiveFit> {
    let loss = down.candidate_loss(x.column(j));
    if !loss.is_finite() {
        let mut cols = down.order.clone();
        cols.push(j);
        cols.sort_unstable();
        return Err(Error::rank_deficient(&cols));
    }
    let next = down.append(x, j, loss)?;
    if next.swaps_since_rebuild >= REBUILD_INTERVAL || next.orthogonality_error() > ORTHO_TOL {
        return fit_support(y, x, &next.support);
    }
    Ok(next)
}

/// Constrained least squares: `argmin ‖y - X_S α‖²` embedded in a `p`-vector.
pub fn constrained_ls(
    y: ArrayView1<'_, f64>,
    x: &DesignMatrix,
    s: &SupportSet,
) -> Result<CoefficientVector> {
    Ok(fit_support(y, x, s)?.coefficients(x.p()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Array2<f64>) -> f64 {
    let k = m.nrows();
    if k == 0 {
        return f64::INFINITY;
    }
    let mat = to_dmatrix(m);
    mat.symmetric_eigenvalues().min()
}

pub(crate) fn to_dmatrix(m: &Array2<f64>) -> nalgebra::DMatrix<f64> {
    let (r, c) = m.dim();
    nalgebra::DMatrix::from_fn(r, c, |i, j| m[[i, j]])
}

pub(crate) fn from_dmatrix(m: &nalgebra::DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Solves the symmetric positive definite system `M z = b`; `None` if `M`
/// is not numerically positive definite.
pub(crate) fn spd_solve(m: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let chol = nalgebra::Cholesky::new(to_dmatrix(m))?;
    let l = chol.l();
    let max_diag = (0..l.nrows()).map(|i| l[(i, i)]).fold(0.0, f64::max);
    let min_diag = (0..l.nrows()).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
    if !(min_diag > 1e-7 * max_diag.max(1e-300)) {
        return None;
    }
    let rhs = nalgebra::DVector::from_iterator(b.len(), b.iter().copied());
    let z = chol.solve(&rhs);
    Some(Array1::from_iter(z.iter().copied()))
}
