//! Shared fixtures and independent oracles for unit tests.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{DesignMatrix, SupportSet};

pub fn gaussian_design(n: usize, p: usize, seed: u64) -> DesignMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    DesignMatrix::new(data).unwrap().normalize_columns().unwrap()
}

pub fn gaussian_vec(n: usize, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal))
}

/// Residual sum of squares from the normal equations, `None` when `X_SᵀX_S`
/// is singular.
pub fn normal_eq_loss(y: &Array1<f64>, x: &DesignMatrix, s: &[usize]) -> Option<f64> {
    if s.is_empty() {
        return Some(y.dot(y));
    }
    let n = x.n();
    let xs = DMatrix::from_fn(n, s.len(), |r, c| x.data()[[r, s[c]]]);
    let yv = DVector::from_iterator(n, y.iter().copied());
    let g = xs.transpose() * &xs;
    let min_eig = g.clone().symmetric_eigenvalues().min();
    if min_eig <= 1e-10 * n as f64 {
        return None;
    }
    let alpha = g.try_inverse()? * (xs.transpose() * &yv);
    let r = yv - xs * alpha;
    Some(r.dot(&r))
}

/// Exhaustive minimizer over all size-`k` supports (first in lexicographic
/// order on ties).
pub fn brute_force_best(y: &Array1<f64>, x: &DesignMatrix, k: usize) -> (SupportSet, f64) {
    let mut best = (SupportSet::empty(), f64::INFINITY);
    for s in (0..x.p()).combinations(k) {
        if let Some(l) = normal_eq_loss(y, x, &s) {
            if l < best.1 {
                best = (SupportSet::new(s, x.p()).unwrap(), l);
            }
        }
    }
    best
}
