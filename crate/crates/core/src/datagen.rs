//! Synthetic sparse regression problems.

use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_dmatrix, min_eigenvalue, to_dmatrix, CoefficientVector, DesignMatrix, SupportSet};

/// Population covariance of the design rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceSpec {
    Identity { p: usize },
    /// Equicorrelated blocks of size `block_size` with off-diagonal `a`.
    BlockDiagonal { p: usize, block_size: usize, a: f64 },
    /// Unit diagonal plus correlation `a` between the last variable and
    /// each of the first `k`.
    Example44 { p: usize, k: usize, a: f64 },
}

impl CovarianceSpec {
    pub fn p(&self) -> usize {
        match *self {
            CovarianceSpec::Identity { p }
            | CovarianceSpec::BlockDiagonal { p, .. }
            | CovarianceSpec::Example44 { p, .. } => p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CovarianceSpec::Identity { p } if p == 0 => {
                Err(Error::InvalidSpec("p must be positive".into()))
            }
            CovarianceSpec::BlockDiagonal { p, block_size, a } => {
                if block_size == 0 || p == 0 || p % block_size != 0 {
                    return Err(Error::InvalidSpec(format!(
                        "block size {block_size} must divide p = {p}"
                    )));
                }
                if !(0.0..1.0).contains(&a) {
                    return Err(Error::InvalidSpec(format!("block correlation must lie in [0, 1), got {a}")));
                }
                Ok(())
            }
            CovarianceSpec::Example44 { p, k, a } => {
                if k == 0 || k >= p {
                    return Err(Error::InvalidSpec(format!("need 1 ≤ k < p, got k = {k}, p = {p}")));
                }
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::InvalidSpec(format!("a must be non-negative, got {a}")));
                }
                // eigenvalues are 1 and 1 ± a√k
                let lmin = 1.0 - a * (k as f64).sqrt();
                if lmin <= 0.0 {
                    return Err(Error::NotPositiveDefinite { min_eigenvalue: lmin });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Index ranges that are mutually uncorrelated.
    fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        match *self {
            CovarianceSpec::Identity { p } => (0..p).map(|j| j..j + 1).collect(),
            CovarianceSpec::BlockDiagonal { p, block_size, .. } => {
                (0..p / block_size).map(|b| b * block_size..(b + 1) * block_size).collect()
            }
            CovarianceSpec::Example44 { p, .. } => vec![0..p],
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks().len()
    }
}

/// The `p × p` covariance described by `spec`.
pub fn build_covariance(spec: &CovarianceSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let p = spec.p();
    let mut s = Array2::eye(p);
    match *spec {
        CovarianceSpec::Identity { .. } => {}
        CovarianceSpec::BlockDiagonal { a, .. } => {
            for r in spec.blocks() {
                for i in r.clone() {
                    for j in r.clone() {
                        if i != j {
                            s[[i, j]] = a;
                        }
                    }
                }
            }
        }
        CovarianceSpec::Example44 { k, a, .. } => {
            for i in 0..k {
                s[[i, p - 1]] = a;
                s[[p - 1, i]] = a;
            }
        }
    }
    if nalgebra::Cholesky::new(to_dmatrix(&s)).is_none() {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min_eigenvalue(&s),
        });
    }
    Ok(s)
}

/// `n` rows drawn i.i.d. from `N(0, Σ)` (block-wise Cholesky factor times
/// standard normals), then column-normalized.
pub fn sample_gaussian_design(spec: &CovarianceSpec, n: usize, seed: u64) -> Result<DesignMatrix> {
    let sigma = build_covariance(spec)?;
    let p = spec.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    let mut data = Array2::zeros((n, p));
    for r in spec.blocks() {
        let block = sigma.slice(ndarray::s![r.clone(), r.clone()]).to_owned();
        let chol = nalgebra::Cholesky::new(to_dmatrix(&block)).ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: min_eigenvalue(&block),
        })?;
        let l = from_dmatrix(&chol.l());
        let zb = z.slice(ndarray::s![.., r.clone()]);
        data.slice_mut(ndarray::s![.., r]).assign(&zb.dot(&l.t()));
    }
    DesignMatrix::new(data)?.normalize_columns()
}

/// `X = √p · Σ^{1/2}` with `n = p`, so that `XᵀX/n = Σ` exactly (up to
/// rounding).
pub fn exact_gram_design(spec: &CovarianceSpec) -> Result<DesignMatrix> {
    let sigma = build_covariance(spec)?;
    let p = spec.p();
    let eig = to_dmatrix(&sigma).symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eig.eigenvectors * nalgebra::DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    let scale = (p as f64).sqrt();
    // symmetrize away rounding so the Gram is symmetric to the last bit
    let data = Array2::from_shape_fn((p, p), |(i, j)| 0.5 * (root[(i, j)] + root[(j, i)]) * scale);
    DesignMatrix::new(data)
}

/// How active variables are spread across the covariance blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SupportLayout {
    /// Each active variable in a different block.
    OnePerBlock,
    /// `blocks` blocks chosen, `per_block` actives in each.
    GroupedPerBlock { blocks: usize, per_block: usize },
    /// The first `k` indices (the bordered example's support).
    Leading,
}

/// Chooses a size-`k` support following `layout`; blocks and members are
/// drawn uniformly with the given seed.
pub fn place_support(
    spec: &CovarianceSpec,
    k: usize,
    layout: &SupportLayout,
    seed: u64,
) -> Result<SupportSet> {
    spec.validate()?;
    let p = spec.p();
    let blocks = spec.blocks();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = match *layout {
        SupportLayout::Leading => {
            if k > p {
                return Err(Error::InvalidSpec(format!("k = {k} exceeds p = {p}")));
            }
            (0..k).collect()
        }
        SupportLayout::OnePerBlock => {
            if k > blocks.len() {
                return Err(Error::InvalidSpec(format!(
                    "k = {k} actives cannot sit in distinct blocks of {} blocks",
                    blocks.len()
                )));
            }
            let mut chosen = index::sample(&mut rng, blocks.len(), k).into_vec();
            chosen.sort_unstable();
            chosen
                .into_iter()
                .map(|b| {
                    let r = &blocks[b];
                    r.start + rng.random_range(0..r.len())
                })
                .collect()
        }
        SupportLayout::GroupedPerBlock { blocks: nb, per_block } => {
            if nb * per_block != k {
                return Err(Error::InvalidSpec(format!(
                    "{nb} blocks × {per_block} per block ≠ k = {k}"
                )));
            }
            let eligible: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].len() >= per_block).collect();
            if nb > eligible.len() {
                return Err(Error::InvalidSpec(format!(
                    "only {} blocks hold {per_block} variables, {nb} requested",
                    eligible.len()
                )));
            }
            let mut chosen: Vec<usize> = index::sample(&mut rng, eligible.len(), nb)
                .into_iter()
                .map(|t| eligible[t])
                .collect();
            chosen.sort_unstable();
            let mut out = Vec::with_capacity(k);
            for b in chosen {
                let r = &blocks[b];
                out.extend(index::sample(&mut rng, r.len(), per_block).into_iter().map(|t| r.start + t));
            }
            out
        }
    };
    SupportSet::new(idx, p)
}

/// `β*` with `|β_i| = magnitude` on `s_star` and independent fair signs.
pub fn gen_beta(s_star: &SupportSet, p: usize, magnitude: f64, seed: u64) -> Result<CoefficientVector> {
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidSpec(format!("magnitude must be positive, got {magnitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array1::zeros(p);
    for i in s_star.iter() {
        values[i] = if rng.random::<bool>() { magnitude } else { -magnitude };
    }
    Ok(CoefficientVector {
        values,
        support: s_star.clone(),
    })
}

/// A sparse regression problem with its generating pieces kept for audit.
#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub x: DesignMatrix,
    pub y: Array1<f64>,
    pub beta_star: CoefficientVector,
    pub s_star: SupportSet,
    pub w: Array1<f64>,
    pub sigma: f64,
    pub seed: u64,
    pub spec: Option<CovarianceSpec>,
}

impl SyntheticInstance {
    pub fn beta_min(&self) -> f64 {
        self.beta_star.min_abs_nonzero().unwrap_or(0.0)
    }
}

/// Folds `parts` into `master` with the splitmix64 finalizer, giving
/// well-mixed, order-sensitive child seeds.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

const SEED_DESIGN: u64 = 1;
pub(crate) const SEED_SUPPORT: u64 = 2;
const SEED_BETA: u64 = 3;
const SEED_NOISE: u64 = 4;

/// Draws `β*` and Gaussian noise for a fixed design and support:
/// `y = Xβ* + w`, `w ~ N(0, σ²I)`.
pub fn instance_from_design(
    x: DesignMatrix,
    s_star: SupportSet,
    magnitude: f64,
    sigma: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSpec(format!("σ must be non-negative, got {sigma}")));
    }
    let p = x.p();
    if s_star.iter().any(|i| i >= p) {
        return Err(Error::InvalidSupport(format!("{s_star} out of range for p = {p}")));
    }
    let beta_star = gen_beta(&s_star, p, magnitude, derive_seed(seed, &[SEED_BETA]))?;
    instance_with_beta(x, beta_star, sigma, seed)
}

/// `y = Xβ* + w` for a given `β*`; the noise stream depends only on `seed`.
pub fn instance_with_beta(
    x: DesignMatrix,
    beta_star: CoefficientVector,
    sigma: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSpec(format!("σ must be non-negative, got {sigma}")));
    }
    if beta_star.values.len() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "β has length {}, p = {}",
            beta_star.values.len(),
            x.p()
        )));
    }
    let s_star = beta_star.support.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[SEED_NOISE]));
    let w = Array1::from_shape_fn(x.n(), |_| sigma * rng.sample::<f64, _>(StandardNormal));
    let y = x.dot(beta_star.values.view()) + &w;
    Ok(SyntheticInstance {
        x,
        y,
        beta_star,
        s_star,
        w,
        sigma,
        seed,
        spec: None,
    })
}

/// Samples a Gaussian design, places the support, and draws `β*` and noise.
pub fn synthesize(
    spec: &CovarianceSpec,
    n: usize,
    k: usize,
    sigma: f64,
    layout: &SupportLayout,
    seed: u64,
) -> Result<SyntheticInstance> {
    synthesize_scaled(spec, n, k, sigma, 1.0, layout, seed)
}

/// [`synthesize`] with `|β*_i| = magnitude` on the support.
pub fn synthesize_scaled(
    spec: &CovarianceSpec,
    n: usize,
    k: usize,
    sigma: f64,
    magnitude: f64,
    layout: &SupportLayout,
    seed: u64,
) -> Result<SyntheticInstance> {
    let x = sample_gaussian_design(spec, n, derive_seed(seed, &[SEED_DESIGN]))?;
    let s_star = place_support(spec, k, layout, derive_seed(seed, &[SEED_SUPPORT]))?;
    let mut inst = instance_from_design(x, s_star, magnitude, sigma, seed)?;
    inst.spec = Some(spec.clone());
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fit_support;

    #[test]
    fn identity_covariance() {
        assert_eq!(build_covariance(&CovarianceSpec::Identity { p: 4 }).unwrap(), Array2::<f64>::eye(4));
    }

    #[test]
    fn bordered_entries() {
        let s = build_covariance(&CovarianceSpec::Example44 { p: 6, k: 2, a: 0.3 }).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j {
                    1.0
                } else if (i == 5 && j < 2) || (j == 5 && i < 2) {
                    0.3
                } else {
                    0.0
                };
                assert_eq!(s[[i, j]], expect, "({i}, {j})");
            }
        }
    }

    #[test]
    fn bordered_not_positive_definite() {
        let spec = CovarianceSpec::Example44 { p: 6, k: 2, a: 0.8 };
        match build_covariance(&spec) {
            Err(Error::NotPositiveDefinite { min_eigenvalue }) => {
                assert!((min_eigenvalue - (1.0 - 0.8 * 2f64.sqrt())).abs() < 1e-12);
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn block_spec_validation() {
        assert!(CovarianceSpec::BlockDiagonal { p: 10, block_size: 3, a: 0.5 }.validate().is_err());
        assert!(CovarianceSpec::BlockDiagonal { p: 10, block_size: 5, a: 1.0 }.validate().is_err());
        assert!(CovarianceSpec::BlockDiagonal { p: 10, block_size: 5, a: 0.0 }.validate().is_ok());
    }

    #[test]
    fn identity_design_is_nearly_orthogonal() {
        let (n, p) = (400, 6);
        for seed in 0..20 {
            let x = sample_gaussian_design(&CovarianceSpec::Identity { p }, n, seed).unwrap();
            assert!(x.is_normalized());
            let g = x.gram(&(0..p).collect::<Vec<_>>());
            for i in 0..p {
                for j in 0..p {
                    if i != j {
                        assert!(g[[i, j]].abs() <= 4.0 / (n as f64).sqrt());
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = CovarianceSpec::BlockDiagonal { p: 12, block_size: 4, a: 0.5 };
        let a = sample_gaussian_design(&spec, 10, 3).unwrap();
        let b = sample_gaussian_design(&spec, 10, 3).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn strong_blocks_dominate_cross_correlations() {
        let spec = CovarianceSpec::BlockDiagonal { p: 12, block_size: 4, a: 0.9 };
        let all: Vec<usize> = (0..12).collect();
        for seed in 0..20 {
            let x = sample_gaussian_design(&spec, 100, seed).unwrap();
            let g = x.gram(&all);
            let mut cross: f64 = 0.0;
            for i in 0..12 {
                for j in 0..12 {
                    if i / 4 != j / 4 {
                        cross = cross.max(g[[i, j]].abs());
                    }
                }
            }
            for b in 0..3 {
                let mut within = f64::INFINITY;
                for i in b * 4..(b + 1) * 4 {
                    for j in b * 4..(b + 1) * 4 {
                        if i != j {
                            within = within.min(g[[i, j]]);
                        }
                    }
                }
                assert!(within > cross, "seed {seed}, block {b}");
            }
        }
    }

    #[test]
    fn exact_gram_reproduces_covariance() {
        let id = exact_gram_design(&CovarianceSpec::Identity { p: 5 }).unwrap();
        for ((i, j), v) in id.data().indexed_iter() {
            let expect = if i == j { 5f64.sqrt() } else { 0.0 };
            assert!((v - expect).abs() < 1e-14);
        }
        let spec = CovarianceSpec::Example44 { p: 12, k: 4, a: 0.4 };
        let x = exact_gram_design(&spec).unwrap();
        let sigma = build_covariance(&spec).unwrap();
        let g = x.gram(&(0..12).collect::<Vec<_>>());
        for ((i, j), v) in g.indexed_iter() {
            assert!((v - sigma[[i, j]]).abs() <= 1e-12);
            assert!((v - g[[j, i]]).abs() <= 1e-13);
        }
        assert!(x.into_normalized().is_ok());
    }

    #[test]
    fn bordered_round_trip_zeta() {
        let spec = CovarianceSpec::Example44 { p: 12, k: 4, a: 0.4 };
        let x = exact_gram_design(&spec).unwrap();
        let s = place_support(&spec, 4, &SupportLayout::Leading, 0).unwrap();
        let z = crate::theory::zeta(&x, &s).unwrap();
        assert!((z - 2.56).abs() < 1e-10);
    }

    #[test]
    fn support_layouts() {
        let spec = CovarianceSpec::BlockDiagonal { p: 100, block_size: 20, a: 0.5 };
        let s = place_support(&spec, 5, &SupportLayout::OnePerBlock, 7).unwrap();
        let mut blocks: Vec<usize> = s.iter().map(|i| i / 20).collect();
        blocks.dedup();
        assert_eq!(blocks.len(), 5);
        assert_eq!(s, place_support(&spec, 5, &SupportLayout::OnePerBlock, 7).unwrap());

        let e2 = CovarianceSpec::BlockDiagonal { p: 1000, block_size: 50, a: 0.5 };
        let layout = SupportLayout::GroupedPerBlock { blocks: 5, per_block: 4 };
        let s = place_support(&e2, 20, &layout, 1).unwrap();
        assert_eq!(s.len(), 20);
        let mut counts = std::collections::BTreeMap::new();
        for i in s.iter() {
            *counts.entry(i / 50).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 5);
        assert!(counts.values().all(|&c| c == 4));
        assert!(place_support(&spec, 6, &SupportLayout::OnePerBlock, 0).is_err());
    }

    #[test]
    fn beta_signs() {
        let s = SupportSet::new([1, 3, 4], 6).unwrap();
        let b = gen_beta(&s, 6, 1.0, 5).unwrap();
        for i in 0..6 {
            assert_eq!(b.values[i].abs(), if s.contains(i) { 1.0 } else { 0.0 });
        }
        let one = SupportSet::new([0], 1).unwrap();
        let draws = 10_000u64;
        let positive = (0..draws)
            .filter(|&t| gen_beta(&one, 1, 1.0, t).unwrap().values[0] > 0.0)
            .count() as f64;
        let sd = (draws as f64 * 0.25).sqrt();
        assert!((positive - draws as f64 / 2.0).abs() <= 3.0 * sd);
    }

    #[test]
    fn synthesize_properties() {
        let spec = CovarianceSpec::BlockDiagonal { p: 40, block_size: 8, a: 0.6 };
        let inst = synthesize(&spec, 30, 5, 0.0, &SupportLayout::OnePerBlock, 11).unwrap();
        assert!(fit_support(inst.y.view(), &inst.x, &inst.s_star).unwrap().loss() < 1e-20);
        assert_eq!(inst.beta_min(), 1.0);
        let again = synthesize(&spec, 30, 5, 0.0, &SupportLayout::OnePerBlock, 11).unwrap();
        assert!(inst.y.iter().zip(&again.y).all(|(a, b)| a.to_bits() == b.to_bits()));

        let n = 200;
        for seed in 0..20 {
            let inst = synthesize(&spec, n, 5, 1.5, &SupportLayout::OnePerBlock, seed).unwrap();
            let resid = &inst.y - &inst.x.dot(inst.beta_star.values.view()) - &inst.w;
            assert!(resid.iter().all(|v| v.abs() < 1e-12));
            let s2 = 1.5f64 * 1.5;
            let emp = inst.w.dot(&inst.w) / n as f64;
            assert!((emp - s2).abs() <= 5.0 * s2 * (2.0 / n as f64).sqrt());
        }
    }

    #[test]
    fn child_seeds_differ() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(9, &[3, 4]), derive_seed(9, &[3, 4]));
    }
}
