//! External design matrices and cluster-based support placement.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use ndarray::{Array2, ArrayView1};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DesignMatrix, SupportSet};

/// A samples-by-variables numeric table on disk, optionally gzipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub path: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub has_header: bool,
    /// Keep at most this many columns.
    #[serde(default)]
    pub p_max: Option<usize>,
    /// When set, `p_max` columns are drawn at random with this seed instead
    /// of taking the first ones.
    #[serde(default)]
    pub subsample_seed: Option<u64>,
}

fn default_delimiter() -> char {
    ','
}

impl MatrixFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        MatrixFile {
            path: path.into(),
            delimiter: ',',
            has_header: false,
            p_max: None,
            subsample_seed: None,
        }
    }
}

fn open_maybe_gzip(path: &Path) -> Result<Box<dyn Read>> {
    let mut f = File::open(path)?;
    let mut magic = [0u8; 2];
    let got = f.read(&mut magic)?;
    let head = std::io::Cursor::new(magic[..got].to_vec());
    let chained = head.chain(f);
    if got == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(GzDecoder::new(chained)))
    } else {
        Ok(Box::new(BufReader::new(chained)))
    }
}

/// Parses the raw table without column selection or normalization.
/// Rows and columns in errors are 1-based data positions.
pub fn read_matrix_csv(file: &MatrixFile) -> Result<Array2<f64>> {
    if !file.delimiter.is_ascii() {
        return Err(Error::Config(format!("delimiter {:?} is not ASCII", file.delimiter)));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(file.delimiter as u8)
        .has_headers(file.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(open_maybe_gzip(&file.path)?);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::RaggedRows {
                row,
                expected,
                found: rec.len(),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                col: c + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumericCell {
                    row,
                    col: c + 1,
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    let p = width.unwrap_or(0);
    if rows == 0 || p == 0 {
        return Err(Error::Parse {
            row: 0,
            col: 0,
            msg: "no data rows".into(),
        });
    }
    Ok(Array2::from_shape_vec((rows, p), values).expect("row widths were checked"))
}

/// Reads, subsets columns (first `p_max`, or a seeded random draw) and
/// normalizes.
pub fn load_matrix_csv(file: &MatrixFile) -> Result<DesignMatrix> {
    let raw = DesignMatrix::new(read_matrix_csv(file)?)?;
    let p = raw.p();
    let x = match file.p_max {
        Some(m) if m < p => {
            let cols: Vec<usize> = match file.subsample_seed {
                Some(seed) => {
                    let mut c = index::sample(&mut ChaCha8Rng::seed_from_u64(seed), p, m).into_vec();
                    c.sort_unstable();
                    c
                }
                None => (0..m).collect(),
            };
            raw.subset_columns(&cols)?
        }
        Some(0) => return Err(Error::Config("p_max must be positive".into())),
        _ => raw,
    };
    x.normalize_columns()
}

/// Writes `data` as comma-separated text with shortest round-trip floats.
pub fn write_matrix_csv(path: &Path, data: &Array2<f64>) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    for row in data.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of Lloyd's algorithm on the columns of a design.
#[derive(Clone, Debug)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Within-cluster sum of squares after each assignment step of the
    /// retained restart.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeans {
    pub fn inertia(&self) -> f64 {
        *self.objective.last().unwrap_or(&f64::INFINITY)
    }
}

const N_INIT: usize = 5;

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Clusters the columns of `x` (as points in `R^n`) with k-means++ seeding
/// and Lloyd iterations. Five seeded restarts; the lowest objective wins and
/// ties keep the earliest restart.
pub fn kmeans_columns(x: &DesignMatrix, n_clusters: usize, seed: u64, max_iter: usize) -> Result<KMeans> {
    let p = x.p();
    if n_clusters == 0 || n_clusters > p {
        return Err(Error::InvalidSpec(format!(
            "cannot form {n_clusters} clusters from {p} columns"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeans> = None;
    for _ in 0..N_INIT {
        let run = lloyd(x, n_clusters, &mut rng, max_iter);
        if best.as_ref().is_none_or(|b| run.inertia() < b.inertia()) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus(x: &DesignMatrix, c: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (n, p) = (x.n(), x.p());
    let mut centroids = Array2::zeros((c, n));
    let first = rng.random_range(0..p);
    centroids.row_mut(0).assign(&x.column(first));
    let mut d2: Vec<f64> = (0..p).map(|j| sq_dist(x.column(j), centroids.row(0))).collect();
    for m in 1..c {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = p - 1;
            for (j, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = j;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..p)
        };
        centroids.row_mut(m).assign(&x.column(pick));
        for (j, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.column(j), centroids.row(m)));
        }
    }
    centroids
}

fn lloyd(x: &DesignMatrix, c: usize, rng: &mut ChaCha8Rng, max_iter: usize) -> KMeans {
    let (n, p) = (x.n(), x.p());
    let mut centroids = plus_plus(x, c, rng);
    let assign = |centroids: &Array2<f64>| -> (Vec<usize>, f64) {
        let mut obj = 0.0;
        let labels = (0..p)
            .map(|j| {
                let (l, d) = (0..c)
                    .map(|m| (m, sq_dist(x.column(j), centroids.row(m))))
                    .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
                obj += d;
                l
            })
            .collect();
        (labels, obj)
    };
    let (mut labels, obj) = assign(&centroids);
    let mut objective = vec![obj];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = Array2::<f64>::zeros((c, n));
        let mut counts = vec![0usize; c];
        for (j, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &x.column(j));
            counts[l] += 1;
        }
        for m in 0..c {
            // an empty cluster keeps its previous centroid
            if counts[m] > 0 {
                centroids.row_mut(m).assign(&(&sums.row(m) / counts[m] as f64));
            }
        }
        let (next, obj) = assign(&centroids);
        objective.push(obj);
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    KMeans {
        labels,
        centroids,
        objective,
        iterations,
        converged,
    }
}

/// Picks `clusters_to_pick` clusters uniformly among those with at least
/// `per_cluster` members, then `per_cluster` members of each.
pub fn cluster_support(
    labels: &[usize],
    clusters_to_pick: usize,
    per_cluster: usize,
    seed: u64,
) -> Result<SupportSet> {
    let n_clusters = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for (j, &l) in labels.iter().enumerate() {
        members[l].push(j);
    }
    let eligible: Vec<usize> = (0..n_clusters).filter(|&c| members[c].len() >= per_cluster).collect();
    if clusters_to_pick > eligible.len() {
        return Err(Error::InsufficientClusterSizes {
            eligible: eligible.len(),
            wanted: clusters_to_pick,
            per_cluster,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, eligible.len(), clusters_to_pick)
        .into_iter()
        .map(|t| eligible[t])
        .collect();
    picked.sort_unstable();
    let mut out = Vec::with_capacity(clusters_to_pick * per_cluster);
    for c in picked {
        let m = &members[c];
        out.extend(index::sample(&mut rng, m.len(), per_cluster).into_iter().map(|t| m[t]));
    }
    SupportSet::new(out, labels.len())
}

/// Hubert–Arabie adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} labels", a.len(), b.len())));
    }
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&u, &v) in a.iter().zip(b) {
        table[u][v] += 1;
    }
    let pairs = |m: u64| (m * m.saturating_sub(1) / 2) as f64;
    let sum_ij: f64 = table.iter().flatten().map(|&m| pairs(m)).sum();
    let sum_a: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let sum_b: f64 = (0..kb).map(|v| pairs(table.iter().map(|r| r[v]).sum())).sum();
    let total = pairs(n as u64);
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        // both labelings are trivial (all-one or all-singletons) and equal
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_distr::StandardNormal;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn literal_csv() {
        let dir = tempfile::tempdir().unwrap();
        let f = MatrixFile::new(write(&dir, "a.csv", "1,2\n3,4\n5,6"));
        assert_eq!(read_matrix_csv(&f).unwrap(), array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let x = load_matrix_csv(&f).unwrap();
        assert!(x.is_normalized());
        assert_eq!((x.n(), x.p()), (3, 2));
    }

    #[test]
    fn header_and_delimiter() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = MatrixFile::new(write(&dir, "h.tsv", "g1\tg2\n1\t2\n3\t4\n"));
        f.delimiter = '\t';
        f.has_header = true;
        assert_eq!(read_matrix_csv(&f).unwrap(), array![[1.0, 2.0], [3.0, 4.0]]);
        f.has_header = false;
        assert!(matches!(
            read_matrix_csv(&f),
            Err(Error::NonNumericCell { row: 1, col: 1, .. })
        ));
    }

    #[test]
    fn malformed_tables() {
        let dir = tempfile::tempdir().unwrap();
        let f = MatrixFile::new(write(&dir, "r.csv", "1,2\n3\n"));
        assert!(matches!(
            read_matrix_csv(&f),
            Err(Error::RaggedRows { row: 2, expected: 2, found: 1 })
        ));
        let f = MatrixFile::new(write(&dir, "n.csv", "1,2\n3,x\n"));
        match read_matrix_csv(&f) {
            Err(Error::NonNumericCell { row, col, value }) => assert_eq!((row, col, value.as_str()), (2, 2, "x")),
            other => panic!("{other:?}"),
        }
        let f = MatrixFile::new(write(&dir, "e.csv", ""));
        assert!(matches!(read_matrix_csv(&f), Err(Error::Parse { .. })));
    }

    #[test]
    fn round_trip_and_gzip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = Array2::from_shape_fn((7, 5), |_| rng.sample::<f64, _>(StandardNormal) * 1e3);
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &data).unwrap();
        let back = read_matrix_csv(&MatrixFile::new(&path)).unwrap();
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }

        let gz = dir.path().join("m.csv.gz");
        let mut enc = flate2::write::GzEncoder::new(File::create(&gz).unwrap(), flate2::Compression::default());
        enc.write_all(&std::fs::read(&path).unwrap()).unwrap();
        enc.finish().unwrap();
        assert_eq!(read_matrix_csv(&MatrixFile::new(&gz)).unwrap(), back);
    }

    #[test]
    fn column_subsetting() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = MatrixFile::new(write(&dir, "s.csv", "1,2,3,4\n5,6,7,9\n"));
        f.p_max = Some(2);
        let x = load_matrix_csv(&f).unwrap();
        assert_eq!(x.p(), 2);
        let c = x.column(0);
        assert!((c[0] / c[1] - 0.2).abs() < 1e-15);
        f.subsample_seed = Some(3);
        let a = load_matrix_csv(&f).unwrap();
        let b = load_matrix_csv(&f).unwrap();
        assert_eq!(a.data(), b.data());
    }

    /// `groups` tight clusters of columns around far-apart centres.
    fn planted(n: usize, groups: usize, per: usize, seed: u64) -> (DesignMatrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = groups * per;
        let mut data = Array2::zeros((n, p));
        let mut truth = Vec::with_capacity(p);
        for g in 0..groups {
            let centre: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            for m in 0..per {
                let j = g * per + m;
                for i in 0..n {
                    data[[i, j]] = centre[i] + 0.01 * rng.sample::<f64, _>(StandardNormal);
                }
                truth.push(g);
            }
        }
        (DesignMatrix::new(data).unwrap().normalize_columns().unwrap(), truth)
    }

    #[test]
    fn separated_groups_are_recovered() {
        let (x, truth) = planted(30, 2, 8, 1);
        let km = kmeans_columns(&x, 2, 0, 100).unwrap();
        assert_eq!(adjusted_rand_index(&km.labels, &truth).unwrap(), 1.0);
        assert!(km.converged);
        for w in km.objective.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn one_cluster_per_column() {
        let (x, _) = planted(10, 3, 2, 2);
        let km = kmeans_columns(&x, 6, 5, 100).unwrap();
        let mut l = km.labels.clone();
        l.sort_unstable();
        l.dedup();
        assert_eq!(l.len(), 6);
        assert!(km.inertia() < 1e-20);
        assert!(kmeans_columns(&x, 7, 5, 100).is_err());
    }

    #[test]
    fn kmeans_is_seed_deterministic() {
        let (x, _) = planted(12, 4, 5, 3);
        let a = kmeans_columns(&x, 4, 9, 100).unwrap();
        let b = kmeans_columns(&x, 4, 9, 100).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn cluster_recipes() {
        let labels: Vec<usize> = (0..200).map(|j| j / 20).collect();
        let s = cluster_support(&labels, 5, 2, 1).unwrap();
        assert_eq!(s.len(), 10);
        let mut per = std::collections::BTreeMap::new();
        for i in s.iter() {
            *per.entry(labels[i]).or_insert(0) += 1;
        }
        assert_eq!(per.len(), 5);
        assert!(per.values().all(|&c| c == 2));
        assert_eq!(s, cluster_support(&labels, 5, 2, 1).unwrap());

        let s = cluster_support(&labels, 5, 3, 1).unwrap();
        assert_eq!(s.len(), 15);

        let small = [0, 0, 1, 2, 2, 2];
        assert!(matches!(
            cluster_support(&small, 2, 3, 0),
            Err(Error::InsufficientClusterSizes { eligible: 1, wanted: 2, per_cluster: 3 })
        ));
    }

    #[test]
    fn ari_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        // classic example: contingency [[1,1],[0,2]] over n = 4
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        // sum_ij = 1, sum_a = 2, sum_b = 3, total = 6 → (1 − 1)/(2.5 − 1) = 0
        assert!(v.abs() < 1e-15);
        assert!(adjusted_rand_index(&[0, 1], &[0]).is_err());
    }
}
