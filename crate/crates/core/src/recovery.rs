//! From projectors back to nonnegative orthonormal factors.
//!
//! A nonnegative matrix with orthonormal columns has at most one nonzero per
//! row, so it is a weighted cluster indicator. Two routes recover it:
//! [`recover_factor`] clusters the leading eigenvectors of an (approximate)
//! projector `K`, and [`exact_factor_from_unfolding`] reads the factor off an
//! exactly decomposable unfolding by grouping proportional rows.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::sym_eig;
use crate::rng::{component_rng, StreamRng};
use crate::tensor::DenseMatrix;

/// Tolerance of the orthonormality check `U^T U = I`.
pub const ORTHONORMAL_TOL: f64 = 1e-8;
/// Entries above this count toward a row's support.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Default cosine slack for proportional-row grouping.
pub const DEFAULT_PROPORTIONAL_TOL: f64 = 1e-8;

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;

/// Nonnegative matrix with orthonormal columns and at most one nonzero per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    values: DenseMatrix,
}

impl FactorMatrix {
    pub fn new(values: DenseMatrix) -> Result<Self> {
        if values.cols() > values.rows() || values.cols() == 0 {
            return Err(Error::FactorInvariant(format!(
                "a {}x{} factor cannot have orthonormal columns",
                values.rows(),
                values.cols()
            )));
        }
        if let Some(v) = values.values().iter().find(|&&v| !(v >= 0.0)) {
            return Err(Error::FactorInvariant(format!("entry {v} is not nonnegative")));
        }
        for i in 0..values.rows() {
            let support = values.row(i).iter().filter(|&&v| v > SUPPORT_TOL).count();
            if support > 1 {
                return Err(Error::FactorInvariant(format!("row {i} has {support} nonzero entries")));
            }
        }
        let defect = orthonormality_defect(&values);
        if defect > ORTHONORMAL_TOL {
            return Err(Error::FactorInvariant(format!("||U^T U - I||_max = {defect:e}")));
        }
        Ok(Self { values })
    }

    pub fn identity(n: usize) -> Self {
        Self { values: DenseMatrix::identity(n) }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.values
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    /// Row-to-column support pattern as a cluster assignment.
    pub fn assignment(&self) -> ClusterAssignment {
        let labels = (0..self.rows())
            .map(|i| self.values.row(i).iter().position(|&v| v > SUPPORT_TOL))
            .collect();
        ClusterAssignment::from_labels(labels, self.cols())
    }

    /// `U U^T`.
    pub fn projector(&self) -> DenseMatrix {
        self.values.gram()
    }

    /// Column `j` of the result is column `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.cols()];
        if perm.len() != self.cols() || perm.iter().any(|&p| p >= seen.len() || core::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a column permutation")));
        }
        let m = DenseMatrix::from_fn(self.rows(), self.cols(), |i, j| self.values[(i, perm[j])]);
        Ok(Self { values: m })
    }
}

/// `max |U^T U - I|`.
pub fn orthonormality_defect(u: &DenseMatrix) -> f64 {
    let utu = &u.transpose() * u;
    utu.add_scaled(&DenseMatrix::identity(u.cols()), -1.0)
        .expect("square")
        .max_abs()
}

/// Hard assignment of rows to clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// `labels[i]` is the cluster of row `i`, `None` for unassigned rows.
    pub labels: Vec<Option<usize>>,
    /// `sizes[j] = |index_sets[j]|`.
    pub sizes: Vec<usize>,
    /// Rows of cluster `j`, ascending.
    pub index_sets: Vec<Vec<usize>>,
}

impl ClusterAssignment {
    pub fn from_labels(labels: Vec<Option<usize>>, k: usize) -> Self {
        let mut index_sets = vec![Vec::new(); k];
        for (i, l) in labels.iter().enumerate() {
            if let Some(j) = *l {
                index_sets[j].push(i);
            }
        }
        let sizes = index_sets.iter().map(Vec::len).collect();
        Self { labels, sizes, index_sets }
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn unassigned(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Within-cluster sum of squared distances to the cluster means.
pub fn within_cluster_ss(points: &DenseMatrix, assignment: &ClusterAssignment) -> f64 {
    let dim = points.cols();
    let mut total = 0.0;
    for set in &assignment.index_sets {
        if set.is_empty() {
            continue;
        }
        let mut mean = vec![0.0; dim];
        for &i in set {
            for (m, v) in mean.iter_mut().zip(points.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= set.len() as f64);
        total += set.iter().map(|&i| sq_dist(points.row(i), &mean)).sum::<f64>();
    }
    total
}

/// Lloyd k-means on the rows of `points`: k-means++ seeding, 10 restarts,
/// best within-cluster sum of squares kept. Deterministic given `seed`.
pub fn kmeans(points: &DenseMatrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let mut rng = component_rng(seed, 0);
    kmeans_with_rng(points, k, &mut rng)
}

pub(crate) fn kmeans_with_rng(points: &DenseMatrix, k: usize, rng: &mut StreamRng) -> Result<ClusterAssignment> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} with {n} points")));
    }
    if !points.is_finite() {
        return Err(Error::NonFinite("k-means points"));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let labels = lloyd(points, k, rng);
        let assignment = ClusterAssignment::from_labels(labels.iter().map(|&l| Some(l)).collect(), k);
        let cost = within_cluster_ss(points, &assignment);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, labels));
        }
    }
    let (_, labels) = best.expect("at least one restart");
    let assignment = ClusterAssignment::from_labels(labels.into_iter().map(Some).collect(), k);
    if let Some(j) = assignment.sizes.iter().position(|&s| s == 0) {
        return Err(Error::Clustering(format!("cluster {j} is empty after repair")));
    }
    Ok(assignment)
}

fn seed_centroids(points: &DenseMatrix, k: usize, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let n = points.rows();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points.row(rng.random_range(0..n)).to_vec());
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &DenseMatrix, k: usize, rng: &mut StreamRng) -> Vec<usize> {
    let n = points.rows();
    let dim = points.cols();
    let mut centroids = seed_centroids(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for i in 0..n {
            let p = points.row(i);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        repair_empty(points, &mut labels, &centroids, k);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &DenseMatrix, labels: &mut [usize], centroids: &[Vec<f64>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] > 1 {
                let d = sq_dist(points.row(i), &centroids[l]);
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
        }
        match far {
            Some(i) => labels[i] = empty,
            None => return,
        }
    }
}

/// Recovers a factor from an approximate projector `K`.
///
/// Takes the top-`rank` eigenvectors of `(K + K^T)/2`, clusters their
/// (unit-normalized) rows with k-means, then fills column `j` on its cluster
/// `T_j` with the absolute leading eigenvector of `K[T_j, T_j]`.
pub fn recover_factor(k: &DenseMatrix, rank: usize, seed: u64) -> Result<FactorMatrix> {
    recover_factor_detailed(k, rank, seed).map(|(f, _)| f)
}

/// [`recover_factor`] that also returns the cluster assignment.
pub fn recover_factor_detailed(k: &DenseMatrix, rank: usize, seed: u64) -> Result<(FactorMatrix, ClusterAssignment)> {
    let mut rng = component_rng(seed, 0);
    recover_factor_with_rng(k, rank, &mut rng)
}

pub(crate) fn recover_factor_with_rng(
    k: &DenseMatrix,
    rank: usize,
    rng: &mut StreamRng,
) -> Result<(FactorMatrix, ClusterAssignment)> {
    if !k.is_square() {
        return Err(Error::Shape(format!("projector is {}x{}", k.rows(), k.cols())));
    }
    let n = k.rows();
    if rank == 0 || rank > n {
        return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={n}")));
    }
    let sym = k.symmetrize();
    let eig = sym_eig(&sym)?;
    let mut embedding = DenseMatrix::from_fn(n, rank, |i, j| eig.vectors[(i, j)]);
    for i in 0..n {
        let norm = libm::sqrt(embedding.row(i).iter().map(|v| v * v).sum());
        if norm > 0.0 {
            for j in 0..rank {
                embedding[(i, j)] /= norm;
            }
        }
    }
    let assignment = kmeans_with_rng(&embedding, rank, rng)?;

    let mut u = DenseMatrix::zeros(n, rank);
    for (j, set) in assignment.index_sets.iter().enumerate() {
        let lead = if set.len() == 1 {
            vec![1.0]
        } else {
            let e = sym_eig(&sym.principal_submatrix(set))?;
            e.vectors.column(0).iter().map(|v| v.abs()).collect()
        };
        let norm = libm::sqrt(lead.iter().map(|v| v * v).sum());
        for (&row, v) in set.iter().zip(&lead) {
            u[(row, j)] = v / norm;
        }
    }
    Ok((FactorMatrix::new(u)?, assignment))
}

/// Reads the factor off an exactly orthogonally decomposable unfolding.
///
/// Nonzero rows are grouped by proportionality (cosine >= 1 - `tol`, groups
/// in order of first appearance); within a group the entry for row `t` is
/// `||row_t|| / sqrt(sum ||row_s||^2)`. Rows with norm at most
/// `1e-12 * max row norm` map to zero rows.
pub fn exact_factor_from_unfolding(afold: &DenseMatrix, rank: usize, tol: f64) -> Result<FactorMatrix> {
    let n = afold.rows();
    if rank == 0 || rank > n {
        return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={n}")));
    }
    let norms: Vec<f64> = (0..n)
        .map(|i| libm::sqrt(afold.row(i).iter().map(|v| v * v).sum()))
        .collect();
    let cutoff = 1e-12 * norms.iter().copied().fold(0.0, f64::max);

    // Each group remembers its first row as the representative.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if norms[i] <= cutoff {
            continue;
        }
        let slot = groups.iter().position(|g| {
            let r = g[0];
            let dot: f64 = afold.row(i).iter().zip(afold.row(r)).map(|(a, b)| a * b).sum();
            dot / (norms[i] * norms[r]) >= 1.0 - tol
        });
        match slot {
            Some(g) => groups[g].push(i),
            None => groups.push(vec![i]),
        }
    }
    if groups.len() != rank {
        return Err(Error::NotDecomposable { found: groups.len(), expected: rank });
    }
    let mut u = DenseMatrix::zeros(n, rank);
    for (j, g) in groups.iter().enumerate() {
        let total = libm::sqrt(g.iter().map(|&t| norms[t] * norms[t]).sum());
        for &t in g {
            u[(t, j)] = norms[t] / total;
        }
    }
    FactorMatrix::new(u)
}

/// Greedy assignment on a square score matrix: repeatedly takes the largest
/// remaining entry. `perm[i]` is the column matched to row `i`.
pub fn greedy_match(scores: &DenseMatrix) -> Vec<usize> {
    let n = scores.rows();
    let mut perm = vec![usize::MAX; n];
    let mut col_used = vec![false; scores.cols()];
    for _ in 0..n.min(scores.cols()) {
        let mut best = (usize::MAX, usize::MAX);
        let mut best_v = f64::NEG_INFINITY;
        for i in (0..n).filter(|&i| perm[i] == usize::MAX) {
            for j in (0..scores.cols()).filter(|&j| !col_used[j]) {
                if scores[(i, j)] > best_v {
                    best_v = scores[(i, j)];
                    best = (i, j);
                }
            }
        }
        perm[best.0] = best.1;
        col_used[best.1] = true;
    }
    perm
}

/// Matches the columns of `v` to those of `u` greedily on `|U^T V|` and
/// returns `(perm, max_error)`: column `j` of `u` pairs with column
/// `perm[j]` of `v`, and `max_error = max |U - V Pi|`.
pub fn match_factors(u: &FactorMatrix, v: &FactorMatrix) -> Result<(Vec<usize>, f64)> {
    match_columns(u.matrix(), v.matrix())
}

/// [`match_factors`] on plain matrices.
pub fn match_columns(u: &DenseMatrix, v: &DenseMatrix) -> Result<(Vec<usize>, f64)> {
    if u.rows() != v.rows() || u.cols() != v.cols() {
        return Err(Error::Shape(format!(
            "cannot match {}x{} against {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    let scores = (&u.transpose() * v).map(f64::abs);
    let perm = greedy_match(&scores);
    let mut err = 0.0f64;
    for (j, &pj) in perm.iter().enumerate() {
        for i in 0..u.rows() {
            err = err.max((u[(i, j)] - v[(i, pj)]).abs());
        }
    }
    Ok((perm, err))
}
