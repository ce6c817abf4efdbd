//! Analysis on collections of Gaussians: pairwise IGW matrices, k-means with
//! IGW barycenters, classical MDS and CKA.
//!
//! For centered Gaussians the IGW distance is the Euclidean distance between
//! zero-padded sorted spectra and the IGW barycenter averages those spectra,
//! so k-means runs exactly in spectrum space.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{pad_vector, Gaussian, WeightedCollection};
use crate::igw::{self, CENTER_TOL};
use crate::manifold::SolverConfig;
use crate::sampling;
use crate::spectra;

/// Default cap on Lloyd iterations.
pub const KMEANS_MAX_ITERS: usize = 100;

#[cfg(feature = "parallel")]
fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Symmetric, non-negative, zero-diagonal matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: DMatrix<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry (relative 1e-9), a zero diagonal and non-negative
    /// finite entries; the result is exactly symmetric.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        spectra::check_square(&entries, "distance matrix")?;
        spectra::check_finite(&entries, "distance matrix")?;
        let n = entries.nrows();
        let scale = entries.amax().max(1.0);
        for i in 0..n {
            if entries[(i, i)].abs() > 1e-12 * scale {
                return Err(Error::InvalidInput(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                if entries[(i, j)] < 0.0 {
                    return Err(Error::InvalidInput(format!("negative distance at ({i}, {j})")));
                }
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::InvalidInput(format!("distance matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        let mut sym = spectra::symmetrize(&entries);
        sym.fill_diagonal(0.0);
        Ok(Self { entries: sym })
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Triples `(i, j, k)` with `D_ik > D_ij + D_jk + slack`, and the excess.
    pub fn triangle_violations(&self, slack: f64) -> Vec<(usize, usize, usize, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for k in (i + 1)..n {
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    let excess = self.get(i, k) - self.get(i, j) - self.get(j, k);
                    if excess > slack {
                        out.push((i, j, k, excess));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairwiseMode {
    Closed,
    Rgd,
    Upper,
    Lower,
}

impl std::str::FromStr for PairwiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(Self::Closed),
            "rgd" => Ok(Self::Rgd),
            "upper" => Ok(Self::Upper),
            "lower" => Ok(Self::Lower),
            other => Err(Error::InvalidInput(format!("unknown pairwise mode '{other}'"))),
        }
    }
}

fn pair_distance(g1: &Gaussian, g2: &Gaussian, cfg: &SolverConfig, mode: PairwiseMode) -> Result<Option<f64>> {
    Ok(match mode {
        PairwiseMode::Closed => igw::igw_closed_form(g1, g2)?,
        PairwiseMode::Rgd => Some(igw::igw_distance_rgd(g1, g2, cfg)?.distance),
        PairwiseMode::Upper => Some(igw::igw_bounds(g1, g2)?.upper),
        PairwiseMode::Lower => Some(igw::igw_bounds(g1, g2)?.lower),
    })
}

/// IGW distances between all pairs. Pairs are evaluated in parallel (with
/// the `parallel` feature); the result does not depend on the thread count.
pub fn pairwise_igw_matrix(gaussians: &[Gaussian], cfg: &SolverConfig, mode: PairwiseMode) -> Result<DistanceMatrix> {
    let n = gaussians.len();
    if n == 0 {
        return Err(Error::EmptyInput("no Gaussians".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let values = par_map(pairs.len(), |t| {
        let (i, j) = pairs[t];
        pair_distance(&gaussians[i], &gaussians[j], cfg, mode)
    });
    let mut entries = DMatrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        let v = v?.ok_or_else(|| Error::Unsupported(format!("no closed form applies to the pair ({i}, {j})")))?;
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    Ok(DistanceMatrix { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    #[serde(skip)]
    pub centers: Vec<Gaussian>,
    /// Sum of squared IGW distances to the assigned centers.
    pub inertia: f64,
    pub seed: u64,
    /// Inertia after each assignment step.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

fn nearest(x: &DVector<f64>, centers: &[DVector<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = (x - center).norm_squared();
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Index drawn with probability proportional to `weights`; uniform when all
/// weights vanish.
fn sample_index(rng: &mut sampling::SeededRng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return rng.random_range(0..weights.len());
    }
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// k-means++ on centered Gaussians with IGW distances and IGW-barycenter
/// centers.
///
/// Seeding draws each new center with probability proportional to the
/// squared distance to the nearest existing one. Lloyd iterations stop when
/// the labels no longer change or after `max_iters`. An empty cluster is
/// re-seeded at the point farthest from its current center.
pub fn kmeans_igw(gaussians: &[Gaussian], k: usize, seed: u64, max_iters: usize) -> Result<ClusterResult> {
    let n = gaussians.len();
    if n == 0 {
        return Err(Error::EmptyInput("no Gaussians".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("k = {k} must lie in 1..={n}")));
    }
    if let Some(i) = gaussians.iter().position(|g| !g.is_centered(CENTER_TOL)) {
        return Err(Error::Unsupported(format!("clustering needs centered Gaussians; input {i} has a non-zero mean")));
    }
    let dim = gaussians.iter().map(Gaussian::dim).max().unwrap_or(0);
    let points = par_map(n, |i| igw::sorted_spectrum(gaussians[i].cov()).map(|s| pad_vector(&s, dim)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut rng = sampling::seeded(seed);
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let d2: Vec<f64> = points.iter().map(|x| nearest(x, &centers).1).collect();
        centers.push(points[sample_index(&mut rng, &d2)].clone());
    }

    let mut labels = vec![usize::MAX; n];
    let mut inertia_trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    loop {
        let assigned = par_map(n, |i| nearest(&points[i], &centers));
        let inertia: f64 = assigned.iter().map(|a| a.1).sum();
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        if let Some(&prev) = inertia_trace.last() {
            debug_assert!(inertia <= prev + 1e-9 * prev.max(1.0), "inertia rose: {prev} -> {inertia}");
        }
        inertia_trace.push(inertia);
        if new_labels == labels || iterations >= max_iters {
            labels = new_labels;
            break;
        }
        labels = new_labels;
        iterations += 1;

        let mut sums = vec![DVector::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (x, &l) in points.iter().zip(&labels) {
            sums[l] += x;
            counts[l] += 1;
        }
        let mut dist_to_center: Vec<f64> = assigned.iter().map(|a| a.1).collect();
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            } else {
                let far = dist_to_center
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i)
                    .expect("n > 0");
                centers[c] = points[far].clone();
                dist_to_center[far] = 0.0;
            }
        }
    }

    let inertia = *inertia_trace.last().expect("at least one assignment");
    let centers = (0..k)
        .map(|c| {
            let members: Vec<Gaussian> =
                labels.iter().zip(gaussians).filter(|(l, _)| **l == c).map(|(_, g)| g.clone()).collect();
            if members.is_empty() {
                return Gaussian::centered(DMatrix::from_diagonal(&centers[c]));
            }
            let d_target = members.iter().map(Gaussian::dim).max().unwrap_or(dim);
            igw::igw_barycenter(&WeightedCollection::uniform(members)?, d_target)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterResult { labels, centers, inertia, seed, inertia_trace, iterations })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdsEmbedding {
    /// `n × out_dim`, row per point.
    #[serde(skip)]
    pub coords: DMatrix<f64>,
    /// Leading eigenvalues of the double-centered Gram matrix (before clamping).
    pub eigenvalues: Vec<f64>,
    /// Share of the absolute spectrum carried by negative eigenvalues.
    pub negative_mass: f64,
}

/// Classical (Torgerson) MDS: top eigenpairs of `−½ J D² J`.
pub fn classical_mds(dm: &DistanceMatrix, out_dim: usize) -> Result<MdsEmbedding> {
    if out_dim == 0 {
        return Err(Error::InvalidInput("output dimension must be positive".into()));
    }
    let n = dm.len();
    if n == 0 {
        return Err(Error::EmptyInput("empty distance matrix".into()));
    }
    let sq = dm.entries.map(|x| x * x);
    let row_means: DVector<f64> = DVector::from_fn(n, |i, _| sq.row(i).mean());
    let grand = sq.mean();
    let gram = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let decomp = spectra::sym_eig(&gram)?;
    let abs_total: f64 = decomp.eigenvalues.iter().map(|l| l.abs()).sum();
    let neg: f64 = decomp.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    let kept = out_dim.min(n);
    let mut coords = DMatrix::zeros(n, out_dim);
    for c in 0..kept {
        let scale = decomp.eigenvalues[c].max(0.0).sqrt();
        coords.set_column(c, &(decomp.eigenvectors.column(c) * scale));
    }
    Ok(MdsEmbedding {
        coords,
        eigenvalues: decomp.eigenvalues.iter().take(kept).copied().collect(),
        negative_mass: if abs_total > 0.0 { neg / abs_total } else { 0.0 },
    })
}

fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    out
}

/// `‖YᵀX‖²_F / (‖XᵀX‖_F ‖YᵀY‖_F)`, optionally after centering the columns.
pub fn cka(x: &DMatrix<f64>, y: &DMatrix<f64>, center: bool) -> Result<f64> {
    if x.nrows() != y.nrows() {
        return Err(Error::InvalidInput(format!("row counts differ ({} vs {})", x.nrows(), y.nrows())));
    }
    let (x, y) = if center { (center_columns(x), center_columns(y)) } else { (x.clone(), y.clone()) };
    let gx = (x.transpose() * &x).norm();
    let gy = (y.transpose() * &y).norm();
    if !(gx > 0.0) || !(gy > 0.0) {
        return Err(Error::InvalidInput("CKA is undefined for a zero Gram matrix".into()));
    }
    let cross = (y.transpose() * &x).norm_squared();
    Ok((cross / (gx * gy)).min(1.0))
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("labelings have different lengths".into()));
    }
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&i, &j) in a.iter().zip(b) {
        table[i][j] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let rows: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| choose2(table.iter().map(|r| r[j]).sum())).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
