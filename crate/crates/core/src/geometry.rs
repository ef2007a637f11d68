//! Metric MDS (SMACOF) to the plane and Gaussian kernel density estimation.

use std::f64::consts::PI;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Symmetric matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates a row-major m × m matrix.
    pub fn new(m: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::ShapeMismatch(format!("{} entries for {m}×{m}", entries.len())));
        }
        for i in 0..m {
            if entries[i * m + i] != 0.0 {
                return Err(Error::InvalidParameter(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..m {
                let x = entries[i * m + j];
                if !x.is_finite() {
                    return Err(Error::NonFinite(format!("distance ({i}, {j})")));
                }
                if x < 0.0 || x != entries[j * m + i] {
                    return Err(Error::InvalidParameter(format!(
                        "distance ({i}, {j}) is negative or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { m, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::ShapeMismatch("distance matrix must be square".into()));
        }
        Self::new(m, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    /// Σ_{i<j} d_ij², the stress of collapsing every point onto one.
    pub fn sum_sq(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m {
            for j in i + 1..self.m {
                s += self.get(i, j).powi(2);
            }
        }
        s
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn pairwise_distances(vectors: &[Vec<f64>]) -> Result<DistanceMatrix> {
    if vectors.len() < 2 {
        return Err(Error::InvalidParameter("need at least two vectors".into()));
    }
    let len = vectors[0].len();
    if vectors.iter().any(|v| v.len() != len) {
        return Err(Error::ShapeMismatch("vectors of different lengths".into()));
    }
    let m = vectors.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| (0..m).map(|j| if i == j { 0.0 } else { euclidean(&vectors[i], &vectors[j]) }).collect())
        .collect();
    // euclidean(a, b) and euclidean(b, a) are bit-identical, so the result is symmetric.
    DistanceMatrix::new(m, rows.concat())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding2D {
    pub points: Vec<[f64; 2]>,
    /// Raw stress Σ_{i<j}(d_ij − ‖x_i − x_j‖)².
    pub stress: f64,
    pub seed: u64,
    pub iterations: usize,
    /// Stress of the winning restart at its start and after every iteration.
    pub stress_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdsOptions {
    pub seed: u64,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for MdsOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            n_init: 4,
            max_iter: 300,
            tol: 1e-7,
        }
    }
}

impl MdsOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Raw stress over unordered pairs.
pub fn stress(d: &DistanceMatrix, points: &[[f64; 2]]) -> Result<f64> {
    if points.len() != d.len() {
        return Err(Error::ShapeMismatch(format!("{} points for {} distances", points.len(), d.len())));
    }
    Ok(raw_stress(d, points))
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn raw_stress(d: &DistanceMatrix, x: &[[f64; 2]]) -> f64 {
    let m = x.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            s += (d.get(i, j) - dist2(&x[i], &x[j])).powi(2);
        }
    }
    s
}

/// One Guttman transform X ← B(X)X / m.
fn guttman(d: &DistanceMatrix, x: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let m = x.len();
    let mut out = vec![[0.0; 2]; m];
    for i in 0..m {
        let mut acc = [0.0; 2];
        let mut diag = 0.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            let dij = dist2(&x[i], &x[j]);
            let b = if dij > 0.0 { -d.get(i, j) / dij } else { 0.0 };
            diag -= b;
            acc[0] += b * x[j][0];
            acc[1] += b * x[j][1];
        }
        out[i] = [(acc[0] + diag * x[i][0]) / m as f64, (acc[1] + diag * x[i][1]) / m as f64];
    }
    out
}

fn smacof_run(d: &DistanceMatrix, mut x: Vec<[f64; 2]>, max_iter: usize, tol: f64) -> (Vec<[f64; 2]>, Vec<f64>, usize) {
    let mut history = vec![raw_stress(d, &x)];
    let mut iterations = 0;
    for _ in 0..max_iter {
        let next = guttman(d, &x);
        let s = raw_stress(d, &next);
        let prev = *history.last().unwrap();
        x = next;
        history.push(s);
        iterations += 1;
        if s == 0.0 || (prev - s) / prev < tol {
            break;
        }
    }
    (x, history, iterations)
}

/// SMACOF from `n_init` seeded uniform random starts, keeping the lowest-stress result.
pub fn mds(d: &DistanceMatrix, opts: &MdsOptions) -> Result<Embedding2D> {
    let m = d.len();
    if m < 2 {
        return Err(Error::InvalidParameter("MDS needs at least two points".into()));
    }
    if opts.n_init == 0 || opts.max_iter == 0 {
        return Err(Error::InvalidParameter("n_init and max_iter must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<[f64; 2]>> = (0..opts.n_init)
        .map(|_| (0..m).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect())
        .collect();
    let runs: Vec<(Vec<[f64; 2]>, Vec<f64>, usize)> = starts
        .into_par_iter()
        .map(|x0| smacof_run(d, x0, opts.max_iter, opts.tol))
        .collect();
    let (points, history, iterations) = runs
        .into_iter()
        .reduce(|best, run| if run.1.last() < best.1.last() { run } else { best })
        .expect("n_init > 0");
    Ok(Embedding2D {
        stress: *history.last().unwrap(),
        points,
        seed: opts.seed,
        iterations,
        stress_history: history,
    })
}

/// All ids when there are at most `cap`, otherwise a seeded uniform sample of
/// `cap` distinct ids in their original order.
pub fn sample_papers(ids: &[String], cap: usize, seed: u64) -> Result<Vec<String>> {
    if cap == 0 {
        return Err(Error::InvalidParameter("sample cap must be at least 1".into()));
    }
    if ids.len() <= cap {
        return Ok(ids.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, ids.len(), cap).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| ids[i].clone()).collect())
}

/// Isotropic bivariate Gaussian KDE.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    pub points: Vec<[f64; 2]>,
    pub bandwidth: f64,
    /// Mean held-out log-likelihood for every bandwidth tried, in grid order.
    pub cv_scores: Vec<(f64, f64)>,
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// ln f(z) for the KDE over `samples` with bandwidth h.
pub fn kde_log_density(samples: &[[f64; 2]], h: f64, z: [f64; 2]) -> f64 {
    let two_h2 = 2.0 * h * h;
    let lse = log_sum_exp(samples.iter().map(|p| -((z[0] - p[0]).powi(2) + (z[1] - p[1]).powi(2)) / two_h2));
    lse - (samples.len() as f64 * 2.0 * PI * h * h).ln()
}

impl DensityModel {
    /// f(z) = 1/(m·2πh²) Σ exp(−‖z − p‖² / 2h²)
    pub fn density(&self, z: [f64; 2]) -> f64 {
        let two_h2 = 2.0 * self.bandwidth * self.bandwidth;
        let s: f64 = self
            .points
            .iter()
            .map(|p| (-((z[0] - p[0]).powi(2) + (z[1] - p[1]).powi(2)) / two_h2).exp())
            .sum();
        s / (self.points.len() as f64 * 2.0 * PI * self.bandwidth * self.bandwidth)
    }

    pub fn log_density(&self, z: [f64; 2]) -> f64 {
        kde_log_density(&self.points, self.bandwidth, z)
    }
}

/// Fold of every point: a seeded shuffle of 0..m, position p going to fold p mod `folds`.
pub fn fold_assignment(m: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let mut fold = vec![0; m];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Mean held-out log-likelihood of bandwidth `h` under the given fold assignment.
pub fn cv_score(points: &[[f64; 2]], h: f64, folds: &[usize], n_folds: usize) -> f64 {
    let per_fold: Vec<f64> = (0..n_folds)
        .into_par_iter()
        .map(|k| {
            let train: Vec<[f64; 2]> = points.iter().zip(folds).filter(|(_, &f)| f != k).map(|(p, _)| *p).collect();
            points
                .iter()
                .zip(folds)
                .filter(|(_, &f)| f == k)
                .map(|(p, _)| kde_log_density(&train, h, *p))
                .sum::<f64>()
        })
        .collect();
    per_fold.iter().sum::<f64>() / points.len() as f64
}

/// 20 log-spaced bandwidths over [0.01·R, R], R the root-mean-square pairwise distance.
pub fn default_bandwidth_grid(points: &[[f64; 2]]) -> Result<Vec<f64>> {
    let m = points.len();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..m {
        for j in i + 1..m {
            sum += (points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2);
            pairs += 1;
        }
    }
    if pairs == 0 || sum == 0.0 {
        return Err(Error::DegenerateData(
            "all points coincide; inspect them directly instead of estimating a density".into(),
        ));
    }
    Ok(log_space(0.01 * (sum / pairs as f64).sqrt(), (sum / pairs as f64).sqrt(), 20))
}

pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Chooses the bandwidth with the highest k-fold cross-validated mean
/// held-out log-likelihood (ties to the smaller bandwidth).
pub fn kde_fit(points: &[[f64; 2]], bandwidth_grid: &[f64], folds: usize, seed: u64) -> Result<DensityModel> {
    if folds < 2 {
        return Err(Error::InvalidParameter("need at least two folds".into()));
    }
    if points.len() < folds {
        return Err(Error::InvalidParameter(format!(
            "{} points cannot fill {folds} folds",
            points.len()
        )));
    }
    if bandwidth_grid.is_empty() || bandwidth_grid.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidParameter("bandwidth grid must be non-empty and positive".into()));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::NonFinite("sample point".into()));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(Error::DegenerateData(
            "all points coincide; inspect them directly instead of estimating a density".into(),
        ));
    }
    let assignment = fold_assignment(points.len(), folds, seed);
    let cv_scores: Vec<(f64, f64)> = bandwidth_grid
        .iter()
        .map(|&h| (h, cv_score(points, h, &assignment, folds)))
        .collect();
    let (bandwidth, _) = cv_scores
        .iter()
        .copied()
        .reduce(|best, c| {
            if c.1 > best.1 || (c.1 == best.1 && c.0 < best.0) {
                c
            } else {
                best
            }
        })
        .expect("grid is non-empty");
    Ok(DensityModel {
        points: points.to_vec(),
        bandwidth,
        cv_scores,
    })
}

/// Densities on a regular `resolution` × `resolution` grid; `values[iy][ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl DensityGrid {
    /// Riemann sum Σ f · Δx · Δy over the grid nodes.
    pub fn riemann_sum(&self) -> f64 {
        let dx = (self.xs[self.xs.len() - 1] - self.xs[0]) / (self.xs.len() - 1) as f64;
        let dy = (self.ys[self.ys.len() - 1] - self.ys[0]) / (self.ys.len() - 1) as f64;
        self.values.iter().flatten().sum::<f64>() * dx * dy
    }
}

pub fn kde_density_grid(model: &DensityModel, x_range: (f64, f64), y_range: (f64, f64), resolution: usize) -> Result<DensityGrid> {
    if resolution < 2 {
        return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
    }
    if !(x_range.0 < x_range.1) || !(y_range.0 < y_range.1) {
        return Err(Error::InvalidParameter("grid ranges must be increasing".into()));
    }
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..resolution)
            .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
            .collect()
    };
    let xs = axis(x_range);
    let ys = axis(y_range);
    let values = ys
        .par_iter()
        .map(|&y| xs.iter().map(|&x| model.density([x, y])).collect())
        .collect();
    Ok(DensityGrid { xs, ys, values })
}

/// Bounding box of the samples padded by `pad` on every side.
pub fn padded_bounds(points: &[[f64; 2]], pad: f64) -> ((f64, f64), (f64, f64)) {
    let fold = |k: usize| {
        points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])))
    };
    let (x, y) = (fold(0), fold(1));
    ((x.0 - pad, x.1 + pad), (y.0 - pad, y.1 + pad))
}
