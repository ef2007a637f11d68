//! Independent reference implementations used as test oracles.
//!
//! Each one is written for obviousness, never for speed, and shares no code
//! with the library beyond plain data types.

#![allow(dead_code)]

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pseudo-documents as explicit term sets: step-1 windows of `sw` tokens,
/// one window for a document of at most `sw` tokens, none for an empty one.
pub fn windows(docs: &[Vec<String>], sw: usize) -> Vec<HashSet<String>> {
    let mut out = Vec::new();
    for doc in docs {
        if doc.is_empty() {
            continue;
        }
        if doc.len() <= sw {
            out.push(doc.iter().cloned().collect());
        } else {
            for start in 0..=doc.len() - sw {
                out.push(doc[start..start + sw].iter().cloned().collect());
            }
        }
    }
    out
}

/// C_V of one topic by direct enumeration of windows.
pub fn brute_force_cv(docs: &[Vec<String>], sw: usize, terms: &[String], gamma: f64, eps: f64) -> f64 {
    let wins = windows(docs, sw);
    let total = wins.len() as f64;
    let p = |a: &str| wins.iter().filter(|w| w.contains(a)).count() as f64 / total;
    let p2 = |a: &str, b: &str| wins.iter().filter(|w| w.contains(a) && w.contains(b)).count() as f64 / total;
    let npmi = |a: &str, b: &str| {
        let joint = p2(a, b) + eps;
        (joint / (p(a) * p(b))).ln() / -joint.ln()
    };
    let vectors: Vec<Vec<f64>> = terms
        .iter()
        .map(|a| {
            terms
                .iter()
                .map(|b| {
                    let x = npmi(a, b);
                    x.signum() * x.abs().powf(gamma)
                })
                .collect()
        })
        .collect();
    let k = terms.len();
    let sum: Vec<f64> = (0..k).map(|j| vectors.iter().map(|v| v[j]).sum()).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut total_cos = 0.0;
    for v in &vectors {
        let denom = norm(v) * norm(&sum);
        if denom > 0.0 {
            total_cos += v.iter().zip(&sum).map(|(a, b)| a * b).sum::<f64>() / denom;
        }
    }
    total_cos / k as f64
}

/// Mean held-out log-likelihood of a 2D Gaussian KDE. Kernel exponents are
/// shifted by the nearest training point so no sum underflows to zero.
pub fn brute_force_kde_cv(points: &[[f64; 2]], h: f64, folds: &[usize], n_folds: usize) -> f64 {
    let mut total = 0.0;
    for f in 0..n_folds {
        let train: Vec<&[f64; 2]> = points.iter().zip(folds).filter(|(_, &k)| k != f).map(|(p, _)| p).collect();
        for (z, _) in points.iter().zip(folds).filter(|(_, &k)| k == f) {
            let d2: Vec<f64> = train.iter().map(|x| (z[0] - x[0]).powi(2) + (z[1] - x[1]).powi(2)).collect();
            let nearest = d2.iter().copied().fold(f64::INFINITY, f64::min);
            let scaled: f64 = d2.iter().map(|d| (-(d - nearest) / (2.0 * h * h)).exp()).sum();
            let log_norm = (2.0 * std::f64::consts::PI * h * h * train.len() as f64).ln();
            total += scaled.ln() - nearest / (2.0 * h * h) - log_norm;
        }
    }
    total / points.len() as f64
}

/// Random non-negative matrix with roughly `density` nonzeros and no zero column.
pub fn random_sparse(n: usize, d: usize, density: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![vec![0.0; d]; n];
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            if rng.random::<f64>() < density {
                *x = rng.random::<f64>();
            }
        }
    }
    for j in 0..d {
        if rows.iter().all(|r| r[j] == 0.0) {
            let i = rng.random_range(0..n);
            rows[i][j] = rng.random::<f64>() + 0.01;
        }
    }
    rows
}

/// Mean silhouette coefficient under Euclidean distance.
pub fn silhouette(points: &[[f64; 2]], labels: &[usize]) -> f64 {
    let dist = |a: &[f64; 2], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let clusters: HashSet<usize> = labels.iter().copied().collect();
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mean_to = |c: usize| {
            let ds: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i && labels[*j] == c)
                .map(|(_, q)| dist(p, q))
                .collect();
            if ds.is_empty() {
                None
            } else {
                Some(ds.iter().sum::<f64>() / ds.len() as f64)
            }
        };
        let Some(a) = mean_to(labels[i]) else { continue };
        let b = clusters
            .iter()
            .filter(|&&c| c != labels[i])
            .filter_map(|&c| mean_to(c))
            .fold(f64::INFINITY, f64::min);
        let s = if a.max(b) > 0.0 { (b - a) / a.max(b) } else { 0.0 };
        total += s;
    }
    total / points.len() as f64
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Largest deviation of any column sum from 1, and the smallest entry.
pub fn simplex_violation(columns: impl Iterator<Item = Vec<f64>>) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut min = f64::INFINITY;
    for c in columns {
        worst = worst.max((c.iter().sum::<f64>() - 1.0).abs());
        min = c.iter().copied().fold(min, f64::min);
    }
    (worst, min)
}
