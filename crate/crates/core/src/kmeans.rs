//! Seeded k-means with greedy k-means++ initialisation and Lloyd iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KMeansError {
    #[error("k-means needs at least {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("rows have inconsistent dimensionality")]
    RaggedData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    /// Independent seeded restarts; the lowest-inertia one wins.
    pub inits: usize,
    pub max_iter: usize,
    /// Stop when the relative inertia decrease falls below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            k: 2,
            inits: 10,
            max_iter: 300,
            tolerance: 1e-6,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after the initial assignment and after every Lloyd step.
    pub inertia_trace: Vec<f64>,
    /// Restart that produced this fit.
    pub restart: usize,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub fn fit(data: &[Vec<f64>], params: &KMeansParams) -> Result<KMeansFit, KMeansError> {
    if params.k == 0 {
        return Err(KMeansError::ZeroClusters);
    }
    if data.len() < params.k {
        return Err(KMeansError::TooFewPoints {
            n: data.len(),
            k: params.k,
        });
    }
    let dim = data[0].len();
    if data.iter().any(|row| row.len() != dim) {
        return Err(KMeansError::RaggedData);
    }
    let fits: Vec<KMeansFit> = (0..params.inits.max(1))
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(restart as u64);
            let init = plus_plus(data, params.k, &mut rng);
            let mut fit = lloyd(data, init, params);
            fit.restart = restart;
            fit
        })
        .collect();
    // Lowest inertia, earliest restart on ties.
    Ok(fits
        .into_iter()
        .reduce(|best, f| if f.inertia < best.inertia { f } else { best })
        .expect("at least one restart"))
}

/// Greedy k-means++: each new centre is the best of a few D²-weighted
/// candidates by resulting potential.
fn plus_plus(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = vec![data[rng.random_range(0..n)].clone()];
    let mut closest: Vec<f64> = data
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let potential: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let candidate = if potential > 0.0 {
                sample_weighted(&closest, potential, rng.random::<f64>())
            } else {
                rng.random_range(0..n)
            };
            let dists: Vec<f64> = data
                .iter()
                .zip(&closest)
                .map(|(p, &c)| c.min(squared_distance(p, &data[candidate])))
                .collect();
            let pot: f64 = dists.iter().sum();
            if best.as_ref().is_none_or(|(bp, _, _)| pot < *bp) {
                best = Some((pot, candidate, dists));
            }
        }
        let (_, idx, dists) = best.expect("trials > 0");
        centroids.push(data[idx].clone());
        closest = dists;
    }
    centroids
}

fn sample_weighted(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_positive = i;
            acc += w;
            if acc > target {
                return i;
            }
        }
    }
    last_positive
}

fn assign(data: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = data
        .iter()
        .map(|p| {
            let (c, d) = nearest(p, centroids);
            inertia += d;
            c
        })
        .collect();
    (labels, inertia)
}

fn update(data: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = centroids.len();
    let dim = data[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in data.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    let mut next: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .zip(centroids)
        .map(|((s, &c), old)| {
            if c == 0 {
                old.clone()
            } else {
                s.into_iter().map(|x| x / c as f64).collect()
            }
        })
        .collect();
    // Empty clusters take the point farthest from its own centre.
    for empty in (0..k).filter(|&c| counts[c] == 0) {
        let far = data
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (p, &l))| (i, squared_distance(p, &next[l])))
            .fold((0, -1.0), |b, x| if x.1 > b.1 { x } else { b });
        next[empty] = data[far.0].clone();
    }
    next
}

fn lloyd(data: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, params: &KMeansParams) -> KMeansFit {
    let (mut labels, mut inertia) = assign(data, &centroids);
    let mut trace = vec![inertia];
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        centroids = update(data, &labels, &centroids);
        let (next_labels, next_inertia) = assign(data, &centroids);
        let changed = next_labels != labels;
        let previous = inertia;
        labels = next_labels;
        inertia = next_inertia;
        trace.push(inertia);
        if !changed {
            break;
        }
        if previous > 0.0 && (previous - inertia) / previous < params.tolerance {
            break;
        }
    }
    KMeansFit {
        centroids,
        assignments: labels,
        inertia,
        iterations,
        inertia_trace: trace,
        restart: 0,
    }
}
