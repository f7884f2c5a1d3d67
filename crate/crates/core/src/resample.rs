//! Majority-class undersampling: uniform random and k-means cluster centroids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum ResampleError {
    #[error(
        "resampling needs both classes present (got {n_negative} negative, {n_positive} positive)"
    )]
    SingleClass {
        n_negative: usize,
        n_positive: usize,
    },
    #[error("k = {k} is invalid for {n} points")]
    BadK { k: usize, n: usize },
    #[error("features and labels differ in length ({features} vs {labels})")]
    Length { features: usize, labels: usize },
    #[error("points have inconsistent dimensions")]
    Ragged,
    #[error("unknown resampling mode {0:?}")]
    Mode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleMode {
    #[default]
    None,
    Random,
    CentroidsSoft,
    CentroidsHard,
}

impl FromStr for ResampleMode {
    type Err = ResampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(ResampleMode::None),
            "random" => Ok(ResampleMode::Random),
            "centroids-soft" => Ok(ResampleMode::CentroidsSoft),
            "centroids-hard" => Ok(ResampleMode::CentroidsHard),
            other => Err(ResampleError::Mode(other.to_owned())),
        }
    }
}

impl fmt::Display for ResampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResampleMode::None => "none",
            ResampleMode::Random => "random",
            ResampleMode::CentroidsSoft => "centroids-soft",
            ResampleMode::CentroidsHard => "centroids-hard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CentroidMode {
    /// Majority class replaced by the k-means centroids.
    Soft,
    /// Majority class replaced by the real sample nearest each centroid.
    Hard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResampleResult {
    /// Rows of the input that survive, ascending.
    pub kept_indices: Vec<usize>,
    /// Rows that replace the majority class in soft centroid mode.
    pub synthetic_rows: Vec<(Vec<f64>, Label)>,
    pub n_negative: usize,
    pub n_positive: usize,
}

struct Classes {
    minority: Vec<usize>,
    majority: Vec<usize>,
    majority_label: Label,
}

fn classes(labels: &[Label]) -> Result<Classes, ResampleError> {
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| labels[i].is_positive());
    if pos.is_empty() || neg.is_empty() {
        return Err(ResampleError::SingleClass {
            n_negative: neg.len(),
            n_positive: pos.len(),
        });
    }
    Ok(if pos.len() <= neg.len() {
        Classes {
            minority: pos,
            majority: neg,
            majority_label: Label::Sincere,
        }
    } else {
        Classes {
            minority: neg,
            majority: pos,
            majority_label: Label::Insincere,
        }
    })
}

fn finish(
    mut kept: Vec<usize>,
    synthetic: Vec<(Vec<f64>, Label)>,
    labels: &[Label],
) -> ResampleResult {
    kept.sort_unstable();
    let kept_pos = kept.iter().filter(|&&i| labels[i].is_positive()).count();
    let syn_pos = synthetic.iter().filter(|(_, l)| l.is_positive()).count();
    let n_positive = kept_pos + syn_pos;
    ResampleResult {
        n_negative: kept.len() + synthetic.len() - n_positive,
        n_positive,
        kept_indices: kept,
        synthetic_rows: synthetic,
    }
}

/// Keeps every minority row and a uniform sample (without replacement) of
/// majority rows of the same size.
pub fn random_undersample(labels: &[Label], seed: u64) -> Result<ResampleResult, ResampleError> {
    let Classes {
        minority,
        mut majority,
        ..
    } = classes(labels)?;
    let mut r = rng::seeded(seed);
    rng::shuffle(&mut majority, &mut r);
    majority.truncate(minority.len());
    let mut kept = minority;
    kept.extend(majority);
    Ok(finish(kept, Vec::new(), labels))
}

/// Result of [`kmeans`].
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step of the winning run.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

impl CentroidSet {
    pub fn sse(&self) -> f64 {
        *self.sse_history.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Independent seeded restarts; the lowest-SSE run wins.
    pub n_init: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            seed,
            max_iters: 100,
            n_init: 10,
        }
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, then proportional to squared distance.
fn seed_centroids(points: &[Vec<f64>], k: usize, r: &mut rng::Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng::below(r, n as u64) as usize].clone()];
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng::unit(r) * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, d) in dist.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng::below(r, n as u64) as usize
        };
        centroids.push(points[pick].clone());
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], k: usize, max_iters: usize, r: &mut rng::Rng) -> CentroidSet {
    let dim = points[0].len();
    let mut centroids = seed_centroids(points, k, r);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut sse_history = Vec::new();
    let mut iterations = 0;

    loop {
        let mut changed = false;
        let mut sse = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (j, d) = nearest(p, &centroids);
            sse += d;
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        sse_history.push(sse);
        if !changed || iterations >= max_iters {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(points) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                // reseed an empty cluster at the point farthest from its centroid
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        let da = squared_distance(&points[a], &centroids[assignments[a]]);
                        let db = squared_distance(&points[b], &centroids[assignments[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("non-empty points");
                centroids[j] = points[far].clone();
                counts[assignments[far]] -= 1;
                assignments[far] = j;
                counts[j] = 1;
            }
        }
    }

    if hartigan(points, &mut centroids, &mut assignments) {
        let sse = points
            .iter()
            .zip(&assignments)
            .map(|(p, &a)| squared_distance(p, &centroids[a]))
            .sum();
        sse_history.push(sse);
    }

    CentroidSet {
        k,
        centroids,
        assignments,
        sse_history,
        iterations,
    }
}

fn cluster_means(
    points: &[Vec<f64>],
    assignments: &[usize],
    k: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; points[0].len()]; k];
    let mut counts = vec![0usize; k];
    for (&a, p) in assignments.iter().zip(points) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    (sums, counts)
}

/// Single-point moves that lower the SSE, which Lloyd's batch update can miss.
/// Moving `p` from `a` to `b` changes the SSE by
/// `n_b/(n_b+1)·‖p−c_b‖² − n_a/(n_a−1)·‖p−c_a‖²`. Returns whether anything moved.
fn hartigan(points: &[Vec<f64>], centroids: &mut Vec<Vec<f64>>, assignments: &mut [usize]) -> bool {
    let k = centroids.len();
    let (mut means, mut counts) = cluster_means(points, assignments, k);
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for (i, p) in points.iter().enumerate() {
            let a = assignments[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let removal = na / (na - 1.0) * squared_distance(p, &means[a]);
            let mut best = (a, 0.0);
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let delta = nb / (nb + 1.0) * squared_distance(p, &means[b]) - removal;
                if delta < best.1 - 1e-12 {
                    best = (b, delta);
                }
            }
            if best.0 != a {
                let b = best.0;
                let nb = counts[b] as f64;
                for (d, v) in p.iter().enumerate() {
                    means[a][d] = (means[a][d] * na - v) / (na - 1.0);
                    means[b][d] = (means[b][d] * nb + v) / (nb + 1.0);
                }
                counts[a] -= 1;
                counts[b] += 1;
                assignments[i] = b;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    if moved_any {
        *centroids = cluster_means(points, assignments, k).0;
    }
    moved_any
}

/// Lloyd's algorithm from k-means++ seeding followed by single-point
/// refinement, best of `n_init` seeded restarts.
///
/// Lloyd iteration stops when assignments no longer change or after `max_iters` updates.
pub fn kmeans(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<CentroidSet, ResampleError> {
    let n = points.len();
    if cfg.k == 0 || cfg.k > n {
        return Err(ResampleError::BadK { k: cfg.k, n });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(ResampleError::Ragged);
    }
    let mut r = rng::seeded(cfg.seed);
    let mut best: Option<CentroidSet> = None;
    for _ in 0..cfg.n_init.max(1) {
        let run = lloyd(points, cfg.k, cfg.max_iters, &mut r);
        if best.as_ref().is_none_or(|b| run.sse() < b.sse()) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one run"))
}

/// Cluster-centroid undersampling with `k` = minority count.
///
/// k-means runs on the majority rows only; the minority class is untouched.
/// In hard mode each centroid, in order, claims its nearest still-unclaimed
/// majority row (ties to the lower index).
pub fn cluster_centroids_undersample(
    features: &[Vec<f64>],
    labels: &[Label],
    mode: CentroidMode,
    seed: u64,
) -> Result<ResampleResult, ResampleError> {
    if features.len() != labels.len() {
        return Err(ResampleError::Length {
            features: features.len(),
            labels: labels.len(),
        });
    }
    let Classes {
        minority,
        majority,
        majority_label,
    } = classes(labels)?;
    if minority.len() == majority.len() {
        return Ok(finish((0..labels.len()).collect(), Vec::new(), labels));
    }
    let points: Vec<Vec<f64>> = majority.iter().map(|&i| features[i].clone()).collect();
    let set = kmeans(&points, &KMeansConfig::new(minority.len(), seed))?;

    match mode {
        CentroidMode::Soft => {
            let synthetic = set
                .centroids
                .into_iter()
                .map(|c| (c, majority_label))
                .collect();
            Ok(finish(minority, synthetic, labels))
        }
        CentroidMode::Hard => {
            let mut used = vec![false; points.len()];
            let mut kept = minority;
            for c in &set.centroids {
                let mut best: Option<(usize, f64)> = None;
                for (i, p) in points.iter().enumerate() {
                    if used[i] {
                        continue;
                    }
                    let d = squared_distance(p, c);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
                let (i, _) = best.expect("k never exceeds the majority count");
                used[i] = true;
                kept.push(majority[i]);
            }
            Ok(finish(kept, Vec::new(), labels))
        }
    }
}
