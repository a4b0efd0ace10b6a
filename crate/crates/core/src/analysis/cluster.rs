use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

/// K-means with k-means++ seeding and several restarts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeans {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when inertia improves by less than this fraction.
    pub tol: f64,
    pub seed: u64,
}

impl KMeans {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
            seed,
        }
    }

    /// Fits every restart and keeps the lowest inertia (earliest on ties).
    pub fn fit<T: Scalar>(&self, points: &[Vec<T>]) -> Result<KMeansModel<T>> {
        if self.k == 0 || self.k > points.len() {
            return Err(Error::Config(format!(
                "k-means with k = {} needs at least k points, got {}",
                self.k,
                points.len()
            )));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Input("points have differing dimensions".into()));
        }
        let fits: Vec<KMeansModel<T>> = (0..self.restarts.max(1))
            .into_par_iter()
            .map(|r| self.fit_once(points, derive_seed(self.seed, r as u64)))
            .collect();
        let mut best = None::<KMeansModel<T>>;
        for f in fits {
            if best.as_ref().map_or(true, |b| f.inertia < b.inertia) {
                best = Some(f);
            }
        }
        Ok(best.expect("at least one restart"))
    }

    fn fit_once<T: Scalar>(&self, points: &[Vec<T>], seed: u64) -> KMeansModel<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centroids = plus_plus(points, self.k, &mut rng);
        let mut labels = vec![0; points.len()];
        let mut inertia = f64::INFINITY;
        for _ in 0..self.max_iter {
            let mut next = 0.0;
            for (p, l) in points.iter().zip(labels.iter_mut()) {
                let (c, d) = nearest(&centroids, p);
                *l = c;
                next += d;
            }
            let mut sums = vec![vec![T::zero(); points[0].len()]; self.k];
            let mut counts = vec![0usize; self.k];
            for (p, &l) in points.iter().zip(&labels) {
                counts[l] += 1;
                for (s, &x) in sums[l].iter_mut().zip(p) {
                    *s += x;
                }
            }
            for (c, (s, &n)) in centroids.iter_mut().zip(sums.into_iter().zip(&counts)) {
                if n > 0 {
                    *c = s.into_iter().map(|x| x / T::of_usize(n)).collect();
                }
            }
            let done = inertia.is_finite() && inertia - next <= self.tol * inertia;
            inertia = next;
            if done {
                break;
            }
        }
        let inertia = points.iter().map(|p| nearest(&centroids, p).1).sum();
        KMeansModel { centroids, inertia }
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = (x - y).as_f64();
            d * d
        })
        .sum()
}

fn nearest<T: Scalar>(centroids: &[Vec<T>], p: &[T]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus<T: Scalar>(points: &[Vec<T>], k: usize, rng: &mut impl Rng) -> Vec<Vec<T>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = d2.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansModel<T> {
    pub centroids: Vec<Vec<T>>,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
}

impl<T: Scalar> KMeansModel<T> {
    pub fn predict(&self, point: &[T]) -> usize {
        nearest(&self.centroids, point).0
    }

    pub fn predict_all(&self, points: &[Vec<T>]) -> Vec<usize> {
        points.iter().map(|p| self.predict(p)).collect()
    }
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    -counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Homogeneity and completeness of `clusters` against `labels`.
///
/// `h = 1 - H(C|K)/H(C)` and `c = 1 - H(K|C)/H(K)`, each defined as 1 when
/// the denominator entropy is 0.
pub fn homogeneity_completeness(labels: &[usize], clusters: &[usize]) -> Result<(f64, f64)> {
    if labels.len() != clusters.len() || labels.is_empty() {
        return Err(Error::Input(format!(
            "need equal non-empty label and cluster lists, got {} and {}",
            labels.len(),
            clusters.len()
        )));
    }
    let n = labels.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut by_label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut by_cluster: BTreeMap<usize, usize> = BTreeMap::new();
    for (&c, &k) in labels.iter().zip(clusters) {
        *joint.entry((c, k)).or_default() += 1;
        *by_label.entry(c).or_default() += 1;
        *by_cluster.entry(k).or_default() += 1;
    }
    let h_c = entropy(by_label.values().copied(), n);
    let h_k = entropy(by_cluster.values().copied(), n);
    let mut h_c_given_k = 0.0;
    let mut h_k_given_c = 0.0;
    for (&(c, k), &nck) in &joint {
        let p = nck as f64 / n;
        h_c_given_k -= p * (nck as f64 / by_cluster[&k] as f64).ln();
        h_k_given_c -= p * (nck as f64 / by_label[&c] as f64).ln();
    }
    let score = |cond: f64, total: f64| {
        if total == 0.0 {
            1.0
        } else {
            (1.0 - cond / total).clamp(0.0, 1.0)
        }
    };
    Ok((score(h_c_given_k, h_c), score(h_k_given_c, h_k)))
}
