use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::cluster::{homogeneity_completeness, KMeans};
use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use crate::model::{EncodedExample, ModelParams};
use crate::scalar::Scalar;

/// Fraction of points the probe fits K-means on.
pub const PROBE_FIT_FRACTION: f64 = 0.8;

/// Document representations with their gold topics.
#[derive(Clone, Debug, PartialEq)]
pub struct Representations<T> {
    /// One `ṽ_dt` of width `2h` per example.
    pub vectors: Vec<Vec<T>>,
    pub topics: Vec<usize>,
}

impl<T> Representations<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn extract_representations<T: Scalar>(
    params: &ModelParams<T>,
    embeddings: &EmbeddingTable<T>,
    examples: &[EncodedExample],
) -> Result<Representations<T>> {
    let outputs = params.infer_batch(embeddings, examples)?;
    Ok(Representations {
        vectors: outputs.into_iter().map(|o| o.v_tilde).collect(),
        topics: examples.iter().map(|e| e.topic_id).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterReport {
    pub homogeneity: f64,
    pub completeness: f64,
    pub k: usize,
    pub seed: u64,
    pub n_fit: usize,
    pub n_eval: usize,
}

impl ClusterReport {
    pub fn to_tsv(&self) -> String {
        format!(
            "# k={} seed={} n_fit={} n_eval={}\nhomogeneity\tcompleteness\n{:.6}\t{:.6}\n",
            self.k, self.seed, self.n_fit, self.n_eval, self.homogeneity, self.completeness
        )
    }
}

/// Fits K-means on a seeded 80% of the points and scores the clusters the
/// remaining 20% fall into against their topics.
pub fn cluster_probe<T: Scalar>(reps: &Representations<T>, k: usize, seed: u64) -> Result<ClusterReport> {
    if reps.vectors.len() != reps.topics.len() {
        return Err(Error::Input("representation and topic counts differ".into()));
    }
    let n = reps.len();
    let n_fit = ((PROBE_FIT_FRACTION * n as f64).round() as usize).min(n.saturating_sub(1));
    if k == 0 || n_fit < k {
        return Err(Error::Config(format!(
            "cluster probe with k = {k} needs at least {k} fit points, have {n_fit} of {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (fit, eval) = idx.split_at(n_fit);
    let fit_points: Vec<Vec<T>> = fit.iter().map(|&i| reps.vectors[i].clone()).collect();
    let model = KMeans::new(k, seed).fit(&fit_points)?;
    let clusters: Vec<usize> = eval.iter().map(|&i| model.predict(&reps.vectors[i])).collect();
    let gold: Vec<usize> = eval.iter().map(|&i| reps.topics[i]).collect();
    let (homogeneity, completeness) = homogeneity_completeness(&gold, &clusters)?;
    Ok(ClusterReport {
        homogeneity,
        completeness,
        k,
        seed,
        n_fit,
        n_eval: eval.len(),
    })
}
