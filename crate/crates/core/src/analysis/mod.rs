//! Stance metrics, topic divergences and the topic-invariance cluster probe.

mod cluster;
mod divergence;
mod metrics;
mod probe;

pub use cluster::{homogeneity_completeness, KMeans, KMeansModel};
pub use divergence::{divergence_matrix, js_divergence, word_distribution, Convention, DivergenceMatrix};
pub use metrics::{f_avg, f_avg_from_f1, macro_f1, ClassScores, MetricsReport};
pub use probe::{cluster_probe, extract_representations, ClusterReport, Representations, PROBE_FIT_FRACTION};
