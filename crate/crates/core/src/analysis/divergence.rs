use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which vocabulary a pairwise divergence is computed over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// `V_a ∪ V_b`; the matrix is symmetric.
    UnionOfPair,
    /// `V_a` only, where `a` is the row topic.
    FirstTopic,
}

impl Convention {
    pub fn id(self) -> &'static str {
        match self {
            Convention::UnionOfPair => "union-of-pair",
            Convention::FirstTopic => "first-topic",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" | "union-of-pair" => Ok(Convention::UnionOfPair),
            "first" | "first-topic" => Ok(Convention::FirstTopic),
            _ => Err(Error::Config(format!(
                "unknown convention {s:?}; expected union-of-pair or first-topic"
            ))),
        }
    }
}

/// Relative frequencies of `vocabulary` words (in its sorted order) over `documents`.
pub fn word_distribution<T: Scalar>(documents: &[Vec<String>], vocabulary: &BTreeSet<String>) -> Result<Vec<T>> {
    if vocabulary.is_empty() {
        return Err(Error::Input("word_distribution needs a non-empty vocabulary".into()));
    }
    let mut counts: BTreeMap<&str, usize> = vocabulary.iter().map(|w| (w.as_str(), 0)).collect();
    let mut total = 0usize;
    for tok in documents.iter().flatten() {
        if let Some(c) = counts.get_mut(tok.as_str()) {
            *c += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Input("no document token is in the vocabulary".into()));
    }
    Ok(counts
        .values()
        .map(|&c| T::of_usize(c) / T::of_usize(total))
        .collect())
}

fn check_distribution<T: Scalar>(name: &str, p: &[T]) -> Result<()> {
    let mut sum = T::zero();
    for &x in p {
        if !(x >= T::zero()) || !x.is_finite() {
            return Err(Error::Input(format!("{name} has invalid entry {x}")));
        }
        sum += x;
    }
    let tol = 1e-9_f64.max(4.0 * T::epsilon().as_f64() * p.len() as f64);
    if (sum.as_f64() - 1.0).abs() > tol {
        return Err(Error::Input(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Jensen-Shannon divergence in nats, with `0 log 0 = 0`.
pub fn js_divergence<T: Scalar>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::Input(format!(
            "distributions differ in length ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    check_distribution("P", p)?;
    check_distribution("Q", q)?;
    let half = T::of(0.5);
    let mut total = T::zero();
    for (&a, &b) in p.iter().zip(q) {
        let m = half * (a + b);
        let kl = |x: T| if x > T::zero() { x * (x / m).ln() } else { T::zero() };
        total += kl(a) + kl(b);
    }
    Ok((half * total).max(T::zero()))
}

/// Pairwise divergences between topics.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceMatrix {
    pub topics: Vec<String>,
    pub convention: Convention,
    /// `values[i][j] = D(topic i, topic j)`.
    pub values: Vec<Vec<f64>>,
}

impl DivergenceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# convention={}\ntopic", self.convention);
        for t in &self.topics {
            write!(out, "\t{t}").unwrap();
        }
        out.push('\n');
        for (t, row) in self.topics.iter().zip(&self.values) {
            out.push_str(t);
            for v in row {
                write!(out, "\t{v:.12}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Divergence between every ordered pair of topics, each given as its documents.
pub fn divergence_matrix(topics: &[(String, Vec<Vec<String>>)], convention: Convention) -> Result<DivergenceMatrix> {
    let n = topics.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "divergence matrix needs at least 2 topics, got {n}"
        )));
    }
    let vocabularies: Vec<BTreeSet<String>> = topics
        .iter()
        .map(|(_, docs)| docs.iter().flatten().cloned().collect())
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                return Ok(0.0);
            }
            let vocab = match convention {
                Convention::UnionOfPair => vocabularies[i].union(&vocabularies[j]).cloned().collect(),
                Convention::FirstTopic => vocabularies[i].clone(),
            };
            let p = word_distribution::<f64>(&topics[i].1, &vocab)
                .map_err(|e| Error::Input(format!("topic {}: {e}", topics[i].0)))?;
            let q = word_distribution::<f64>(&topics[j].1, &vocab);
            match q {
                Ok(q) => js_divergence(&p, &q),
                // No shared words: the second topic has all its mass outside V_a.
                Err(_) if convention == Convention::FirstTopic => Ok(std::f64::consts::LN_2),
                Err(e) => Err(Error::Input(format!("topic {}: {e}", topics[j].0))),
            }
        })
        .collect::<Result<_>>()?;
    Ok(DivergenceMatrix {
        topics: topics.iter().map(|(t, _)| t.clone()).collect(),
        convention,
        values: entries.chunks(n).map(<[f64]>::to_vec).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(text: &str) -> Vec<Vec<String>> {
        text.split('|')
            .map(|d| d.split_whitespace().map(str::to_owned).collect())
            .collect()
    }

    fn vocab(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn counting() {
        let d = word_distribution::<f64>(&docs("a a b"), &vocab(&["a", "b"])).unwrap();
        assert_eq!(d, vec![2.0 / 3.0, 1.0 / 3.0]);
        let d = word_distribution::<f64>(&docs("a a b"), &vocab(&["a"])).unwrap();
        assert_eq!(d, vec![1.0]);
        assert!(word_distribution::<f64>(&docs("a a b"), &vocab(&["z"])).is_err());
    }

    #[test]
    fn js_limits() {
        assert_eq!(js_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d: f64 = js_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 1e-12);
        let d: f64 = js_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((d - 0.2157615543388356955794143).abs() < 1e-15);
        assert!(js_divergence(&[-0.5, 1.5], &[0.5, 0.5]).is_err());
        assert!(js_divergence(&[0.5, 0.6], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn first_topic_is_asymmetric() {
        let topics = vec![
            ("x".to_owned(), docs("a a b")),
            ("y".to_owned(), docs("a c c c")),
        ];
        let m = divergence_matrix(&topics, Convention::FirstTopic).unwrap();
        assert!((m.get(0, 1) - m.get(1, 0)).abs() > 1e-3);
        let u = divergence_matrix(&topics, Convention::UnionOfPair).unwrap();
        assert_eq!(u.get(0, 1), u.get(1, 0));
        assert_eq!(u.get(0, 0), 0.0);
    }
}
