use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::corpus::{Corpus, Example, Stance};
use crate::data::preprocess::normalize;
use crate::error::{Error, Result};

/// Fraction of the non-test labeled examples held out for development.
pub const DEV_FRACTION: f64 = 0.15;

/// Leave-one-topic-out partition of a corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSpec {
    pub zero_shot_topic: usize,
    pub n_topics: usize,
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub test: Vec<Example>,
    /// Unlabeled tweets for the zero-shot topic.
    pub unlabeled: Vec<Example>,
    pub seed: u64,
}

impl SplitSpec {
    /// Every example of every partition.
    pub fn all(&self) -> impl Iterator<Item = &Example> {
        self.train
            .iter()
            .chain(&self.dev)
            .chain(&self.test)
            .chain(&self.unlabeled)
    }

    /// Union of document and topic tokens across all partitions.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut v = BTreeSet::new();
        for e in self.all() {
            v.extend(e.document.iter().cloned());
            v.extend(e.topic.iter().cloned());
        }
        v
    }
}

/// Holds out every labeled example of `zero_shot_topic` as the test set and
/// splits the rest 85/15 into train and dev, stratified by (topic, stance).
/// Unlabeled rows of the zero-shot topic become the initial unlabeled pool.
pub fn make_splits(corpus: &Corpus, zero_shot_topic: usize, seed: u64) -> Result<SplitSpec> {
    if corpus.n_topics() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 topics for a zero-shot split, corpus has {}",
            corpus.n_topics()
        )));
    }
    if zero_shot_topic >= corpus.n_topics() {
        return Err(Error::Config(format!(
            "zero-shot topic id {zero_shot_topic} not in corpus ({} topics)",
            corpus.n_topics()
        )));
    }

    let mut test = Vec::new();
    let mut unlabeled = Vec::new();
    let mut strata: BTreeMap<(usize, Stance), Vec<&Example>> = BTreeMap::new();
    for e in &corpus.examples {
        match (e.topic_id == zero_shot_topic, e.stance) {
            (true, Some(_)) => test.push(e.clone()),
            (true, None) => unlabeled.push(e.clone()),
            (false, Some(s)) => strata.entry((e.topic_id, s)).or_default().push(e),
            (false, None) => {}
        }
    }
    if test.is_empty() {
        return Err(Error::Config(format!(
            "zero-shot topic {:?} has no labeled examples",
            corpus.topics[zero_shot_topic].name
        )));
    }

    let total: usize = strata.values().map(Vec::len).sum();
    let mut target = (DEV_FRACTION * total as f64).round() as usize;
    if total >= 2 {
        target = target.max(1);
    }
    let quotas = largest_remainder(strata.values().map(Vec::len), target);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for (members, quota) in strata.into_values().zip(quotas) {
        let mut members = members;
        members.shuffle(&mut rng);
        let (d, t) = members.split_at(quota);
        dev.extend(d.iter().map(|&e| e.clone()));
        train.extend(t.iter().map(|&e| e.clone()));
    }
    train.sort_by_key(|e| e.id);
    dev.sort_by_key(|e| e.id);

    Ok(SplitSpec {
        zero_shot_topic,
        n_topics: corpus.n_topics(),
        train,
        dev,
        test,
        unlabeled,
        seed,
    })
}

/// Apportions `target` across groups proportionally to their sizes
/// (Hamilton's method; ties go to the earlier group).
fn largest_remainder(sizes: impl Iterator<Item = usize>, target: usize) -> Vec<usize> {
    let sizes: Vec<usize> = sizes.collect();
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let exact: Vec<f64> = sizes
        .iter()
        .map(|&n| target as f64 * n as f64 / total as f64)
        .collect();
    let mut quotas: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(target.saturating_sub(assigned)) {
        quotas[i] += 1;
    }
    quotas
}

/// Outcome of [`attach_unlabeled`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnlabeledReport {
    pub matched: usize,
    pub rejected_empty: usize,
    pub attached: usize,
}

/// Adds every tweet containing one of `keywords` (case-sensitive substring)
/// to the unlabeled pool of the zero-shot topic.
pub fn attach_unlabeled(
    split: &mut SplitSpec,
    topic_tokens: &[String],
    tweets: &[String],
    keywords: &[String],
) -> Result<UnlabeledReport> {
    if keywords.is_empty() || keywords.iter().all(String::is_empty) {
        return Err(Error::Config("attach_unlabeled needs at least one keyword".into()));
    }
    let mut next_id = split.all().map(|e| e.id + 1).max().unwrap_or(0);
    let mut report = UnlabeledReport {
        matched: 0,
        rejected_empty: 0,
        attached: 0,
    };
    for tweet in tweets {
        if !keywords
            .iter()
            .any(|k| !k.is_empty() && tweet.contains(k.as_str()))
        {
            continue;
        }
        report.matched += 1;
        let document = normalize(tweet);
        if document.is_empty() {
            report.rejected_empty += 1;
            continue;
        }
        split.unlabeled.push(Example {
            id: next_id,
            document,
            topic: topic_tokens.to_vec(),
            stance: None,
            topic_id: split.zero_shot_topic,
        });
        next_id += 1;
        report.attached += 1;
    }
    if report.attached == 0 {
        log::warn!(
            "no unlabeled tweets matched keywords {keywords:?}; training proceeds without unlabeled data"
        );
    } else {
        log::info!("attached {} unlabeled tweets", report.attached);
    }
    Ok(report)
}

/// Stance percentages for one topic.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution {
    pub topic_id: usize,
    pub total: usize,
    pub pro: f64,
    pub con: f64,
    pub neutral: f64,
}

/// Per-topic stance percentages over the labeled examples given.
pub fn class_distribution<'a>(examples: impl IntoIterator<Item = &'a Example>) -> Vec<ClassDistribution> {
    let mut counts: BTreeMap<usize, [usize; 3]> = BTreeMap::new();
    for e in examples {
        if let Some(s) = e.stance {
            counts.entry(e.topic_id).or_default()[s.class_index()] += 1;
        }
    }
    counts
        .into_iter()
        .map(|(topic_id, c)| {
            let total = c.iter().sum::<usize>();
            let pct = |n: usize| 100.0 * n as f64 / total as f64;
            ClassDistribution {
                topic_id,
                total,
                pro: pct(c[Stance::Pro.class_index()]),
                con: pct(c[Stance::Con.class_index()]),
                neutral: pct(c[Stance::Neutral.class_index()]),
            }
        })
        .collect()
}

/// Distribution over all labeled examples of a split.
pub fn split_class_distribution(split: &SplitSpec) -> Vec<ClassDistribution> {
    class_distribution(split.train.iter().chain(&split.dev).chain(&split.test))
}
