use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{EmbeddingTable, SplitSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::training::config::TrainConfig;
use crate::training::trainer::{init_params, train};

/// Trials whose discriminator F1 falls below this are discarded.
pub const MIN_DISC_F1: f64 = 0.01;
pub const DEFAULT_TRIALS: usize = 20;

/// One searchable hyperparameter.
#[derive(Clone, Debug, PartialEq)]
pub enum Dimension {
    /// Inclusive integer range, sampled uniformly.
    UniformInt { lo: i64, hi: i64 },
    Choice(Vec<f64>),
}

impl Dimension {
    fn sample(&self, rng: &mut impl Rng) -> String {
        match self {
            Dimension::UniformInt { lo, hi } => rng.gen_range(*lo..=*hi).to_string(),
            Dimension::Choice(xs) => xs[rng.gen_range(0..xs.len())].to_string(),
        }
    }

    fn contains(&self, value: &str) -> bool {
        match self {
            Dimension::UniformInt { lo, hi } => value.parse::<i64>().map_or(false, |v| (*lo..=*hi).contains(&v)),
            Dimension::Choice(xs) => value.parse::<f64>().map_or(false, |v| xs.contains(&v)),
        }
    }
}

/// Named dimensions over [`TrainConfig`] keys.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    pub dims: Vec<(String, Dimension)>,
}

impl SearchSpace {
    /// The TOAD search space.
    pub fn toad() -> Self {
        use Dimension::*;
        let dims = vec![
            ("hidden", UniformInt { lo: 40, hi: 150 }),
            ("stance_hidden", UniformInt { lo: 80, hi: 300 }),
            ("disc_hidden", UniformInt { lo: 40, hi: 150 }),
            ("lambda_rec", Choice(vec![1.0])),
            ("lambda_tr", Choice(vec![0.1, 1.0, 10.0])),
            ("gamma", UniformInt { lo: 10, hi: 15 }),
            ("alpha", Choice(vec![10.0])),
            ("beta", Choice(vec![0.25])),
            ("lr", Choice(vec![0.001])),
        ];
        Self {
            dims: dims.into_iter().map(|(k, d)| (k.to_owned(), d)).collect(),
        }
    }

    /// The space searched for the model without adversary.
    pub fn no_adversary() -> Self {
        let mut s = Self::toad();
        s.dims.retain(|(k, _)| k == "hidden" || k == "stance_hidden");
        s
    }

    /// Draws one configuration on top of `base`, returning it with the sampled assignments.
    pub fn sample(&self, base: &TrainConfig, rng: &mut impl Rng) -> Result<(TrainConfig, Vec<(String, String)>)> {
        let mut cfg = base.clone();
        let mut assigned = Vec::with_capacity(self.dims.len());
        for (key, dim) in &self.dims {
            let v = dim.sample(rng);
            cfg.set(key, &v, 0)?;
            assigned.push((key.clone(), v));
        }
        cfg.validate()?;
        Ok((cfg, assigned))
    }

    pub fn contains(&self, config: &TrainConfig) -> bool {
        self.dims
            .iter()
            .all(|(k, d)| config.get(k).map_or(false, |v| d.contains(&v)))
    }
}

/// Best TOAD settings per SemEval topic abbreviation (DT, HC, FM, LA, A, CC).
pub fn toad_best_config(topic: &str) -> Option<TrainConfig> {
    let (hidden, stance_hidden, disc_hidden, lambda_tr, gamma) = match topic {
        "DT" => (80, 147, 85, 0.1, 14.0),
        "HC" => (105, 278, 95, 0.1, 12.0),
        "FM" => (113, 201, 140, 10.0, 14.0),
        "LA" => (115, 222, 120, 10.0, 11.0),
        "A" => (111, 213, 143, 1.0, 11.0),
        "CC" => (105, 254, 90, 0.1, 10.0),
        _ => return None,
    };
    Some(TrainConfig {
        hidden,
        stance_hidden,
        disc_hidden,
        lambda_tr,
        gamma,
        ..TrainConfig::default()
    })
}

/// Best settings of the model without adversary.
pub fn no_adversary_best_config(topic: &str) -> Option<TrainConfig> {
    let (hidden, stance_hidden) = match topic {
        "DT" | "HC" => (96, 137),
        "FM" | "A" => (140, 228),
        "LA" => (134, 166),
        "CC" => (115, 222),
        _ => return None,
    };
    Some(TrainConfig {
        hidden,
        stance_hidden,
        adversary: false,
        ..toad_best_config(topic)?
    })
}

/// Scores reported by one trial's evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialScores {
    /// Dev F_avg.
    pub stance_f1: f64,
    /// Training-set discriminator macro-F1; `None` when there is no discriminator.
    pub disc_f1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub index: usize,
    pub seed: u64,
    pub assignments: Vec<(String, String)>,
    pub config: TrainConfig,
    pub scores: Option<TrialScores>,
    pub error: Option<String>,
    pub excluded: bool,
    pub mean_rank: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub trials: Vec<TrialOutcome>,
    /// Index into `trials` of the selected trial; `None` when all were excluded.
    pub best: Option<usize>,
}

impl SearchResult {
    pub fn best_config(&self) -> Option<&TrainConfig> {
        self.best.map(|i| &self.trials[i].config)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let keys: Vec<&str> = self
            .trials
            .first()
            .map(|t| t.assignments.iter().map(|(k, _)| k.as_str()).collect())
            .unwrap_or_default();
        writeln!(out, "# best_trial={}", self.best.map_or("none".into(), |b| b.to_string())).unwrap();
        out.push_str("trial_index\tseed");
        for k in &keys {
            write!(out, "\t{k}").unwrap();
        }
        out.push_str("\tdev_f_avg\ttrain_disc_f1\texcluded\tmean_rank\n");
        for t in &self.trials {
            write!(out, "{}\t{}", t.index, t.seed).unwrap();
            for (_, v) in &t.assignments {
                write!(out, "\t{v}").unwrap();
            }
            let fmt = |x: Option<f64>| x.map_or_else(|| "NA".to_owned(), |v| format!("{v:.6}"));
            writeln!(
                out,
                "\t{}\t{}\t{}\t{}",
                fmt(t.scores.map(|s| s.stance_f1)),
                fmt(t.scores.and_then(|s| s.disc_f1)),
                t.excluded,
                fmt(t.mean_rank)
            )
            .unwrap();
        }
        out
    }
}

/// Fractional ranks (1 = best) of `values` ordered by `better`; ties share the mean rank.
fn ranks(values: &[f64], descending: bool) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Marks exclusions and mean ranks in place and returns the selected trial.
///
/// Failed trials and those with discriminator F1 below [`MIN_DISC_F1`] are
/// excluded. Survivors are ranked by stance F1 (descending) and discriminator
/// F1 (ascending); the lowest mean rank wins, then the higher stance F1, then
/// the lower trial index.
pub fn select_best(trials: &mut [TrialOutcome]) -> Option<usize> {
    let mut alive = Vec::new();
    for (i, t) in trials.iter_mut().enumerate() {
        t.mean_rank = None;
        t.excluded = match t.scores {
            None => true,
            Some(s) => s.disc_f1.map_or(false, |d| d < MIN_DISC_F1) || !s.stance_f1.is_finite(),
        };
        if !t.excluded {
            alive.push(i);
        }
    }
    if alive.is_empty() {
        return None;
    }
    let stance: Vec<f64> = alive.iter().map(|&i| trials[i].scores.unwrap().stance_f1).collect();
    let disc: Vec<Option<f64>> = alive.iter().map(|&i| trials[i].scores.unwrap().disc_f1).collect();
    let rs = ranks(&stance, true);
    let rd = if disc.iter().all(Option::is_some) {
        Some(ranks(&disc.iter().map(|d| d.unwrap()).collect::<Vec<_>>(), false))
    } else {
        None
    };
    for (k, &i) in alive.iter().enumerate() {
        trials[i].mean_rank = Some(match &rd {
            Some(rd) => (rs[k] + rd[k]) / 2.0,
            None => rs[k],
        });
    }
    alive.into_iter().min_by(|&a, &b| {
        let (ta, tb) = (&trials[a], &trials[b]);
        ta.mean_rank
            .unwrap()
            .total_cmp(&tb.mean_rank.unwrap())
            .then(tb.scores.unwrap().stance_f1.total_cmp(&ta.scores.unwrap().stance_f1))
            .then(a.cmp(&b))
    })
}

/// Samples `trials` configurations and scores each with `evaluate`, running
/// up to `workers` trials at once. Trial `i` samples and trains from
/// `derive_seed(seed, i)`, so results do not depend on scheduling.
pub fn search_with<F>(
    space: &SearchSpace,
    base: &TrainConfig,
    trials: usize,
    seed: u64,
    workers: usize,
    evaluate: F,
) -> Result<SearchResult>
where
    F: Fn(usize, &TrainConfig) -> Result<TrialScores> + Sync,
{
    if trials == 0 {
        return Err(Error::Config("search needs at least one trial".into()));
    }
    let mut planned = Vec::with_capacity(trials);
    for index in 0..trials {
        let trial_seed = derive_seed(seed, index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let (mut config, assignments) = space.sample(base, &mut rng)?;
        config.seed = trial_seed;
        planned.push((index, trial_seed, config, assignments));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let mut outcomes: Vec<TrialOutcome> = pool.install(|| {
        planned
            .into_par_iter()
            .map(|(index, seed, config, assignments)| {
                let (scores, error) = match evaluate(index, &config) {
                    Ok(s) => (Some(s), None),
                    Err(e) => {
                        log::warn!("trial {index} failed: {e}");
                        (None, Some(e.to_string()))
                    }
                };
                TrialOutcome {
                    index,
                    seed,
                    assignments,
                    config,
                    scores,
                    error,
                    excluded: false,
                    mean_rank: None,
                }
            })
            .collect()
    });
    let best = select_best(&mut outcomes);
    if best.is_none() {
        log::error!("every search trial was excluded");
    }
    Ok(SearchResult {
        trials: outcomes,
        best,
    })
}

/// Random search that trains each sampled configuration on `split`.
pub fn hyperparameter_search<T: Scalar>(
    space: &SearchSpace,
    base: &TrainConfig,
    split: &SplitSpec,
    embeddings: &EmbeddingTable<T>,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<SearchResult> {
    search_with(space, base, trials, seed, workers, |_, config| {
        let params = init_params::<T>(config, split)?;
        let run = train(config, split, embeddings, params)?.record;
        let best = run.best().expect("best epoch recorded");
        Ok(TrialScores {
            stance_f1: run.best_dev_f_avg,
            disc_f1: best.train_disc_f1,
        })
    })
}
