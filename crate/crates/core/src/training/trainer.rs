use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{f_avg, macro_f1};
use crate::autodiff::{adam_step, AdamState, Graph};
use crate::data::{EmbeddingTable, SplitSpec, Stance};
use crate::error::{Error, Result};
use crate::model::{EncodedExample, ForwardOutputs, ModelParams};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::training::config::TrainConfig;
use crate::training::loss::{total_loss, LossBreakdown};
use crate::training::schedule::Schedule;

/// Everything logged for one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub rho: f64,
    /// Batch-averaged loss terms.
    pub losses: LossBreakdown,
    pub dev_f_avg: f64,
    /// Macro-F1 of the discriminator on the training pool; `None` without adversary.
    pub train_disc_f1: Option<f64>,
    pub train_stance_acc: f64,
}

/// Log of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub variant: String,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_f_avg: f64,
    pub stopped_epoch: usize,
    pub n_train: usize,
    pub n_unlabeled: usize,
}

impl RunRecord {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# variant={} seed={} best_epoch={} best_dev_f_avg={:.6} stopped_epoch={} n_train={} n_unlabeled={}",
            self.variant,
            self.seed,
            self.best_epoch,
            self.best_dev_f_avg,
            self.stopped_epoch,
            self.n_train,
            self.n_unlabeled
        )
        .unwrap();
        out.push_str("epoch\tlr\trho");
        for t in LossBreakdown::TERMS {
            write!(out, "\tloss_{t}").unwrap();
        }
        out.push_str("\tdev_f_avg\ttrain_disc_f1\ttrain_stance_acc\n");
        for e in &self.epochs {
            write!(out, "{}\t{:.8e}\t{:.8}", e.epoch, e.lr, e.rho).unwrap();
            for v in e.losses.values() {
                write!(out, "\t{v:.8}").unwrap();
            }
            let disc = e.train_disc_f1.map_or_else(|| "NA".to_owned(), |d| format!("{d:.6}"));
            writeln!(out, "\t{:.6}\t{disc}\t{:.6}", e.dev_f_avg, e.train_stance_acc).unwrap();
        }
        out
    }
}

/// Stops once `patience` epochs pass without a strict improvement.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    /// Records `score` for `epoch`; returns true when training should stop.
    pub fn observe(&mut self, epoch: usize, score: f64) -> bool {
        match self.best {
            Some((_, b)) if score <= b => self.stale += 1,
            _ => {
                self.best = Some((epoch, score));
                self.stale = 0;
            }
        }
        self.stale >= self.patience
    }

    pub fn improved_at(&self, epoch: usize) -> bool {
        self.best.map_or(false, |(e, _)| e == epoch)
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

/// Observer verdict after each epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Result of a run: its log and the parameters from the best dev epoch.
#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub record: RunRecord,
    pub best_params: ModelParams<T>,
}

/// Fresh parameters sized for `split`, seeded from `config.seed`.
pub fn init_params<T: Scalar>(config: &TrainConfig, split: &SplitSpec) -> Result<ModelParams<T>> {
    config.validate()?;
    ModelParams::init(config.model_dims(split.n_topics), derive_seed(config.seed, 0))
}

pub fn train<T: Scalar>(
    config: &TrainConfig,
    split: &SplitSpec,
    embeddings: &EmbeddingTable<T>,
    params: ModelParams<T>,
) -> Result<TrainOutcome<T>> {
    train_with(config, split, embeddings, params, |_| Control::Continue)
}

/// Trains with early stopping on dev F_avg, calling `observer` after every epoch.
pub fn train_with<T: Scalar>(
    config: &TrainConfig,
    split: &SplitSpec,
    embeddings: &EmbeddingTable<T>,
    mut params: ModelParams<T>,
    mut observer: impl FnMut(&EpochRecord) -> Control,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if params.dims != config.model_dims(split.n_topics) {
        return Err(Error::Config(format!(
            "parameters built for {:?} but config asks for {:?}",
            params.dims,
            config.model_dims(split.n_topics)
        )));
    }
    let encode = |xs: &[crate::data::Example]| -> Vec<EncodedExample> {
        xs.iter().map(|e| EncodedExample::new(e, embeddings)).collect()
    };
    let mut pool = encode(&split.train);
    let n_train = pool.len();
    if config.uses_unlabeled() {
        pool.extend(encode(&split.unlabeled));
    }
    let n_unlabeled = pool.len() - n_train;
    let dev = encode(&split.dev);
    if pool.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    if dev.is_empty() {
        return Err(Error::Config("dev split is empty; early stopping needs dev data".into()));
    }
    let dev_gold: Vec<Stance> = dev.iter().map(|e| e.stance.expect("dev is labeled")).collect();

    let schedule = Schedule {
        base_lr: T::of(config.lr),
        alpha: T::of(config.alpha),
        beta: T::of(config.beta),
        gamma: T::of(config.gamma),
        total_epochs: config.max_epochs,
        warmup_epochs: config.warmup_epochs,
    };
    let mut adam = AdamState::new(&params.store);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut stopper = EarlyStopping::new(config.patience.max(1));
    let mut best_params = params.clone();
    let mut epochs = Vec::new();

    for epoch in 1..=config.max_epochs {
        let state = schedule.at(epoch)?;
        order.shuffle(&mut rng);
        let mut sum = LossBreakdown::default();
        let mut batches = 0usize;
        let mut disc_pred = Vec::new();
        let mut disc_gold = Vec::new();
        let (mut correct, mut labeled) = (0usize, 0usize);

        for chunk in order.chunks(config.batch_size) {
            let members: Vec<EncodedExample> = chunk.iter().map(|&i| pool[i].clone()).collect();
            let mut g = Graph::new();
            let bound = params.bind(&mut g);
            let mut outputs = Vec::with_capacity(members.len());
            for ex in &members {
                let vars = params.forward(&mut g, &bound, embeddings, ex, state.rho)?;
                let out = ForwardOutputs::from_vars(&g, &vars);
                if let Some(t) = out.predicted_topic() {
                    disc_pred.push(t);
                    disc_gold.push(ex.topic_id);
                }
                if let Some(s) = ex.stance {
                    labeled += 1;
                    correct += usize::from(out.predicted_stance() == s);
                }
                outputs.push(vars);
            }
            let (loss, breakdown) = total_loss(&mut g, &params, &bound, &outputs, &members, config)?;
            if let Some((term, value)) = breakdown.non_finite() {
                return Err(Error::Diverged { epoch, term, value });
            }
            g.backward(loss)?;
            params.store.zero_grads();
            params.store.absorb_grads(&g)?;
            adam_step(&mut params.store, &mut adam, state.lr)?;
            sum = sum + breakdown;
            batches += 1;
        }

        let preds: Vec<Stance> = params
            .infer_batch(embeddings, &dev)?
            .iter()
            .map(ForwardOutputs::predicted_stance)
            .collect();
        let dev_f_avg = f_avg(&preds, &dev_gold)?.f_avg;
        let train_disc_f1 = if disc_pred.is_empty() {
            None
        } else {
            Some(macro_f1(&disc_pred, &disc_gold)?)
        };
        let record = EpochRecord {
            epoch,
            lr: state.lr.as_f64(),
            rho: state.rho.as_f64(),
            losses: sum / batches as f64,
            dev_f_avg,
            train_disc_f1,
            train_stance_acc: if labeled == 0 {
                0.0
            } else {
                correct as f64 / labeled as f64
            },
        };
        log::debug!(
            "epoch {epoch}: loss {:.4} dev F_avg {:.4} lr {:.2e} rho {:.4}",
            record.losses.total,
            dev_f_avg,
            record.lr,
            record.rho
        );
        let stop = stopper.observe(epoch, dev_f_avg);
        if stopper.improved_at(epoch) {
            best_params = params.clone();
        }
        let verdict = observer(&record);
        epochs.push(record);
        if stop || verdict == Control::Stop {
            break;
        }
    }

    let (best_epoch, best_dev_f_avg) = stopper.best().expect("at least one epoch");
    let stopped_epoch = epochs.len();
    log::info!(
        "stopped after epoch {stopped_epoch}; best dev F_avg {best_dev_f_avg:.4} at epoch {best_epoch}"
    );
    Ok(TrainOutcome {
        record: RunRecord {
            variant: "full".into(),
            seed: config.seed,
            epochs,
            best_epoch,
            best_dev_f_avg,
            stopped_epoch,
            n_train,
            n_unlabeled,
        },
        best_params,
    })
}

/// Test-set stance metrics for trained parameters.
pub fn evaluate<T: Scalar>(
    params: &ModelParams<T>,
    embeddings: &EmbeddingTable<T>,
    examples: &[crate::data::Example],
) -> Result<crate::analysis::MetricsReport> {
    let encoded: Vec<EncodedExample> = examples
        .iter()
        .filter(|e| e.is_labeled())
        .map(|e| EncodedExample::new(e, embeddings))
        .collect();
    let gold: Vec<Stance> = encoded.iter().filter_map(|e| e.stance).collect();
    let preds: Vec<Stance> = params
        .infer_batch(embeddings, &encoded)?
        .iter()
        .map(ForwardOutputs::predicted_stance)
        .collect();
    f_avg(&preds, &gold)
}
