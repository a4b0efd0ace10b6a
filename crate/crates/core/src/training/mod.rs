//! Objective, schedules, the training loop, search and ablations.

mod ablation;
mod config;
mod loss;
mod schedule;
mod search;
mod trainer;

pub use ablation::{ablate, Variant};
pub use config::{TrainConfig, CONFIG_KEYS};
pub use loss::{total_loss, LossBreakdown};
pub use schedule::{schedule, Schedule, ScheduleState, DEFAULT_WARMUP_EPOCHS};
pub use search::{
    hyperparameter_search, no_adversary_best_config, search_with, select_best, toad_best_config,
    Dimension, SearchResult, SearchSpace, TrialOutcome, TrialScores, DEFAULT_TRIALS, MIN_DISC_F1,
};
pub use trainer::{
    evaluate, init_params, train, train_with, Control, EarlyStopping, EpochRecord, RunRecord,
    TrainOutcome,
};
