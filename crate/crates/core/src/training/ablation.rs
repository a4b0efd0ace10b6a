use std::fmt;
use std::str::FromStr;

use crate::data::{EmbeddingTable, SplitSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::training::config::TrainConfig;
use crate::training::trainer::{init_params, train, TrainOutcome};

/// Component ablations, plus the full model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Full,
    NoTransformation,
    NoTransformLoss,
    NoTopicRec,
    NoDocRec,
    NoRec,
    NoResidualTopic,
    NoUnlabeled,
    NoAdversary,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Full,
        Variant::NoTransformation,
        Variant::NoTransformLoss,
        Variant::NoTopicRec,
        Variant::NoDocRec,
        Variant::NoRec,
        Variant::NoResidualTopic,
        Variant::NoUnlabeled,
        Variant::NoAdversary,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoTransformation => "no-transformation",
            Variant::NoTransformLoss => "no-transform-loss",
            Variant::NoTopicRec => "no-topic-rec",
            Variant::NoDocRec => "no-doc-rec",
            Variant::NoRec => "no-rec",
            Variant::NoResidualTopic => "no-residual-topic",
            Variant::NoUnlabeled => "no-unlabeled",
            Variant::NoAdversary => "no-adversary",
        }
    }

    /// `config` with this variant's component switched off.
    pub fn apply(self, config: &TrainConfig) -> TrainConfig {
        let mut c = config.clone();
        match self {
            Variant::Full => {}
            Variant::NoTransformation => {
                c.transformation = false;
                c.transform_loss = false;
            }
            Variant::NoTransformLoss => c.transform_loss = false,
            Variant::NoTopicRec => c.topic_rec = false,
            Variant::NoDocRec => c.doc_rec = false,
            Variant::NoRec => {
                c.topic_rec = false;
                c.doc_rec = false;
            }
            Variant::NoResidualTopic => c.residual_topic = false,
            Variant::NoUnlabeled => c.unlabeled = false,
            Variant::NoAdversary => c.adversary = false,
        }
        c
    }

    /// Loss terms this variant forces to zero.
    pub fn disabled_terms(self) -> &'static [&'static str] {
        match self {
            Variant::Full | Variant::NoResidualTopic | Variant::NoUnlabeled => &[],
            Variant::NoTransformation | Variant::NoTransformLoss => &["transform"],
            Variant::NoTopicRec => &["rec_topic"],
            Variant::NoDocRec => &["rec_doc"],
            Variant::NoRec => &["rec_topic", "rec_doc"],
            Variant::NoAdversary => &["topic"],
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let alias = match s.as_str() {
            "toad" => "full",
            "no-adv" | "-adv" => "no-adversary",
            "no-dul" => "no-unlabeled",
            other => other,
        };
        Variant::ALL.into_iter().find(|v| v.id() == alias).ok_or_else(|| {
            let ids: Vec<&str> = Variant::ALL.iter().map(|v| v.id()).collect();
            Error::Config(format!("unknown variant {s:?}; expected one of {}", ids.join(", ")))
        })
    }
}

/// Trains `variant` of `base` from fresh parameters.
pub fn ablate<T: Scalar>(
    base: &TrainConfig,
    variant: Variant,
    split: &SplitSpec,
    embeddings: &EmbeddingTable<T>,
) -> Result<TrainOutcome<T>> {
    let config = variant.apply(base);
    let params = init_params(&config, split)?;
    let mut outcome = train(&config, split, embeddings, params)?;
    outcome.record.variant = variant.id().to_owned();
    Ok(outcome)
}
