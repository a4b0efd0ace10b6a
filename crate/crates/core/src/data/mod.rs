//! Corpus ingest, tweet preprocessing, word vectors and zero-shot splits.

mod corpus;
mod embeddings;
mod preprocess;
mod split;
pub mod stopwords;

pub use corpus::{
    read_keywords, read_tweets, semeval_keywords, semeval_topic_name, Corpus, Example, Stance, Topic,
};
pub use embeddings::{EmbeddingTable, PAD, UNK};
pub use preprocess::{is_emoji, normalize, preprocess_tweet, segment_hashtag};
pub use split::{
    attach_unlabeled, class_distribution, make_splits, split_class_distribution, ClassDistribution,
    SplitSpec, UnlabeledReport, DEV_FRACTION,
};
