//! Loading a data directory into a split with embeddings.
//!
//! Layout: `corpus.tsv` (required), `unlabeled.txt`, `keywords.tsv` and
//! `embeddings.txt` (all optional).

use std::path::{Path, PathBuf};

use toad::data::{
    attach_unlabeled, make_splits, read_keywords, read_tweets, semeval_keywords, Corpus, EmbeddingTable, SplitSpec,
    UnlabeledReport,
};
use toad::{derive_seed, Embeddings64, Result};

use crate::manifest::OutDir;

/// Salt for the embedding table seed.
pub const EMBEDDING_STREAM: u64 = 2;

pub struct Loaded {
    pub corpus: Corpus,
    pub split: SplitSpec,
    pub embeddings: Embeddings64,
    pub unlabeled: Option<UnlabeledReport>,
}

pub fn corpus_path(dir: &Path) -> PathBuf {
    dir.join("corpus.tsv")
}

pub fn load_corpus(dir: &Path, out: &mut OutDir) -> Result<Corpus> {
    let path = corpus_path(dir);
    out.input(&path);
    let corpus = Corpus::from_tsv(&path)?;
    if corpus.rejected > 0 {
        eprintln!("{}: {} empty tweets excluded", path.display(), corpus.rejected);
    }
    Ok(corpus)
}

fn keywords_for(dir: &Path, corpus: &Corpus, zs: usize, out: &mut OutDir) -> Result<Option<Vec<String>>> {
    let path = dir.join("keywords.tsv");
    if path.exists() {
        out.input(&path);
        for (topic, words) in read_keywords(&path)? {
            if corpus.resolve_topic(&topic).ok() == Some(zs) {
                return Ok(Some(words));
            }
        }
        return Ok(None);
    }
    Ok(semeval_keywords(&corpus.topics[zs].name).map(|ws| ws.iter().map(|w| w.to_string()).collect()))
}

/// Reads the directory, holds out `topic` and builds the embedding table.
pub fn load(dir: &Path, topic: &str, seed: u64, dim: usize, out: &mut OutDir) -> Result<Loaded> {
    let corpus = load_corpus(dir, out)?;
    let zs = corpus.resolve_topic(topic)?;
    let mut split = make_splits(&corpus, zs, seed)?;
    out.seed("split", seed);

    let mut unlabeled = None;
    let tweets = dir.join("unlabeled.txt");
    if tweets.exists() {
        out.input(&tweets);
        match keywords_for(dir, &corpus, zs, out)? {
            Some(words) if !words.is_empty() => {
                let tokens = corpus.topics[zs].tokens.clone();
                unlabeled = Some(attach_unlabeled(&mut split, &tokens, &read_tweets(&tweets)?, &words)?);
            }
            _ => log::warn!(
                "no keywords for topic {:?}; unlabeled.txt ignored",
                corpus.topics[zs].name
            ),
        }
    }

    let vocab = split.vocabulary();
    let emb_seed = derive_seed(seed, EMBEDDING_STREAM);
    out.seed("embeddings", emb_seed);
    let vectors = dir.join("embeddings.txt");
    let embeddings = if vectors.exists() {
        out.input(&vectors);
        EmbeddingTable::load(&vectors, &vocab, dim, emb_seed)?
    } else {
        log::info!("no embeddings.txt; using random vectors");
        EmbeddingTable::random(&vocab, dim, emb_seed)?
    };
    Ok(Loaded {
        corpus,
        split,
        embeddings,
        unlabeled,
    })
}
