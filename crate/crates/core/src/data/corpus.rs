use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::data::preprocess::normalize;
use crate::error::{Error, Result};

/// Stance label. Class indices are con = 0, neutral = 1, pro = 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stance {
    Con,
    Neutral,
    Pro,
}

impl Stance {
    pub const ALL: [Stance; 3] = [Stance::Con, Stance::Neutral, Stance::Pro];

    pub fn class_index(self) -> usize {
        match self {
            Stance::Con => 0,
            Stance::Neutral => 1,
            Stance::Pro => 2,
        }
    }

    pub fn from_class_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Signed label: con = -1, neutral = 0, pro = 1.
    pub fn label(self) -> i8 {
        self.class_index() as i8 - 1
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Con => "con",
            Stance::Neutral => "neutral",
            Stance::Pro => "pro",
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pro" | "favor" | "1" | "+1" => Ok(Stance::Pro),
            "con" | "against" | "-1" => Ok(Stance::Con),
            "neutral" | "none" | "neither" | "0" => Ok(Stance::Neutral),
            other => Err(Error::Input(format!("unknown stance label {other:?}"))),
        }
    }
}

/// One preprocessed tweet with its topic.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    /// Stable identity within the corpus it was loaded from.
    pub id: usize,
    pub document: Vec<String>,
    pub topic: Vec<String>,
    pub stance: Option<Stance>,
    pub topic_id: usize,
}

impl Example {
    pub fn is_labeled(&self) -> bool {
        self.stance.is_some()
    }
}

/// A topic as it appears in the data, with its tokenization.
#[derive(Clone, Debug, PartialEq)]
pub struct Topic {
    pub name: String,
    pub tokens: Vec<String>,
}

/// Labeled (and optionally unlabeled) examples grouped under named topics.
/// Topic ids are assigned in order of first appearance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub topics: Vec<Topic>,
    pub examples: Vec<Example>,
    /// Rows dropped because preprocessing left no tokens.
    pub rejected: usize,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn topic_id(&self, name: &str) -> Option<usize> {
        self.topics.iter().position(|t| t.name == name)
    }

    /// Resolves a topic by exact name, case-insensitive name, or a SemEval
    /// abbreviation such as `DT`.
    pub fn resolve_topic(&self, query: &str) -> Result<usize> {
        if let Some(id) = self.topic_id(query) {
            return Ok(id);
        }
        let lower = query.to_lowercase();
        if let Some(id) = self
            .topics
            .iter()
            .position(|t| t.name.to_lowercase() == lower)
        {
            return Ok(id);
        }
        if let Some(full) = semeval_topic_name(query) {
            if let Some(id) = self.topic_id(full) {
                return Ok(id);
            }
        }
        let names: Vec<&str> = self.topics.iter().map(|t| t.name.as_str()).collect();
        Err(Error::Config(format!(
            "unknown topic {query:?}; valid topics: {}",
            names.join(", ")
        )))
    }

    /// Adds a topic if new and returns its id. Topic names must survive
    /// preprocessing.
    pub fn intern_topic(&mut self, name: &str) -> Result<usize> {
        if let Some(id) = self.topic_id(name) {
            return Ok(id);
        }
        let tokens = normalize(name);
        if tokens.is_empty() {
            return Err(Error::Input(format!(
                "topic {name:?} is empty after preprocessing"
            )));
        }
        self.topics.push(Topic {
            name: name.to_owned(),
            tokens,
        });
        Ok(self.topics.len() - 1)
    }

    /// Preprocesses and appends one example. Returns `false` if the tweet was
    /// rejected as empty.
    pub fn push_raw(&mut self, tweet: &str, topic: &str, stance: Option<Stance>) -> Result<bool> {
        let topic_id = self.intern_topic(topic)?;
        let document = normalize(tweet);
        if document.is_empty() {
            self.rejected += 1;
            return Ok(false);
        }
        self.examples.push(Example {
            id: self.examples.len(),
            document,
            topic: self.topics[topic_id].tokens.clone(),
            stance,
            topic_id,
        });
        Ok(true)
    }

    pub fn labeled(&self) -> impl Iterator<Item = &Example> {
        self.examples.iter().filter(|e| e.is_labeled())
    }

    /// Parses a dataset TSV whose header names `tweet`, `topic` and `stance`
    /// columns (aliases `text` and `target` accepted). An empty stance cell
    /// marks an unlabeled row.
    pub fn from_tsv_str(text: &str, source: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Ingest {
            path: source.to_owned(),
            line: 1,
            message: "missing header".into(),
        })?;
        let cols: Vec<String> = header
            .trim_end_matches('\r')
            .split('\t')
            .map(|c| c.trim().to_ascii_lowercase())
            .collect();
        let find = |names: &[&str]| cols.iter().position(|c| names.contains(&c.as_str()));
        let missing = |what: &str| Error::Ingest {
            path: source.to_owned(),
            line: 1,
            message: format!("header lacks a {what} column"),
        };
        let tweet_col = find(&["tweet", "text"]).ok_or_else(|| missing("tweet"))?;
        let topic_col = find(&["topic", "target"]).ok_or_else(|| missing("topic"))?;
        let stance_col = find(&["stance"]).ok_or_else(|| missing("stance"))?;

        let mut corpus = Corpus::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != cols.len() {
                return Err(Error::Ingest {
                    path: source.to_owned(),
                    line: line_no,
                    message: format!("expected {} fields, found {}", cols.len(), fields.len()),
                });
            }
            let stance_cell = fields[stance_col].trim();
            let stance = if stance_cell.is_empty() {
                None
            } else {
                Some(stance_cell.parse::<Stance>().map_err(|e| Error::Ingest {
                    path: source.to_owned(),
                    line: line_no,
                    message: e.to_string(),
                })?)
            };
            corpus
                .push_raw(fields[tweet_col], fields[topic_col].trim(), stance)
                .map_err(|e| Error::Ingest {
                    path: source.to_owned(),
                    line: line_no,
                    message: e.to_string(),
                })?;
        }
        if corpus.rejected > 0 {
            log::info!(
                "{source}: {} tweets empty after preprocessing were excluded",
                corpus.rejected
            );
        }
        Ok(corpus)
    }

    pub fn from_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_tsv_str(&text, &path.display().to_string())
    }

    /// Serializes as a dataset TSV with token-joined tweets.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("tweet\ttopic\tstance\n");
        for e in &self.examples {
            out.push_str(&e.document.join(" "));
            out.push('\t');
            out.push_str(&self.topics[e.topic_id].name);
            out.push('\t');
            if let Some(s) = e.stance {
                out.push_str(s.as_str());
            }
            out.push('\n');
        }
        out
    }
}

/// Full SemEval-2016 Task 6 topic name for its two-letter abbreviation.
pub fn semeval_topic_name(abbrev: &str) -> Option<&'static str> {
    Some(match abbrev.to_ascii_uppercase().as_str() {
        "DT" => "Donald Trump",
        "HC" => "Hillary Clinton",
        "FM" => "Feminist Movement",
        "LA" => "Legalization of Abortion",
        "CC" => "Climate Change is a Real Concern",
        "A" => "Atheism",
        _ => return None,
    })
}

/// Keywords used to pull unlabeled tweets for each SemEval topic.
pub fn semeval_keywords(topic_name: &str) -> Option<&'static [&'static str]> {
    Some(match topic_name {
        "Donald Trump" => &["trump", "Trump"],
        "Hillary Clinton" => &["hillary", "clinton"],
        "Feminist Movement" => &["femini"],
        "Legalization of Abortion" => &["aborti"],
        "Climate Change is a Real Concern" => &["climate"],
        "Atheism" => &["atheism", "atheist"],
        _ => return None,
    })
}

/// Reads a `topic<TAB>kw1,kw2` keyword file.
pub fn read_keywords(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((topic, kws)) = line.split_once('\t') else {
            return Err(Error::Ingest {
                path: path.display().to_string(),
                line: i + 1,
                message: "expected topic<TAB>keywords".into(),
            });
        };
        let kws: Vec<String> = kws
            .split(',')
            .map(|k| k.trim().to_owned())
            .filter(|k| !k.is_empty())
            .collect();
        out.push((topic.trim().to_owned(), kws));
    }
    Ok(out)
}

/// Reads one raw tweet per line, skipping blank lines.
pub fn read_tweets(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .map(str::to_owned)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stance_mapping() {
        assert_eq!(Stance::Pro.label(), 1);
        assert_eq!(Stance::Con.label(), -1);
        assert_eq!(Stance::Neutral.label(), 0);
        assert_eq!("FAVOR".parse::<Stance>().unwrap(), Stance::Pro);
        assert_eq!("AGAINST".parse::<Stance>().unwrap(), Stance::Con);
        assert_eq!("NONE".parse::<Stance>().unwrap(), Stance::Neutral);
        for s in Stance::ALL {
            assert_eq!(Stance::from_class_index(s.class_index()), Some(s));
        }
    }

    #[test]
    fn parses_tsv_with_unlabeled_rows() {
        let tsv = "tweet\ttopic\tstance\nI love #CleanEnergy\tClimate\tpro\nthe\tClimate\tcon\nwarming is real\tClimate\t\n";
        let c = Corpus::from_tsv_str(tsv, "mem").unwrap();
        assert_eq!(c.examples.len(), 2);
        assert_eq!(c.rejected, 1);
        assert!(!c.examples[1].is_labeled());
        assert_eq!(c.examples[0].document, ["love", "clean", "energy"]);
        assert_eq!(c.topics[0].tokens, ["climate"]);
    }

    #[test]
    fn malformed_tsv_names_line() {
        let tsv = "tweet\ttopic\tstance\nok tweet\tClimate\tpro\nbroken line\n";
        match Corpus::from_tsv_str(tsv, "mem") {
            Err(Error::Ingest { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let tsv = "tweet\ttopic\tstance\nok tweet\tClimate\tmaybe\n";
        assert!(matches!(
            Corpus::from_tsv_str(tsv, "mem"),
            Err(Error::Ingest { line: 2, .. })
        ));
        assert!(Corpus::from_tsv_str("text\tstance\n", "mem").is_err());
    }

    #[test]
    fn resolves_topics() {
        let mut c = Corpus::new();
        c.intern_topic("Donald Trump").unwrap();
        c.intern_topic("Atheism").unwrap();
        assert_eq!(c.resolve_topic("DT").unwrap(), 0);
        assert_eq!(c.resolve_topic("atheism").unwrap(), 1);
        let err = c.resolve_topic("Feminist Movement").unwrap_err().to_string();
        assert!(err.contains("Donald Trump") && err.contains("Atheism"));
    }

    #[test]
    fn tsv_round_trip_preserves_tokens() {
        let tsv = "tweet\ttopic\tstance\nWe NEED action on #ClimateChange!\tClimate\tpro\n";
        let c = Corpus::from_tsv_str(tsv, "mem").unwrap();
        let again = Corpus::from_tsv_str(&c.to_tsv(), "mem").unwrap();
        assert_eq!(c.examples, again.examples);
    }
}
