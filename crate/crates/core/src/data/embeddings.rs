use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

/// Fixed word vectors for a corpus vocabulary.
///
/// Row 0 is padding (all zeros), row 1 the unknown-token vector, then one row
/// per vocabulary token in sorted order. Rows not covered by a pretrained file
/// are drawn uniformly from `[-0.1, 0.1]` with the table seed.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<T> {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    rows: Vec<T>,
    dim: usize,
    /// Vocabulary tokens whose vector came from the pretrained file.
    pub pretrained_hits: usize,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// Random vectors for every token of `vocabulary`.
    pub fn random(vocabulary: &BTreeSet<String>, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let mut tokens = vec![PAD_TOKEN.to_owned(), UNK_TOKEN.to_owned()];
        tokens.extend(vocabulary.iter().cloned());
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = vec![T::zero(); dim];
        rows.extend((0..(tokens.len() - 1) * dim).map(|_| T::of(rng.gen_range(-0.1..=0.1))));
        Ok(Self {
            index,
            tokens,
            rows,
            dim,
            pretrained_hits: 0,
        })
    }

    /// Builds the table for `vocabulary`, taking vectors from a whitespace
    /// separated `token v1 .. v_dim` file where available.
    pub fn load(path: &Path, vocabulary: &BTreeSet<String>, dim: usize, seed: u64) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::load_str(&text, &path.display().to_string(), vocabulary, dim, seed)
    }

    pub fn load_str(
        text: &str,
        source: &str,
        vocabulary: &BTreeSet<String>,
        dim: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut table = Self::random(vocabulary, dim, seed)?;
        let mut first = true;
        let mut values = Vec::with_capacity(dim);
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else {
                continue;
            };
            values.clear();
            for p in parts {
                let v: f64 = p.parse().map_err(|_| Error::Ingest {
                    path: source.to_owned(),
                    line: line_no,
                    message: format!("unparseable float {p:?}"),
                })?;
                values.push(v);
            }
            if values.len() != dim {
                if first {
                    return Err(Error::Config(format!(
                        "{source}:{line_no}: embedding file has dimension {}, expected {dim}",
                        values.len()
                    )));
                }
                return Err(Error::Ingest {
                    path: source.to_owned(),
                    line: line_no,
                    message: format!("expected {dim} values, found {}", values.len()),
                });
            }
            first = false;
            if let Some(&row) = table.index.get(token) {
                if row > UNK {
                    for (dst, &v) in table.rows[row * dim..(row + 1) * dim].iter_mut().zip(&values) {
                        *dst = T::of(v);
                    }
                    table.pretrained_hits += 1;
                }
            }
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Row index of `token`, falling back to the unknown-token row.
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t)).collect()
    }

    pub fn row(&self, index: usize) -> &[T] {
        &self.rows[index * self.dim..(index + 1) * self.dim]
    }

    /// Rows for `indices`, stacked row-major.
    pub fn gather(&self, indices: &[usize]) -> Vec<T> {
        let mut out = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            out.extend_from_slice(self.row(i));
        }
        out
    }
}
