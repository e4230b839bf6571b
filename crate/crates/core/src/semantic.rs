//! Sentence-embedding ingestion and semantic diversity.
//!
//! The embeddings themselves come from an external encoder; this module only
//! validates and measures them.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{split_sentences, tokenize, TokenMode};
use crate::dispersion::{self, DispersionConfig};
use crate::error::{Error, Result};

/// The `sent` field: a sentence index or the sentence text itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SentenceRef {
    Index(u64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowProvenance {
    pub id: String,
    pub sent: SentenceRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    rows: Vec<Vec<f64>>,
    provenance: Vec<RowProvenance>,
}

#[derive(Deserialize)]
struct RawRow {
    id: serde_json::Value,
    sent: SentenceRef,
    vec: Vec<f64>,
}

impl EmbeddingSet {
    /// Validates rows: one dimension, finite, nonzero.
    pub fn new(rows: Vec<Vec<f64>>, provenance: Vec<RowProvenance>) -> Result<Self> {
        if rows.len() != provenance.len() {
            return Err(Error::arg("one provenance entry per row required"));
        }
        let dim = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            check_row(r, dim).map_err(|message| Error::Schema { line: i + 1, message })?;
        }
        Ok(Self { dim, rows, provenance })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn provenance(&self) -> &[RowProvenance] {
        &self.provenance
    }
}

fn check_row(r: &[f64], dim: usize) -> std::result::Result<(), String> {
    if r.is_empty() {
        return Err("empty vector".into());
    }
    if r.len() != dim {
        return Err(format!("vector has {} components, expected {dim}", r.len()));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err("vector has a NaN or infinite component".into());
    }
    if r.iter().all(|x| *x == 0.0) {
        return Err("zero vector".into());
    }
    Ok(())
}

/// Loads `{id, sent, vec}` JSONL rows.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    read_embeddings(File::open(path)?)
}

pub fn read_embeddings<R: Read>(reader: R) -> Result<EmbeddingSet> {
    let mut rows = Vec::new();
    let mut provenance = Vec::new();
    let mut dim = None;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        // serde_json rejects NaN and out-of-range literals, which is what we want
        let raw: RawRow = serde_json::from_str(&line).map_err(|e| Error::Schema {
            line: lineno,
            message: e.to_string(),
        })?;
        let id = match raw.id {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            _ => {
                return Err(Error::Schema {
                    line: lineno,
                    message: "\"id\" must be a string".into(),
                })
            }
        };
        let d = *dim.get_or_insert(raw.vec.len());
        check_row(&raw.vec, d).map_err(|message| Error::Schema { line: lineno, message })?;
        rows.push(raw.vec);
        provenance.push(RowProvenance { id, sent: raw.sent });
    }
    Ok(EmbeddingSet {
        dim: dim.unwrap_or(0),
        rows,
        provenance,
    })
}

/// Mean pairwise cosine distance of the rows, halved, as a percentage.
pub fn div_sem(set: &EmbeddingSet, disp: &DispersionConfig) -> Result<f64> {
    if set.len() < 2 {
        return Err(Error::arg("semantic diversity needs at least two embeddings"));
    }
    dispersion::report_scale(dispersion::mean_pairwise_distance(set.rows(), disp)?)
}

/// Feature-hashing bag-of-words encoder.
///
/// A deterministic stand-in for a neural sentence encoder, used by the
/// simulator when no adapter output exists. It reflects lexical overlap
/// only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedBagOfWords {
    pub dim: usize,
}

impl Default for HashedBagOfWords {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashedBagOfWords {
    /// Signed hashed counts of lowercased words and word bigrams. `None` when
    /// the sentence has no words or every bucket cancels out.
    pub fn encode(&self, sentence: &str) -> Option<Vec<f64>> {
        let toks = tokenize(sentence, TokenMode::Lexical).tokens;
        let mut v = vec![0.0; self.dim];
        let mut add = |feature: &str| {
            let h = fnv1a(feature);
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        };
        for t in &toks {
            add(t);
        }
        for w in toks.windows(2) {
            add(&format!("{} {}", w[0], w[1]));
        }
        v.iter().any(|x| *x != 0.0).then_some(v)
    }

    /// Encodes every sentence of every document.
    pub fn encode_corpus<'a, I>(&self, docs: I) -> Result<EmbeddingSet>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut rows = Vec::new();
        let mut provenance = Vec::new();
        for (id, text) in docs {
            for (i, s) in split_sentences(text).iter().enumerate() {
                if let Some(v) = self.encode(s) {
                    rows.push(v);
                    provenance.push(RowProvenance {
                        id: id.to_string(),
                        sent: SentenceRef::Index(i as u64),
                    });
                }
            }
        }
        EmbeddingSet::new(rows, provenance)
    }
}
