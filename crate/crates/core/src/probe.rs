//! Sources of dependency trees and sentence embeddings for a corpus.
//!
//! Measurement on human data reads adapter output files. Inside the
//! recursion chain the text is new every iteration, so trees and embeddings
//! come from a probe: either a built-in stand-in or an external adapter
//! command run on the fly.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::semantic::{load_embeddings, EmbeddingSet, HashedBagOfWords};
use crate::syntactic::heuristic::shallow_parse_text;
use crate::syntactic::{parse_conllu, DependencyGraph};

pub trait SyntaxProbe: Send + Sync {
    fn parse(&self, corpus: &Corpus) -> Result<Vec<DependencyGraph>>;
}

pub trait EmbeddingProbe: Send + Sync {
    fn embed(&self, corpus: &Corpus) -> Result<EmbeddingSet>;
}

/// The rule-based shallow tree builder from [`crate::syntactic::heuristic`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ShallowParser;

impl SyntaxProbe for ShallowParser {
    fn parse(&self, corpus: &Corpus) -> Result<Vec<DependencyGraph>> {
        let per_doc: Vec<Vec<DependencyGraph>> = corpus
            .docs()
            .par_iter()
            .map(|d| shallow_parse_text(&d.id, &d.text))
            .collect();
        Ok(per_doc.into_iter().flatten().collect())
    }
}

impl EmbeddingProbe for HashedBagOfWords {
    fn embed(&self, corpus: &Corpus) -> Result<EmbeddingSet> {
        self.encode_corpus(corpus.iter().map(|d| (d.id.as_str(), d.text.as_str())))
    }
}

/// An external exporter invoked as `program [args..] --in <corpus.jsonl>
/// --out <file>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterCommand {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// Where inputs and outputs are written; a temporary directory if unset.
    #[serde(default)]
    pub work_dir: Option<PathBuf>,
}

static RUN_COUNTER: AtomicU64 = AtomicU64::new(0);

impl AdapterCommand {
    pub fn new(program: impl Into<String>) -> Self {
        Self {
            program: program.into(),
            args: Vec::new(),
            work_dir: None,
        }
    }

    fn run(&self, corpus: &Corpus, out_name: &str) -> Result<PathBuf> {
        let run = RUN_COUNTER.fetch_add(1, Ordering::Relaxed);
        let dir = match &self.work_dir {
            Some(d) => d.clone(),
            None => std::env::temp_dir().join(format!("lingdiv-adapter-{}", std::process::id())),
        };
        fs::create_dir_all(&dir)?;
        let input = dir.join(format!("run{run}-corpus.jsonl"));
        let output = dir.join(format!("run{run}-{out_name}"));
        let bare = Corpus::new(corpus.iter().map(|d| Document::new(d.id.clone(), d.text.clone())).collect())?;
        bare.write_jsonl(std::io::BufWriter::new(File::create(&input)?))?;

        let result = Command::new(&self.program)
            .args(&self.args)
            .arg("--in")
            .arg(&input)
            .arg("--out")
            .arg(&output)
            .output()
            .map_err(|e| Error::Adapter(format!("cannot run {}: {e}", self.program)))?;
        if !result.status.success() {
            return Err(Error::Adapter(format!(
                "{} exited with {}: {}",
                self.program,
                result.status,
                String::from_utf8_lossy(&result.stderr).trim()
            )));
        }
        if !output.exists() {
            return Err(Error::Adapter(format!("{} wrote no {}", self.program, output.display())));
        }
        Ok(output)
    }
}

fn cleanup(path: &Path) {
    let _ = fs::remove_file(path);
}

impl SyntaxProbe for AdapterCommand {
    fn parse(&self, corpus: &Corpus) -> Result<Vec<DependencyGraph>> {
        let out = self.run(corpus, "parsed.conllu")?;
        let graphs = parse_conllu(BufReader::new(File::open(&out)?));
        if self.work_dir.is_none() {
            cleanup(&out);
        }
        graphs
    }
}

impl EmbeddingProbe for AdapterCommand {
    fn embed(&self, corpus: &Corpus) -> Result<EmbeddingSet> {
        let out = self.run(corpus, "embeddings.jsonl")?;
        let set = load_embeddings(&out);
        if self.work_dir.is_none() {
            cleanup(&out);
        }
        set
    }
}

/// Serializable probe choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSpec {
    #[default]
    Builtin,
    None,
    Command(AdapterCommand),
}

#[derive(Default)]
pub struct Probes {
    pub syntax: Option<Box<dyn SyntaxProbe>>,
    pub semantic: Option<Box<dyn EmbeddingProbe>>,
}

impl Probes {
    /// Shallow parser and hashed bag-of-words encoder.
    pub fn builtin() -> Self {
        Self {
            syntax: Some(Box::new(ShallowParser)),
            semantic: Some(Box::new(HashedBagOfWords::default())),
        }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn from_specs(syntax: &ProbeSpec, semantic: &ProbeSpec) -> Self {
        Self {
            syntax: match syntax {
                ProbeSpec::Builtin => Some(Box::new(ShallowParser)),
                ProbeSpec::None => None,
                ProbeSpec::Command(c) => Some(Box::new(c.clone())),
            },
            semantic: match semantic {
                ProbeSpec::Builtin => Some(Box::new(HashedBagOfWords::default())),
                ProbeSpec::None => None,
                ProbeSpec::Command(c) => Some(Box::new(c.clone())),
            },
        }
    }
}
