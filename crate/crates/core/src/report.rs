//! Metric bundles, the measurement pipeline and table rendering.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{load_corpus, split_sentences, tokenize, truncate, Corpus, CorpusFormat, TaskProfile};
use crate::dispersion::DispersionConfig;
use crate::error::{Error, Result};
use crate::lexical::{pooled_distinct_n, pooled_ttr, self_bleu_diversity, SelfBleuConfig};
use crate::probe::Probes;
use crate::semantic::{div_sem, load_embeddings, EmbeddingSet};
use crate::syntactic::{div_syn, load_conllu, DependencyGraph, WlConfig};

/// The six diversity columns, all as percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityMetrics {
    pub ttr: f64,
    pub distinct2: f64,
    pub distinct3: f64,
    pub one_minus_self_bleu: f64,
    pub div_syn: Option<f64>,
    pub div_sem: Option<f64>,
}

/// Everything the metrics depend on besides the text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSettings {
    pub profile: TaskProfile,
    pub self_bleu: SelfBleuConfig,
    pub dispersion: DispersionConfig,
    pub wl: WlConfig,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self {
            profile: TaskProfile::story(),
            self_bleu: SelfBleuConfig::default(),
            dispersion: DispersionConfig::default(),
            wl: WlConfig::default(),
        }
    }
}

impl MetricSettings {
    pub fn for_profile(profile: TaskProfile) -> Self {
        Self {
            profile,
            ..Self::default()
        }
    }

    /// Seeds both sampled estimators.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.self_bleu.seed = seed;
        self.dispersion.seed = seed;
        self
    }
}

/// Truncated lexical tokens of every document.
pub fn lexical_segments(corpus: &Corpus, profile: &TaskProfile) -> Result<Vec<Vec<String>>> {
    corpus
        .iter()
        .map(|d| Ok(truncate(&tokenize(&d.text, profile.lexical_mode()), profile.truncation_length)?.tokens))
        .collect()
}

/// Lexical-mode token lists of every sentence of every document.
pub fn sentence_tokens(corpus: &Corpus, profile: &TaskProfile) -> Vec<Vec<String>> {
    corpus
        .iter()
        .flat_map(|d| split_sentences(&d.text))
        .map(|s| tokenize(&s, profile.lexical_mode()).tokens)
        .filter(|t| !t.is_empty())
        .collect()
}

/// TTR, distinct-2, distinct-3 (pooled over truncated documents) and
/// 1 - Self-BLEU (over untruncated sentences), as percentages. The corpus is
/// expected to be preprocessed already.
pub fn lexical_metrics(corpus: &Corpus, profile: &TaskProfile, sb: &SelfBleuConfig) -> Result<[f64; 4]> {
    let segs = lexical_segments(corpus, profile)?;
    let sents = sentence_tokens(corpus, profile);
    Ok([
        pooled_ttr(&segs)? * 100.0,
        pooled_distinct_n(&segs, 2)? * 100.0,
        pooled_distinct_n(&segs, 3)? * 100.0,
        self_bleu_diversity(&sents, sb)? * 100.0,
    ])
}

/// All columns for a preprocessed corpus, given optional trees and
/// embeddings.
pub fn corpus_metrics(
    corpus: &Corpus,
    graphs: Option<&[DependencyGraph]>,
    embeddings: Option<&EmbeddingSet>,
    settings: &MetricSettings,
) -> Result<DiversityMetrics> {
    let [ttr, distinct2, distinct3, one_minus_self_bleu] = lexical_metrics(corpus, &settings.profile, &settings.self_bleu)?;
    Ok(DiversityMetrics {
        ttr,
        distinct2,
        distinct3,
        one_minus_self_bleu,
        div_syn: graphs.map(|g| div_syn(g, &settings.wl, &settings.dispersion)).transpose()?,
        div_sem: embeddings.map(|e| div_sem(e, &settings.dispersion)).transpose()?,
    })
}

/// All columns, with trees and embeddings produced by the probes.
pub fn probe_metrics(corpus: &Corpus, probes: &Probes, settings: &MetricSettings) -> Result<DiversityMetrics> {
    let graphs = probes.syntax.as_ref().map(|p| p.parse(corpus)).transpose()?;
    let embeddings = probes.semantic.as_ref().map(|p| p.embed(corpus)).transpose()?;
    corpus_metrics(corpus, graphs.as_deref(), embeddings.as_ref(), settings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    /// SHA-256 of the canonical JSON of the settings.
    pub config_hash: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conllu: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
}

/// One table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub label: String,
    pub ppl: Option<f64>,
    #[serde(flatten)]
    pub metrics: DiversityMetrics,
    pub provenance: Provenance,
}

impl DiversityReport {
    /// Checks that every percentage lies in `[0, 100]`.
    pub fn validate(&self) -> Result<()> {
        let m = &self.metrics;
        let cols = [
            ("TTR", Some(m.ttr)),
            ("Distinct-2", Some(m.distinct2)),
            ("Distinct-3", Some(m.distinct3)),
            ("1-Self-BLEU", Some(m.one_minus_self_bleu)),
            ("Div_syn", m.div_syn),
            ("Div_sem", m.div_sem),
        ];
        for (name, v) in cols {
            if let Some(v) = v {
                if !(0.0..=100.0).contains(&v) {
                    return Err(Error::arg(format!("{name} = {v} is not a percentage")));
                }
            }
        }
        if let Some(p) = self.ppl {
            if p.is_nan() || p < 1.0 {
                return Err(Error::arg(format!("perplexity {p} below 1")));
            }
        }
        Ok(())
    }
}

pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let json = serde_json::to_vec(cfg).expect("settings serialize");
    hex::encode(Sha256::digest(&json))
}

/// Where the measure pipeline reads its inputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasureInputs {
    pub corpus: PathBuf,
    pub format: Option<CorpusFormat>,
    pub conllu: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub label: Option<String>,
}

fn optional_input<T>(path: Option<&Path>, what: &str, load: impl FnOnce(&Path) -> Result<T>) -> Result<Option<T>> {
    match path {
        None => Ok(None),
        Some(p) if !p.exists() => {
            log::warn!("{what} file {} not found; column left empty", p.display());
            Ok(None)
        }
        Some(p) => load(p).map(Some),
    }
}

/// Reads a corpus and optional adapter outputs, preprocesses, and measures.
/// Missing adapter files leave their columns empty.
pub fn measure(inputs: &MeasureInputs, settings: &MetricSettings) -> Result<DiversityReport> {
    settings.profile.validate()?;
    let format = inputs.format.unwrap_or_else(|| CorpusFormat::from_path(&inputs.corpus));
    let corpus = load_corpus(&inputs.corpus, format)?;
    if corpus.is_empty() {
        return Err(Error::Schema {
            line: 0,
            message: "corpus has no documents".into(),
        });
    }
    let corpus = corpus.preprocessed(&settings.profile);
    let graphs = optional_input(inputs.conllu.as_deref(), "CoNLL-U", |p| load_conllu(p))?;
    let embeddings = optional_input(inputs.embeddings.as_deref(), "embedding", |p| load_embeddings(p))?;
    let metrics = corpus_metrics(&corpus, graphs.as_deref(), embeddings.as_ref(), settings)?;
    Ok(DiversityReport {
        label: inputs.label.clone().unwrap_or_else(|| "Human".into()),
        ppl: None,
        metrics,
        provenance: Provenance {
            config_hash: config_hash(settings),
            seed: settings.dispersion.seed,
            corpus: Some(inputs.corpus.clone()),
            conllu: inputs.conllu.clone(),
            embeddings: inputs.embeddings.clone(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Tsv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Self::Tsv),
            "json" => Ok(Self::Json),
            _ => Err(Error::arg(format!("unknown format {s:?} (expected tsv or json)"))),
        }
    }
}

pub const TSV_HEADER: [&str; 8] = ["Iter", "PPL", "TTR", "Distinct-2", "Distinct-3", "1-Self-BLEU", "Div_syn", "Div_sem"];

/// Two decimals below 10, one decimal otherwise.
pub fn format_value(v: f64) -> String {
    if v.abs() < 10.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.1}")
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "--".to_string(), format_value)
}

pub fn render(reports: &[DiversityReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Tsv => {
            let mut s = TSV_HEADER.join("\t");
            s.push('\n');
            for r in reports {
                let m = &r.metrics;
                let cells = [
                    r.label.clone(),
                    cell(r.ppl),
                    cell(Some(m.ttr)),
                    cell(Some(m.distinct2)),
                    cell(Some(m.distinct3)),
                    cell(Some(m.one_minus_self_bleu)),
                    cell(m.div_syn),
                    cell(m.div_sem),
                ];
                let _ = writeln!(s, "{}", cells.join("\t"));
            }
            s
        }
    }
}

pub fn parse_reports(json: &str) -> Result<Vec<DiversityReport>> {
    serde_json::from_str(json).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}
