//! The recursive training chain: Model(n) is trained on Data(n-1) and
//! generates Data(n), one sample per original training prompt.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus, Document, TaskProfile, TokenMode};
use crate::error::{Error, Result};
use crate::ngram_lm::{detokenize, perplexity_sequences, training_text, NGramModel, Sampler};
use crate::probe::Probes;
use crate::report::{probe_metrics, DiversityMetrics, MetricSettings};
use crate::seeding::{derive_seed, stream_rng};

const GENERATION_TAG: u64 = 0x67656e;
const PARTITION_TAG: u64 = 0x6d6978;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmSpec {
    pub order: usize,
    pub alpha: f64,
}

impl Default for LmSpec {
    fn default() -> Self {
        Self { order: 3, alpha: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScorerSpec {
    /// Mean log-probability under a model trained on Data(0).
    #[default]
    Reference,
    /// Per-document scores from a JSONL file of `{id, score}` lines.
    External(std::path::PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub scorer: ScorerSpec,
    pub drop_fraction: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            scorer: ScorerSpec::Reference,
            drop_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixConfig {
    /// Share of the training data whose prompts drive generation.
    pub synthetic_fraction: f64,
    /// The rest is split into this many fresh human subsets.
    pub fresh_subsets: usize,
}

impl Default for MixConfig {
    fn default() -> Self {
        Self {
            synthetic_fraction: 0.4,
            fresh_subsets: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecursionConfig {
    pub iterations: usize,
    pub lm: LmSpec,
    pub filter: Option<FilterConfig>,
    pub mix: Option<MixConfig>,
    pub seed: u64,
    /// Train on Data(0) through Data(n-1) instead of Data(n-1) alone.
    pub accumulate: bool,
    /// Store wall-clock seconds in each record. Off by default so results
    /// files are reproducible byte for byte.
    pub record_timing: bool,
    pub metrics: MetricSettings,
}

impl Default for RecursionConfig {
    fn default() -> Self {
        Self {
            iterations: 6,
            lm: LmSpec::default(),
            filter: None,
            mix: None,
            seed: 0,
            accumulate: false,
            record_timing: false,
            metrics: MetricSettings::default(),
        }
    }
}

impl RecursionConfig {
    pub fn profile(&self) -> &TaskProfile {
        &self.metrics.profile
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be >= 1"));
        }
        if self.lm.order == 0 {
            return Err(Error::config("lm.order must be >= 1"));
        }
        if !(self.lm.alpha > 0.0 && self.lm.alpha.is_finite()) {
            return Err(Error::config("lm.alpha must be > 0"));
        }
        if let Some(f) = &self.filter {
            if !(0.0..1.0).contains(&f.drop_fraction) {
                return Err(Error::config("filter.drop_fraction must be in [0, 1)"));
            }
        }
        if let Some(m) = &self.mix {
            if !(m.synthetic_fraction > 0.0 && m.synthetic_fraction < 1.0) {
                return Err(Error::config("mix.synthetic_fraction must be in (0, 1)"));
            }
            if m.fresh_subsets < self.iterations {
                return Err(Error::config(format!(
                    "mix.fresh_subsets ({}) must be >= iterations ({})",
                    m.fresh_subsets, self.iterations
                )));
            }
        }
        self.metrics.profile.validate()?;
        self.metrics.dispersion.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Perplexity of Model(n) on held-out human text.
    pub perplexity: Option<f64>,
    #[serde(flatten)]
    pub metrics: DiversityMetrics,
    /// Documents Model(n) was trained on.
    pub train_size: usize,
    /// Documents in Data(n) after filtering.
    pub data_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

/// Scores documents for the acceptability filter; higher is better.
pub trait AcceptabilityScorer: Sync {
    fn score(&self, doc: &Document) -> Result<f64>;
}

/// Mean per-word log-probability under a reference model.
pub struct ReferenceScorer {
    model: NGramModel,
}

impl ReferenceScorer {
    pub fn new(model: NGramModel) -> Self {
        Self { model }
    }

    pub fn train(data0: &Corpus, lm: &LmSpec) -> Result<Self> {
        Ok(Self::new(NGramModel::train(data0, lm.order, lm.alpha)?))
    }
}

impl AcceptabilityScorer for ReferenceScorer {
    fn score(&self, doc: &Document) -> Result<f64> {
        let toks = tokenize(&doc.text, TokenMode::Surface);
        Ok(self.model.mean_log_prob(&toks).unwrap_or_else(|| {
            log::debug!("document {} is empty; minimum score", doc.id);
            f64::MIN
        }))
    }
}

/// Scores supplied per document id.
pub struct ExternalScores {
    scores: HashMap<String, f64>,
}

#[derive(Deserialize)]
struct ScoreLine {
    id: String,
    score: f64,
}

impl ExternalScores {
    pub fn new(scores: HashMap<String, f64>) -> Self {
        Self { scores }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut scores = HashMap::new();
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let s: ScoreLine = serde_json::from_str(&line).map_err(|e| Error::Schema {
                line: i + 1,
                message: e.to_string(),
            })?;
            scores.insert(s.id, s.score);
        }
        Ok(Self { scores })
    }
}

impl AcceptabilityScorer for ExternalScores {
    fn score(&self, doc: &Document) -> Result<f64> {
        self.scores
            .get(&doc.id)
            .copied()
            .ok_or_else(|| Error::Schema {
                line: 0,
                message: format!("no acceptability score for document {:?}", doc.id),
            })
    }
}

fn compare_ids(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

/// Keeps the `ceil((1 - drop_fraction) * N)` best-scored documents in their
/// original order. Ties go to the smaller id.
pub fn filter_synthetic(corpus: &Corpus, scorer: &dyn AcceptabilityScorer, drop_fraction: f64) -> Result<Corpus> {
    if drop_fraction == 0.0 {
        return Ok(corpus.clone());
    }
    let docs = corpus.docs();
    let scores: Vec<f64> = docs.par_iter().map(|d| scorer.score(d)).collect::<Result<_>>()?;
    let keep = ((1.0 - drop_fraction) * docs.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| compare_ids(&docs[a].id, &docs[b].id))
    });
    let mut kept = order[..keep.min(docs.len())].to_vec();
    kept.sort_unstable();
    Corpus::new(kept.into_iter().map(|i| docs[i].clone()).collect())
}

/// Seeded split of the training documents into the generation side and
/// `fresh_subsets` disjoint human subsets, each in original order.
pub fn partition_for_mixing(data: &Corpus, mix: &MixConfig, seed: u64) -> Result<(Corpus, Vec<Corpus>)> {
    let n = data.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(derive_seed(seed, PARTITION_TAG), 0));
    let n_syn = (mix.synthetic_fraction * n as f64).round() as usize;
    let pick = |part: &[usize]| {
        let mut p = part.to_vec();
        p.sort_unstable();
        Corpus::new(p.into_iter().map(|i| data.docs()[i].clone()).collect())
    };
    let synthetic_side = pick(&idx[..n_syn])?;
    let rest = &idx[n_syn..];
    let k = mix.fresh_subsets;
    let subsets = (0..k)
        .map(|j| pick(&rest[j * rest.len() / k..(j + 1) * rest.len() / k]))
        .collect::<Result<Vec<_>>>()?;
    Ok((synthetic_side, subsets))
}

/// Synthetic documents followed by the `n`-th fresh subset (1-based).
pub fn mix_fresh(synthetic: &[Document], subsets: &[Corpus], n: usize) -> Result<Vec<Document>> {
    if n == 0 || n > subsets.len() {
        return Err(Error::config(format!("no fresh subset {n} (have {})", subsets.len())));
    }
    Ok(synthetic.iter().chain(subsets[n - 1].iter()).cloned().collect())
}

fn surface_sequences<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Vec<Vec<String>> {
    docs.into_iter()
        .map(|d| tokenize(&training_text(d), TokenMode::Surface).tokens)
        .collect()
}

/// Generates one continuation per prompt document.
pub fn generate(model: &NGramModel, prompts: &Corpus, profile: &TaskProfile, seed: u64) -> Result<Corpus> {
    let sampler = Sampler::new(model, profile.decoding)?;
    let docs = prompts
        .docs()
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let prompt = d.prompt.as_deref().map(|p| tokenize(p, TokenMode::Surface).tokens).unwrap_or_default();
            let out = sampler.generate_with(&prompt, &mut stream_rng(seed, i as u64));
            Document::continuation(d.id.clone(), d.prompt.clone(), detokenize(&out))
        })
        .collect();
    Corpus::new(docs)
}

/// A chain in progress.
pub struct Chain<'a> {
    cfg: &'a RecursionConfig,
    probes: &'a Probes,
    /// Data(0): human documents whose prompts drive generation.
    base: Corpus,
    fresh: Vec<Corpus>,
    heldout: Vec<Vec<String>>,
    scorer: Option<Box<dyn AcceptabilityScorer + 'a>>,
    /// Data(1), Data(2), ... as generated (after filtering).
    synthetic: Vec<Corpus>,
}

impl<'a> Chain<'a> {
    /// `data0` is the human training set (prompt and text per document);
    /// `heldout` is human text for perplexity.
    pub fn new(data0: &Corpus, heldout: Option<&Corpus>, cfg: &'a RecursionConfig, probes: &'a Probes) -> Result<Self> {
        cfg.validate()?;
        if data0.is_empty() {
            return Err(Error::arg("Data(0) is empty"));
        }
        let (base, fresh) = match &cfg.mix {
            Some(m) => partition_for_mixing(data0, m, cfg.seed)?,
            None => (data0.clone(), Vec::new()),
        };
        let scorer: Option<Box<dyn AcceptabilityScorer>> = match cfg.filter.as_ref().map(|f| &f.scorer) {
            None => None,
            Some(ScorerSpec::Reference) => Some(Box::new(ReferenceScorer::train(&base, &cfg.lm)?)),
            Some(ScorerSpec::External(p)) => Some(Box::new(ExternalScores::load(p)?)),
        };
        Ok(Self {
            cfg,
            probes,
            base,
            fresh,
            heldout: heldout.map(|h| surface_sequences(h.iter())).unwrap_or_default(),
            scorer,
            synthetic: Vec::new(),
        })
    }

    pub fn completed(&self) -> usize {
        self.synthetic.len()
    }

    pub fn is_done(&self) -> bool {
        self.completed() >= self.cfg.iterations
    }

    /// Data(n) for n >= 1.
    pub fn data(&self, n: usize) -> Option<&Corpus> {
        n.checked_sub(1).and_then(|i| self.synthetic.get(i))
    }

    pub fn base(&self) -> &Corpus {
        &self.base
    }

    pub fn fresh_subsets(&self) -> &[Corpus] {
        &self.fresh
    }

    /// Continues from previously generated Data(1..=k).
    pub fn restore(&mut self, synthetic: Vec<Corpus>) -> Result<()> {
        if synthetic.len() > self.cfg.iterations {
            return Err(Error::config("checkpoint has more iterations than configured"));
        }
        self.synthetic = synthetic;
        Ok(())
    }

    /// Documents Model(n) trains on.
    pub fn training_docs(&self, n: usize) -> Result<Vec<Document>> {
        let docs: Vec<Document> = if self.cfg.accumulate {
            self.base.iter().chain(self.synthetic[..n - 1].iter().flatten()).cloned().collect()
        } else if n == 1 {
            self.base.docs().to_vec()
        } else {
            self.synthetic[n - 2].docs().to_vec()
        };
        match self.cfg.mix {
            Some(_) => mix_fresh(&docs, &self.fresh, n),
            None => Ok(docs),
        }
    }

    /// Runs the next iteration.
    pub fn step(&mut self) -> Result<IterationRecord> {
        if self.is_done() {
            return Err(Error::config("chain already complete"));
        }
        let n = self.completed() + 1;
        let start = Instant::now();
        let cfg = self.cfg;

        let train = self.training_docs(n)?;
        let model = NGramModel::train_sequences(&surface_sequences(&train), cfg.lm.order, cfg.lm.alpha)?;
        let perplexity = if self.heldout.is_empty() {
            None
        } else {
            Some(perplexity_sequences(&model, &self.heldout)?)
        };

        let seed = derive_seed(cfg.seed, GENERATION_TAG ^ n as u64);
        let mut data = generate(&model, &self.base, cfg.profile(), seed)?;
        drop(model);
        if let (Some(f), Some(scorer)) = (&cfg.filter, &self.scorer) {
            data = filter_synthetic(&data, scorer.as_ref(), f.drop_fraction)?;
        }
        let metrics = probe_metrics(&data, self.probes, &cfg.metrics)?;
        let record = IterationRecord {
            iteration: n,
            perplexity,
            metrics,
            train_size: train.len(),
            data_size: data.len(),
            seconds: cfg.record_timing.then(|| start.elapsed().as_secs_f64()),
        };
        log::info!(
            "iteration {n}: ppl {:?}, distinct-3 {:.2}, {} docs",
            record.perplexity,
            record.metrics.distinct3,
            record.data_size
        );
        self.synthetic.push(data);
        Ok(record)
    }
}

/// Runs every iteration and returns the records in order.
pub fn run_chain(data0: &Corpus, heldout: Option<&Corpus>, cfg: &RecursionConfig, probes: &Probes) -> Result<Vec<IterationRecord>> {
    let mut chain = Chain::new(data0, heldout, cfg, probes)?;
    let mut out = Vec::with_capacity(cfg.iterations);
    while !chain.is_done() {
        out.push(chain.step()?);
    }
    Ok(out)
}

/// Splits off every `every`-th document (the last of each block) as held-out
/// text.
pub fn holdout_split(corpus: &Corpus, every: usize) -> Result<(Corpus, Corpus)> {
    if every < 2 {
        return Err(Error::config("held-out interval must be >= 2"));
    }
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (i, d) in corpus.iter().enumerate() {
        if i % every == every - 1 {
            held.push(d.clone());
        } else {
            train.push(d.clone());
        }
    }
    Ok((Corpus::new(train)?, Corpus::new(held)?))
}

/// Spearman rank correlation, average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
