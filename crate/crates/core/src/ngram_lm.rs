//! Word-level n-gram language model with add-alpha smoothing and backoff to
//! shorter contexts, plus temperature and nucleus decoding.
//!
//! Ids 0 and 1 are the end-of-sequence and unknown-word symbols; the rest of
//! the vocabulary is ordered by descending training frequency (ties by
//! string), so ties in probability resolve toward more frequent words.
//! Beginning-of-sequence padding is a context-only sentinel and is never
//! predicted.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus, Document, TokenMode};
use crate::error::{Error, Result};
use crate::seeding;

pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";
pub const EOS_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
/// Context padding before the first word.
pub const BOS_ID: u32 = u32::MAX;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingConfig {
    /// Nucleus threshold in (0, 1].
    pub p: f64,
    pub temperature: f64,
    pub max_new_tokens: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DecodingConfig {
    pub fn new(p: f64, temperature: f64, max_new_tokens: usize) -> Self {
        Self {
            p,
            temperature,
            max_new_tokens,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::config(format!("nucleus p must be in (0, 1], got {}", self.p)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::config(format!("temperature must be > 0, got {}", self.temperature)));
        }
        Ok(())
    }
}

/// Observed successors of one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Successors {
    /// Ascending word ids.
    ids: Vec<u32>,
    counts: Vec<u32>,
    total: u64,
    /// Positions into `ids`, by descending count then ascending id.
    #[serde(skip)]
    ranked: Vec<u32>,
}

impl Successors {
    fn new(ids: Vec<u32>, counts: Vec<u32>) -> Self {
        let total = counts.iter().map(|&c| c as u64).sum();
        let mut s = Self {
            ids,
            counts,
            total,
            ranked: Vec::new(),
        };
        s.rank();
        s
    }

    fn rank(&mut self) {
        let mut r: Vec<u32> = (0..self.ids.len() as u32).collect();
        r.sort_by(|&a, &b| {
            self.counts[b as usize]
                .cmp(&self.counts[a as usize])
                .then(self.ids[a as usize].cmp(&self.ids[b as usize]))
        });
        self.ranked = r;
    }

    fn count(&self, id: u32) -> u32 {
        self.ids.binary_search(&id).map_or(0, |i| self.counts[i])
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Table {
    index: HashMap<Box<[u32]>, u32>,
    entries: Vec<Successors>,
}

/// Order-k word n-gram model.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    alpha: f64,
    vocab: Vec<String>,
    word_ids: HashMap<String, u32>,
    /// `tables[m]` holds contexts of length `m`.
    tables: Vec<Table>,
}

/// The text a model trains on: prompt followed by body.
pub fn training_text(doc: &Document) -> String {
    match doc.prompt.as_deref() {
        Some(p) if !p.is_empty() && !doc.text.starts_with(p) => format!("{p} {}", doc.text),
        _ => doc.text.clone(),
    }
}

impl NGramModel {
    /// Trains on every document's prompt and text, tokenized in surface mode.
    pub fn train(corpus: &Corpus, order: usize, alpha: f64) -> Result<Self> {
        let seqs: Vec<Vec<String>> = corpus
            .iter()
            .map(|d| tokenize(&training_text(d), TokenMode::Surface).tokens)
            .collect();
        Self::train_sequences(&seqs, order, alpha)
    }

    pub fn train_sequences<S: AsRef<[String]>>(seqs: &[S], order: usize, alpha: f64) -> Result<Self> {
        if seqs.is_empty() {
            return Err(Error::arg("cannot train on an empty corpus"));
        }
        let mut model = Self::empty(order, alpha, vocabulary(seqs))?;
        let encoded: Vec<Vec<u32>> = seqs.iter().map(|s| model.encode(s.as_ref())).collect();
        model.count(&encoded);
        Ok(model)
    }

    /// A model with the given words and no counts: every context backs off
    /// to a uniform unigram distribution.
    pub fn uniform<I, S>(words: I, alpha: f64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = vec![EOS.to_string(), UNK.to_string()];
        for w in words {
            let w = w.into();
            if !vocab.contains(&w) {
                vocab.push(w);
            }
        }
        Self::empty(1, alpha, vocab)
    }

    fn empty(order: usize, alpha: f64, vocab: Vec<String>) -> Result<Self> {
        if order == 0 {
            return Err(Error::arg("model order must be >= 1"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::arg(format!("smoothing constant must be > 0, got {alpha}")));
        }
        let word_ids = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Ok(Self {
            order,
            alpha,
            vocab,
            word_ids,
            tables: vec![Table::default(); order],
        })
    }

    fn count(&mut self, seqs: &[Vec<u32>]) {
        let pad = self.order - 1;
        let framed: Vec<Vec<u32>> = seqs
            .iter()
            .map(|s| {
                let mut f = vec![BOS_ID; pad];
                f.extend_from_slice(s);
                f.push(EOS_ID);
                f
            })
            .collect();
        for m in 0..self.order {
            let stride = m + 1;
            let mut flat: Vec<u32> = Vec::new();
            for f in &framed {
                for pos in pad..f.len() {
                    flat.extend_from_slice(&f[pos - m..=pos]);
                }
            }
            let n = flat.len() / stride;
            let mut order_idx: Vec<usize> = (0..n).collect();
            order_idx.sort_unstable_by(|&a, &b| flat[a * stride..(a + 1) * stride].cmp(&flat[b * stride..(b + 1) * stride]));

            let table = &mut self.tables[m];
            let mut i = 0;
            while i < n {
                let ctx = &flat[order_idx[i] * stride..order_idx[i] * stride + m];
                let (mut ids, mut counts) = (Vec::new(), Vec::new());
                while i < n && &flat[order_idx[i] * stride..order_idx[i] * stride + m] == ctx {
                    let w = flat[order_idx[i] * stride + m];
                    if ids.last() == Some(&w) {
                        *counts.last_mut().unwrap() += 1;
                    } else {
                        ids.push(w);
                        counts.push(1);
                    }
                    i += 1;
                }
                table.index.insert(ctx.into(), table.entries.len() as u32);
                table.entries.push(Successors::new(ids, counts));
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Prediction vocabulary size, end-of-sequence and unknown included.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word_id(&self, word: &str) -> u32 {
        self.word_ids.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.word_id(t.as_ref())).collect()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.vocab[id as usize]
    }

    /// Longest observed suffix of `history` (BOS-padded on the left), as
    /// `(context length, entry)`. `None` only for a model without counts.
    fn resolve(&self, history: &[u32]) -> Option<(usize, usize)> {
        for m in (0..self.order).rev() {
            let ctx: Vec<u32> = if history.len() >= m {
                history[history.len() - m..].to_vec()
            } else {
                let mut c = vec![BOS_ID; m - history.len()];
                c.extend_from_slice(history);
                c
            };
            if let Some(&e) = self.tables[m].index.get(ctx.as_slice()) {
                return Some((m, e as usize));
            }
        }
        None
    }

    fn successors(&self, history: &[u32]) -> Option<&Successors> {
        self.resolve(history).map(|(m, e)| &self.tables[m].entries[e])
    }

    /// P(word | history) under add-alpha smoothing at the backoff order.
    pub fn prob_id(&self, history: &[u32], word: u32) -> f64 {
        let v = self.vocab.len() as f64;
        match self.successors(history) {
            Some(s) => (s.count(word) as f64 + self.alpha) / (s.total as f64 + self.alpha * v),
            None => 1.0 / v,
        }
    }

    pub fn next_dist_ids(&self, history: &[u32]) -> Vec<f64> {
        let v = self.vocab.len();
        match self.successors(history) {
            Some(s) => {
                let z = s.total as f64 + self.alpha * v as f64;
                let mut d = vec![self.alpha / z; v];
                for (&id, &c) in s.ids.iter().zip(&s.counts) {
                    d[id as usize] = (c as f64 + self.alpha) / z;
                }
                d
            }
            None => vec![1.0 / v as f64; v],
        }
    }

    /// Distribution over the vocabulary (indexed by word id) after the given
    /// context tokens.
    pub fn next_dist<S: AsRef<str>>(&self, context: &[S]) -> Vec<f64> {
        self.next_dist_ids(&self.encode(context))
    }

    /// Sum of natural-log probabilities of `tokens` followed (optionally) by
    /// the end symbol, and the number of predictions made.
    fn sequence_log_prob(&self, tokens: &[u32], with_eos: bool) -> (f64, usize) {
        let mut history = Vec::with_capacity(tokens.len() + 1);
        let mut lp = 0.0;
        for &w in tokens.iter().chain(with_eos.then_some(&EOS_ID)) {
            lp += self.prob_id(&history, w).ln();
            history.push(w);
        }
        (lp, tokens.len() + with_eos as usize)
    }

    /// Mean natural-log probability per word of a token sequence, end symbol
    /// excluded. `None` for an empty sequence.
    pub fn mean_log_prob<S: AsRef<str>>(&self, tokens: &[S]) -> Option<f64> {
        if tokens.is_empty() {
            return None;
        }
        let (lp, n) = self.sequence_log_prob(&self.encode(tokens), false);
        Some(lp / n as f64)
    }

    pub fn to_json<W: Write>(&self, out: W) -> Result<()> {
        let dump = ModelDump {
            format_version: FORMAT_VERSION,
            order: self.order,
            alpha: self.alpha,
            vocab: self.vocab.clone(),
            tables: self
                .tables
                .iter()
                .map(|t| {
                    let mut rows: Vec<(Vec<u32>, Successors)> = t
                        .index
                        .iter()
                        .map(|(ctx, &e)| (ctx.to_vec(), t.entries[e as usize].clone()))
                        .collect();
                    rows.sort_by(|a, b| a.0.cmp(&b.0));
                    rows.into_iter()
                        .map(|(context, s)| ContextDump {
                            context,
                            ids: s.ids,
                            counts: s.counts,
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_writer(out, &dump).map_err(std::io::Error::from)?;
        Ok(())
    }

    pub fn from_json<R: Read>(input: R) -> Result<Self> {
        let dump: ModelDump = serde_json::from_reader(input).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if dump.format_version != FORMAT_VERSION {
            return Err(Error::Schema {
                line: 1,
                message: format!("unsupported model format version {}", dump.format_version),
            });
        }
        if dump.tables.len() != dump.order {
            return Err(Error::Schema {
                line: 1,
                message: "one table per context length expected".into(),
            });
        }
        let mut model = Self::empty(dump.order, dump.alpha, dump.vocab)?;
        let v = model.vocab.len() as u32;
        for (m, rows) in dump.tables.into_iter().enumerate() {
            for row in rows {
                let bad_ctx = row.context.len() != m || row.context.iter().any(|&c| c != BOS_ID && c >= v);
                let bad_ids = row.ids.len() != row.counts.len() || row.ids.iter().any(|&i| i >= v) || !row.ids.windows(2).all(|w| w[0] < w[1]);
                if bad_ctx || bad_ids {
                    return Err(Error::Schema {
                        line: 1,
                        message: format!("malformed context entry at length {m}"),
                    });
                }
                let t = &mut model.tables[m];
                t.index.insert(row.context.into(), t.entries.len() as u32);
                t.entries.push(Successors::new(row.ids, row.counts));
            }
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ContextDump {
    context: Vec<u32>,
    ids: Vec<u32>,
    counts: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct ModelDump {
    format_version: u32,
    order: usize,
    alpha: f64,
    vocab: Vec<String>,
    tables: Vec<Vec<ContextDump>>,
}

/// Reserved symbols, then words by descending frequency, ties by string.
fn vocabulary<S: AsRef<[String]>>(seqs: &[S]) -> Vec<String> {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for s in seqs {
        for t in s.as_ref() {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    freq.remove(EOS);
    freq.remove(UNK);
    let mut words: Vec<(&str, u64)> = freq.into_iter().collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut vocab = vec![EOS.to_string(), UNK.to_string()];
    vocab.extend(words.into_iter().map(|(w, _)| w.to_string()));
    vocab
}

/// Raises every probability to `1/temperature` and renormalizes.
pub fn apply_temperature(dist: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::arg(format!("temperature must be > 0, got {temperature}")));
    }
    if temperature == 1.0 {
        return Ok(dist.to_vec());
    }
    let max = dist.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(Error::arg("distribution has no mass"));
    }
    // relative to the max so small temperatures do not underflow
    let lmax = max.ln();
    let w: Vec<f64> = dist
        .iter()
        .map(|&p| if p > 0.0 { ((p.ln() - lmax) / temperature).exp() } else { 0.0 })
        .collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// Order of a nucleus: descending probability, ties by ascending index.
fn nucleus_order(dist: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    idx
}

/// Keeps the smallest probability-sorted prefix whose mass reaches `p`,
/// renormalized; everything else becomes 0.
pub fn nucleus_filter(dist: &[f64], p: f64) -> Vec<f64> {
    let order = nucleus_order(dist);
    let mut cum = 0.0;
    let mut keep = 0;
    for &i in &order {
        if dist[i] <= 0.0 {
            break;
        }
        cum += dist[i];
        keep += 1;
        if cum >= p {
            break;
        }
    }
    if keep == dist.iter().filter(|&&x| x > 0.0).count() {
        return dist.to_vec();
    }
    let mut out = vec![0.0; dist.len()];
    for &i in &order[..keep] {
        out[i] = dist[i] / cum;
    }
    out
}

/// Draws an index from a (not necessarily normalized) distribution.
pub fn sample_index<R: Rng>(dist: &[f64], rng: &mut R) -> usize {
    let total: f64 = dist.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = i;
            if u < cum {
                return i;
            }
        }
    }
    last
}

/// Generation distribution through the plain dense route: next-word
/// distribution with the unknown symbol removed, then temperature, then
/// nucleus.
pub fn decoding_dist(model: &NGramModel, history: &[u32], cfg: &DecodingConfig) -> Result<Vec<f64>> {
    let mut d = model.next_dist_ids(history);
    d[UNK_ID as usize] = 0.0;
    let z: f64 = d.iter().sum();
    d.iter_mut().for_each(|x| *x /= z);
    Ok(nucleus_filter(&apply_temperature(&d, cfg.temperature)?, cfg.p))
}

/// Temperature- and nucleus-filtered successor distribution of one context,
/// in weights relative to an unseen word (weight 1 each).
#[derive(Debug)]
struct Prepared {
    ids: Vec<u32>,
    cum: Vec<f64>,
    /// Unseen words kept by the nucleus, taken in ascending id order.
    floor_kept: usize,
    /// Sorted ids that are not floor words: observed successors and UNK.
    excluded: Vec<u32>,
}

impl Prepared {
    fn build(s: &Successors, vocab_size: usize, alpha: f64, cfg: &DecodingConfig) -> Self {
        let inv_t = 1.0 / cfg.temperature;
        let observed: Vec<(u32, f64)> = s
            .ranked
            .iter()
            .filter(|&&r| s.ids[r as usize] != UNK_ID)
            .map(|&r| {
                let c = s.counts[r as usize] as f64;
                (s.ids[r as usize], ((c + alpha) / alpha).ln() * inv_t)
            })
            .collect();
        let mut excluded: Vec<u32> = s.ids.clone();
        if let Err(pos) = excluded.binary_search(&UNK_ID) {
            excluded.insert(pos, UNK_ID);
        }
        let floor_total = vocab_size - excluded.len();

        // weights are exp(log-ratio); rescale by the largest to stay finite
        let shift = observed.first().map_or(0.0, |o| o.1.max(0.0));
        let unit = (-shift).exp();
        let weights: Vec<f64> = observed.iter().map(|o| (o.1 - shift).exp()).collect();
        let total = weights.iter().sum::<f64>() + unit * floor_total as f64;
        let target = cfg.p * total;

        let mut cum = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cum.push(acc);
            if acc >= target {
                break;
            }
        }
        let ids = observed[..cum.len()].iter().map(|o| o.0).collect();
        let floor_kept = if acc >= target || floor_total == 0 {
            0
        } else {
            (((target - acc) / unit).ceil() as usize).clamp(1, floor_total)
        };
        // floor entries get weight `unit` each; store cum in the same scale
        Self {
            ids,
            cum,
            floor_kept,
            excluded,
        }
        .with_unit(unit)
    }

    fn with_unit(mut self, unit: f64) -> Self {
        // Express the observed cumulative weights in floor units so sampling
        // can treat every kept unseen word as weight 1.
        for c in &mut self.cum {
            *c /= unit;
        }
        self
    }

    fn total(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0) + self.floor_kept as f64
    }

    fn floor_id(&self, j: usize) -> u32 {
        let mut id = j as u32;
        for &e in &self.excluded {
            if e <= id {
                id += 1;
            } else {
                break;
            }
        }
        id
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let u = rng.gen::<f64>() * self.total();
        let observed = self.cum.last().copied().unwrap_or(0.0);
        if u < observed {
            let k = self.cum.partition_point(|&c| c <= u);
            return self.ids[k.min(self.ids.len() - 1)];
        }
        let j = ((u - observed) as usize).min(self.floor_kept.saturating_sub(1));
        self.floor_id(j)
    }

    /// Dense normalized form, for checking against [`decoding_dist`].
    fn to_dense(&self, vocab_size: usize) -> Vec<f64> {
        let total = self.total();
        let mut d = vec![0.0; vocab_size];
        let mut prev = 0.0;
        for (id, c) in self.ids.iter().zip(&self.cum) {
            d[*id as usize] = (c - prev) / total;
            prev = *c;
        }
        for j in 0..self.floor_kept {
            d[self.floor_id(j) as usize] = 1.0 / total;
        }
        d
    }
}

/// Autoregressive sampler over an immutable model.
///
/// Filtered distributions are computed once per context and cached, so the
/// sampler can be shared by any number of threads; results depend only on
/// the random stream handed to each call.
pub struct Sampler<'m> {
    model: &'m NGramModel,
    cfg: DecodingConfig,
    cache: Vec<Vec<OnceLock<Box<Prepared>>>>,
    fallback: OnceLock<Box<Prepared>>,
}

impl<'m> Sampler<'m> {
    pub fn new(model: &'m NGramModel, cfg: DecodingConfig) -> Result<Self> {
        cfg.validate()?;
        let cache = model
            .tables
            .iter()
            .map(|t| (0..t.entries.len()).map(|_| OnceLock::new()).collect())
            .collect();
        Ok(Self {
            model,
            cfg,
            cache,
            fallback: OnceLock::new(),
        })
    }

    fn prepared(&self, history: &[u32]) -> &Prepared {
        let m = self.model;
        match m.resolve(history) {
            Some((len, e)) => self.cache[len][e]
                .get_or_init(|| Box::new(Prepared::build(&m.tables[len].entries[e], m.vocab_size(), m.alpha, &self.cfg))),
            None => self.fallback.get_or_init(|| {
                let empty = Successors::new(Vec::new(), Vec::new());
                Box::new(Prepared::build(&empty, m.vocab_size(), m.alpha, &self.cfg))
            }),
        }
    }

    /// Filtered next-word distribution as a dense vector.
    pub fn filtered_dist(&self, history: &[u32]) -> Vec<f64> {
        self.prepared(history).to_dense(self.model.vocab_size())
    }

    /// Generates up to `max_new_tokens` words after `prompt`, stopping at the
    /// end symbol.
    pub fn generate_with<R: Rng, S: AsRef<str>>(&self, prompt: &[S], rng: &mut R) -> Vec<String> {
        let mut history = self.model.encode(prompt);
        let mut out = Vec::new();
        for _ in 0..self.cfg.max_new_tokens {
            let next = self.prepared(&history).sample(rng);
            if next == EOS_ID {
                break;
            }
            out.push(self.model.word(next).to_string());
            history.push(next);
        }
        out
    }
}

/// Seeded generation from a prompt string; returns detokenized text.
pub fn sample(model: &NGramModel, prompt: &str, cfg: &DecodingConfig) -> Result<String> {
    let sampler = Sampler::new(model, *cfg)?;
    let prompt = tokenize(prompt, TokenMode::Surface).tokens;
    let mut rng = seeding::stream_rng(cfg.seed, 0);
    Ok(detokenize(&sampler.generate_with(&prompt, &mut rng)))
}

/// Joins surface tokens, attaching closing punctuation to the word before.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for t in tokens {
        let t = t.as_ref();
        let attach = matches!(t, "." | "," | "!" | "?" | ";" | ":" | ")" | "]" | "}" | "%");
        if !out.is_empty() && !attach {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

/// `exp(-mean log p)` over every word and each document's end symbol.
pub fn perplexity(model: &NGramModel, corpus: &Corpus) -> Result<f64> {
    let seqs: Vec<Vec<String>> = corpus
        .iter()
        .map(|d| tokenize(&training_text(d), TokenMode::Surface).tokens)
        .collect();
    perplexity_sequences(model, &seqs)
}

pub fn perplexity_sequences<S: AsRef<[String]>>(model: &NGramModel, seqs: &[S]) -> Result<f64> {
    if seqs.is_empty() {
        return Err(Error::arg("perplexity of an empty corpus"));
    }
    let (mut lp, mut n) = (0.0, 0usize);
    for s in seqs {
        let (l, k) = model.sequence_log_prob(&model.encode(s.as_ref()), true);
        lp += l;
        n += k;
    }
    Ok((-lp / n as f64).exp())
}
