//! Corpus loading, task-specific preprocessing, tokenization and sentence
//! segmentation.
//!
//! Everything here is a pure function over immutable inputs. A [`Corpus`] is
//! never mutated after it has been loaded; preprocessing produces new
//! documents.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ngram_lm::DecodingConfig;

/// Literal token that marks line breaks in story-generation data.
pub const NEWLINE_TOKEN: &str = "<newline>";
/// Replacement for URL links.
pub const URL_REPLACEMENT: &str = "WEBSITE";

/// One unit of evaluated text, optionally paired with the prompt that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub text: String,
    /// Set once the prompt prefix has been stripped from `text`.
    #[serde(skip)]
    prompt_removed: bool,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            prompt: None,
            text: text.into(),
            prompt_removed: false,
        }
    }

    pub fn with_prompt(id: impl Into<String>, prompt: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            prompt: Some(prompt.into()),
            text: text.into(),
            prompt_removed: false,
        }
    }

    /// Generated text for a prompt; already free of the prompt prefix.
    pub fn continuation(id: impl Into<String>, prompt: Option<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            prompt,
            text: text.into(),
            prompt_removed: true,
        }
    }

    pub fn is_preprocessed(&self) -> bool {
        self.prompt_removed
    }
}

/// An ordered collection of documents with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids.
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Schema {
                    line: i + 1,
                    message: format!("duplicate document id {:?}", d.id),
                });
            }
        }
        Ok(Self { docs })
    }

    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let docs = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| Document::new(i.to_string(), t))
            .collect();
        Self { docs }
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn into_docs(self) -> Vec<Document> {
        self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    /// Applies [`preprocess`] to every document.
    pub fn preprocessed(&self, profile: &TaskProfile) -> Corpus {
        Corpus {
            docs: self.docs.iter().map(|d| preprocess(d, profile)).collect(),
        }
    }

    /// Writes the corpus as JSONL.
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for d in &self.docs {
            serde_json::to_writer(&mut out, d).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Plain,
}

impl CorpusFormat {
    /// `.txt` files are plain, everything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt") => Self::Plain,
            _ => Self::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Self::Jsonl),
            "plain" | "txt" => Ok(Self::Plain),
            other => Err(Error::arg(format!("unknown corpus format {other:?}"))),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<serde_json::Value>,
    prompt: Option<String>,
    text: Option<String>,
}

/// Loads a corpus from disk.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let corpus = read_corpus(File::open(path)?, format)?;
    if corpus.is_empty() {
        log::warn!("corpus {} is empty", path.display());
    }
    Ok(corpus)
}

/// Reads a corpus from any byte stream.
///
/// JSONL records need `id` and `text`; `prompt` is optional. Plain input has
/// one document per line with zero-based ids. Blank JSONL lines are skipped.
pub fn read_corpus<R: Read>(reader: R, format: CorpusFormat) -> Result<Corpus> {
    let reader = BufReader::new(reader);
    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        match format {
            CorpusFormat::Plain => docs.push(Document::new(idx.to_string(), line)),
            CorpusFormat::Jsonl => {
                if line.trim().is_empty() {
                    continue;
                }
                let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: lineno,
                    message: e.to_string(),
                })?;
                let id = match raw.id {
                    Some(serde_json::Value::String(s)) => s,
                    Some(serde_json::Value::Number(n)) => n.to_string(),
                    Some(_) => {
                        return Err(Error::Schema {
                            line: lineno,
                            message: "\"id\" must be a string".into(),
                        })
                    }
                    None => {
                        return Err(Error::Schema {
                            line: lineno,
                            message: "missing \"id\"".into(),
                        })
                    }
                };
                let text = raw.text.ok_or_else(|| Error::Schema {
                    line: lineno,
                    message: "missing \"text\"".into(),
                })?;
                docs.push(Document {
                    id,
                    prompt: raw.prompt,
                    text,
                    prompt_removed: false,
                });
            }
        }
    }
    Corpus::new(docs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Summarization,
    Abstract,
    Story,
    Custom,
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "summarization" | "news" => Ok(Self::Summarization),
            "abstract" => Ok(Self::Abstract),
            "story" => Ok(Self::Story),
            "custom" => Ok(Self::Custom),
            other => Err(Error::arg(format!("unknown task profile {other:?}"))),
        }
    }
}

/// Everything that varies between generation tasks: preprocessing switches,
/// the fixed-length truncation window and decoding defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskProfile {
    pub name: TaskKind,
    pub truncation_length: usize,
    pub strip_newline_token: bool,
    pub replace_urls: bool,
    /// Case-fold tokens for lexical metrics.
    #[serde(default = "default_true")]
    pub case_fold: bool,
    pub decoding: DecodingConfig,
}

fn default_true() -> bool {
    true
}

impl TaskProfile {
    /// News summarization: 20-token window, p=0.1, tau=0.3, 50 new tokens.
    pub fn summarization() -> Self {
        Self {
            name: TaskKind::Summarization,
            truncation_length: 20,
            strip_newline_token: false,
            replace_urls: false,
            case_fold: true,
            decoding: DecodingConfig::new(0.1, 0.3, 50),
        }
    }

    /// Scientific abstracts: 50-token window, URLs replaced, p=0.5, tau=0.5,
    /// 300 new tokens.
    pub fn abstract_generation() -> Self {
        Self {
            name: TaskKind::Abstract,
            truncation_length: 50,
            strip_newline_token: false,
            replace_urls: true,
            case_fold: true,
            decoding: DecodingConfig::new(0.5, 0.5, 300),
        }
    }

    /// Story generation: 150-token window, `<newline>` removed, p=0.9,
    /// tau=0.7, 500 new tokens.
    pub fn story() -> Self {
        Self {
            name: TaskKind::Story,
            truncation_length: 150,
            strip_newline_token: true,
            replace_urls: false,
            case_fold: true,
            decoding: DecodingConfig::new(0.9, 0.7, 500),
        }
    }

    pub fn custom(truncation_length: usize, decoding: DecodingConfig) -> Self {
        Self {
            name: TaskKind::Custom,
            truncation_length,
            strip_newline_token: false,
            replace_urls: false,
            case_fold: true,
            decoding,
        }
    }

    pub fn for_kind(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Summarization => Self::summarization(),
            TaskKind::Abstract => Self::abstract_generation(),
            TaskKind::Story => Self::story(),
            TaskKind::Custom => Self::custom(50, DecodingConfig::new(0.9, 1.0, 100)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation_length == 0 {
            return Err(Error::config("truncation_length must be > 0"));
        }
        self.decoding.validate()
    }

    pub fn lexical_mode(&self) -> TokenMode {
        if self.case_fold {
            TokenMode::Lexical
        } else {
            TokenMode::LexicalCased
        }
    }
}

/// Collapses every whitespace run to a single space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:(?:https?://|www\.)\S+|(?:[a-z0-9-]+\.)+[a-z]{2,}/\S*)").unwrap()
    })
}

const URL_TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', ')', ']', '}', '"', '\'', '”', '’'];

/// Replaces scheme-prefixed and bare `domain/path` links with `WEBSITE`.
/// Trailing sentence punctuation stays outside the replacement.
pub fn replace_urls(text: &str) -> String {
    url_regex()
        .replace_all(text, |caps: &regex::Captures<'_>| {
            let m = &caps[0];
            let core = m.trim_end_matches(URL_TRAILING);
            format!("{URL_REPLACEMENT}{}", &m[core.len()..])
        })
        .into_owned()
}

/// Applies the profile's preprocessing to one document.
///
/// The prompt prefix is removed when the (whitespace-normalized) text starts
/// with the normalized prompt; a non-matching prompt is logged and the text
/// is kept. Repeated application is a no-op.
pub fn preprocess(doc: &Document, profile: &TaskProfile) -> Document {
    let mut text = normalize_whitespace(&doc.text);

    if !doc.prompt_removed {
        if let Some(prompt) = doc.prompt.as_deref() {
            let prompt = normalize_whitespace(prompt);
            if !prompt.is_empty() {
                if let Some(rest) = text.strip_prefix(prompt.as_str()) {
                    text = rest.trim_start().to_string();
                } else {
                    log::debug!("document {}: text does not start with its prompt", doc.id);
                }
            }
        }
    }
    if profile.strip_newline_token {
        text = text.replace(NEWLINE_TOKEN, " ");
    }
    if profile.replace_urls {
        text = replace_urls(&text);
    }

    Document {
        id: doc.id.clone(),
        prompt: doc.prompt.clone(),
        text: normalize_whitespace(&text),
        prompt_removed: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenMode {
    /// Punctuation dropped, case-folded.
    Lexical,
    /// Punctuation dropped, original casing.
    LexicalCased,
    /// Punctuation kept as separate tokens.
    Surface,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub mode: TokenMode,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

impl std::ops::Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.tokens
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

// Apostrophes and hyphens stay inside a word when flanked by word characters.
fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-')
}

/// Returns true when the token carries no letter or digit.
pub fn is_punctuation_token(tok: &str) -> bool {
    !tok.chars().any(is_word_char)
}

/// Splits on whitespace, then detaches every non-word character as its own
/// token. Lexical modes drop those punctuation tokens.
pub fn tokenize(text: &str, mode: TokenMode) -> TokenSeq {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut word = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let joins = is_joiner(c)
                && !word.is_empty()
                && chars.get(i + 1).is_some_and(|&n| is_word_char(n));
            if is_word_char(c) || joins {
                word.push(c);
                continue;
            }
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if mode == TokenMode::Surface {
                tokens.push(c.to_string());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    if mode == TokenMode::Lexical {
        for t in &mut tokens {
            *t = t.to_lowercase();
        }
    }
    TokenSeq { tokens, mode }
}

/// Keeps the first `limit` tokens.
pub fn truncate(seq: &TokenSeq, limit: usize) -> Result<TokenSeq> {
    if limit == 0 {
        return Err(Error::arg("truncation limit must be > 0"));
    }
    Ok(TokenSeq {
        tokens: seq.tokens.iter().take(limit).cloned().collect(),
        mode: seq.mode,
    })
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "messrs", "dr", "prof", "st", "jr", "sr", "vs", "etc", "e.g", "i.e", "inc",
    "ltd", "co", "corp", "mt", "no", "gen", "col", "lt", "sgt", "capt", "rev", "hon", "gov", "sen",
    "rep", "jan", "feb", "aug", "sept", "oct", "nov", "dec", "fig", "vol", "u.s", "u.k", "a.m",
    "p.m", "esq",
];

const SENTENCE_TERMINATORS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '”', '’'];

fn word_before(text: &str, end: usize) -> &str {
    let start = text[..end].rfind(' ').map_or(0, |i| i + 1);
    text[start..end].trim_start_matches(|c: char| !is_word_char(c))
}

/// Rule-based segmentation: a boundary follows `.`, `!` or `?` (plus any
/// closing quotes or brackets) when the next character after a single space
/// is uppercase. A period after a known abbreviation is not a boundary.
///
/// Joining the result with single spaces gives back the whitespace-normalized
/// input.
pub fn split_sentences(text: &str) -> Vec<String> {
    let norm = normalize_whitespace(text);
    let chars: Vec<(usize, char)> = norm.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !SENTENCE_TERMINATORS.contains(&c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && SENTENCE_TERMINATORS.contains(&chars[j].1) {
            j += 1;
        }
        while j < chars.len() && CLOSERS.contains(&chars[j].1) {
            j += 1;
        }
        let boundary = j + 1 < chars.len() && chars[j].1 == ' ' && chars[j + 1].1.is_uppercase();
        if boundary {
            let abbreviated = c == '.' && {
                let w = word_before(&norm, pos).to_lowercase();
                ABBREVIATIONS.contains(&w.as_str())
            };
            if !abbreviated {
                let end = chars[j].0;
                out.push(norm[start..end].to_string());
                start = chars[j + 1].0;
            }
        }
        i = j;
    }
    if start < norm.len() {
        out.push(norm[start..].to_string());
    }
    out
}
