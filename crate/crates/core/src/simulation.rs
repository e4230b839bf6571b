//! File-driven chain runs: JSON config in, one JSON record per iteration
//! out, with an optional checkpoint for resuming.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, CorpusFormat};
use crate::error::{Error, Result};
use crate::probe::{ProbeSpec, Probes};
use crate::recursion::{holdout_split, Chain, IterationRecord, RecursionConfig};
use crate::report::{config_hash, DiversityReport, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub corpus: PathBuf,
    pub format: Option<CorpusFormat>,
    /// Every k-th document is held out for perplexity.
    pub heldout_every: usize,
    pub results: PathBuf,
    pub checkpoint: Option<PathBuf>,
    /// Where Data(n) files go; next to the checkpoint if unset.
    pub data_dir: Option<PathBuf>,
    pub syntax_probe: ProbeSpec,
    pub semantic_probe: ProbeSpec,
    pub chain: RecursionConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::new(),
            format: None,
            heldout_every: 20,
            results: PathBuf::from("results.jsonl"),
            checkpoint: None,
            data_dir: None,
            syntax_probe: ProbeSpec::Builtin,
            semantic_probe: ProbeSpec::Builtin,
            chain: RecursionConfig::default(),
        }
    }
}

impl SimulationConfig {
    /// Reads a config; relative paths are taken relative to its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.corpus);
        fix(&mut cfg.results);
        cfg.checkpoint.as_mut().map(fix);
        cfg.data_dir.as_mut().map(fix);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus.as_os_str().is_empty() {
            return Err(Error::config("\"corpus\" is required"));
        }
        if self.heldout_every < 2 {
            return Err(Error::config("heldout_every must be >= 2"));
        }
        self.chain.validate()
    }

    /// Hash of everything that determines the records.
    pub fn fingerprint(&self) -> String {
        config_hash(&(&self.corpus, self.heldout_every, &self.syntax_probe, &self.semantic_probe, &self.chain))
    }

    fn data_dir(&self) -> Option<PathBuf> {
        self.data_dir
            .clone()
            .or_else(|| self.checkpoint.as_ref().map(|c| c.with_extension("data")))
    }
}

/// Progress marker written after every iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config_hash: String,
    pub iteration: usize,
    /// Data(1..=iteration) files.
    pub data: Vec<PathBuf>,
    /// Master seed; every random stream is derived from it and the iteration.
    pub seed: u64,
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = BufWriter::new(File::create(&tmp)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(std::io::Error::from)?;
    f.write_all(b"\n")?;
    f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<IterationRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn record_line(r: &IterationRecord) -> String {
    let mut s = serde_json::to_string(r).expect("record serializes");
    s.push('\n');
    s
}

/// Earlier progress, if the checkpoint matches this config.
fn resume_state(cfg: &SimulationConfig) -> Result<Option<(Checkpoint, Vec<IterationRecord>)>> {
    let Some(path) = cfg.checkpoint.as_ref().filter(|p| p.exists()) else {
        return Ok(None);
    };
    let ck: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| Error::Config(format!("checkpoint {}: {e}", path.display())))?;
    if ck.config_hash != cfg.fingerprint() {
        log::warn!("checkpoint {} belongs to a different config; starting over", path.display());
        return Ok(None);
    }
    let records = if cfg.results.exists() { read_records(&cfg.results)? } else { Vec::new() };
    if records.len() < ck.iteration || ck.data.len() != ck.iteration {
        log::warn!("checkpoint {} is ahead of its results; starting over", path.display());
        return Ok(None);
    }
    Ok(Some((ck, records)))
}

/// Runs (or resumes) the configured chain, appending each record to the
/// results file as soon as it exists.
pub fn simulate(cfg: &SimulationConfig) -> Result<Vec<IterationRecord>> {
    cfg.validate()?;
    let format = cfg.format.unwrap_or_else(|| CorpusFormat::from_path(&cfg.corpus));
    let corpus = load_corpus(&cfg.corpus, format)?;
    let (train, heldout) = holdout_split(&corpus, cfg.heldout_every)?;
    let probes = Probes::from_specs(&cfg.syntax_probe, &cfg.semantic_probe);
    let mut chain = Chain::new(&train, Some(&heldout), &cfg.chain, &probes)?;

    let mut records = Vec::new();
    let mut data_files = Vec::new();
    if let Some((ck, done)) = resume_state(cfg)? {
        let data = ck
            .data
            .iter()
            .map(|p| load_corpus(p, CorpusFormat::Jsonl))
            .collect::<Result<Vec<_>>>()?;
        chain.restore(data)?;
        records = done[..ck.iteration].to_vec();
        data_files = ck.data;
        log::info!("resuming after iteration {}", ck.iteration);
    }

    if let Some(parent) = cfg.results.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut out = BufWriter::new(File::create(&cfg.results)?);
    for r in &records {
        out.write_all(record_line(r).as_bytes())?;
    }
    out.flush()?;

    let data_dir = cfg.data_dir();
    if let Some(d) = &data_dir {
        fs::create_dir_all(d)?;
    }
    while !chain.is_done() {
        let rec = chain.step()?;
        out.write_all(record_line(&rec).as_bytes())?;
        out.flush()?;
        let n = rec.iteration;
        records.push(rec);

        if let (Some(dir), Some(ck_path)) = (&data_dir, &cfg.checkpoint) {
            let file = dir.join(format!("data-{n}.jsonl"));
            let data = chain.data(n).expect("iteration just ran");
            data.write_jsonl(BufWriter::new(File::create(&file)?))?;
            data_files.push(file);
            write_json_atomic(
                ck_path,
                &Checkpoint {
                    config_hash: cfg.fingerprint(),
                    iteration: n,
                    data: data_files.clone(),
                    seed: cfg.chain.seed,
                },
            )?;
        }
    }
    Ok(records)
}

/// Table rows for a list of records.
pub fn records_to_reports(records: &[IterationRecord], provenance: &Provenance) -> Vec<DiversityReport> {
    records
        .iter()
        .map(|r| DiversityReport {
            label: format!("Iteration {}", r.iteration),
            ppl: r.perplexity,
            metrics: r.metrics,
            provenance: provenance.clone(),
        })
        .collect()
}
