use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lingdiv::corpus::{load_corpus, CorpusFormat, TaskKind, TaskProfile};
use lingdiv::report::{self, MeasureInputs, MetricSettings, ReportFormat};
use lingdiv::semantic::{load_embeddings, HashedBagOfWords};
use lingdiv::simulation::{records_to_reports, simulate, SimulationConfig};
use lingdiv::syntactic::heuristic::shallow_parse;
use lingdiv::syntactic::{load_conllu, wl_features_batch, LabelSource, WlConfig};
use lingdiv::{Error, Result};

#[derive(Parser)]
#[command(name = "lingdiv", version, about = "Linguistic diversity metrics and recursive training simulation")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the diversity of one corpus.
    Measure(MeasureArgs),
    /// Run the recursive training chain described by a JSON config.
    Simulate(SimulateArgs),
    /// Print the Weisfeiler-Lehman features of one sentence.
    WlInspect(WlInspectArgs),
    /// Write the vectors behind Div_syn or Div_sem as JSONL.
    ExportVectors(ExportArgs),
}

#[derive(Args, Clone)]
struct Sampling {
    #[arg(long)]
    seed: Option<u64>,
    /// Vectors per dispersion sample.
    #[arg(long)]
    sample_size: Option<usize>,
    /// Dispersion samples to average.
    #[arg(long)]
    repeats: Option<usize>,
    /// Use every pair and every sentence instead of sampling.
    #[arg(long)]
    exhaustive: bool,
}

impl Sampling {
    fn apply(&self, s: &mut MetricSettings) {
        if let Some(seed) = self.seed {
            s.dispersion.seed = seed;
            s.self_bleu.seed = seed;
        }
        if let Some(n) = self.sample_size {
            s.dispersion.sample_size = n;
        }
        if let Some(r) = self.repeats {
            s.dispersion.repeats = r;
        }
        if self.exhaustive {
            s.dispersion.exhaustive = true;
            s.self_bleu.exhaustive = true;
        }
    }
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    conllu: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// summarization, abstract, story or custom.
    #[arg(long)]
    profile: Option<TaskKind>,
    /// Metric settings as JSON; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long, default_value = "tsv")]
    format: ReportFormat,
    /// Row label.
    #[arg(long)]
    label: Option<String>,
    /// jsonl or plain; guessed from the extension otherwise.
    #[arg(long)]
    corpus_format: Option<CorpusFormat>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long)]
    profile: Option<TaskKind>,
    #[arg(long)]
    iterations: Option<usize>,
    #[command(flatten)]
    sampling: Sampling,
    /// Summary table format.
    #[arg(long, default_value = "tsv")]
    format: ReportFormat,
}

#[derive(Args)]
struct WlInspectArgs {
    /// Take the sentence from a CoNLL-U file.
    #[arg(long, conflicts_with = "text")]
    conllu: Option<PathBuf>,
    /// Sentence index or sent_id in the CoNLL-U file.
    #[arg(long, default_value = "0")]
    sentence: String,
    /// Build a shallow tree for raw text instead.
    #[arg(long)]
    text: Option<String>,
    #[arg(long, default_value_t = 2)]
    h: usize,
    /// deprel, upos or form.
    #[arg(long, default_value = "deprel")]
    labels: LabelSource,
    #[arg(long, default_value = "tsv")]
    format: ReportFormat,
}

#[derive(Args)]
struct ExportArgs {
    /// WL vectors of every tree in a CoNLL-U file.
    #[arg(long, group = "source")]
    conllu: Option<PathBuf>,
    /// Validated rows of an embedding file.
    #[arg(long, group = "source")]
    embeddings: Option<PathBuf>,
    /// Hashed bag-of-words vectors of every sentence of a corpus.
    #[arg(long, group = "source")]
    corpus: Option<PathBuf>,
    #[arg(long)]
    profile: Option<TaskKind>,
    #[arg(long, default_value_t = 2)]
    h: usize,
    #[arg(long, default_value = "deprel")]
    labels: LabelSource,
    /// Output file (stdout if omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_measure(a: MeasureArgs) -> Result<()> {
    let mut settings = match &a.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => MetricSettings::default(),
    };
    if let Some(kind) = a.profile {
        settings.profile = TaskProfile::for_kind(kind);
    }
    a.sampling.apply(&mut settings);
    let inputs = MeasureInputs {
        corpus: a.corpus,
        format: a.corpus_format,
        conllu: a.conllu,
        embeddings: a.embeddings,
        label: a.label,
    };
    let rep = report::measure(&inputs, &settings)?;
    emit(&report::render(&[rep], a.format), None)
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = SimulationConfig::load(&a.config)?;
    if let Some(c) = a.corpus {
        cfg.corpus = c;
    }
    if let Some(r) = a.results {
        cfg.results = r;
    }
    if let Some(kind) = a.profile {
        cfg.chain.metrics.profile = TaskProfile::for_kind(kind);
    }
    if let Some(n) = a.iterations {
        cfg.chain.iterations = n;
    }
    if let Some(seed) = a.sampling.seed {
        cfg.chain.seed = seed;
    }
    a.sampling.apply(&mut cfg.chain.metrics);
    let records = simulate(&cfg)?;
    let prov = report::Provenance {
        config_hash: cfg.fingerprint(),
        seed: cfg.chain.seed,
        corpus: Some(cfg.corpus.clone()),
        ..Default::default()
    };
    emit(&report::render(&records_to_reports(&records, &prov), a.format), None)
}

fn run_wl_inspect(a: WlInspectArgs) -> Result<()> {
    let graph = match (&a.text, &a.conllu) {
        (Some(t), _) => shallow_parse("text", t).ok_or_else(|| Error::Argument("sentence has no tokens".into()))?,
        (None, Some(p)) => {
            let graphs = load_conllu(p)?;
            let found = match a.sentence.parse::<usize>() {
                Ok(i) => graphs.get(i).cloned(),
                Err(_) => None,
            };
            found
                .or_else(|| graphs.iter().find(|g| g.sentence_id == a.sentence).cloned())
                .ok_or_else(|| Error::Argument(format!("no sentence {:?} in {}", a.sentence, p.display())))?
        }
        (None, None) => return Err(Error::Argument("give --conllu or --text".into())),
    };
    let cfg = WlConfig { h: a.h, label_source: a.labels };
    let (feats, labeler) = wl_features_batch(std::slice::from_ref(&graph), &cfg);
    let mut out = String::new();
    match a.format {
        ReportFormat::Tsv => {
            out.push_str("iteration\tlabel\tcount\tpattern\n");
            for ((it, id), c) in feats[0].iter() {
                let pat = labeler.describe(it, id).unwrap_or_default();
                out.push_str(&format!("{it}\t{id}\t{c}\t{pat}\n"));
            }
        }
        ReportFormat::Json => {
            let rows: Vec<_> = feats[0]
                .iter()
                .map(|((it, id), c)| json!({"iteration": it, "label": id, "count": c, "pattern": labeler.describe(it, id)}))
                .collect();
            out = serde_json::to_string_pretty(&json!({"sentence": graph.sentence_id, "features": rows})).unwrap();
            out.push('\n');
        }
    }
    emit(&out, None)
}

fn run_export(a: ExportArgs) -> Result<()> {
    let mut out = String::new();
    let mut line = |v: serde_json::Value| {
        out.push_str(&v.to_string());
        out.push('\n');
    };
    if let Some(p) = &a.conllu {
        let graphs = load_conllu(p)?;
        let cfg = WlConfig { h: a.h, label_source: a.labels };
        let (feats, _) = wl_features_batch(&graphs, &cfg);
        for (g, f) in graphs.iter().zip(&feats) {
            let entries: Vec<_> = f.iter().map(|((it, id), c)| json!([it, id, c])).collect();
            line(json!({"id": g.sentence_id, "features": entries}));
        }
    } else if let Some(p) = &a.embeddings {
        let set = load_embeddings(p)?;
        for (prov, row) in set.provenance().iter().zip(set.rows()) {
            line(json!({"id": prov.id, "sent": prov.sent, "vec": row}));
        }
    } else if let Some(p) = &a.corpus {
        let profile = TaskProfile::for_kind(a.profile.unwrap_or(TaskKind::Story));
        let corpus = load_corpus(p, CorpusFormat::from_path(p))?.preprocessed(&profile);
        let set = HashedBagOfWords::default().encode_corpus(corpus.iter().map(|d| (d.id.as_str(), d.text.as_str())))?;
        for (prov, row) in set.provenance().iter().zip(set.rows()) {
            line(json!({"id": prov.id, "sent": prov.sent, "vec": row}));
        }
    } else {
        return Err(Error::Argument("give --conllu, --embeddings or --corpus".into()));
    }
    emit(&out, a.output.as_ref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Measure(a) => run_measure(a),
        Command::Simulate(a) => run_simulate(a),
        Command::WlInspect(a) => run_wl_inspect(a),
        Command::ExportVectors(a) => run_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
