//! Runs the recursive training chain on a corpus and prints one table row
//! per iteration.
//!
//! cargo run --release --example recursive_chain -- [corpus.jsonl] [iterations] [story|summarization|abstract] [filter]

use std::time::Instant;

use lingdiv::corpus::{load_corpus, CorpusFormat, TaskKind, TaskProfile};
use lingdiv::probe::Probes;
use lingdiv::recursion::{holdout_split, run_chain, spearman, FilterConfig, RecursionConfig};
use lingdiv::report::{probe_metrics, render, DiversityReport, Provenance, ReportFormat};
use lingdiv::simulation::records_to_reports;

fn main() -> lingdiv::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args
        .first()
        .cloned()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/collapse/corpus.jsonl").to_string());
    let iterations = args.get(1).map_or(6, |s| s.parse().expect("iterations"));
    let kind: TaskKind = args.get(2).map_or(TaskKind::Story, |s| s.parse().expect("profile"));

    let corpus = load_corpus(&path, CorpusFormat::Jsonl)?;
    let (train, heldout) = holdout_split(&corpus, 20)?;
    let mut cfg = RecursionConfig {
        iterations,
        ..Default::default()
    };
    cfg.metrics.profile = TaskProfile::for_kind(kind);
    if args.get(3).is_some_and(|s| s == "filter") {
        cfg.filter = Some(FilterConfig::default());
    }

    let start = Instant::now();
    let probes = Probes::builtin();
    let human = DiversityReport {
        label: "Human".into(),
        ppl: None,
        metrics: probe_metrics(&train.preprocessed(cfg.profile()), &probes, &cfg.metrics)?,
        provenance: Provenance::default(),
    };
    let records = run_chain(&train, Some(&heldout), &cfg, &probes)?;
    let mut rows = vec![human];
    rows.extend(records_to_reports(&records, &Provenance::default()));
    print!("{}", render(&rows, ReportFormat::Tsv));

    let n: Vec<f64> = records.iter().map(|r| r.iteration as f64).collect();
    let d3: Vec<f64> = records.iter().map(|r| r.metrics.distinct3).collect();
    println!("spearman(distinct-3, n) = {:.3}", spearman(&d3, &n));
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
