//! The full measurement pipeline: a corpus plus adapter outputs in, one
//! table row out, in TSV and JSON.
//!
//! cargo run --release --example measure_report -- [corpus.jsonl] [parsed.conllu] [embeddings.jsonl]

use std::path::PathBuf;

use lingdiv::report::{measure, parse_reports, render, MeasureInputs, MetricSettings, ReportFormat};

fn main() -> lingdiv::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| PathBuf::from(args.get(i).cloned().unwrap_or_else(|| format!("{dir}/{default}")));

    let mut inputs = MeasureInputs {
        corpus: arg(0, "corpus.jsonl"),
        conllu: Some(arg(1, "parsed.conllu")),
        embeddings: Some(arg(2, "embeddings.jsonl")),
        label: Some("Human".into()),
        ..Default::default()
    };
    let settings = MetricSettings::default();
    let full = measure(&inputs, &settings)?;

    inputs.conllu = None;
    inputs.label = Some("no trees".into());
    let partial = measure(&inputs, &settings)?;

    let rows = [full, partial];
    print!("{}", render(&rows, ReportFormat::Tsv));
    let json = render(&rows, ReportFormat::Json);
    assert_eq!(parse_reports(&json)?, rows);
    println!("\nconfig hash {}", rows[0].provenance.config_hash);
    Ok(())
}
