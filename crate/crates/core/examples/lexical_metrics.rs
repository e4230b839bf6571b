//! TTR, distinct-n and Self-BLEU diversity on a corpus, first on raw token
//! lists and then through the task-profile preprocessing.
//!
//! cargo run --release --example lexical_metrics -- [corpus.jsonl] [story|summarization|abstract]

use lingdiv::corpus::{load_corpus, CorpusFormat, TaskKind, TaskProfile};
use lingdiv::lexical::{bleu, distinct_n, self_bleu_diversity, ttr, BleuConfig, SelfBleuConfig};
use lingdiv::report::{lexical_metrics, lexical_segments, sentence_tokens};

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn main() -> lingdiv::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args
        .first()
        .cloned()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus.jsonl").to_string());
    let kind: TaskKind = args.get(1).map_or(TaskKind::Story, |s| s.parse().expect("profile"));

    let seq = words("the cat sat on the mat and the dog sat on the log");
    println!("TTR {:.3}", ttr(&seq)?);
    for n in 1..=3 {
        println!("distinct-{n} {:.3}", distinct_n(&seq, n)?);
    }
    let hyp = words("the cat sat on the mat");
    let refs = [words("the cat is on the mat"), words("a cat sat on a mat")];
    println!("BLEU-2 {:.4}", bleu(&hyp, &refs, &BleuConfig::uniform(2))?);
    let sents = [hyp.clone(), refs[0].clone(), refs[1].clone()];
    let cfg = SelfBleuConfig {
        exhaustive: true,
        ..Default::default()
    };
    println!("1 - Self-BLEU {:.4}", self_bleu_diversity(&sents, &cfg)?);

    let profile = TaskProfile::for_kind(kind);
    let corpus = load_corpus(&path, CorpusFormat::from_path(path.as_ref()))?.preprocessed(&profile);
    let segments = lexical_segments(&corpus, &profile)?;
    let tokens: usize = segments.iter().map(Vec::len).sum();
    println!(
        "\n{} documents, {tokens} tokens after truncation to {}, {} sentences",
        corpus.len(),
        profile.truncation_length,
        sentence_tokens(&corpus, &profile).len()
    );
    let [t, d2, d3, sb] = lexical_metrics(&corpus, &profile, &SelfBleuConfig::default())?;
    println!("TTR {t:.2}  Distinct-2 {d2:.1}  Distinct-3 {d3:.1}  1-Self-BLEU {sb:.1}");
    Ok(())
}
