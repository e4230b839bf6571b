//! Trains an n-gram model on a corpus and samples continuations under each
//! task's decoding settings.
//!
//! cargo run --release --example decoding -- [corpus.jsonl] [n_prompts]

use lingdiv::corpus::{load_corpus, CorpusFormat, TaskProfile};
use lingdiv::ngram_lm::{apply_temperature, nucleus_filter, perplexity, sample, NGramModel};
use lingdiv::recursion::holdout_split;

fn main() -> lingdiv::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args
        .first()
        .cloned()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus.jsonl").to_string());
    let n_prompts: usize = args.get(1).map_or(3, |s| s.parse().expect("n_prompts"));

    let dist = [0.5, 0.3, 0.2];
    println!("temperature 0.5: {:?}", apply_temperature(&dist, 0.5)?);
    println!("nucleus 0.7:     {:?}", nucleus_filter(&dist, 0.7));

    let corpus = load_corpus(&path, CorpusFormat::Jsonl)?;
    let (train, heldout) = holdout_split(&corpus, 20)?;
    let model = NGramModel::train(&train, 3, 0.01)?;
    println!("vocabulary {} words", model.vocab_size());
    if !heldout.is_empty() {
        println!("held-out perplexity {:.1}", perplexity(&model, &heldout)?);
    }

    for profile in [TaskProfile::summarization(), TaskProfile::abstract_generation(), TaskProfile::story()] {
        let dec = profile.decoding.with_seed(7);
        println!("\n{:?} (p={}, tau={})", profile.name, dec.p, dec.temperature);
        for doc in train.iter().take(n_prompts) {
            let prompt = doc.prompt.as_deref().unwrap_or("");
            let mut cfg = dec;
            cfg.max_new_tokens = cfg.max_new_tokens.min(60);
            println!("  [{prompt}] {}", sample(&model, prompt, &cfg)?);
        }
    }
    Ok(())
}
