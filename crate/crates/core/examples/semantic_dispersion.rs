//! Semantic diversity as the dispersion of sentence embeddings, from an
//! embedding file or from the built-in hashed bag-of-words encoder.
//!
//! cargo run --release --example semantic_dispersion -- [embeddings.jsonl | corpus.jsonl]

use lingdiv::corpus::{load_corpus, CorpusFormat, TaskProfile};
use lingdiv::dispersion::DispersionConfig;
use lingdiv::probe::EmbeddingProbe;
use lingdiv::semantic::{div_sem, load_embeddings, HashedBagOfWords};

fn main() -> lingdiv::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/embeddings.jsonl").to_string());
    let set = if path.ends_with("embeddings.jsonl") {
        load_embeddings(&path)?
    } else {
        let corpus = load_corpus(&path, CorpusFormat::from_path(path.as_ref()))?.preprocessed(&TaskProfile::story());
        HashedBagOfWords::default().embed(&corpus)?
    };
    println!("{} rows of dimension {}", set.len(), set.dim());

    println!("exhaustive Div_sem {:.3}", div_sem(&set, &DispersionConfig::exhaustive())?);
    for seed in 0..3 {
        let cfg = DispersionConfig {
            sample_size: (set.len() / 2).max(2),
            repeats: 5,
            seed,
            exhaustive: false,
        };
        println!("sampled half, seed {seed}: {:.3}", div_sem(&set, &cfg)?);
    }
    Ok(())
}
