//! Weisfeiler-Lehman subtree features of dependency trees and the
//! syntactic diversity they give.
//!
//! cargo run --release --example wl_kernel -- [parsed.conllu] [h]

use lingdiv::dispersion::{cosine_distance_of, DispersionConfig};
use lingdiv::syntactic::{div_syn, load_conllu, wl_features_batch, LabelSource, WlConfig};

fn main() -> lingdiv::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args
        .first()
        .cloned()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/parsed.conllu").to_string());
    let h: usize = args.get(1).map_or(2, |s| s.parse().expect("h"));

    let graphs = load_conllu(&path)?;
    let cfg = WlConfig {
        h,
        label_source: LabelSource::Deprel,
    };
    let (feats, labeler) = wl_features_batch(&graphs, &cfg);
    println!("{} trees, labels per iteration {:?}", graphs.len(), labeler.vocabulary_sizes());

    let (g, f) = (&graphs[0], &feats[0]);
    println!("\n{} ({} nodes)", g.sentence_id, g.len());
    for ((it, id), count) in f.iter() {
        println!("  {it}:{id:<4} x{count}  {}", labeler.describe(it, id).unwrap_or_default());
    }

    let sparse: Vec<_> = feats.iter().map(|f| f.to_sparse()).collect();
    let mut nearest = (f64::INFINITY, 0);
    for (j, v) in sparse.iter().enumerate().skip(1) {
        let d = cosine_distance_of(&sparse[0], v)?;
        if d < nearest.0 {
            nearest = (d, j);
        }
    }
    println!("closest tree {} at distance {:.3}", graphs[nearest.1].sentence_id, nearest.0);

    for source in [LabelSource::Deprel, LabelSource::Upos] {
        let cfg = WlConfig { h, label_source: source };
        println!("Div_syn over {source:?} {:.2}", div_syn(&graphs, &cfg, &DispersionConfig::exhaustive())?);
    }
    Ok(())
}
