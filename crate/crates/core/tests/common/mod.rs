//! Brute-force reference implementations. They share no code with the
//! library beyond its input types.
#![allow(dead_code)]

use std::collections::BTreeMap;

use lingdiv::syntactic::{DependencyGraph, LabelSource, Node};

pub fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn count_of(seq: &[String], gram: &[String]) -> usize {
    if gram.len() > seq.len() {
        return 0;
    }
    (0..=seq.len() - gram.len()).filter(|&i| &seq[i..i + gram.len()] == gram).count()
}

/// Sentence BLEU with uniform weights over orders 1..=max_n, clipped
/// precision, closest-length brevity penalty (shorter wins ties), no
/// smoothing.
pub fn naive_bleu(hyp: &[String], refs: &[Vec<String>], max_n: usize) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        if hyp.len() < n {
            return 0.0;
        }
        let total = hyp.len() - n + 1;
        let mut seen: Vec<&[String]> = Vec::new();
        let mut clipped = 0;
        for i in 0..total {
            let g = &hyp[i..i + n];
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            let own = count_of(hyp, g);
            let best = refs.iter().map(|r| count_of(r, g)).max().unwrap_or(0);
            clipped += own.min(best);
        }
        if clipped == 0 {
            return 0.0;
        }
        log_sum += (clipped as f64 / total as f64).ln();
    }
    let c = hyp.len() as f64;
    let mut r = refs[0].len();
    for x in refs {
        let (dx, dr) = ((x.len() as f64 - c).abs(), (r as f64 - c).abs());
        if dx < dr || (dx == dr && x.len() < r) {
            r = x.len();
        }
    }
    let bp = if c > r as f64 { 1.0 } else { (1.0 - r as f64 / c).exp() };
    bp * (log_sum / max_n as f64).exp()
}

pub fn naive_self_bleu(sents: &[Vec<String>], max_n: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..sents.len() {
        let others: Vec<Vec<String>> = sents.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s.clone()).collect();
        total += naive_bleu(&sents[i], &others, max_n);
    }
    total / sents.len() as f64
}

/// 1 - mean(Self-BLEU-2, Self-BLEU-3).
pub fn naive_self_bleu_diversity(sents: &[Vec<String>]) -> f64 {
    1.0 - (naive_self_bleu(sents, 2) + naive_self_bleu(sents, 3)) / 2.0
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    1.0 - dot / (na * nb)
}

/// Mean over all unordered pairs, halved, as a percentage.
pub fn naive_dispersion(rows: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0;
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            if i < j {
                sum += cosine_distance(&rows[i], &rows[j]);
                pairs += 1;
            }
        }
    }
    sum / pairs as f64 / 2.0 * 100.0
}

/// WL subtree features with uncompressed string labels: each label is the
/// previous label followed by the sorted labels of the neighbors.
pub fn naive_wl(g: &DependencyGraph, h: usize, source: LabelSource) -> BTreeMap<String, f64> {
    let n = g.len();
    let mut adj = vec![Vec::new(); n];
    for (i, node) in g.nodes().iter().enumerate() {
        if node.head > 0 {
            adj[i].push(node.head - 1);
            adj[node.head - 1].push(i);
        }
    }
    let mut labels: Vec<String> = (0..n)
        .map(|i| {
            let node = &g.nodes()[i];
            match source {
                LabelSource::Deprel if node.head == 0 => "root".to_string(),
                LabelSource::Deprel => node.deprel.clone(),
                LabelSource::Upos => node.upos.clone(),
                LabelSource::Form => node.form.clone(),
            }
        })
        .collect();
    let mut feats = BTreeMap::new();
    for it in 0..=h {
        for l in &labels {
            *feats.entry(format!("{it}:{l}")).or_insert(0.0) += 1.0;
        }
        let next: Vec<String> = (0..n)
            .map(|i| {
                let mut nb: Vec<&String> = adj[i].iter().map(|&j| &labels[j]).collect();
                nb.sort();
                let joined: Vec<&str> = nb.iter().map(|s| s.as_str()).collect();
                format!("({}[{}])", labels[i], joined.join(","))
            })
            .collect();
        labels = next;
    }
    feats
}

/// Div_syn through the string-label features and a plain pairwise loop.
pub fn naive_div_syn(graphs: &[DependencyGraph], h: usize, source: LabelSource) -> f64 {
    let feats: Vec<BTreeMap<String, f64>> = graphs.iter().map(|g| naive_wl(g, h, source)).collect();
    let mut keys: Vec<&String> = feats.iter().flat_map(|f| f.keys()).collect();
    keys.sort();
    keys.dedup();
    let rows: Vec<Vec<f64>> = feats
        .iter()
        .map(|f| keys.iter().map(|k| f.get(*k).copied().unwrap_or(0.0)).collect())
        .collect();
    naive_dispersion(&rows)
}

/// Builds a tree from `(label, parent)` pairs with 0-based parents and
/// `None` for the root.
pub fn tree(id: &str, shape: &[(&str, Option<usize>)]) -> DependencyGraph {
    let nodes = shape
        .iter()
        .map(|(l, p)| Node {
            form: l.to_string(),
            upos: l.to_uppercase(),
            deprel: if p.is_none() { "root".into() } else { l.to_string() },
            head: p.map_or(0, |p| p + 1),
        })
        .collect();
    DependencyGraph::from_nodes(id, nodes, 0).expect("valid tree")
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
