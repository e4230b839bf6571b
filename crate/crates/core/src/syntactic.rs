//! Dependency trees from CoNLL-U, Weisfeiler-Lehman subtree features and
//! syntactic diversity.
//!
//! Trees are handled as undirected, unlabeled-edge graphs during relabeling;
//! only node labels carry syntax. Compressed labels come from an injective
//! dictionary, never from hashing.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dispersion::{self, DispersionConfig, SparseVector};
use crate::error::{Error, Result};

pub mod heuristic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub form: String,
    pub upos: String,
    pub deprel: String,
    /// 1-based id of the head word, 0 for the root.
    pub head: usize,
}

/// A dependency tree over the words of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyGraph {
    pub sentence_id: String,
    nodes: Vec<Node>,
    adjacency: Vec<Vec<usize>>,
}

impl DependencyGraph {
    /// Builds a graph from nodes whose `head` fields are 1-based ids.
    /// `sentence` is only used for error reporting.
    pub fn from_nodes(sentence_id: impl Into<String>, nodes: Vec<Node>, sentence: usize) -> Result<Self> {
        let n = nodes.len();
        let structure = |message: String| Error::Structure { sentence, message };
        if n == 0 {
            return Err(structure("sentence has no words".into()));
        }
        if let Some((i, node)) = nodes.iter().enumerate().find(|(_, nd)| nd.head > n) {
            return Err(structure(format!(
                "word {} has HEAD {} but the sentence has {n} words",
                i + 1,
                node.head
            )));
        }
        let roots = nodes.iter().filter(|nd| nd.head == 0).count();
        if roots != 1 {
            return Err(structure(format!("expected exactly one root, found {roots}")));
        }
        // every word must reach the root within n steps
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while nodes[cur].head != 0 {
                cur = nodes[cur].head - 1;
                steps += 1;
                if steps > n {
                    return Err(structure(format!("cycle through word {}", start + 1)));
                }
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (i, node) in nodes.iter().enumerate() {
            if node.head != 0 {
                adjacency[i].push(node.head - 1);
                adjacency[node.head - 1].push(i);
            }
        }
        Ok(Self {
            sentence_id: sentence_id.into(),
            nodes,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn label(&self, i: usize, source: LabelSource) -> &str {
        let node = &self.nodes[i];
        match source {
            LabelSource::Deprel if node.head == 0 => "root",
            LabelSource::Deprel => &node.deprel,
            LabelSource::Upos => &node.upos,
            LabelSource::Form => &node.form,
        }
    }
}

/// Parses every sentence in a CoNLL-U stream.
///
/// Multiword-token ranges (`1-2`) and empty nodes (`1.1`) are skipped.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<DependencyGraph>> {
    let mut graphs = Vec::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    let mut sent_id: Option<String> = None;

    let mut finish = |nodes: &mut Vec<Node>, lines: &mut Vec<usize>, sent_id: &mut Option<String>| -> Result<()> {
        let id = sent_id.take();
        if nodes.is_empty() {
            return Ok(());
        }
        let idx = graphs.len();
        if let Some((i, node)) = nodes.iter().enumerate().find(|(_, nd)| nd.head > nodes.len()) {
            return Err(Error::Conllu {
                sentence: idx,
                line: lines[i],
                message: format!("HEAD {} references a nonexistent word", node.head),
            });
        }
        lines.clear();
        let id = id.unwrap_or_else(|| idx.to_string());
        graphs.push(DependencyGraph::from_nodes(id, std::mem::take(nodes), idx)?);
        Ok(())
    };

    let mut sentence = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !nodes.is_empty() {
                sentence += 1;
            }
            finish(&mut nodes, &mut lines, &mut sent_id)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    sent_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let err = |message: String| Error::Conllu {
            sentence,
            line: lineno,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(err(format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        if cols[0].contains(['-', '.']) {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| err(format!("bad ID {:?}", cols[0])))?;
        if id != nodes.len() + 1 {
            return Err(err(format!("expected word ID {}, found {id}", nodes.len() + 1)));
        }
        let head: usize = cols[6].parse().map_err(|_| err(format!("bad HEAD {:?}", cols[6])))?;
        nodes.push(Node {
            form: cols[1].to_string(),
            upos: cols[3].to_string(),
            deprel: cols[7].to_string(),
            head,
        });
        lines.push(lineno);
    }
    finish(&mut nodes, &mut lines, &mut sent_id)?;
    Ok(graphs)
}

pub fn load_conllu(path: impl AsRef<std::path::Path>) -> Result<Vec<DependencyGraph>> {
    parse_conllu(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn parse_conllu_str(text: &str) -> Result<Vec<DependencyGraph>> {
    parse_conllu(text.as_bytes())
}

/// Writes graphs back out as CoNLL-U (unknown columns as `_`).
pub fn write_conllu<W: Write>(graphs: &[DependencyGraph], mut out: W) -> Result<()> {
    for g in graphs {
        writeln!(out, "# sent_id = {}", g.sentence_id)?;
        for (i, n) in g.nodes.iter().enumerate() {
            let deprel = if n.head == 0 { "root" } else { n.deprel.as_str() };
            writeln!(
                out,
                "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_",
                i + 1,
                n.form,
                n.upos,
                n.head,
                deprel
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    /// Incoming dependency relation; the root is labeled `root`.
    #[default]
    Deprel,
    Upos,
    Form,
}

impl FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deprel" => Ok(Self::Deprel),
            "upos" | "pos" => Ok(Self::Upos),
            "form" => Ok(Self::Form),
            other => Err(Error::arg(format!("unknown label source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WlConfig {
    /// Relabeling iterations.
    pub h: usize,
    pub label_source: LabelSource,
}

impl Default for WlConfig {
    fn default() -> Self {
        Self {
            h: 2,
            label_source: LabelSource::Deprel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum LabelKey {
    Base(String),
    Refined(u32, Vec<u32>),
}

/// Sparse label counts keyed by `(iteration, compressed label id)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WlFeatureVector {
    counts: BTreeMap<(u32, u32), u32>,
}

impl WlFeatureVector {
    pub fn get(&self, iteration: u32, label: u32) -> u32 {
        self.counts.get(&(iteration, label)).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), u32)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total count at one iteration level.
    pub fn level_total(&self, iteration: u32) -> u32 {
        self.counts
            .range((iteration, 0)..=(iteration, u32::MAX))
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn to_sparse(&self) -> SparseVector {
        SparseVector::from_entries(
            self.counts
                .iter()
                .map(|(&(it, id), &c)| (((it as u64) << 32) | id as u64, c as f64))
                .collect(),
        )
    }
}

/// The label dictionary shared by every graph of one measurement run.
///
/// Each graph's previously unseen labels are numbered in sorted key order,
/// so ids never depend on the order of nodes inside a graph.
#[derive(Debug, Clone)]
pub struct WlLabeler {
    cfg: WlConfig,
    dicts: Vec<HashMap<LabelKey, u32>>,
    keys: Vec<Vec<LabelKey>>,
}

impl WlLabeler {
    pub fn new(cfg: WlConfig) -> Self {
        Self {
            cfg,
            dicts: vec![HashMap::new(); cfg.h + 1],
            keys: vec![Vec::new(); cfg.h + 1],
        }
    }

    pub fn config(&self) -> WlConfig {
        self.cfg
    }

    fn compress(&mut self, iteration: usize, keys: Vec<LabelKey>) -> Vec<u32> {
        let mut fresh: Vec<&LabelKey> = keys.iter().filter(|k| !self.dicts[iteration].contains_key(*k)).collect();
        fresh.sort();
        fresh.dedup();
        for k in fresh {
            let id = self.keys[iteration].len() as u32;
            self.dicts[iteration].insert(k.clone(), id);
            self.keys[iteration].push(k.clone());
        }
        keys.iter().map(|k| self.dicts[iteration][k]).collect()
    }

    /// WL subtree features of one graph.
    pub fn features(&mut self, g: &DependencyGraph) -> WlFeatureVector {
        let src = self.cfg.label_source;
        let base: Vec<LabelKey> = (0..g.len()).map(|i| LabelKey::Base(g.label(i, src).to_string())).collect();
        let mut labels = self.compress(0, base);
        let mut counts = BTreeMap::new();
        for &l in &labels {
            *counts.entry((0, l)).or_insert(0) += 1;
        }
        for it in 1..=self.cfg.h {
            let keys: Vec<LabelKey> = (0..g.len())
                .map(|v| {
                    let mut nb: Vec<u32> = g.neighbors(v).iter().map(|&u| labels[u]).collect();
                    nb.sort_unstable();
                    LabelKey::Refined(labels[v], nb)
                })
                .collect();
            labels = self.compress(it, keys);
            for &l in &labels {
                *counts.entry((it as u32, l)).or_insert(0) += 1;
            }
        }
        WlFeatureVector { counts }
    }

    /// Human-readable form of a compressed label.
    pub fn describe(&self, iteration: u32, id: u32) -> Option<String> {
        let key = self.keys.get(iteration as usize)?.get(id as usize)?;
        Some(match key {
            LabelKey::Base(s) => s.clone(),
            LabelKey::Refined(own, nb) => {
                let nb: Vec<String> = nb.iter().map(u32::to_string).collect();
                format!("{own}|{}", nb.join(","))
            }
        })
    }

    /// Number of distinct labels seen at each iteration.
    pub fn vocabulary_sizes(&self) -> Vec<usize> {
        self.keys.iter().map(Vec::len).collect()
    }
}

/// Features of a single graph with a fresh dictionary.
pub fn wl_features(g: &DependencyGraph, cfg: &WlConfig) -> WlFeatureVector {
    WlLabeler::new(*cfg).features(g)
}

/// Features of many graphs over one shared dictionary, in input order.
pub fn wl_features_batch(graphs: &[DependencyGraph], cfg: &WlConfig) -> (Vec<WlFeatureVector>, WlLabeler) {
    let mut labeler = WlLabeler::new(*cfg);
    let feats = graphs.iter().map(|g| labeler.features(g)).collect();
    (feats, labeler)
}

/// Mean pairwise cosine distance of WL vectors, halved, as a percentage.
pub fn div_syn(graphs: &[DependencyGraph], wl: &WlConfig, disp: &DispersionConfig) -> Result<f64> {
    if graphs.len() < 2 {
        return Err(Error::arg("syntactic diversity needs at least two graphs"));
    }
    let (feats, _) = wl_features_batch(graphs, wl);
    let vectors: Vec<SparseVector> = feats.iter().map(WlFeatureVector::to_sparse).collect();
    dispersion::report_scale(dispersion::mean_pairwise_distance(&vectors, disp)?)
}
