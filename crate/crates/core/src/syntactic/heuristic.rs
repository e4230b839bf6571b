//! A rule-based shallow dependency builder.
//!
//! This is not a parser. It guesses coarse word classes from closed-class
//! lexicons and suffixes, then attaches function words to the next content
//! word and everything else to the first verb. The resulting trees are only
//! meant as a cheap syntax probe for synthetic text when no neural parser
//! output is available.

use crate::corpus::{is_punctuation_token, split_sentences, tokenize, TokenMode};

use super::{DependencyGraph, Node};

const DET: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our", "their", "some", "any",
    "no", "every", "each", "all", "both", "such",
];
const ADP: &[&str] = &[
    "of", "in", "to", "for", "with", "on", "at", "by", "from", "up", "about", "into", "over", "after", "under", "upon",
    "through", "before", "between", "against", "without", "within", "during", "among", "towards", "toward", "across",
    "behind", "beyond", "near",
];
const PRON: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "who", "whom", "whose", "which", "what",
    "myself", "himself", "herself", "itself", "ourselves", "themselves", "one",
];
const CCONJ: &[&str] = &["and", "or", "but", "nor", "yet", "so"];
const SCONJ: &[&str] = &["if", "because", "although", "though", "while", "when", "whether", "since", "unless", "as", "where"];
const AUX: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "have", "has", "had", "do", "does", "did", "will", "would",
    "shall", "should", "can", "could", "may", "might", "must",
];
const PART: &[&str] = &["not", "n't"];

/// Coarse universal POS guess for one surface token.
pub fn guess_upos(token: &str, sentence_initial: bool) -> &'static str {
    if is_punctuation_token(token) {
        return "PUNCT";
    }
    if token.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.') {
        return "NUM";
    }
    let lower = token.to_lowercase();
    let l = lower.as_str();
    let lists: [(&[&str], &'static str); 7] = [
        (DET, "DET"),
        (ADP, "ADP"),
        (PRON, "PRON"),
        (CCONJ, "CCONJ"),
        (SCONJ, "SCONJ"),
        (AUX, "AUX"),
        (PART, "PART"),
    ];
    for (list, tag) in lists {
        if list.contains(&l) {
            return tag;
        }
    }
    if !sentence_initial && token.chars().next().is_some_and(char::is_uppercase) {
        return "PROPN";
    }
    if l.ends_with("ly") {
        "ADV"
    } else if l.ends_with("ed") || l.ends_with("ing") || l.ends_with("ize") || l.ends_with("ise") {
        "VERB"
    } else if l.ends_with("ous") || l.ends_with("ful") || l.ends_with("ive") || l.ends_with("able") || l.ends_with("al") {
        "ADJ"
    } else {
        "NOUN"
    }
}

fn is_content(upos: &str) -> bool {
    matches!(upos, "NOUN" | "PROPN" | "NUM" | "ADJ" | "VERB" | "PRON")
}

fn relation(upos: &str, before_root: bool) -> &'static str {
    match upos {
        "DET" => "det",
        "ADP" => "case",
        "CCONJ" => "cc",
        "SCONJ" => "mark",
        "AUX" => "aux",
        "PART" => "advmod",
        "ADV" => "advmod",
        "ADJ" => "amod",
        "NUM" => "nummod",
        "PUNCT" => "punct",
        "VERB" => "conj",
        "PRON" | "NOUN" | "PROPN" if before_root => "nsubj",
        _ => "obj",
    }
}

/// Builds a shallow tree for one sentence. Returns `None` for sentences
/// without tokens.
pub fn shallow_parse(sentence_id: impl Into<String>, sentence: &str) -> Option<DependencyGraph> {
    let tokens = tokenize(sentence, TokenMode::Surface).tokens;
    if tokens.is_empty() {
        return None;
    }
    let tags: Vec<&'static str> = tokens.iter().enumerate().map(|(i, t)| guess_upos(t, i == 0)).collect();
    let root = tags
        .iter()
        .position(|t| *t == "VERB")
        .or_else(|| tags.iter().position(|t| *t == "AUX"))
        .or_else(|| tags.iter().position(|t| matches!(*t, "NOUN" | "PROPN")))
        .unwrap_or(0);

    let mut nodes = Vec::with_capacity(tokens.len());
    for (i, (tok, tag)) in tokens.iter().zip(&tags).enumerate() {
        if i == root {
            nodes.push(Node {
                form: tok.clone(),
                upos: tag.to_string(),
                deprel: "root".into(),
                head: 0,
            });
            continue;
        }
        let functional = matches!(*tag, "DET" | "ADP" | "ADJ" | "NUM" | "AUX" | "PART");
        // function words lean on the next content word before the root
        let head = if functional {
            let limit = if i < root { root } else { tokens.len() };
            (i + 1..limit).find(|&j| is_content(tags[j]) && j != root).unwrap_or(root)
        } else {
            root
        };
        let deprel = if *tag == "ADP" && head != root { "case" } else { relation(tag, i < root) };
        nodes.push(Node {
            form: tok.clone(),
            upos: tag.to_string(),
            deprel: deprel.into(),
            head: head + 1,
        });
    }
    // attachments only point at content words or the root, and content words
    // point at the root, so this is always a tree
    DependencyGraph::from_nodes(sentence_id, nodes, 0).ok()
}

/// Segments a text and builds one shallow tree per sentence.
pub fn shallow_parse_text(doc_id: &str, text: &str) -> Vec<DependencyGraph> {
    split_sentences(text)
        .iter()
        .enumerate()
        .filter_map(|(i, s)| shallow_parse(format!("{doc_id}-{i}"), s))
        .collect()
}
