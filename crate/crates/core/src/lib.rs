//! Linguistic diversity metrics for text corpora, and a desk-scale
//! simulation of language models recursively trained on their own output.
//!
//! Lexical diversity ([`lexical`]), syntactic diversity over dependency trees
//! with Weisfeiler-Lehman subtree features ([`syntactic`]) and semantic
//! diversity over sentence embeddings ([`semantic`]) all report percentages.
//! [`ngram_lm`] and [`recursion`] provide the generator and the chain.

pub mod corpus;
pub mod dispersion;
pub mod error;
pub mod lexical;
pub mod ngram_lm;
pub mod probe;
pub mod recursion;
pub mod report;
pub mod seeding;
pub mod semantic;
pub mod simulation;
pub mod syntactic;

pub use corpus::{Corpus, Document, TaskKind, TaskProfile};
pub use dispersion::DispersionConfig;
pub use error::{Error, Result};
pub use lexical::SelfBleuConfig;
pub use ngram_lm::{DecodingConfig, NGramModel};
pub use recursion::{run_chain, IterationRecord, RecursionConfig};
pub use report::{DiversityMetrics, DiversityReport, MetricSettings};
pub use syntactic::{DependencyGraph, WlConfig};
