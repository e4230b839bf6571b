//! Lexical diversity: type-token ratio, distinct-n and Self-BLEU.
//!
//! All functions are generic over the token type so they work on string
//! tokens as well as interned ids.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenStats {
    /// Unique words.
    pub types: usize,
    /// Running words.
    pub tokens: usize,
}

pub fn token_stats<T: Eq + Hash>(seq: &[T]) -> TokenStats {
    pooled_token_stats(&[seq])
}

/// Type/token counts over several segments taken together.
pub fn pooled_token_stats<T: Eq + Hash, S: AsRef<[T]>>(segments: &[S]) -> TokenStats {
    let mut seen = std::collections::HashSet::new();
    let mut tokens = 0;
    for seg in segments {
        for t in seg.as_ref() {
            seen.insert(t);
            tokens += 1;
        }
    }
    TokenStats {
        types: seen.len(),
        tokens,
    }
}

pub fn ttr<T: Eq + Hash>(seq: &[T]) -> Result<f64> {
    pooled_ttr(&[seq])
}

/// TTR of the concatenation of `segments`.
pub fn pooled_ttr<T: Eq + Hash, S: AsRef<[T]>>(segments: &[S]) -> Result<f64> {
    let st = pooled_token_stats(segments);
    if st.tokens == 0 {
        return Err(Error::arg("type-token ratio of an empty sequence"));
    }
    Ok(st.types as f64 / st.tokens as f64)
}

pub fn distinct_n<T: Eq + Hash>(seq: &[T], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("distinct-n needs n >= 1"));
    }
    if seq.len() < n {
        return Err(Error::arg(format!(
            "distinct-{n} of a sequence with {} tokens",
            seq.len()
        )));
    }
    pooled_distinct_n(&[seq], n)
}

/// Unique n-grams over total n-grams, where n-grams never span two segments.
/// Segments shorter than `n` contribute nothing.
pub fn pooled_distinct_n<T: Eq + Hash, S: AsRef<[T]>>(segments: &[S], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("distinct-n needs n >= 1"));
    }
    let mut seen = std::collections::HashSet::new();
    let mut total = 0usize;
    for seg in segments {
        for w in seg.as_ref().windows(n) {
            seen.insert(w);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::arg(format!("no {n}-grams to count")));
    }
    Ok(seen.len() as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_n: usize,
    pub weights: Vec<f64>,
    pub brevity_penalty: bool,
}

impl BleuConfig {
    /// Uniform weights over orders `1..=max_n`, brevity penalty on.
    pub fn uniform(max_n: usize) -> Self {
        let w = 1.0 / max_n.max(1) as f64;
        Self {
            max_n,
            weights: vec![w; max_n],
            brevity_penalty: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 {
            return Err(Error::arg("BLEU max_n must be >= 1"));
        }
        if self.weights.len() != self.max_n {
            return Err(Error::arg("BLEU needs one weight per order"));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > 1e-9 || self.weights.iter().any(|w| *w < 0.0) {
            return Err(Error::arg("BLEU weights must be non-negative and sum to 1"));
        }
        Ok(())
    }
}

fn ngram_counts<T: Eq + Hash>(seq: &[T], n: usize) -> HashMap<&[T], u32> {
    let mut m = HashMap::new();
    for w in seq.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Reference length closest to `hyp_len`; ties go to the shorter one.
fn closest_ref_len(hyp_len: usize, ref_lens: impl Iterator<Item = usize>) -> usize {
    ref_lens
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

fn combine(log_precisions: &[f64], weights: &[f64]) -> f64 {
    log_precisions
        .iter()
        .zip(weights)
        .map(|(lp, w)| lp * w)
        .sum::<f64>()
        .exp()
}

/// Sentence BLEU: clipped modified n-gram precisions combined by a weighted
/// geometric mean, times the brevity penalty. Any order with zero matches
/// yields 0 (no smoothing).
pub fn bleu<T: Eq + Hash, R: AsRef<[T]>>(hypothesis: &[T], references: &[R], cfg: &BleuConfig) -> Result<f64> {
    cfg.validate()?;
    if references.is_empty() {
        return Err(Error::arg("BLEU needs at least one reference"));
    }
    if hypothesis.is_empty() {
        log::debug!("BLEU of an empty hypothesis is 0");
        return Ok(0.0);
    }
    let mut logs = Vec::with_capacity(cfg.max_n);
    for n in 1..=cfg.max_n {
        if hypothesis.len() < n {
            return Ok(0.0);
        }
        let hyp = ngram_counts(hypothesis, n);
        let mut max_ref: HashMap<&[T], u32> = HashMap::new();
        for r in references {
            for (g, c) in ngram_counts(r.as_ref(), n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        let clipped: u32 = hyp
            .iter()
            .map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        if clipped == 0 {
            return Ok(0.0);
        }
        let total = (hypothesis.len() + 1 - n) as f64;
        logs.push((clipped as f64 / total).ln());
    }
    let bp = if cfg.brevity_penalty {
        let r = closest_ref_len(hypothesis.len(), references.iter().map(|r| r.as_ref().len()));
        brevity_penalty(hypothesis.len(), r)
    } else {
        1.0
    };
    Ok((bp * combine(&logs, &cfg.weights)).clamp(0.0, 1.0))
}

/// Largest and second-largest count of one n-gram across sentences, plus the
/// owner of the largest.
#[derive(Clone, Copy)]
struct Top2 {
    best: u32,
    owner: usize,
    second: u32,
}

impl Top2 {
    fn push(&mut self, count: u32, idx: usize) {
        if count > self.best {
            self.second = self.best;
            self.best = count;
            self.owner = idx;
        } else if count > self.second {
            self.second = count;
        }
    }

    fn excluding(&self, idx: usize) -> u32 {
        if self.owner == idx {
            self.second
        } else {
            self.best
        }
    }
}

/// Mean BLEU of every sentence against all the others.
///
/// Clipping counts are taken from a per-n-gram top-two table so that the
/// "all other sentences" maximum costs O(1) per n-gram.
pub fn self_bleu<T: Eq + Hash + Sync, S: AsRef<[T]> + Sync>(sentences: &[S], cfg: &BleuConfig) -> Result<f64> {
    cfg.validate()?;
    let m = sentences.len();
    if m < 2 {
        return Err(Error::arg("Self-BLEU needs at least two sentences"));
    }
    let per_order: Vec<Vec<HashMap<&[T], u32>>> = (1..=cfg.max_n)
        .map(|n| sentences.iter().map(|s| ngram_counts(s.as_ref(), n)).collect())
        .collect();
    let tables: Vec<HashMap<&[T], Top2>> = per_order
        .iter()
        .map(|counts| {
            let mut t: HashMap<&[T], Top2> = HashMap::new();
            for (i, c) in counts.iter().enumerate() {
                for (g, k) in c {
                    t.entry(*g)
                        .or_insert(Top2 {
                            best: 0,
                            owner: usize::MAX,
                            second: 0,
                        })
                        .push(*k, i);
                }
            }
            t
        })
        .collect();
    let mut lengths: BTreeMap<usize, usize> = BTreeMap::new();
    for s in sentences {
        *lengths.entry(s.as_ref().len()).or_insert(0) += 1;
    }

    let scores: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let hyp_len = sentences[i].as_ref().len();
            if hyp_len == 0 {
                return 0.0;
            }
            let mut logs = Vec::with_capacity(cfg.max_n);
            for (o, n) in (1..=cfg.max_n).enumerate() {
                if hyp_len < n {
                    return 0.0;
                }
                let clipped: u32 = per_order[o][i]
                    .iter()
                    .map(|(g, c)| (*c).min(tables[o][g].excluding(i)))
                    .sum();
                if clipped == 0 {
                    return 0.0;
                }
                logs.push((clipped as f64 / (hyp_len + 1 - n) as f64).ln());
            }
            let bp = if cfg.brevity_penalty {
                let r = closest_other_len(&lengths, hyp_len);
                brevity_penalty(hyp_len, r)
            } else {
                1.0
            };
            (bp * combine(&logs, &cfg.weights)).clamp(0.0, 1.0)
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / m as f64)
}

fn closest_other_len(lengths: &BTreeMap<usize, usize>, own: usize) -> usize {
    if lengths.get(&own).copied().unwrap_or(0) >= 2 {
        return own;
    }
    let below = lengths.range(..own).next_back().map(|(l, _)| *l);
    let above = lengths.range(own + 1..).next().map(|(l, _)| *l);
    closest_ref_len(own, below.into_iter().chain(above))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfBleuConfig {
    /// BLEU orders whose Self-BLEU values are averaged.
    pub orders: Vec<usize>,
    /// Sentences are subsampled down to this many unless `exhaustive`.
    pub pool_size: usize,
    pub seed: u64,
    pub exhaustive: bool,
}

impl Default for SelfBleuConfig {
    fn default() -> Self {
        Self {
            orders: vec![2, 3],
            pool_size: 5000,
            seed: 0,
            exhaustive: false,
        }
    }
}

/// `1 - mean(Self-BLEU-n for n in orders)`; higher means more diverse.
pub fn self_bleu_diversity<T: Eq + Hash + Sync, S: AsRef<[T]> + Sync>(
    sentences: &[S],
    cfg: &SelfBleuConfig,
) -> Result<f64> {
    if sentences.len() < 2 {
        return Err(Error::arg("Self-BLEU diversity needs at least two sentences"));
    }
    if cfg.orders.is_empty() {
        return Err(Error::arg("Self-BLEU diversity needs at least one order"));
    }
    if !cfg.exhaustive && cfg.pool_size < 2 {
        return Err(Error::arg("Self-BLEU pool size must be >= 2"));
    }
    let pool: Vec<&[T]> = if !cfg.exhaustive && sentences.len() > cfg.pool_size {
        let mut rng = seeding::stream_rng(cfg.seed, 0);
        let mut idx = index::sample(&mut rng, sentences.len(), cfg.pool_size).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| sentences[i].as_ref()).collect()
    } else {
        sentences.iter().map(|s| s.as_ref()).collect()
    };
    let mut acc = 0.0;
    for &n in &cfg.orders {
        acc += self_bleu(&pool, &BleuConfig::uniform(n))?;
    }
    Ok((1.0 - acc / cfg.orders.len() as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn s(text: &str) -> Vec<&str> {
        text.split_whitespace().collect()
    }

    #[test]
    fn token_stats_examples() {
        assert_eq!(token_stats(&s("a b a c")), TokenStats { types: 3, tokens: 4 });
        assert_eq!(token_stats::<&str>(&[]), TokenStats { types: 0, tokens: 0 });
        assert_eq!(token_stats(&s("a a a")), TokenStats { types: 1, tokens: 3 });
    }

    #[test]
    fn ttr_examples() {
        assert_eq!(ttr(&s("a b a c")).unwrap(), 0.75);
        assert_eq!(ttr(&s("a b c d")).unwrap(), 1.0);
        assert_eq!(ttr(&s("a a a a")).unwrap(), 0.25);
        assert!(ttr::<&str>(&[]).is_err());
    }

    #[test]
    fn distinct_examples() {
        assert_relative_eq!(distinct_n(&s("the cat the cat"), 2).unwrap(), 2.0 / 3.0);
        assert_eq!(distinct_n(&s("a b a c"), 1).unwrap(), 0.75);
        assert_eq!(distinct_n(&s("a b c d"), 3).unwrap(), 1.0);
        assert!(distinct_n(&s("a b"), 3).is_err());
    }

    #[test]
    fn pooled_distinct_does_not_cross_segments() {
        let segs = vec![s("a b"), s("c d")];
        // bigrams: (a b), (c d); (b c) must not be counted
        assert_eq!(pooled_distinct_n(&segs, 2).unwrap(), 1.0);
        assert_eq!(pooled_ttr(&segs).unwrap(), 1.0);
    }

    #[test]
    fn bleu_hand_computed() {
        // p1 = 5/6, p2 = 3/5, BP = 1 -> sqrt(1/2)
        let hyp = s("the cat sat on the mat");
        let r = vec![s("the cat is on the mat")];
        assert_relative_eq!(bleu(&hyp, &r, &BleuConfig::uniform(2)).unwrap(), 0.5f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn bleu_identity_and_zero() {
        let h = s("a b c d");
        assert_relative_eq!(bleu(&h, std::slice::from_ref(&h), &BleuConfig::uniform(3)).unwrap(), 1.0);
        assert_eq!(bleu(&h, &[s("e f g h")], &BleuConfig::uniform(2)).unwrap(), 0.0);
        assert_eq!(bleu::<&str, Vec<&str>>(&[], std::slice::from_ref(&h), &BleuConfig::uniform(2)).unwrap(), 0.0);
        assert!(bleu::<&str, Vec<&str>>(&h, &[], &BleuConfig::uniform(2)).is_err());
    }

    #[test]
    fn bleu_brevity_penalty() {
        // hyp of 2 tokens vs reference of 4: BP = exp(1 - 4/2)
        let v = bleu(&s("a b"), &[s("a b c d")], &BleuConfig::uniform(1)).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn bleu_config_validation() {
        let mut c = BleuConfig::uniform(2);
        c.weights = vec![0.7, 0.7];
        assert!(c.validate().is_err());
        assert!(BleuConfig::uniform(0).validate().is_err());
    }

    #[test]
    fn self_bleu_matches_naive_loop() {
        let sents = vec![s("the cat sat on the mat"), s("the dog sat on the log"), s("a cat is here"), s("the cat is on the mat")];
        for n in 1..=3 {
            let cfg = BleuConfig::uniform(n);
            let naive: f64 = (0..sents.len())
                .map(|i| {
                    let refs: Vec<_> = sents.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r.clone()).collect();
                    bleu(&sents[i], &refs, &cfg).unwrap()
                })
                .sum::<f64>()
                / sents.len() as f64;
            assert_relative_eq!(self_bleu(&sents, &cfg).unwrap(), naive, max_relative = 1e-12);
        }
    }

    #[test]
    fn self_bleu_diversity_extremes() {
        let cfg = SelfBleuConfig::default();
        let same = vec![s("the cat sat down"); 4];
        assert_eq!(self_bleu_diversity(&same, &cfg).unwrap(), 0.0);
        let disjoint = vec![s("a b c"), s("d e f"), s("g h i")];
        assert_eq!(self_bleu_diversity(&disjoint, &cfg).unwrap(), 1.0);
        assert!(self_bleu_diversity(&[s("a b c")], &cfg).is_err());
    }

    #[test]
    fn self_bleu_pool_is_seeded() {
        let sents: Vec<Vec<String>> = (0..60).map(|i| vec![format!("w{}", i % 7), format!("w{}", i % 5), format!("w{}", i % 3)]).collect();
        let cfg = SelfBleuConfig { pool_size: 20, seed: 7, ..Default::default() };
        let a = self_bleu_diversity(&sents, &cfg).unwrap();
        assert_eq!(a, self_bleu_diversity(&sents, &cfg).unwrap());
    }

    proptest! {
        #[test]
        fn ttr_equals_distinct_1(seq in proptest::collection::vec(0u8..12, 1..60)) {
            prop_assert_eq!(ttr(&seq).unwrap(), distinct_n(&seq, 1).unwrap());
        }

        #[test]
        fn ttr_permutation_invariant(mut seq in proptest::collection::vec(0u8..12, 1..40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let before = ttr(&seq).unwrap();
            seq.shuffle(&mut crate::seeding::stream_rng(seed, 0));
            prop_assert_eq!(before, ttr(&seq).unwrap());
        }

        #[test]
        fn bleu_bounded(h in proptest::collection::vec(0u8..6, 0..12), r in proptest::collection::vec(proptest::collection::vec(0u8..6, 0..12), 1..4)) {
            let v = bleu(&h, &r, &BleuConfig::uniform(2)).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn bleu_one_when_hypothesis_among_references(h in proptest::collection::vec(0u8..6, 3..12), mut r in proptest::collection::vec(proptest::collection::vec(0u8..6, 0..12), 0..4)) {
            r.push(h.clone());
            // own length is among the references, so BP = 1
            let v = bleu(&h, &r, &BleuConfig::uniform(3)).unwrap();
            prop_assert!((v - 1.0).abs() < 1e-12);
        }

        #[test]
        fn duplicating_cannot_increase_diversity(sents in proptest::collection::vec(proptest::collection::vec(0u8..8, 1..8), 2..8)) {
            let cfg = SelfBleuConfig { exhaustive: true, ..Default::default() };
            let base = self_bleu_diversity(&sents, &cfg).unwrap();
            let doubled: Vec<_> = sents.iter().chain(sents.iter()).cloned().collect();
            prop_assert!(self_bleu_diversity(&doubled, &cfg).unwrap() <= base + 1e-12);
        }

        #[test]
        fn self_bleu_permutation_invariant(mut sents in proptest::collection::vec(proptest::collection::vec(0u8..8, 1..8), 2..8), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let cfg = SelfBleuConfig { exhaustive: true, ..Default::default() };
            let a = self_bleu_diversity(&sents, &cfg).unwrap();
            sents.shuffle(&mut crate::seeding::stream_rng(seed, 1));
            prop_assert!((a - self_bleu_diversity(&sents, &cfg).unwrap()).abs() < 1e-12);
        }
    }
}
