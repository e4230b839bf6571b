//! Cosine dispersion shared by the semantic and syntactic metrics.
//!
//! Pairwise sums are accumulated row by row in index order. Rows may run on
//! any number of threads, but the final reduction is sequential so the result
//! is bit-identical for every thread count.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// Anything with a dot product and a norm.
pub trait CosineVector: Sync {
    fn dot(&self, other: &Self) -> f64;

    fn squared_norm(&self) -> f64 {
        self.dot(self)
    }

    /// Checks that two vectors live in the same space.
    fn compatible(&self, _other: &Self) -> Result<()> {
        Ok(())
    }
}

impl CosineVector for [f64] {
    fn dot(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::arg(format!(
                "dimension mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

impl CosineVector for Vec<f64> {
    fn dot(&self, other: &Self) -> f64 {
        self.as_slice().dot(other.as_slice())
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        self.as_slice().compatible(other.as_slice())
    }
}

/// Sparse vector with strictly increasing keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u64, f64)>,
}

impl SparseVector {
    /// Sorts by key and sums duplicates.
    pub fn from_entries(mut entries: Vec<(u64, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut out: Vec<(u64, f64)> = Vec::with_capacity(entries.len());
        for (k, v) in entries {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += v,
                _ => out.push((k, v)),
            }
        }
        Self { entries: out }
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn get(&self, key: u64) -> f64 {
        self.entries
            .binary_search_by_key(&key, |e| e.0)
            .map_or(0.0, |i| self.entries[i].1)
    }
}

impl CosineVector for SparseVector {
    fn dot(&self, other: &Self) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

fn distance_from_parts(dot: f64, nu: f64, nv: f64) -> f64 {
    // sqrt(nu * nv) rather than sqrt(nu) * sqrt(nv): exact for u == v
    (1.0 - dot / (nu * nv).sqrt()).clamp(0.0, 2.0)
}

/// `1 - cos(u, v)`, in `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    cosine_distance_of(u, v)
}

pub fn cosine_distance_of<V: CosineVector + ?Sized>(u: &V, v: &V) -> Result<f64> {
    u.compatible(v)?;
    let (nu, nv) = (u.squared_norm(), v.squared_norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::arg("cosine distance of a zero vector"));
    }
    Ok(distance_from_parts(u.dot(v), nu, nv))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DispersionConfig {
    pub sample_size: usize,
    pub repeats: usize,
    pub seed: u64,
    pub exhaustive: bool,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            sample_size: 2000,
            repeats: 5,
            seed: 0,
            exhaustive: false,
        }
    }
}

impl DispersionConfig {
    pub fn exhaustive() -> Self {
        Self {
            exhaustive: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 2 {
            return Err(Error::arg("dispersion sample_size must be >= 2"));
        }
        if self.repeats == 0 {
            return Err(Error::arg("dispersion repeats must be >= 1"));
        }
        Ok(())
    }
}

/// Mean pairwise cosine distance.
///
/// With more than `sample_size` vectors (and `exhaustive` off) each repeat
/// draws `sample_size` of them without replacement from its own seeded
/// stream, and the repeat means are averaged. Otherwise all pairs are used
/// once.
pub fn mean_pairwise_distance<V: CosineVector>(vectors: &[V], cfg: &DispersionConfig) -> Result<f64> {
    cfg.validate()?;
    let n = vectors.len();
    if n < 2 {
        return Err(Error::arg("mean pairwise distance needs at least two vectors"));
    }
    for v in &vectors[1..] {
        vectors[0].compatible(v)?;
    }
    let norms: Vec<f64> = vectors.iter().map(|v| v.squared_norm()).collect();
    if let Some(i) = norms.iter().position(|&x| x == 0.0 || !x.is_finite()) {
        return Err(Error::arg(format!("vector {i} has zero or non-finite norm")));
    }

    if cfg.exhaustive || n <= cfg.sample_size {
        let all: Vec<usize> = (0..n).collect();
        return Ok(mean_over(vectors, &norms, &all));
    }
    let mut acc = 0.0;
    for r in 0..cfg.repeats {
        let mut rng = seeding::stream_rng(cfg.seed, r as u64);
        let mut idx = index::sample(&mut rng, n, cfg.sample_size).into_vec();
        idx.sort_unstable();
        acc += mean_over(vectors, &norms, &idx);
    }
    Ok(acc / cfg.repeats as f64)
}

fn mean_over<V: CosineVector>(vectors: &[V], norms: &[f64], idx: &[usize]) -> f64 {
    let m = idx.len();
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|a| {
            let (ia, va) = (idx[a], &vectors[idx[a]]);
            idx[a + 1..]
                .iter()
                .map(|&ib| distance_from_parts(va.dot(&vectors[ib]), norms[ia], norms[ib]))
                .sum::<f64>()
        })
        .collect();
    let pairs = (m * (m - 1) / 2) as f64;
    rows.iter().sum::<f64>() / pairs
}

/// Halves a cosine distance and expresses it as a percentage.
pub fn report_scale(d: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&d) {
        return Err(Error::arg(format!("distance {d} outside [0, 2]")));
    }
    Ok(d / 2.0 * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        let u = [0.3, -1.2, 4.0];
        assert_eq!(cosine_distance(&u, &u).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[1.0, 2.0], &[-1.0, -2.0]).unwrap(), 2.0);
        assert!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_distance(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn sparse_matches_dense() {
        let a = SparseVector::from_entries(vec![(3, 1.0), (1, 2.0), (3, 1.0)]);
        let b = SparseVector::from_entries(vec![(1, 1.0), (7, 5.0)]);
        assert_eq!(a.get(3), 2.0);
        let dense_a = [0.0, 2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0];
        let dense_b = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0];
        assert_relative_eq!(
            cosine_distance_of(&a, &b).unwrap(),
            cosine_distance(&dense_a, &dense_b).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn pairwise_examples() {
        let cfg = DispersionConfig::default();
        let same = vec![vec![1.0, 2.0, 3.0]; 5];
        assert_eq!(mean_pairwise_distance(&same, &cfg).unwrap(), 0.0);
        let two = vec![vec![1.0, 0.5], vec![-0.2, 1.0]];
        assert_eq!(
            mean_pairwise_distance(&two, &cfg).unwrap(),
            cosine_distance(&two[0], &two[1]).unwrap()
        );
        assert!(mean_pairwise_distance(&two[..1], &cfg).is_err());
        let with_zero = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        assert!(mean_pairwise_distance(&with_zero, &cfg).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let v = vec![vec![1.0], vec![2.0]];
        let bad = DispersionConfig { repeats: 0, ..Default::default() };
        assert!(mean_pairwise_distance(&v, &bad).is_err());
        let bad = DispersionConfig { sample_size: 1, ..Default::default() };
        assert!(mean_pairwise_distance(&v, &bad).is_err());
    }

    #[test]
    fn report_scale_examples() {
        assert_relative_eq!(report_scale(0.932).unwrap(), 46.6, max_relative = 1e-12);
        assert_eq!(report_scale(0.0).unwrap(), 0.0);
        assert_eq!(report_scale(2.0).unwrap(), 100.0);
        assert!(report_scale(2.1).is_err());
        assert!(report_scale(-0.1).is_err());
    }

    fn vecs(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, dim).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(u in vecs(4), v in vecs(4), k in 0.01f64..100.0) {
            let d = cosine_distance(&u, &v).unwrap();
            prop_assert_eq!(d, cosine_distance(&v, &u).unwrap());
            let ku: Vec<f64> = u.iter().map(|x| x * k).collect();
            prop_assert!((d - cosine_distance(&ku, &v).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=2.0).contains(&d));
        }

        #[test]
        fn nonnegative_vectors_stay_below_one(u in proptest::collection::vec(0.0f64..5.0, 5), v in proptest::collection::vec(0.0f64..5.0, 5)) {
            prop_assume!(u.iter().sum::<f64>() > 0.0 && v.iter().sum::<f64>() > 0.0);
            prop_assert!(cosine_distance(&u, &v).unwrap() <= 1.0);
        }

        #[test]
        fn exhaustive_permutation_invariant(mut rows in proptest::collection::vec(vecs(3), 2..10), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let cfg = DispersionConfig::exhaustive();
            let a = mean_pairwise_distance(&rows, &cfg).unwrap();
            rows.shuffle(&mut seeding::stream_rng(seed, 0));
            prop_assert!((a - mean_pairwise_distance(&rows, &cfg).unwrap()).abs() < 1e-12);
        }
    }
}
