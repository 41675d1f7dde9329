//! Monolingual embedding sets and bilingual dictionaries.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::matrix::{norm, Matrix};
use crate::{Error, Result};

/// Vocabulary plus vectors for one language.
///
/// Words are kept in frequency-rank order: index 0 is the most frequent word.
/// Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    vectors: Matrix,
    lang: String,
}

impl EmbeddingSet {
    /// Rejects duplicate words, non-finite components, and a word count that
    /// differs from the row count.
    pub fn new(words: Vec<String>, vectors: Matrix, lang: impl Into<String>) -> Result<Self> {
        if words.len() != vectors.rows() {
            return Err(Error::DimensionMismatch {
                expected: words.len(),
                found: vectors.rows(),
            });
        }
        if !vectors.is_finite() {
            return Err(Error::NonFinite {
                context: "embedding vectors",
            });
        }
        let mut index = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DuplicateWord { word: w.clone() });
            }
        }
        Ok(EmbeddingSet {
            words,
            index,
            vectors,
            lang: lang.into(),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, rank: usize) -> &str {
        &self.words[rank]
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, rank: usize) -> &[f64] {
        self.vectors.row(rank)
    }

    /// Frequency rank of `word`, if it is in the vocabulary.
    pub fn rank_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Keeps only the `k` most frequent words.
    pub fn truncated(&self, k: usize) -> EmbeddingSet {
        let k = k.min(self.len());
        let idx: Vec<usize> = (0..k).collect();
        EmbeddingSet {
            words: self.words[..k].to_vec(),
            index: self
                .index
                .iter()
                .filter(|(_, &i)| i < k)
                .map(|(w, &i)| (w.clone(), i))
                .collect(),
            vectors: self.vectors.select_rows(&idx),
            lang: self.lang.clone(),
        }
    }

    /// Rescales every vector to unit length, keeping word order.
    pub fn normalize(&self) -> Result<EmbeddingSet> {
        for (i, row) in self.vectors.iter_rows().enumerate() {
            if norm(row) == 0.0 {
                return Err(Error::ZeroNorm {
                    word: self.words[i].clone(),
                });
            }
        }
        let mut vectors = self.vectors.clone();
        vectors.normalize_rows();
        Ok(EmbeddingSet {
            words: self.words.clone(),
            index: self.index.clone(),
            vectors,
            lang: self.lang.clone(),
        })
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.vectors.iter_rows().all(|r| libm::fabs(norm(r) - 1.0) <= tol)
    }
}

/// Which way a dictionary or evaluation runs, named by language tags.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Direction {
    pub source: String,
    pub target: String,
}

impl Direction {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Direction {
            source: source.into(),
            target: target.into(),
        }
    }

    pub fn between(src: &EmbeddingSet, tgt: &EmbeddingSet) -> Self {
        Direction::new(src.lang(), tgt.lang())
    }

    pub fn reversed(&self) -> Self {
        Direction::new(self.target.clone(), self.source.clone())
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.target)
    }
}

/// Anchor pairs of (source word, target word). A source word may appear with
/// several targets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedDictionary {
    pairs: Vec<(String, String)>,
}

/// Seed pairs mapped to vocabulary ranks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResolvedPairs {
    pub pairs: Vec<(usize, usize)>,
    /// Pairs with at least one out-of-vocabulary side.
    pub dropped: usize,
}

impl SeedDictionary {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        SeedDictionary { pairs }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn push(&mut self, source: impl Into<String>, target: impl Into<String>) {
        self.pairs.push((source.into(), target.into()));
    }

    /// Resolves words to ranks, keeping pair order and counting the pairs that
    /// cannot be resolved.
    pub fn resolve(&self, src: &EmbeddingSet, tgt: &EmbeddingSet) -> ResolvedPairs {
        let mut out = ResolvedPairs::default();
        for (s, t) in &self.pairs {
            match (src.rank_of(s), tgt.rank_of(t)) {
                (Some(i), Some(j)) => out.pairs.push((i, j)),
                _ => out.dropped += 1,
            }
        }
        out
    }

    /// The dictionary with source and target swapped, for the reverse direction.
    pub fn reversed(&self) -> SeedDictionary {
        SeedDictionary {
            pairs: self.pairs.iter().map(|(s, t)| (t.clone(), s.clone())).collect(),
        }
    }
}

impl FromIterator<(String, String)> for SeedDictionary {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        SeedDictionary {
            pairs: iter.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DictEntry {
    pub source: String,
    pub target: String,
    pub score: f64,
}

/// A dictionary produced by retrieval, sorted by descending score with no
/// repeated (source, target) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedDictionary {
    direction: Direction,
    entries: Vec<DictEntry>,
}

impl InducedDictionary {
    /// Sorts `entries` by descending score (stable for equal scores) and keeps
    /// the first occurrence of every (source, target) pair.
    pub fn new(direction: Direction, mut entries: Vec<DictEntry>) -> Self {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score));
        let mut seen = alloc::collections::BTreeSet::new();
        entries.retain(|e| seen.insert((e.source.clone(), e.target.clone())));
        InducedDictionary { direction, entries }
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    pub fn entries(&self) -> &[DictEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_seed(&self) -> SeedDictionary {
        self.entries
            .iter()
            .map(|e| (e.source.clone(), e.target.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn set(words: &[&str], rows: &[[f64; 2]]) -> EmbeddingSet {
        EmbeddingSet::new(
            words.iter().map(|w| w.to_string()).collect(),
            Matrix::from_rows(rows),
            "xx",
        )
        .unwrap()
    }

    #[test]
    fn normalize_examples() {
        let s = set(&["a", "b"], &[[3.0, 4.0], [1.0, 0.0]]).normalize().unwrap();
        assert_eq!(s.vector(0), &[0.6, 0.8]);
        assert_eq!(s.vector(1), &[1.0, 0.0]);
        assert_eq!(s.words(), &["a", "b"]);
        assert!(s.is_normalized(1e-12));
    }

    #[test]
    fn normalize_names_zero_word() {
        let err = set(&["a", "zero"], &[[1.0, 0.0], [0.0, 0.0]]).normalize().unwrap_err();
        assert_eq!(err, Error::ZeroNorm { word: "zero".into() });
    }

    #[test]
    fn rejects_duplicates_and_mismatch() {
        let err =
            EmbeddingSet::new(vec!["a".into(), "a".into()], Matrix::from_rows(&[[1.0], [2.0]]), "xx").unwrap_err();
        assert_eq!(err, Error::DuplicateWord { word: "a".into() });
        assert!(EmbeddingSet::new(vec!["a".into()], Matrix::zeros(2, 1), "xx").is_err());
        assert!(EmbeddingSet::new(vec!["a".into()], Matrix::from_rows(&[[f64::INFINITY]]), "xx").is_err());
    }

    #[test]
    fn truncation_keeps_most_frequent() {
        let s = set(&["a", "b", "c"], &[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let t = s.truncated(2);
        assert_eq!(t.words(), &["a", "b"]);
        assert_eq!(t.rank_of("c"), None);
        assert_eq!(t.rank_of("b"), Some(1));
    }

    #[test]
    fn resolve_counts_dropped_pairs() {
        let s = set(&["a", "b"], &[[1.0, 0.0], [0.0, 1.0]]);
        let t = set(&["x", "y"], &[[1.0, 0.0], [0.0, 1.0]]);
        let d: SeedDictionary = [("a", "x"), ("q", "y"), ("b", "y"), ("a", "y")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let r = d.resolve(&s, &t);
        assert_eq!(r.pairs, [(0, 0), (1, 1), (0, 1)]);
        assert_eq!(r.dropped, 1);
    }

    #[test]
    fn induced_dictionary_sorts_and_dedups() {
        let e = |s: &str, t: &str, score| DictEntry {
            source: s.into(),
            target: t.into(),
            score,
        };
        let d = InducedDictionary::new(
            Direction::new("a", "b"),
            vec![e("x", "y", 0.1), e("u", "v", 0.5), e("x", "y", 0.3)],
        );
        assert_eq!(d.entries(), &[e("u", "v", 0.5), e("x", "y", 0.3)]);
        assert_eq!(d.direction().to_string(), "a-b");
    }
}
