//! Cross-domain similarity local scaling.
//!
//! For a mapped source vector `Wx` and a target vector `y`,
//!
//! ```text
//! csls(Wx, y) = 2 cos(Wx, y) - r_tgt(Wx) - r_src(y)
//! ```
//!
//! where `r_tgt(Wx)` is the mean cosine between `Wx` and its `k` nearest
//! target vectors and `r_src(y)` the mean cosine between `y` and its `k`
//! nearest mapped source vectors. Hubs (vectors close to everything) get a
//! large penalty, which makes retrieval less asymmetric.
//!
//! All neighbor searches are exact full scans, done in row blocks so that the
//! full `n x m` similarity table is never materialized.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::embedding::{DictEntry, Direction, EmbeddingSet, InducedDictionary};
use crate::geometry::MappingMatrix;
use crate::matrix::{dot, Matrix};
use crate::{Error, Result};

pub const DEFAULT_K: usize = 10;

const BLOCK_ROWS: usize = 256;

/// Precomputed neighborhood penalties over a mapped source set and a target
/// set. Both matrices must have unit-norm rows, so that dot products are
/// cosines.
#[derive(Clone, Debug)]
pub struct CslsIndex<'a> {
    mapped_src: Matrix,
    tgt: &'a Matrix,
    k: usize,
    r_src: Vec<f64>,
    r_tgt: Vec<f64>,
}

/// A retrieved (source rank, target rank) pair with its CSLS score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredPair {
    pub src: usize,
    pub tgt: usize,
    pub score: f64,
}

impl<'a> CslsIndex<'a> {
    /// Builds the index over unit-norm `mapped_src` rows and unit-norm `tgt` rows.
    pub fn build(mapped_src: Matrix, tgt: &'a Matrix, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig {
                field: "csls_k",
                reason: "must be positive",
            });
        }
        if mapped_src.cols() != tgt.cols() {
            return Err(Error::DimensionMismatch {
                expected: mapped_src.cols(),
                found: tgt.cols(),
            });
        }
        for available in [tgt.rows(), mapped_src.rows()] {
            if k > available {
                return Err(Error::NeighborhoodTooLarge { k, available });
            }
        }
        debug_assert!(unit_rows(&mapped_src) && unit_rows(tgt), "rows must be unit-normalized");

        let partials = map_blocks(mapped_src.rows(), |rows| {
            let sims = block_similarities(&mapped_src, rows.clone(), tgt);
            let mut row_means = Vec::with_capacity(rows.len());
            let mut col_top: Vec<TopValues> = (0..tgt.rows()).map(|_| TopValues::new(k)).collect();
            for r in sims.iter_rows() {
                let mut top = TopValues::new(k);
                for (j, &s) in r.iter().enumerate() {
                    top.offer(s);
                    col_top[j].offer(s);
                }
                row_means.push(top.mean());
            }
            (row_means, col_top)
        });

        let mut r_src = Vec::with_capacity(mapped_src.rows());
        let mut col_top: Vec<TopValues> = (0..tgt.rows()).map(|_| TopValues::new(k)).collect();
        for (means, tops) in partials {
            r_src.extend(means);
            for (acc, part) in col_top.iter_mut().zip(tops) {
                for v in part.values {
                    acc.offer(v);
                }
            }
        }
        let r_tgt = col_top.iter().map(TopValues::mean).collect();

        Ok(CslsIndex {
            mapped_src,
            tgt,
            k,
            r_src,
            r_tgt,
        })
    }

    /// Maps `src` through `w`, renormalizes the mapped rows and builds the
    /// index against `tgt`.
    pub fn for_mapping(w: &MappingMatrix, src: &Matrix, tgt: &'a Matrix, k: usize) -> Result<Self> {
        if w.dim() != src.cols() {
            return Err(Error::DimensionMismatch {
                expected: w.dim(),
                found: src.cols(),
            });
        }
        let mut mapped = w.apply_rows(src);
        mapped.normalize_rows();
        CslsIndex::build(mapped, tgt, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_src(&self) -> usize {
        self.mapped_src.rows()
    }

    pub fn n_tgt(&self) -> usize {
        self.tgt.rows()
    }

    pub fn mapped_src(&self) -> &Matrix {
        &self.mapped_src
    }

    /// Mean similarity of each mapped source row to its `k` nearest targets.
    pub fn r_src(&self) -> &[f64] {
        &self.r_src
    }

    /// Mean similarity of each target row to its `k` nearest mapped sources.
    pub fn r_tgt(&self) -> &[f64] {
        &self.r_tgt
    }

    pub fn score(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.n_src() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n_src(),
            });
        }
        if j >= self.n_tgt() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.n_tgt(),
            });
        }
        let cos = dot(self.mapped_src.row(i), self.tgt.row(j));
        Ok(2.0 * cos - self.r_src[i] - self.r_tgt[j])
    }

    /// CSLS scores of source row `i` against every target.
    pub fn row_scores(&self, i: usize) -> Vec<f64> {
        let q = self.mapped_src.row(i);
        self.tgt
            .iter_rows()
            .zip(&self.r_tgt)
            .map(|(y, r)| 2.0 * dot(q, y) - self.r_src[i] - r)
            .collect()
    }

    /// The full `n_src x n_tgt` score table. Intended for small instances.
    pub fn score_matrix(&self) -> Matrix {
        let mut m = self.mapped_src.matmul_t(self.tgt);
        for i in 0..m.rows() {
            let ri = self.r_src[i];
            for (v, rj) in m.row_mut(i).iter_mut().zip(&self.r_tgt) {
                *v = 2.0 * *v - ri - rj;
            }
        }
        m
    }

    /// The `n` best targets for source row `i`, best first. Equal scores are
    /// ordered by ascending target rank.
    pub fn top_targets(&self, i: usize, n: usize) -> Vec<ScoredPair> {
        let mut best = TopIndexed::new(n);
        for (j, s) in self.row_scores(i).into_iter().enumerate() {
            best.offer(s, j);
        }
        best.entries
            .into_iter()
            .map(|(score, tgt)| ScoredPair { src: i, tgt, score })
            .collect()
    }

    /// Per-source CSLS argmax, optionally filtered to mutual nearest
    /// neighbors, sorted by descending score and capped at `top_pairs`.
    ///
    /// Ties go to the lower rank (the more frequent word).
    pub fn induce_pairs(&self, top_pairs: usize, mutual_only: bool) -> Result<Vec<ScoredPair>> {
        if top_pairs == 0 {
            return Err(Error::InvalidConfig {
                field: "top_pairs",
                reason: "must be positive",
            });
        }
        let n_tgt = self.n_tgt();
        let partials = map_blocks(self.n_src(), |rows| {
            let sims = block_similarities(&self.mapped_src, rows.clone(), self.tgt);
            let mut row_best = Vec::with_capacity(rows.len());
            // best source for each target under 2 cos - r_src
            let mut col_best = vec![(f64::NEG_INFINITY, usize::MAX); n_tgt];
            for (off, r) in sims.iter_rows().enumerate() {
                let i = rows.start + off;
                let mut best = (f64::NEG_INFINITY, 0usize);
                for (j, &s) in r.iter().enumerate() {
                    let fwd = 2.0 * s - self.r_tgt[j];
                    if fwd > best.0 {
                        best = (fwd, j);
                    }
                    let back = 2.0 * s - self.r_src[i];
                    if back > col_best[j].0 {
                        col_best[j] = (back, i);
                    }
                }
                row_best.push((best.1, best.0 - self.r_src[i]));
            }
            (row_best, col_best)
        });

        let mut row_best = Vec::with_capacity(self.n_src());
        let mut col_best = vec![(f64::NEG_INFINITY, usize::MAX); n_tgt];
        for (rows, cols) in partials {
            row_best.extend(rows);
            // blocks arrive in ascending source order, so strict `>` keeps the
            // lowest source rank on ties
            for (acc, c) in col_best.iter_mut().zip(cols) {
                if c.0 > acc.0 {
                    *acc = c;
                }
            }
        }

        let mut pairs: Vec<ScoredPair> = row_best
            .into_iter()
            .enumerate()
            .filter(|&(i, (j, _))| !mutual_only || col_best[j].1 == i)
            .map(|(i, (j, score))| ScoredPair { src: i, tgt: j, score })
            .collect();
        pairs.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.src.cmp(&b.src)));
        pairs.truncate(top_pairs);
        Ok(pairs)
    }

    /// [`CslsIndex::induce_pairs`] rendered as words. Row `i` of the index must
    /// correspond to `src` rank `i` (and likewise for targets).
    pub fn induce_dictionary(
        &self,
        src: &EmbeddingSet,
        tgt: &EmbeddingSet,
        top_pairs: usize,
        mutual_only: bool,
    ) -> Result<InducedDictionary> {
        let pairs = self.induce_pairs(top_pairs, mutual_only)?;
        Ok(pairs_to_dictionary(&pairs, src, tgt))
    }
}

pub(crate) fn pairs_to_dictionary(pairs: &[ScoredPair], src: &EmbeddingSet, tgt: &EmbeddingSet) -> InducedDictionary {
    let entries = pairs
        .iter()
        .map(|p| DictEntry {
            source: src.word(p.src).into(),
            target: tgt.word(p.tgt).into(),
            score: p.score,
        })
        .collect();
    InducedDictionary::new(Direction::between(src, tgt), entries)
}

fn unit_rows(m: &Matrix) -> bool {
    m.iter_rows().all(|r| libm::fabs(dot(r, r) - 1.0) < 1e-6)
}

fn block_similarities(a: &Matrix, rows: Range<usize>, b: &Matrix) -> Matrix {
    let idx: Vec<usize> = rows.collect();
    a.select_rows(&idx).matmul_t(b)
}

fn block_ranges(n: usize) -> Vec<Range<usize>> {
    (0..n).step_by(BLOCK_ROWS).map(|s| s..(s + BLOCK_ROWS).min(n)).collect()
}

/// Runs `f` over row blocks of `0..n`, results in block order.
#[cfg(feature = "parallel")]
fn map_blocks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    block_ranges(n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_blocks<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(Range<usize>) -> T,
{
    block_ranges(n).into_iter().map(f).collect()
}

/// The `k` largest values seen so far, kept sorted descending.
#[derive(Clone, Debug)]
struct TopValues {
    k: usize,
    values: Vec<f64>,
}

impl TopValues {
    fn new(k: usize) -> Self {
        TopValues {
            k,
            values: Vec::with_capacity(k),
        }
    }

    #[inline]
    fn offer(&mut self, v: f64) {
        if self.values.len() == self.k {
            if v <= self.values[self.k - 1] {
                return;
            }
            self.values.pop();
        }
        let pos = self.values.partition_point(|&x| x >= v);
        self.values.insert(pos, v);
    }

    fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// The `n` best (score, index) entries; ties keep the index offered first.
struct TopIndexed {
    n: usize,
    entries: Vec<(f64, usize)>,
}

impl TopIndexed {
    fn new(n: usize) -> Self {
        TopIndexed {
            n,
            entries: Vec::with_capacity(n + 1),
        }
    }

    fn offer(&mut self, score: f64, idx: usize) {
        if self.n == 0 {
            return;
        }
        if self.entries.len() == self.n && score <= self.entries[self.n - 1].0 {
            return;
        }
        let pos = self.entries.partition_point(|&(s, _)| s >= score);
        self.entries.insert(pos, (score, idx));
        self.entries.truncate(self.n);
    }
}
