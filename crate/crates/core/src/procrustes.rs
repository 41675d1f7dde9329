//! Seed-dictionary alignment: solve orthogonal Procrustes on anchor pairs, then
//! regenerate the anchors from mutual CSLS neighbors under the new mapping and
//! solve again.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::csls::{self, CslsIndex};
use crate::embedding::{EmbeddingSet, InducedDictionary, SeedDictionary};
use crate::geometry::{procrustes_solve, MappingMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProcrustesConfig {
    /// Rounds of (solve, regenerate anchors). The first round uses the seed only.
    pub n_iterations: usize,
    /// Cap on anchor pairs per round and on the exported dictionary.
    pub dict_top_pairs: usize,
    pub csls_k: usize,
    /// Mutual-neighbor filtering when regenerating anchors.
    pub mutual_only: bool,
    /// Mutual-neighbor filtering for the final exported dictionary.
    pub export_mutual_only: bool,
}

impl Default for ProcrustesConfig {
    fn default() -> Self {
        ProcrustesConfig {
            n_iterations: 5,
            dict_top_pairs: 50_000,
            csls_k: csls::DEFAULT_K,
            mutual_only: true,
            export_mutual_only: false,
        }
    }
}

impl ProcrustesConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.n_iterations, "n_iterations"),
            (self.dict_top_pairs, "dict_top_pairs"),
            (self.csls_k, "csls_k"),
        ];
        for (v, field) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig {
                    field,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }
}

/// One round of the refinement loop.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationLog {
    pub iteration: usize,
    /// Anchors the mapping of this round was solved on.
    pub anchors: usize,
    /// `||X_anchor W^T - Y_anchor||_F` after the solve.
    pub residual: f64,
    /// Mean CSLS score of the mutual pairs induced under this round's mapping.
    pub mean_csls: f64,
    pub orthogonality: f64,
}

#[derive(Clone, Debug)]
pub struct ProcrustesOutcome {
    pub mapping: MappingMatrix,
    pub dictionary: InducedDictionary,
    pub log: Vec<IterationLog>,
    /// Seed pairs dropped because a word was out of vocabulary.
    pub dropped_seed_pairs: usize,
}

/// Runs the iterative Procrustes loop from `seed`. Both sets should already be
/// unit-normalized.
pub fn train_procrustes(
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    seed: &SeedDictionary,
    config: &ProcrustesConfig,
) -> Result<ProcrustesOutcome> {
    config.validate()?;
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: tgt.dim(),
        });
    }
    let resolved = seed.resolve(src, tgt);
    if resolved.dropped > 0 {
        log::warn!(
            "dropped {} of {} seed pairs with out-of-vocabulary words",
            resolved.dropped,
            seed.len()
        );
    }
    let mut seed_pairs = Vec::with_capacity(resolved.pairs.len());
    let mut seen = BTreeSet::new();
    for p in resolved.pairs {
        if seen.insert(p) {
            seed_pairs.push(p);
        }
    }
    if seed_pairs.is_empty() {
        return Err(Error::EmptySeed);
    }
    seed_pairs.truncate(config.dict_top_pairs);

    let mut anchors = seed_pairs.clone();
    let mut log = Vec::with_capacity(config.n_iterations);
    let mut mapping = MappingMatrix::identity(src.dim());

    for iteration in 1..=config.n_iterations {
        let (xs, ys): (Vec<usize>, Vec<usize>) = anchors.iter().copied().unzip();
        let x = src.vectors().select_rows(&xs);
        let y = tgt.vectors().select_rows(&ys);
        mapping = procrustes_solve(&x, &y)?;
        let residual = mapping.apply_rows(&x).distance(&y);

        let index = CslsIndex::for_mapping(&mapping, src.vectors(), tgt.vectors(), config.csls_k)?;
        let induced = index.induce_pairs(config.dict_top_pairs, config.mutual_only)?;
        if induced.is_empty() {
            return Err(Error::AnchorCollapse { iteration });
        }
        let mean_csls = induced.iter().map(|p| p.score).sum::<f64>() / induced.len() as f64;
        log::debug!(
            "procrustes iteration {iteration}: {} anchors, residual {residual:.3e}, mean csls {mean_csls:.4}",
            anchors.len()
        );
        log.push(IterationLog {
            iteration,
            anchors: anchors.len(),
            residual,
            mean_csls,
            orthogonality: mapping.orthogonality_error(),
        });

        if iteration < config.n_iterations {
            anchors = merge_anchors(
                &seed_pairs,
                induced.iter().map(|p| (p.src, p.tgt)),
                config.dict_top_pairs,
            );
        }
    }

    let index = CslsIndex::for_mapping(&mapping, src.vectors(), tgt.vectors(), config.csls_k)?;
    let pairs = index.induce_pairs(config.dict_top_pairs, config.export_mutual_only)?;
    Ok(ProcrustesOutcome {
        dictionary: csls::pairs_to_dictionary(&pairs, src, tgt),
        mapping,
        log,
        dropped_seed_pairs: resolved.dropped,
    })
}

/// Seed pairs first, then induced pairs not already present, capped at `cap`.
fn merge_anchors(
    seed: &[(usize, usize)],
    induced: impl Iterator<Item = (usize, usize)>,
    cap: usize,
) -> Vec<(usize, usize)> {
    let mut seen: BTreeSet<(usize, usize)> = seed.iter().copied().collect();
    let mut out = seed.to_vec();
    for p in induced {
        if out.len() >= cap {
            break;
        }
        if seen.insert(p) {
            out.push(p);
        }
    }
    out.truncate(cap);
    out
}
