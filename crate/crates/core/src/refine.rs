//! Refinement of an unsupervised mapping: the most frequent mutual CSLS pairs
//! under the adversarial `W` become the seed of the Procrustes loop.

use alloc::vec::Vec;

use crate::csls::CslsIndex;
use crate::embedding::{EmbeddingSet, InducedDictionary, SeedDictionary};
use crate::geometry::MappingMatrix;
use crate::procrustes::{train_procrustes, IterationLog, ProcrustesConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefineConfig {
    /// Number of pseudo-seed pairs harvested from the adversarial mapping.
    pub s_anchor_pairs: usize,
    pub procrustes: ProcrustesConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            s_anchor_pairs: 5000,
            procrustes: ProcrustesConfig::default(),
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        self.procrustes.validate()?;
        if self.s_anchor_pairs == 0 {
            return Err(Error::InvalidConfig {
                field: "s_anchor_pairs",
                reason: "must be positive",
            });
        }
        if self.s_anchor_pairs > self.procrustes.dict_top_pairs {
            return Err(Error::InvalidConfig {
                field: "s_anchor_pairs",
                reason: "must not exceed dict_top_pairs",
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RefineOutcome {
    pub mapping: MappingMatrix,
    pub dictionary: InducedDictionary,
    pub log: Vec<IterationLog>,
    /// The pseudo-seed the Procrustes loop started from.
    pub anchors: SeedDictionary,
}

/// The `s` entries whose source words are most frequent (lowest rank). Entries
/// sharing a source rank are ordered by descending score. Entries whose source
/// word is not in `src` are ignored.
pub fn select_anchor_pairs(dict: &InducedDictionary, src: &EmbeddingSet, s: usize) -> Result<SeedDictionary> {
    if s == 0 {
        return Err(Error::InvalidConfig {
            field: "s_anchor_pairs",
            reason: "must be positive",
        });
    }
    let mut ranked: Vec<(usize, f64, usize)> = dict
        .entries()
        .iter()
        .enumerate()
        .filter_map(|(pos, e)| src.rank_of(&e.source).map(|r| (r, e.score, pos)))
        .collect();
    if ranked.len() < s {
        log::warn!(
            "dictionary has {} usable pairs, fewer than the {s} requested anchors; using all",
            ranked.len()
        );
    }
    ranked.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    ranked.truncate(s);
    Ok(ranked
        .into_iter()
        .map(|(_, _, pos)| {
            let e = &dict.entries()[pos];
            (e.source.clone(), e.target.clone())
        })
        .collect())
}

/// Induces a mutual CSLS dictionary under `adversarial_w`, keeps its
/// `s_anchor_pairs` most frequent pairs, and runs the Procrustes loop on them.
pub fn train_refined(
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    adversarial_w: &MappingMatrix,
    config: &RefineConfig,
) -> Result<RefineOutcome> {
    config.validate()?;
    if adversarial_w.dim() != src.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: adversarial_w.dim(),
        });
    }
    let drift = adversarial_w.orthogonality_error();
    if drift > 1e-2 {
        log::warn!("refining a mapping {drift:.3e} away from orthogonal");
    }
    let index = CslsIndex::for_mapping(adversarial_w, src.vectors(), tgt.vectors(), config.procrustes.csls_k)?;
    let induced = index.induce_dictionary(src, tgt, config.procrustes.dict_top_pairs, true)?;
    if induced.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let anchors = select_anchor_pairs(&induced, src, config.s_anchor_pairs)?;
    log::info!("refining from {} pseudo-seed pairs", anchors.len());
    let out = train_procrustes(src, tgt, &anchors, &config.procrustes)?;
    Ok(RefineOutcome {
        mapping: out.mapping,
        dictionary: out.dictionary,
        log: out.log,
        anchors,
    })
}
