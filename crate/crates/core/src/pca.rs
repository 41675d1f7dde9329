//! Two-dimensional PCA projection of aligned word pairs for plotting.

use alloc::string::String;
use alloc::vec::Vec;

use crate::embedding::{EmbeddingSet, SeedDictionary};
use crate::geometry::{svd, MappingMatrix};
use crate::matrix::Matrix;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcaPoint {
    pub word: String,
    pub lang: String,
    pub pc1: f64,
    pub pc2: f64,
}

/// Projects the mean-centered rows of `m` onto its top two principal axes.
/// Each component's sign is chosen so its largest-magnitude coordinate is
/// positive.
pub fn project_2d(m: &Matrix) -> Result<Matrix> {
    if m.cols() < 2 || m.rows() < 2 {
        return Err(Error::InvalidConfig {
            field: "pca",
            reason: "needs at least two rows and two columns",
        });
    }
    let (n, d) = m.shape();
    let mut mean = alloc::vec![0.0; d];
    for r in m.iter_rows() {
        for (acc, v) in mean.iter_mut().zip(r) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);
    let mut centered = m.clone();
    for i in 0..n {
        for (v, mu) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= mu;
        }
    }
    let dec = svd(&centered)?;
    let mut out = Matrix::zeros(n, 2);
    for c in 0..2 {
        let axis = dec.vt.row(c);
        let mut coords: Vec<f64> = centered.iter_rows().map(|r| crate::matrix::dot(r, axis)).collect();
        let peak = coords
            .iter()
            .copied()
            .fold(0.0f64, |b, v| if libm::fabs(v) > libm::fabs(b) { v } else { b });
        if peak < 0.0 {
            coords.iter_mut().for_each(|v| *v = -*v);
        }
        for (i, v) in coords.into_iter().enumerate() {
            out.row_mut(i)[c] = v;
        }
    }
    Ok(out)
}

/// Stacks `W x` for the source word and `y` for the target word of every
/// resolvable pair and projects the stack with [`project_2d`]. Sources come
/// first, in pair order, followed by targets in the same order.
pub fn pca_pairs(
    w: &MappingMatrix,
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    pairs: &SeedDictionary,
) -> Result<Vec<PcaPoint>> {
    let resolved = pairs.resolve(src, tgt).pairs;
    if resolved.len() < 3 {
        return Err(Error::TooFewPairs {
            found: resolved.len(),
            required: 3,
        });
    }
    let (xs, ys): (Vec<usize>, Vec<usize>) = resolved.iter().copied().unzip();
    let mapped = w.apply_rows(&src.vectors().select_rows(&xs));
    let targets = tgt.vectors().select_rows(&ys);
    let mut data = mapped.into_vec();
    data.extend_from_slice(targets.as_slice());
    let stack = Matrix::from_vec(2 * resolved.len(), w.dim(), data);
    let proj = project_2d(&stack)?;

    let labels = xs
        .iter()
        .map(|&i| (src.word(i), src.lang()))
        .chain(ys.iter().map(|&j| (tgt.word(j), tgt.lang())));
    Ok(labels
        .zip(proj.iter_rows())
        .map(|((word, lang), r)| PcaPoint {
            word: word.into(),
            lang: lang.into(),
            pc1: r[0],
            pc2: r[1],
        })
        .collect())
}
