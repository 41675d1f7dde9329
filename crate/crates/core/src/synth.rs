//! Synthetic bilingual embedding pairs with a known ground-truth rotation.
//!
//! Source word `w_i` has rank `i`; its translation is `w_i'`, also at rank `i`
//! in the target set, so frequency ranks agree across languages.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding::{EmbeddingSet, SeedDictionary};
use crate::geometry::MappingMatrix;
use crate::matrix::Matrix;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthSpec {
    pub n_words: usize,
    pub dim: usize,
    /// Standard deviation of the Gaussian noise added to each target before
    /// normalization.
    pub noise_sigma: f64,
    pub rotation_seed: u64,
    pub data_seed: u64,
    /// Axis 0 is stretched by `1 + hubness_factor` before normalization, which
    /// crowds vectors around `±e_0` and creates hub targets.
    pub hubness_factor: f64,
    /// Number of Gaussian clusters the source vectors are drawn from. `0`
    /// draws from a single isotropic Gaussian.
    pub clusters: usize,
    /// Within-cluster standard deviation relative to the unit-variance spread
    /// of the cluster centers.
    pub cluster_spread: f64,
    /// Axis `j` is scaled by `exp(-j / spectral_decay)` when positive, giving
    /// the space a decaying covariance spectrum.
    pub spectral_decay: f64,
    pub source_lang: String,
    pub target_lang: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_words: 2000,
            dim: 50,
            noise_sigma: 0.0,
            rotation_seed: 0,
            data_seed: 1,
            hubness_factor: 0.0,
            clusters: 0,
            cluster_spread: 0.5,
            spectral_decay: 0.0,
            source_lang: "src".into(),
            target_lang: "tgt".into(),
        }
    }
}

impl SynthSpec {
    /// The structured regime used for unsupervised alignment: a skewed
    /// mixture of 20 clusters on a spectrum decaying with scale 5.
    pub fn structured(n_words: usize, dim: usize) -> Self {
        SynthSpec {
            n_words,
            dim,
            clusters: 20,
            cluster_spread: 0.5,
            spectral_decay: 5.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.n_words >= 2, "n_words", "must be at least 2"),
            (self.dim >= 2, "dim", "must be at least 2"),
            (
                self.noise_sigma.is_finite() && self.noise_sigma >= 0.0,
                "noise_sigma",
                "must be finite and non-negative",
            ),
            (
                self.hubness_factor.is_finite() && self.hubness_factor >= 0.0,
                "hubness_factor",
                "must be finite and non-negative",
            ),
            (
                self.cluster_spread.is_finite() && self.cluster_spread >= 0.0,
                "cluster_spread",
                "must be finite and non-negative",
            ),
            (
                self.spectral_decay.is_finite() && self.spectral_decay >= 0.0,
                "spectral_decay",
                "must be finite and non-negative",
            ),
            (
                self.source_lang != self.target_lang,
                "target_lang",
                "must differ from source_lang",
            ),
        ];
        for (ok, field, reason) in checks {
            if !ok {
                return Err(Error::InvalidConfig { field, reason });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthPair {
    pub src: EmbeddingSet,
    pub tgt: EmbeddingSet,
    /// `Q` with `tgt_i = normalize(Q src_i + noise)`.
    pub true_mapping: MappingMatrix,
    /// `(w_i, w_i')` for every rank `i`.
    pub gold: SeedDictionary,
}

impl SynthPair {
    /// Gold pairs for ranks in `range`.
    pub fn gold_range(&self, range: core::ops::Range<usize>) -> SeedDictionary {
        self.gold.pairs()[range].iter().cloned().collect()
    }
}

pub fn source_word(i: usize) -> String {
    format!("w_{i}")
}

pub fn target_word(i: usize) -> String {
    format!("w_{i}'")
}

/// Generates a synthetic pair. Identical specs give bit-identical output.
pub fn generate(spec: &SynthSpec) -> Result<SynthPair> {
    spec.validate()?;
    let (n, d) = (spec.n_words, spec.dim);

    let mut rot_rng = ChaCha8Rng::seed_from_u64(spec.rotation_seed);
    let q = MappingMatrix::random_orthogonal(d, &mut rot_rng);

    let mut data_rng = ChaCha8Rng::seed_from_u64(spec.data_seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.data_seed);
    noise_rng.set_stream(1);

    let mut x = gaussian(n, d, &mut data_rng);
    if spec.clusters > 0 {
        let centers = gaussian(spec.clusters, d, &mut data_rng);
        let logits: Vec<f64> = (0..spec.clusters).map(|_| data_rng.sample(StandardNormal)).collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|&l| libm::exp(l - top)).collect();
        let pick = WeightedIndex::new(&weights).expect("softmax weights are positive");
        for i in 0..n {
            let c = centers.row(pick.sample(&mut data_rng));
            for (v, &cj) in x.row_mut(i).iter_mut().zip(c) {
                *v = cj + spec.cluster_spread * *v;
            }
        }
    }
    if spec.spectral_decay > 0.0 {
        let scale: Vec<f64> = (0..d).map(|j| libm::exp(-(j as f64) / spec.spectral_decay)).collect();
        for i in 0..n {
            for (v, s) in x.row_mut(i).iter_mut().zip(&scale) {
                *v *= s;
            }
        }
    }
    if spec.hubness_factor > 0.0 {
        for i in 0..n {
            x.row_mut(i)[0] *= 1.0 + spec.hubness_factor;
        }
    }
    normalize_rows_or_resample(&mut x, &mut data_rng);

    let mut y = q.apply_rows(&x);
    if spec.noise_sigma > 0.0 {
        for v in y.as_mut_slice() {
            *v += spec.noise_sigma * noise_rng.sample::<f64, _>(StandardNormal);
        }
    }
    normalize_rows_or_resample(&mut y, &mut noise_rng);

    let src_words: Vec<String> = (0..n).map(source_word).collect();
    let tgt_words: Vec<String> = (0..n).map(target_word).collect();
    let gold = src_words.iter().cloned().zip(tgt_words.iter().cloned()).collect();
    Ok(SynthPair {
        src: EmbeddingSet::new(src_words, x, spec.source_lang.clone())?,
        tgt: EmbeddingSet::new(tgt_words, y, spec.target_lang.clone())?,
        true_mapping: q,
        gold,
    })
}

fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data)
}

// A Gaussian row is zero with probability zero; the loop keeps the invariant
// that every row has unit norm regardless.
fn normalize_rows_or_resample<R: Rng + ?Sized>(m: &mut Matrix, rng: &mut R) {
    for i in 0..m.rows() {
        loop {
            let row = m.row_mut(i);
            let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            if norm > 0.0 && norm.is_finite() {
                row.iter_mut().for_each(|v| *v /= norm);
                break;
            }
            row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        }
    }
}
