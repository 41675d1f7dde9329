//! Unsupervised alignment by adversarial training.
//!
//! A discriminator learns to tell mapped source vectors `Wx` from target
//! vectors `y`; the mapping `W` is trained to fool it. The discriminator
//! minimizes
//!
//! ```text
//! L_D = -mean_i log P(src = 1 | W x_i) - mean_j log P(src = 0 | y_j)
//! ```
//!
//! and the mapping minimizes the same expression with the labels flipped.
//! Only the `Wx` half of the mapping loss depends on `W`; the `y` half is
//! reported but contributes no gradient. After every mapping update `W` is
//! pulled back toward the orthogonal manifold with
//! [`orthogonal_retraction`].

mod discriminator;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use discriminator::{evaluate_side, loss_and_logit_grads, Backward, Side, Wanted};
pub use discriminator::{probability, Dense, Discriminator, DiscriminatorConfig, DiscriminatorGrads};

use crate::csls::{self, CslsIndex};
use crate::embedding::EmbeddingSet;
use crate::geometry::{orthogonal_retraction, MappingMatrix, RetractionConfig};
use crate::matrix::Matrix;
use crate::{Error, Result};

/// How the mapping is initialized before training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MappingInit {
    #[default]
    Identity,
    RandomOrthogonal,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdversarialConfig {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    /// Orthogonal retraction strength applied after each mapping update.
    pub beta: f64,
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay: f64,
    /// Extra factor applied when an epoch fails to improve the validation score.
    pub lr_shrink: f64,
    /// Batches are drawn from this many most frequent words; `None` uses all.
    pub sample_top_n: Option<usize>,
    pub label_smoothing: f64,
    pub rng_seed: u64,
    pub discriminator: DiscriminatorConfig,
    pub init: MappingInit,
    /// Steps per loss-curve entry.
    pub log_interval: usize,
    /// Source words whose translations make up the validation score.
    pub validation_words: usize,
    /// Vocabulary cap (per side) for the validation CSLS index.
    pub validation_max_rank: usize,
    pub csls_k: usize,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        AdversarialConfig {
            epochs: 5,
            steps_per_epoch: 100_000,
            batch_size: 32,
            beta: 0.001,
            learning_rate: 0.1,
            lr_decay: 0.98,
            lr_shrink: 0.5,
            sample_top_n: None,
            label_smoothing: 0.1,
            rng_seed: 0,
            discriminator: DiscriminatorConfig::default(),
            init: MappingInit::Identity,
            log_interval: 1000,
            validation_words: 500,
            validation_max_rank: 10_000,
            csls_k: csls::DEFAULT_K,
        }
    }
}

impl AdversarialConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.steps_per_epoch, "steps_per_epoch"),
            (self.batch_size, "batch_size"),
            (self.log_interval, "log_interval"),
            (self.validation_words, "validation_words"),
            (self.validation_max_rank, "validation_max_rank"),
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
        if self.sample_top_n == Some(0) {
            return Err(Error::InvalidConfig {
                field: "sample_top_n",
                reason: "must be positive",
            });
        }
        RetractionConfig::new(self.beta)?;
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "learning_rate",
                reason: "must be a non-negative number",
            });
        }
        if !(0.0..0.5).contains(&self.label_smoothing) {
            return Err(Error::InvalidConfig {
                field: "label_smoothing",
                reason: "must lie in [0, 0.5)",
            });
        }
        for (v, field) in [(self.lr_decay, "lr_decay"), (self.lr_shrink, "lr_shrink")] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig {
                    field,
                    reason: "must lie in (0, 1]",
                });
            }
        }
        self.discriminator.validate()
    }
}

/// Unsupervised model-selection criterion: mean CSLS score of the induced
/// translations of the most frequent source words.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationScore {
    pub mean_csls: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    /// 0 is the initialization, before any training.
    pub epoch: usize,
    pub score: ValidationScore,
    /// Learning rate used during this epoch.
    pub learning_rate: f64,
}

/// Loss-curve entry: means over one logging interval.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossRecord {
    /// Global step count at the end of the interval.
    pub step: usize,
    pub discriminator_loss: f64,
    pub generator_loss: f64,
    /// `||W W^T - I||_F` at the end of the interval.
    pub orthogonality: f64,
}

#[derive(Clone, Debug)]
pub struct AdversarialOutcome {
    /// Mapping with the highest validation score seen.
    pub best: MappingMatrix,
    pub best_epoch: usize,
    pub best_score: ValidationScore,
    /// Mapping at the end of training.
    pub last: MappingMatrix,
    pub validation: Vec<EpochRecord>,
    pub losses: Vec<LossRecord>,
    /// Largest `||W W^T - I||_F` observed after any mapping update.
    pub max_orthogonality: f64,
}

/// A batch of source rows (unmapped) and target rows.
pub struct Batches<'a> {
    pub src: &'a Matrix,
    pub tgt: &'a Matrix,
}

/// Discriminator loss on a batch, computed without dropout.
pub fn discriminator_loss(disc: &Discriminator, w: &MappingMatrix, batches: &Batches<'_>, smoothing: f64) -> f64 {
    side_loss(disc, w, batches, smoothing, Side::Discriminator)
}

/// Mapping (generator) loss on a batch, computed without dropout.
pub fn generator_loss(disc: &Discriminator, w: &MappingMatrix, batches: &Batches<'_>, smoothing: f64) -> f64 {
    side_loss(disc, w, batches, smoothing, Side::Generator)
}

fn side_loss(disc: &Discriminator, w: &MappingMatrix, batches: &Batches<'_>, smoothing: f64, side: Side) -> f64 {
    let mapped = w.apply_rows(batches.src);
    let src_logits = disc.logits::<ChaCha8Rng>(&mapped, None);
    let tgt_logits = disc.logits::<ChaCha8Rng>(batches.tgt, None);
    loss_and_logit_grads(&src_logits, &tgt_logits, smoothing, side).0
}

/// Discriminator loss evaluated directly from output probabilities `p` (on
/// mapped sources) and `q` (on targets).
pub fn discriminator_loss_from_probabilities(p: &[f64], q: &[f64], smoothing: f64) -> f64 {
    probability_loss(p, q, smoothing, Side::Discriminator)
}

/// Generator loss evaluated directly from output probabilities.
pub fn generator_loss_from_probabilities(p: &[f64], q: &[f64], smoothing: f64) -> f64 {
    probability_loss(p, q, smoothing, Side::Generator)
}

fn probability_loss(p: &[f64], q: &[f64], s: f64, side: Side) -> f64 {
    let (t_src, t_tgt) = match side {
        Side::Discriminator => (1.0 - s, s),
        Side::Generator => (s, 1.0 - s),
    };
    let ce = |v: &[f64], t: f64| {
        -v.iter()
            .map(|&x| t * libm::log(x) + (1.0 - t) * libm::log(1.0 - x))
            .sum::<f64>()
            / v.len() as f64
    };
    ce(p, t_src) + ce(q, t_tgt)
}

/// Discriminator loss and its gradient for every discriminator parameter.
/// Dropout is applied when `train_rng` is given.
pub fn discriminator_gradients<R: Rng + ?Sized>(
    disc: &Discriminator,
    w: &MappingMatrix,
    batches: &Batches<'_>,
    smoothing: f64,
    train_rng: Option<&mut R>,
) -> (f64, DiscriminatorGrads) {
    let mapped = w.apply_rows(batches.src);
    match evaluate_side(
        disc,
        &mapped,
        batches.tgt,
        smoothing,
        Side::Discriminator,
        train_rng,
        Wanted::Parameters,
    ) {
        (loss, Backward::Parameters(grads)) => (loss, grads),
        (_, Backward::Input(_)) => unreachable!("parameter gradients requested"),
    }
}

/// Generator loss and its gradient with respect to `W`. The discriminator is
/// run without dropout.
pub fn generator_gradient(
    disc: &Discriminator,
    w: &MappingMatrix,
    batches: &Batches<'_>,
    smoothing: f64,
) -> (f64, Matrix) {
    let mapped = w.apply_rows(batches.src);
    match evaluate_side::<ChaCha8Rng>(
        disc,
        &mapped,
        batches.tgt,
        smoothing,
        Side::Generator,
        None,
        Wanted::Input,
    ) {
        // z_i = W x_i, so dL/dW = sum_i dL/dz_i x_i^T
        (loss, Backward::Input(d_mapped)) => (loss, d_mapped.t_matmul(batches.src)),
        (_, Backward::Parameters(_)) => unreachable!("input gradient requested"),
    }
}

/// One SGD step on the discriminator. Returns the loss before the update.
pub fn sgd_step_discriminator<R: Rng + ?Sized>(
    disc: &mut Discriminator,
    w: &MappingMatrix,
    batches: &Batches<'_>,
    learning_rate: f64,
    smoothing: f64,
    dropout_rng: &mut R,
) -> Result<f64> {
    let (loss, grads) = discriminator_gradients(disc, w, batches, smoothing, Some(dropout_rng));
    if !grads.is_finite() {
        return Err(Error::NonFinite {
            context: "discriminator gradient",
        });
    }
    disc.apply_gradients(&grads, learning_rate);
    Ok(loss)
}

/// One SGD step on the mapping followed by one orthogonal retraction.
/// Returns the updated mapping and the loss before the update.
pub fn sgd_step_generator(
    disc: &Discriminator,
    w: &MappingMatrix,
    batches: &Batches<'_>,
    learning_rate: f64,
    retraction: RetractionConfig,
    smoothing: f64,
) -> Result<(MappingMatrix, f64)> {
    let (loss, grad) = generator_gradient(disc, w, batches, smoothing);
    if !grad.is_finite() {
        return Err(Error::NonFinite {
            context: "mapping gradient",
        });
    }
    let mut next = w.clone();
    next.matrix_mut().add_scaled(-learning_rate, &grad);
    Ok((orthogonal_retraction(&next, retraction), loss))
}

/// Mean CSLS score of the best translation of each of the `n_words` most
/// frequent source words, with neighborhoods computed over the
/// `max_rank` most frequent words of each side.
pub fn validation_score(
    w: &MappingMatrix,
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    n_words: usize,
    max_rank: usize,
    k: usize,
) -> Result<ValidationScore> {
    let src_rows: Vec<usize> = (0..src.len().min(max_rank)).collect();
    let tgt_rows: Vec<usize> = (0..tgt.len().min(max_rank)).collect();
    let src_m = src.vectors().select_rows(&src_rows);
    let tgt_m = tgt.vectors().select_rows(&tgt_rows);
    let index = CslsIndex::for_mapping(w, &src_m, &tgt_m, k)?;
    let n = n_words.min(index.n_src());
    let total: f64 = (0..n).map(|i| index.top_targets(i, 1)[0].score).sum();
    Ok(ValidationScore {
        mean_csls: total / n as f64,
    })
}

/// Seeds for the independent random streams of a training run.
const STREAM_INIT: u64 = 1;
const STREAM_SAMPLING: u64 = 2;
const STREAM_DROPOUT: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Full adversarial training run: `epochs` x `steps_per_epoch` alternating
/// discriminator and mapping steps, with validation after each epoch.
///
/// Both sets should be unit-normalized.
pub fn train_adversarial(
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    config: &AdversarialConfig,
) -> Result<AdversarialOutcome> {
    config.validate()?;
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: tgt.dim(),
        });
    }
    for available in [src.len(), tgt.len()] {
        if available < config.batch_size {
            return Err(Error::VocabularyTooSmall {
                available,
                required: config.batch_size,
            });
        }
    }
    let dim = src.dim();
    let retraction = RetractionConfig::new(config.beta)?;
    let smoothing = config.label_smoothing;
    let top = |n: usize| config.sample_top_n.map_or(n, |t| t.min(n));
    let (src_pool, tgt_pool) = (top(src.len()), top(tgt.len()));

    let mut init_rng = stream(config.rng_seed, STREAM_INIT);
    let mut sample_rng = stream(config.rng_seed, STREAM_SAMPLING);
    let mut dropout_rng = stream(config.rng_seed, STREAM_DROPOUT);

    let mut w = match config.init {
        MappingInit::Identity => MappingMatrix::identity(dim),
        MappingInit::RandomOrthogonal => MappingMatrix::random_orthogonal(dim, &mut init_rng),
    };
    let mut disc = Discriminator::new(dim, config.discriminator, &mut init_rng);

    let validate = |w: &MappingMatrix| {
        validation_score(
            w,
            src,
            tgt,
            config.validation_words,
            config.validation_max_rank,
            config.csls_k,
        )
    };
    let mut lr = config.learning_rate;
    let initial = validate(&w)?;
    let mut validation = alloc::vec![EpochRecord {
        epoch: 0,
        score: initial,
        learning_rate: lr,
    }];
    let (mut best, mut best_epoch, mut best_score) = (w.clone(), 0, initial);
    let mut losses = Vec::new();
    let mut max_orthogonality = w.orthogonality_error();

    let mut src_idx = alloc::vec![0usize; config.batch_size];
    let mut tgt_idx = alloc::vec![0usize; config.batch_size];
    let (mut sum_d, mut sum_g, mut in_window) = (0.0, 0.0, 0usize);
    let mut step = 0;

    for epoch in 1..=config.epochs {
        for _ in 0..config.steps_per_epoch {
            step += 1;

            draw(&mut sample_rng, src_pool, &mut src_idx);
            draw(&mut sample_rng, tgt_pool, &mut tgt_idx);
            let xs = src.vectors().select_rows(&src_idx);
            let ys = tgt.vectors().select_rows(&tgt_idx);
            let batch = Batches { src: &xs, tgt: &ys };
            let d_loss = sgd_step_discriminator(&mut disc, &w, &batch, lr, smoothing, &mut dropout_rng)
                .map_err(|_| Error::NonFiniteGradient { epoch, step })?;

            draw(&mut sample_rng, src_pool, &mut src_idx);
            draw(&mut sample_rng, tgt_pool, &mut tgt_idx);
            let xs = src.vectors().select_rows(&src_idx);
            let ys = tgt.vectors().select_rows(&tgt_idx);
            let batch = Batches { src: &xs, tgt: &ys };
            let (next, g_loss) = sgd_step_generator(&disc, &w, &batch, lr, retraction, smoothing)
                .map_err(|_| Error::NonFiniteGradient { epoch, step })?;

            if !d_loss.is_finite() || !g_loss.is_finite() || !next.matrix().is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    step,
                    last_finite: alloc::boxed::Box::new(w),
                });
            }
            w = next;

            sum_d += d_loss;
            sum_g += g_loss;
            in_window += 1;
            if step % config.log_interval == 0 {
                let orthogonality = w.orthogonality_error();
                max_orthogonality = max_orthogonality.max(orthogonality);
                losses.push(LossRecord {
                    step,
                    discriminator_loss: sum_d / in_window as f64,
                    generator_loss: sum_g / in_window as f64,
                    orthogonality,
                });
                (sum_d, sum_g, in_window) = (0.0, 0.0, 0);
            }
        }

        let score = validate(&w)?;
        max_orthogonality = max_orthogonality.max(w.orthogonality_error());
        validation.push(EpochRecord {
            epoch,
            score,
            learning_rate: lr,
        });
        log::info!(
            "adversarial epoch {epoch}: validation mean csls {:.5}, lr {lr:.4}",
            score.mean_csls
        );
        if score.mean_csls > best_score.mean_csls {
            best = w.clone();
            best_epoch = epoch;
            best_score = score;
        } else {
            lr *= config.lr_shrink;
        }
        lr *= config.lr_decay;
    }

    Ok(AdversarialOutcome {
        best,
        best_epoch,
        best_score,
        last: w,
        validation,
        losses,
        max_orthogonality,
    })
}

fn draw<R: Rng + ?Sized>(rng: &mut R, pool: usize, out: &mut [usize]) {
    for v in out {
        *v = rng.random_range(0..pool);
    }
}
