use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::matrix::{gemm, Matrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscriminatorConfig {
    /// Width of both hidden layers.
    pub hidden: usize,
    /// Negative-side slope of the LeakyReLU activations.
    pub leaky_slope: f64,
    /// Dropout rate applied to the input vector in training mode.
    pub input_dropout: f64,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig {
            hidden: 2048,
            leaky_slope: 0.2,
            input_dropout: 0.1,
        }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::InvalidConfig {
                field: "hidden_dim",
                reason: "must be positive",
            });
        }
        if !(0.0..1.0).contains(&self.input_dropout) {
            return Err(Error::InvalidConfig {
                field: "input_dropout",
                reason: "must lie in [0, 1)",
            });
        }
        if !(self.leaky_slope >= 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::InvalidConfig {
                field: "leaky_slope",
                reason: "must lie in [0, 1)",
            });
        }
        Ok(())
    }
}

/// Fully connected layer, `out = in * w^T + b`, with `w` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            w: Matrix::zeros(fan_out, fan_in),
            b: vec![0.0; fan_out],
        }
    }

    /// Uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights and biases.
    fn uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / libm::sqrt(fan_in as f64);
        let mut layer = Dense::zeros(fan_in, fan_out);
        for v in layer.w.as_mut_slice().iter_mut().chain(layer.b.iter_mut()) {
            *v = rng.random_range(-bound..bound);
        }
        layer
    }

    fn forward(&self, input: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(input.rows(), self.w.rows());
        for i in 0..out.rows() {
            out.row_mut(i).copy_from_slice(&self.b);
        }
        gemm(1.0, input, false, &self.w, true, 1.0, &mut out);
        out
    }

    fn parameter_count(&self) -> usize {
        self.w.as_slice().len() + self.b.len()
    }
}

/// Binary classifier telling mapped source vectors (label 1) from target
/// vectors (label 0): `d -> hidden -> hidden -> 1`, LeakyReLU on the hidden
/// layers, logistic output.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator {
    layers: [Dense; 3],
    config: DiscriminatorConfig,
}

/// Parameter gradients with the same layout as [`Discriminator`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorGrads {
    pub layers: [Dense; 3],
}

/// Activations kept from a forward pass for backpropagation.
struct Trace {
    input: Matrix,
    keep: Option<Matrix>,
    pre1: Matrix,
    act1: Matrix,
    pre2: Matrix,
    act2: Matrix,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(dim: usize, config: DiscriminatorConfig, rng: &mut R) -> Self {
        let h = config.hidden;
        Discriminator {
            layers: [
                Dense::uniform(dim, h, rng),
                Dense::uniform(h, h, rng),
                Dense::uniform(h, 1, rng),
            ],
            config,
        }
    }

    /// All weights and biases zero: outputs 0.5 for every input.
    pub fn zeros(dim: usize, config: DiscriminatorConfig) -> Self {
        let h = config.hidden;
        Discriminator {
            layers: [Dense::zeros(dim, h), Dense::zeros(h, h), Dense::zeros(h, 1)],
            config,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.cols()
    }

    pub fn config(&self) -> &DiscriminatorConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Dense; 3] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense; 3] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Dense::parameter_count).sum()
    }

    /// Probability that `z` is a mapped source vector. Dropout on the input is
    /// applied only when `train_rng` is given.
    pub fn forward<R: Rng + ?Sized>(&self, z: &[f64], train_rng: Option<&mut R>) -> Result<f64> {
        if z.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "discriminator input",
            });
        }
        let input = Matrix::from_vec(1, z.len(), z.to_vec());
        let (logits, _) = self.forward_batch(&input, train_rng);
        Ok(probability(logits[0]))
    }

    /// Output logits for each row of `z`.
    pub fn logits<R: Rng + ?Sized>(&self, z: &Matrix, train_rng: Option<&mut R>) -> Vec<f64> {
        self.forward_batch(z, train_rng).0
    }

    fn forward_batch<R: Rng + ?Sized>(&self, z: &Matrix, train_rng: Option<&mut R>) -> (Vec<f64>, Trace) {
        let p = self.config.input_dropout;
        let (input, keep) = match train_rng {
            Some(rng) if p > 0.0 => {
                let scale = 1.0 / (1.0 - p);
                let mut keep = Matrix::zeros(z.rows(), z.cols());
                for k in keep.as_mut_slice() {
                    *k = if rng.random::<f64>() >= p { scale } else { 0.0 };
                }
                let mut input = z.clone();
                for (v, k) in input.as_mut_slice().iter_mut().zip(keep.as_slice()) {
                    *v *= k;
                }
                (input, Some(keep))
            }
            _ => (z.clone(), None),
        };
        let slope = self.config.leaky_slope;
        let pre1 = self.layers[0].forward(&input);
        let act1 = leaky(&pre1, slope);
        let pre2 = self.layers[1].forward(&act1);
        let act2 = leaky(&pre2, slope);
        let out = self.layers[2].forward(&act2);
        let logits = out.into_vec();
        (
            logits,
            Trace {
                input,
                keep,
                pre1,
                act1,
                pre2,
                act2,
            },
        )
    }

    /// Backpropagates `d_logits` (one entry per batch row). Returns either the
    /// parameter gradients or the gradient with respect to the batch rows as
    /// they were passed to the forward pass (before dropout).
    fn backward(&self, trace: &Trace, d_logits: &[f64], want: Wanted) -> Backward {
        let slope = self.config.leaky_slope;
        let params = want == Wanted::Parameters;
        let batch = d_logits.len();
        let g3 = Matrix::from_vec(batch, 1, d_logits.to_vec());

        let out_layer = params.then(|| Dense {
            w: g3.t_matmul(&trace.act2),
            b: vec![d_logits.iter().sum()],
        });
        let mut d_pre2 = g3.matmul(&self.layers[2].w);
        leaky_backward(&mut d_pre2, &trace.pre2, slope);

        let mid_layer = params.then(|| Dense {
            w: d_pre2.t_matmul(&trace.act1),
            b: column_sums(&d_pre2),
        });
        let mut d_pre1 = d_pre2.matmul(&self.layers[1].w);
        leaky_backward(&mut d_pre1, &trace.pre1, slope);

        match (out_layer, mid_layer) {
            (Some(out_layer), Some(mid_layer)) => {
                let in_layer = Dense {
                    w: d_pre1.t_matmul(&trace.input),
                    b: column_sums(&d_pre1),
                };
                Backward::Parameters(DiscriminatorGrads {
                    layers: [in_layer, mid_layer, out_layer],
                })
            }
            _ => {
                let mut d = d_pre1.matmul(&self.layers[0].w);
                if let Some(keep) = &trace.keep {
                    for (v, k) in d.as_mut_slice().iter_mut().zip(keep.as_slice()) {
                        *v *= k;
                    }
                }
                Backward::Input(d)
            }
        }
    }

    /// `theta <- theta - learning_rate * grads`
    pub fn apply_gradients(&mut self, grads: &DiscriminatorGrads, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.w.add_scaled(-learning_rate, &g.w);
            for (b, gb) in layer.b.iter_mut().zip(&g.b) {
                *b -= learning_rate * gb;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.is_finite() && l.b.iter().all(|v| v.is_finite()))
    }
}

impl DiscriminatorGrads {
    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.is_finite() && l.b.iter().all(|v| v.is_finite()))
    }
}

/// Logistic function, kept strictly inside `(0, 1)`.
pub fn probability(logit: f64) -> f64 {
    let p = if logit >= 0.0 {
        1.0 / (1.0 + libm::exp(-logit))
    } else {
        let e = libm::exp(logit);
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `-[t ln sigma(a) + (1 - t) ln(1 - sigma(a))]` evaluated stably from the logit.
pub(crate) fn bce_with_logit(logit: f64, target: f64) -> f64 {
    let softplus = logit.max(0.0) + libm::log1p(libm::exp(-libm::fabs(logit)));
    softplus - target * logit
}

fn leaky(m: &Matrix, slope: f64) -> Matrix {
    let mut out = m.clone();
    for v in out.as_mut_slice() {
        if *v < 0.0 {
            *v *= slope;
        }
    }
    out
}

fn leaky_backward(grad: &mut Matrix, pre: &Matrix, slope: f64) {
    for (g, &p) in grad.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if p < 0.0 {
            *g *= slope;
        }
    }
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for r in m.iter_rows() {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    out
}

/// Which side of the game a loss is computed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    /// Mapped sources labelled 1, targets labelled 0.
    Discriminator,
    /// Labels flipped: the mapping wants its outputs taken for targets.
    Generator,
}

/// Batch loss (sum of the two per-side means) and its gradient with respect
/// to each logit, source rows first.
pub(crate) fn loss_and_logit_grads(
    src_logits: &[f64],
    tgt_logits: &[f64],
    smoothing: f64,
    side: Side,
) -> (f64, Vec<f64>) {
    let (t_src, t_tgt) = match side {
        Side::Discriminator => (1.0 - smoothing, smoothing),
        Side::Generator => (smoothing, 1.0 - smoothing),
    };
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(src_logits.len() + tgt_logits.len());
    for (logits, target) in [(src_logits, t_src), (tgt_logits, t_tgt)] {
        let n = logits.len() as f64;
        let mut part = 0.0;
        for &a in logits {
            part += bce_with_logit(a, target);
            grads.push((probability_unclamped(a) - target) / n);
        }
        loss += part / n;
    }
    (loss, grads)
}

fn probability_unclamped(logit: f64) -> f64 {
    if logit >= 0.0 {
        1.0 / (1.0 + libm::exp(-logit))
    } else {
        let e = libm::exp(logit);
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Wanted {
    Parameters,
    Input,
}

pub(crate) enum Backward {
    Parameters(DiscriminatorGrads),
    /// Gradient with respect to every batch row.
    Input(Matrix),
}

/// Loss of one side of the game on a batch, with either the discriminator
/// parameter gradients or the gradient for the mapped-source rows.
pub(crate) fn evaluate_side<R: Rng + ?Sized>(
    disc: &Discriminator,
    mapped_src: &Matrix,
    tgt: &Matrix,
    smoothing: f64,
    side: Side,
    train_rng: Option<&mut R>,
    want: Wanted,
) -> (f64, Backward) {
    let n_src = mapped_src.rows();
    let mut stacked = Matrix::zeros(n_src + tgt.rows(), mapped_src.cols());
    stacked.as_mut_slice()[..mapped_src.as_slice().len()].copy_from_slice(mapped_src.as_slice());
    stacked.as_mut_slice()[mapped_src.as_slice().len()..].copy_from_slice(tgt.as_slice());

    let (logits, trace) = disc.forward_batch(&stacked, train_rng);
    let (loss, d_logits) = loss_and_logit_grads(&logits[..n_src], &logits[n_src..], smoothing, side);
    let back = match disc.backward(&trace, &d_logits, want) {
        Backward::Input(d) => {
            let idx: Vec<usize> = (0..n_src).collect();
            Backward::Input(d.select_rows(&idx))
        }
        grads => grads,
    };
    (loss, back)
}
