//! Flat `key = value` run configuration.
//!
//! Every key can also be given on the command line as `--key-name value`
//! (underscores become dashes); command-line values override the file.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lexalign_core::adversarial::{AdversarialConfig, MappingInit};
use lexalign_core::eval::Method;
use lexalign_core::procrustes::ProcrustesConfig;
use lexalign_core::refine::RefineConfig;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{origin}: unknown key '{key}'")]
    UnknownKey { key: String, origin: String },

    #[error("{key}: expected {expected}, found '{found}'")]
    TypeMismatch {
        key: String,
        expected: &'static str,
        found: String,
    },

    #[error("{origin}:{line}: expected 'key = value'")]
    Malformed { origin: String, line: usize },

    #[error("{origin}:{line}: '{key}' is set twice")]
    Duplicate { key: String, origin: String, line: usize },

    #[error("{key} is required {reason}")]
    Missing { key: &'static str, reason: &'static str },

    #[error("{key}: {} does not exist", path.display())]
    MissingPath { key: &'static str, path: PathBuf },

    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

/// Which directions the pipeline aligns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionMode {
    /// Source to target only.
    Forward,
    /// Target to source only.
    Reverse,
    Both,
}

impl DirectionMode {
    fn as_str(self) -> &'static str {
        match self {
            DirectionMode::Forward => "forward",
            DirectionMode::Reverse => "reverse",
            DirectionMode::Both => "both",
        }
    }
}

impl FromStr for DirectionMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "forward" => Ok(DirectionMode::Forward),
            "reverse" => Ok(DirectionMode::Reverse),
            "both" => Ok(DirectionMode::Both),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub src_emb: Option<PathBuf>,
    pub tgt_emb: Option<PathBuf>,
    pub seed_dict: Option<PathBuf>,
    pub test_dict: Option<PathBuf>,
    /// Adversarial mapping to refine instead of training one.
    pub adversarial_checkpoint: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub src_lang: String,
    pub tgt_lang: String,
    pub direction: DirectionMode,
    /// `None` loads every vector.
    pub max_vocab: Option<usize>,
    pub normalize_embeddings: bool,
    pub eval_ns: Vec<usize>,
    pub procrustes: ProcrustesConfig,
    pub s_anchor_pairs: usize,
    pub adversarial: AdversarialConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::SemiSupervised,
            src_emb: None,
            tgt_emb: None,
            seed_dict: None,
            test_dict: None,
            adversarial_checkpoint: None,
            output_dir: PathBuf::from("out"),
            src_lang: "src".into(),
            tgt_lang: "tgt".into(),
            direction: DirectionMode::Forward,
            max_vocab: Some(200_000),
            normalize_embeddings: true,
            eval_ns: vec![1, 5, 10],
            procrustes: ProcrustesConfig::default(),
            s_anchor_pairs: RefineConfig::default().s_anchor_pairs,
            adversarial: AdversarialConfig::default(),
        }
    }
}

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("method", "semi-sup, self-sup or self-sup-re"),
    ("src_emb", "source embedding file"),
    ("tgt_emb", "target embedding file"),
    ("seed_dict", "seed dictionary (required for semi-sup)"),
    ("test_dict", "gold dictionary for evaluation"),
    ("adversarial_checkpoint", "adversarial mapping to refine (self-sup-re)"),
    ("output_dir", "directory receiving every artifact"),
    ("src_lang", "source language tag"),
    ("tgt_lang", "target language tag"),
    ("direction", "forward, reverse or both"),
    ("max_vocab", "vectors loaded per language, 0 for all"),
    ("normalize_embeddings", "unit-normalize vectors after loading"),
    ("eval_ns", "comma-separated N values for P@N"),
    ("n_iterations", "Procrustes refinement rounds"),
    ("dict_top_pairs", "cap on induced anchor and exported pairs"),
    ("csls_k", "CSLS neighborhood size"),
    ("mutual_only", "mutual-neighbor filtering for anchors"),
    (
        "export_mutual_only",
        "mutual-neighbor filtering for the exported dictionary",
    ),
    ("s_anchor_pairs", "pseudo-seed pairs harvested for self-sup-re"),
    ("epochs", "adversarial epochs"),
    ("steps_per_epoch", "adversarial steps per epoch"),
    ("batch_size", "adversarial batch size"),
    ("beta", "orthogonal retraction strength"),
    ("learning_rate", "initial SGD learning rate"),
    ("lr_decay", "learning-rate factor per epoch"),
    ("lr_shrink", "learning-rate factor when validation does not improve"),
    (
        "sample_top_n",
        "draw batches from this many most frequent words, 0 for all",
    ),
    ("label_smoothing", "discriminator label smoothing in [0, 0.5)"),
    ("seed", "random seed for adversarial training"),
    ("hidden", "discriminator hidden width"),
    ("leaky_slope", "LeakyReLU negative slope"),
    ("input_dropout", "discriminator input dropout rate"),
    ("init", "initial mapping: identity or random-orthogonal"),
    ("log_interval", "steps per loss-curve entry"),
    ("validation_words", "source words in the validation score"),
    ("validation_max_rank", "vocabulary cap for the validation index"),
];

fn mismatch(key: &str, expected: &'static str, found: &str) -> ConfigError {
    ConfigError::TypeMismatch {
        key: key.into(),
        expected,
        found: found.into(),
    }
}

fn parse<T: FromStr>(key: &str, v: &str, expected: &'static str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| mismatch(key, expected, v))
}

fn positive(key: &str, v: &str) -> Result<usize, ConfigError> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(mismatch(key, "a positive integer", v)),
    }
}

fn zero_is_none(key: &str, v: &str) -> Result<Option<usize>, ConfigError> {
    let n: usize = parse(key, v, "a non-negative integer")?;
    Ok((n > 0).then_some(n))
}

fn path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let adv = &mut self.adversarial;
        match key {
            "method" => {
                self.method = v
                    .parse()
                    .map_err(|_| mismatch(key, "semi-sup, self-sup or self-sup-re", v))?
            }
            "src_emb" => self.src_emb = path(v),
            "tgt_emb" => self.tgt_emb = path(v),
            "seed_dict" => self.seed_dict = path(v),
            "test_dict" => self.test_dict = path(v),
            "adversarial_checkpoint" => self.adversarial_checkpoint = path(v),
            "output_dir" => self.output_dir = PathBuf::from(v),
            "src_lang" => self.src_lang = v.into(),
            "tgt_lang" => self.tgt_lang = v.into(),
            "direction" => self.direction = v.parse().map_err(|_| mismatch(key, "forward, reverse or both", v))?,
            "max_vocab" => self.max_vocab = zero_is_none(key, v)?,
            "normalize_embeddings" => self.normalize_embeddings = parse(key, v, "true or false")?,
            "eval_ns" => {
                self.eval_ns = v
                    .split(',')
                    .map(|s| positive(key, s.trim()))
                    .collect::<Result<_, _>>()
                    .map_err(|_| mismatch(key, "comma-separated positive integers", v))?
            }
            "n_iterations" => self.procrustes.n_iterations = positive(key, v)?,
            "dict_top_pairs" => self.procrustes.dict_top_pairs = positive(key, v)?,
            "csls_k" => {
                let k = positive(key, v)?;
                self.procrustes.csls_k = k;
                adv.csls_k = k;
            }
            "mutual_only" => self.procrustes.mutual_only = parse(key, v, "true or false")?,
            "export_mutual_only" => self.procrustes.export_mutual_only = parse(key, v, "true or false")?,
            "s_anchor_pairs" => self.s_anchor_pairs = positive(key, v)?,
            "epochs" => adv.epochs = parse(key, v, "a non-negative integer")?,
            "steps_per_epoch" => adv.steps_per_epoch = positive(key, v)?,
            "batch_size" => adv.batch_size = positive(key, v)?,
            "beta" => adv.beta = parse(key, v, "a number")?,
            "learning_rate" => adv.learning_rate = parse(key, v, "a number")?,
            "lr_decay" => adv.lr_decay = parse(key, v, "a number")?,
            "lr_shrink" => adv.lr_shrink = parse(key, v, "a number")?,
            "sample_top_n" => adv.sample_top_n = zero_is_none(key, v)?,
            "label_smoothing" => adv.label_smoothing = parse(key, v, "a number")?,
            "seed" => adv.rng_seed = parse(key, v, "a non-negative integer")?,
            "hidden" => adv.discriminator.hidden = positive(key, v)?,
            "leaky_slope" => adv.discriminator.leaky_slope = parse(key, v, "a number")?,
            "input_dropout" => adv.discriminator.input_dropout = parse(key, v, "a number")?,
            "init" => {
                adv.init = match v {
                    "identity" => MappingInit::Identity,
                    "random-orthogonal" => MappingInit::RandomOrthogonal,
                    _ => return Err(mismatch(key, "identity or random-orthogonal", v)),
                }
            }
            "log_interval" => adv.log_interval = positive(key, v)?,
            "validation_words" => adv.validation_words = positive(key, v)?,
            "validation_max_rank" => adv.validation_max_rank = positive(key, v)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.into(),
                    origin: "configuration".into(),
                })
            }
        }
        Ok(())
    }

    /// The textual value of `key`, in a form [`RunConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        let adv = &self.adversarial;
        let opt = |v: Option<usize>| v.unwrap_or(0).to_string();
        Some(match key {
            "method" => self.method.tag().to_lowercase(),
            "src_emb" => show_path(&self.src_emb),
            "tgt_emb" => show_path(&self.tgt_emb),
            "seed_dict" => show_path(&self.seed_dict),
            "test_dict" => show_path(&self.test_dict),
            "adversarial_checkpoint" => show_path(&self.adversarial_checkpoint),
            "output_dir" => self.output_dir.display().to_string(),
            "src_lang" => self.src_lang.clone(),
            "tgt_lang" => self.tgt_lang.clone(),
            "direction" => self.direction.as_str().into(),
            "max_vocab" => opt(self.max_vocab),
            "normalize_embeddings" => self.normalize_embeddings.to_string(),
            "eval_ns" => self.eval_ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
            "n_iterations" => self.procrustes.n_iterations.to_string(),
            "dict_top_pairs" => self.procrustes.dict_top_pairs.to_string(),
            "csls_k" => self.procrustes.csls_k.to_string(),
            "mutual_only" => self.procrustes.mutual_only.to_string(),
            "export_mutual_only" => self.procrustes.export_mutual_only.to_string(),
            "s_anchor_pairs" => self.s_anchor_pairs.to_string(),
            "epochs" => adv.epochs.to_string(),
            "steps_per_epoch" => adv.steps_per_epoch.to_string(),
            "batch_size" => adv.batch_size.to_string(),
            "beta" => adv.beta.to_string(),
            "learning_rate" => adv.learning_rate.to_string(),
            "lr_decay" => adv.lr_decay.to_string(),
            "lr_shrink" => adv.lr_shrink.to_string(),
            "sample_top_n" => opt(adv.sample_top_n),
            "label_smoothing" => adv.label_smoothing.to_string(),
            "seed" => adv.rng_seed.to_string(),
            "hidden" => adv.discriminator.hidden.to_string(),
            "leaky_slope" => adv.discriminator.leaky_slope.to_string(),
            "input_dropout" => adv.discriminator.input_dropout.to_string(),
            "init" => match adv.init {
                MappingInit::Identity => "identity".into(),
                MappingInit::RandomOrthogonal => "random-orthogonal".into(),
            },
            "log_interval" => adv.log_interval.to_string(),
            "validation_words" => adv.validation_words.to_string(),
            "validation_max_rank" => adv.validation_max_rank.to_string(),
            _ => return None,
        })
    }

    pub fn refine(&self) -> RefineConfig {
        RefineConfig {
            s_anchor_pairs: self.s_anchor_pairs,
            procrustes: self.procrustes,
        }
    }

    /// Checks required keys, referenced paths and every numeric constraint.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let src = self.src_emb.as_ref().ok_or(ConfigError::Missing {
            key: "src_emb",
            reason: "for every method",
        })?;
        let tgt = self.tgt_emb.as_ref().ok_or(ConfigError::Missing {
            key: "tgt_emb",
            reason: "for every method",
        })?;
        let paths = [
            ("src_emb", Some(src)),
            ("tgt_emb", Some(tgt)),
            ("seed_dict", self.seed_dict.as_ref()),
            ("test_dict", self.test_dict.as_ref()),
            ("adversarial_checkpoint", self.adversarial_checkpoint.as_ref()),
        ];
        for (key, p) in paths {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(ConfigError::MissingPath { key, path: p.clone() });
                }
            }
        }
        if self.method == Method::SemiSupervised && self.seed_dict.is_none() {
            return Err(ConfigError::Missing {
                key: "seed_dict",
                reason: "for semi-sup",
            });
        }
        let invalid = |key: &str, reason: &str| ConfigError::Invalid {
            key: key.into(),
            reason: reason.into(),
        };
        if self.adversarial_checkpoint.is_some() {
            if self.method != Method::SelfSupervisedRefined {
                return Err(invalid("adversarial_checkpoint", "only used by self-sup-re"));
            }
            if self.direction == DirectionMode::Both {
                return Err(invalid(
                    "adversarial_checkpoint",
                    "holds one direction; use forward or reverse",
                ));
            }
        }
        if self.src_lang == self.tgt_lang {
            return Err(invalid("tgt_lang", "must differ from src_lang"));
        }
        if self.eval_ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("eval_ns", "must be strictly ascending"));
        }
        let core = |e: lexalign_core::Error| match e {
            lexalign_core::Error::InvalidConfig { field, reason } => invalid(field, reason),
            other => invalid("configuration", &other.to_string()),
        };
        self.procrustes.validate().map_err(core)?;
        if self.method != Method::SemiSupervised {
            self.adversarial.validate().map_err(core)?;
        }
        if self.method == Method::SelfSupervisedRefined {
            self.refine().validate().map_err(core)?;
        }
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    /// One `key = value` line per key, parseable by [`parse_config_str`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, _) in KEYS {
            writeln!(f, "{key} = {}", self.get(key).expect("every listed key has a value"))?;
        }
        Ok(())
    }
}

/// Parses configuration text. `#` starts a comment; blank lines are ignored.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed {
            origin: origin.into(),
            line: i + 1,
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_owned()) {
            return Err(ConfigError::Duplicate {
                key: key.into(),
                origin: origin.into(),
                line: i + 1,
            });
        }
        cfg.set(key, value).map_err(|e| match e {
            ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey {
                key,
                origin: format!("{origin}:{}", i + 1),
            },
            other => other,
        })?;
    }
    Ok(cfg)
}

/// Reads the optional file, then applies `overrides` in order.
pub fn parse_config(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, crate::Error> {
    let mut cfg = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| crate::Error::io(p, e))?;
            parse_config_str(&text, &p.display().to_string())?
        }
        None => RunConfig::default(),
    };
    for (key, value) in overrides {
        cfg.set(key, value).map_err(|e| match e {
            ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey {
                key,
                origin: "command line".into(),
            },
            other => other,
        })?;
    }
    Ok(cfg)
}
