//! Alignment of two monolingual word-embedding spaces into a shared space.
//!
//! Three ways to learn the orthogonal map `W` from source to target space:
//!
//! * [`procrustes`]: orthogonal Procrustes on a seed dictionary, iterated with
//!   anchors regenerated by CSLS retrieval.
//! * [`adversarial`]: a discriminator/generator game with no bilingual
//!   supervision at all.
//! * [`refine`]: adversarial training followed by Procrustes on the most
//!   frequent pairs the adversarial map induces.
//!
//! Dictionaries are induced and evaluated with cross-domain similarity local
//! scaling ([`csls`]). The crate is `no_std` (with `alloc`) when built without
//! the default `std` feature; file formats and the command line live in the
//! `lexalign` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adversarial;
pub mod csls;
pub mod embedding;
mod error;
pub mod eval;
pub mod geometry;
pub mod matrix;
pub mod pca;
pub mod procrustes;
pub mod refine;
pub mod synth;

pub use csls::CslsIndex;
pub use embedding::{DictEntry, Direction, EmbeddingSet, InducedDictionary, SeedDictionary};
pub use error::{Error, Result};
pub use geometry::{MappingMatrix, RetractionConfig};
pub use matrix::Matrix;
