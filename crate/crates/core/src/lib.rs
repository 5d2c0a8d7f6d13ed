//! Diacritic restoration toolkit for low-resource orthographies.
//!
//! The crate is organized around a [`LanguageProfile`] that declares an
//! orthography's vowels, diacritic classes, glottal mark, and variant folds.
//! Everything else consumes a profile: corpus preparation, character n-gram
//! language models, lattice-based restoration, transcription-level scoring,
//! diacritic corruption, and experiment orchestration.

pub mod analysis;
pub mod corpus;
pub mod corruptor;
pub mod error;
pub mod experiment;
pub mod lm;
pub mod orthography;
pub mod restorer;
pub mod rng;

mod binio;

pub use error::Error;
pub use orthography::{Grapheme, LanguageProfile};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
