//! Orthography profiles and grapheme-level text operations.

mod profile;
mod text;

pub use profile::{
    builtin_profiles, DiacriticClass, GlottalPosition, GlottalSpec, LanguageProfile, MarkCategory,
    SchemeRule, SchemeSpec, SchemeUnit,
};
pub use text::{fold_variants, segment, strip_diacritics, Grapheme, MarkSet};

pub(crate) use text::{segment_pieces, token_spans, Piece};
