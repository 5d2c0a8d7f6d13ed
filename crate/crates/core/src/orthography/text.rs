use unicode_normalization::char::{
    canonical_combining_class, decompose_canonical, is_combining_mark,
};
use unicode_normalization::UnicodeNormalization;

use crate::{Error, Result};

use super::profile::{GlottalPosition, LanguageProfile};

/// Set of diacritic classes carried by one grapheme, as a bitmask over the
/// profile's class indices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkSet(u16);

impl MarkSet {
    pub fn empty() -> Self {
        MarkSet(0)
    }

    pub fn contains(self, class: u8) -> bool {
        self.0 & (1 << class) != 0
    }

    pub fn insert(&mut self, class: u8) {
        self.0 |= 1 << class;
    }

    pub fn remove(&mut self, class: u8) {
        self.0 &= !(1 << class);
    }

    pub fn clear(&mut self) {
        self.0 = 0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0..16).filter(move |i| self.contains(*i))
    }
}

/// One written symbol: a base character, the profile diacritics attached to
/// it, any combining marks outside the profile (kept verbatim), and an
/// optional trailing glottal mark for orthographies that close vowels with
/// one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grapheme {
    pub base: char,
    pub marks: MarkSet,
    extra: Vec<char>,
    pub trailing_glottal: bool,
}

impl Grapheme {
    pub fn new(base: char) -> Self {
        Grapheme {
            base,
            marks: MarkSet::empty(),
            extra: Vec::new(),
            trailing_glottal: false,
        }
    }

    pub fn with_marks(base: char, marks: MarkSet, trailing_glottal: bool) -> Self {
        Grapheme {
            base,
            marks,
            extra: Vec::new(),
            trailing_glottal,
        }
    }

    pub fn is_bare(&self) -> bool {
        self.marks.is_empty() && self.extra.is_empty() && !self.trailing_glottal
    }

    /// Canonical written form: base, profile marks innermost-first, foreign
    /// marks, then the glottal mark, normalized to NFC.
    pub fn compose(&self, profile: &LanguageProfile) -> String {
        let mut raw = String::with_capacity(8);
        raw.push(self.base);
        let mut ordered: Vec<(u8, u8, u8)> = self
            .marks
            .iter()
            .filter(|&i| (i as usize) < profile.classes().len())
            .map(|i| {
                let class = &profile.classes()[i as usize];
                (
                    canonical_combining_class(class.mark),
                    class.category.compose_rank(),
                    i,
                )
            })
            .collect();
        ordered.sort_unstable();
        for (_, _, i) in ordered {
            raw.push(profile.classes()[i as usize].mark);
        }
        for &c in &self.extra {
            raw.push(c);
        }
        if self.trailing_glottal {
            if let Some(g) = profile.glottal() {
                raw.push(g.mark);
            }
        }
        raw.nfc().collect()
    }

    /// Same grapheme with every profile mark and glottal removed.
    pub fn stripped(&self) -> Grapheme {
        Grapheme {
            base: self.base,
            marks: MarkSet::empty(),
            extra: self.extra.clone(),
            trailing_glottal: false,
        }
    }
}

/// A lenient segmentation item: combining marks with no preceding base
/// character survive as orphans instead of failing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Piece {
    Grapheme(Grapheme),
    Orphan(char),
}

pub(crate) fn segment_pieces(text: &str, profile: &LanguageProfile) -> Vec<(usize, Piece)> {
    let mut pieces: Vec<(usize, Piece)> = Vec::new();
    let mut cur: Option<(usize, Grapheme)> = None;
    let glottal = profile.glottal();

    let flush = |cur: &mut Option<(usize, Grapheme)>, pieces: &mut Vec<(usize, Piece)>| {
        if let Some((at, g)) = cur.take() {
            pieces.push((at, Piece::Grapheme(g)));
        }
    };

    for (at, ch) in text.char_indices() {
        let mut parts: Vec<char> = Vec::with_capacity(2);
        decompose_canonical(ch, |c| parts.push(c));
        for c in parts {
            if is_combining_mark(c) {
                match cur.as_mut() {
                    Some((_, g)) if g.trailing_glottal => {
                        // A mark after an attached glottal belongs to the
                        // glottal character itself; give the glottal its own
                        // grapheme so the written order survives.
                        g.trailing_glottal = false;
                        let mark = glottal.map(|s| s.mark).unwrap_or('\'');
                        flush(&mut cur, &mut pieces);
                        let mut g = Grapheme::new(mark);
                        attach(&mut g, c, profile);
                        cur = Some((at, g));
                    }
                    Some((_, g)) => attach(g, c, profile),
                    None => pieces.push((at, Piece::Orphan(c))),
                }
            } else {
                let attach_glottal = glottal.is_some_and(|spec| {
                    spec.position == GlottalPosition::AfterVowel
                        && c == spec.mark
                        && cur
                            .as_ref()
                            .is_some_and(|(_, g)| profile.is_vowel(g.base) && !g.trailing_glottal)
                });
                if attach_glottal {
                    cur.as_mut().unwrap().1.trailing_glottal = true;
                } else {
                    flush(&mut cur, &mut pieces);
                    cur = Some((at, Grapheme::new(c)));
                }
            }
        }
    }
    flush(&mut cur, &mut pieces);
    pieces
}

fn attach(g: &mut Grapheme, mark: char, profile: &LanguageProfile) {
    match profile.class_of_mark(mark) {
        Some(idx) => g.marks.insert(idx),
        None => g.extra.push(mark),
    }
}

/// Splits text into graphemes. Input is decomposed on the fly, so NFC and
/// NFD spellings of the same text segment identically.
pub fn segment(text: &str, profile: &LanguageProfile) -> Result<Vec<Grapheme>> {
    let mut out = Vec::with_capacity(text.len());
    for (at, piece) in segment_pieces(text, profile) {
        match piece {
            Piece::Grapheme(g) => out.push(g),
            Piece::Orphan(_) => {
                return Err(Error::OrphanMark {
                    byte: at,
                    line: None,
                })
            }
        }
    }
    Ok(out)
}

/// Rewrites variant codepoints to their canonical forms and renders the
/// text in canonical composed order. Idempotent; unknown codepoints pass
/// through unchanged.
pub fn fold_variants(text: &str, profile: &LanguageProfile) -> String {
    let decomposed: Vec<char> = text.nfd().collect();
    let folds = profile.folds();
    let mut rewritten: Vec<char> = Vec::with_capacity(decomposed.len());
    let mut i = 0;
    'outer: while i < decomposed.len() {
        for (from, to) in folds {
            if decomposed[i..].starts_with(from) {
                rewritten.extend_from_slice(to);
                i += from.len();
                continue 'outer;
            }
        }
        rewritten.push(decomposed[i]);
        i += 1;
    }

    let rewritten: String = rewritten.into_iter().collect();
    let mut out = String::with_capacity(rewritten.len());
    for (_, piece) in segment_pieces(&rewritten, profile) {
        match piece {
            Piece::Grapheme(g) => out.push_str(&g.compose(profile)),
            Piece::Orphan(c) => out.push(c),
        }
    }
    out
}

/// Removes every profile diacritic and glottal mark, keeping base letters,
/// casing, spacing, and out-of-profile characters.
/// Byte ranges of whitespace-delimited tokens, in order.
pub(crate) fn token_spans(line: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                spans.push((s, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        spans.push((s, line.len()));
    }
    spans
}

pub fn strip_diacritics(text: &str, profile: &LanguageProfile) -> String {
    let onset_glottal = profile
        .glottal()
        .is_some_and(|g| g.position == GlottalPosition::SyllableOnset);
    let mut out = String::with_capacity(text.len());
    for (_, piece) in segment_pieces(text, profile) {
        match piece {
            Piece::Grapheme(g) => {
                if onset_glottal && profile.is_glottal_char(g.base) {
                    continue;
                }
                // A bare glottal char directly after a vowel would re-attach
                // on the next parse, so stripped text may never contain it.
                if profile.is_glottal_char(g.base)
                    && g.is_bare()
                    && out.chars().last().is_some_and(|c| profile.is_vowel(c))
                {
                    continue;
                }
                out.push_str(&g.stripped().compose(profile));
            }
            Piece::Orphan(c) => {
                if profile.class_of_mark(c).is_none() {
                    out.push(c);
                }
            }
        }
    }
    out
}
