use crate::orthography::{GlottalPosition, Grapheme, LanguageProfile, MarkCategory, MarkSet};

/// One way to realize a source grapheme: usually a single marked grapheme,
/// or a glottal onset plus the vowel for orthographies that insert one.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub graphemes: Vec<Grapheme>,
    /// Composed form of each grapheme, aligned with `graphemes`.
    pub syms: Vec<String>,
    /// Concatenation of `syms`: what this candidate writes.
    pub composed: String,
}

#[derive(Debug, Clone)]
pub struct Position {
    /// Candidates in enumeration order; index 0 is always the identity.
    pub candidates: Vec<Candidate>,
}

/// Per-grapheme candidate sets for one source line.
#[derive(Debug, Clone)]
pub struct DiacritizationLattice {
    pub positions: Vec<Position>,
}

impl DiacritizationLattice {
    /// Total number of full paths, saturating at `usize::MAX`.
    pub fn path_count(&self) -> usize {
        self.positions
            .iter()
            .map(|p| p.candidates.len())
            .fold(1usize, |acc, n| acc.saturating_mul(n))
    }

    /// Whether the gold grapheme sequence is reachable as a path.
    pub fn contains(&self, gold: &[Grapheme]) -> bool {
        let mut reachable = vec![0usize];
        for pos in &self.positions {
            let mut next = Vec::new();
            for &at in &reachable {
                for cand in &pos.candidates {
                    let n = cand.graphemes.len();
                    if gold.len() >= at + n && gold[at..at + n] == cand.graphemes[..] {
                        if !next.contains(&(at + n)) {
                            next.push(at + n);
                        }
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            reachable = next;
        }
        reachable.contains(&gold.len())
    }

    /// The line produced by taking the identity candidate everywhere.
    pub fn identity_line(&self) -> String {
        self.positions
            .iter()
            .map(|p| p.candidates[0].composed.as_str())
            .collect()
    }
}

/// Builds the candidate lattice for a stripped, variant-folded line.
///
/// Vowels fan out over every combination of the profile's mark categories
/// (at most one class per category), plus optional glottal marking when
/// `insertion_allowed` is set. Everything else gets only its identity.
pub fn build_lattice(
    source: &str,
    profile: &LanguageProfile,
    insertion_allowed: bool,
) -> DiacritizationLattice {
    let graphemes: Vec<Grapheme> = crate::orthography::segment_pieces(source, profile)
        .into_iter()
        .map(|(_, piece)| match piece {
            crate::orthography::Piece::Grapheme(g) => g,
            crate::orthography::Piece::Orphan(c) => Grapheme::new(c),
        })
        .collect();
    build_from_graphemes(&graphemes, profile, insertion_allowed)
}

pub(crate) fn build_from_graphemes(
    graphemes: &[Grapheme],
    profile: &LanguageProfile,
    insertion_allowed: bool,
) -> DiacritizationLattice {
    let tones = profile.classes_in(MarkCategory::Tone);
    let nasals = profile.classes_in(MarkCategory::Nasality);
    let qualities = profile.classes_in(MarkCategory::Quality);
    let lengths = profile.classes_in(MarkCategory::Length);
    let glottal = profile.glottal();

    let mut positions = Vec::with_capacity(graphemes.len());
    // True at word starts and after vowels: the spots where a glottal
    // onset may be inserted.
    let mut at_onset = true;

    for g in graphemes {
        let is_vowel = profile.is_vowel(g.base);
        if !is_vowel {
            positions.push(Position {
                candidates: vec![identity(g, profile)],
            });
            at_onset = !g.base.is_alphabetic();
            continue;
        }

        let mut candidates = Vec::new();
        let glottal_options: &[bool] = match (insertion_allowed, glottal) {
            (true, Some(spec)) => match spec.position {
                GlottalPosition::AfterVowel => &[false, true],
                GlottalPosition::SyllableOnset if at_onset => &[false, true],
                GlottalPosition::SyllableOnset => &[false],
            },
            _ => &[false],
        };

        for &with_glottal in glottal_options {
            for tone in options(&tones) {
                for nasal in options(&nasals) {
                    for quality in options(&qualities) {
                        if !profile.nasal_on_lax() && nasal.is_some() && quality.is_some() {
                            continue;
                        }
                        for length in options(&lengths) {
                            let mut marks = MarkSet::empty();
                            for idx in [tone, nasal, quality, length].into_iter().flatten() {
                                marks.insert(idx as u8);
                            }
                            let mut vowel = g.clone();
                            vowel.marks = marks;
                            vowel.trailing_glottal = false;

                            let mut graphemes = Vec::with_capacity(2);
                            match (with_glottal, glottal) {
                                (true, Some(spec))
                                    if spec.position == GlottalPosition::AfterVowel =>
                                {
                                    vowel.trailing_glottal = true;
                                    graphemes.push(vowel);
                                }
                                (true, Some(spec)) => {
                                    graphemes.push(Grapheme::new(spec.mark));
                                    graphemes.push(vowel);
                                }
                                _ => graphemes.push(vowel),
                            }
                            candidates.push(make_candidate(graphemes, profile));
                        }
                    }
                }
            }
        }
        positions.push(Position { candidates });
        at_onset = true;
    }

    DiacritizationLattice { positions }
}

fn options(classes: &[usize]) -> impl Iterator<Item = Option<usize>> + '_ {
    std::iter::once(None).chain(classes.iter().map(|&i| Some(i)))
}

fn identity(g: &Grapheme, profile: &LanguageProfile) -> Candidate {
    // Defensive: the lattice is defined over stripped text, so drop any
    // marks that slipped through rather than duplicating them.
    make_candidate(vec![g.stripped()], profile)
}

fn make_candidate(graphemes: Vec<Grapheme>, profile: &LanguageProfile) -> Candidate {
    let syms: Vec<String> = graphemes.iter().map(|g| g.compose(profile)).collect();
    let composed = syms.concat();
    Candidate {
        graphemes,
        syms,
        composed,
    }
}
