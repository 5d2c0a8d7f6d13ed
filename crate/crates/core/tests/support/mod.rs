//! Deterministic synthetic test language: a fixed CV-syllable lexicon with
//! tone, nasal, and laxness marks, plus line samplers built on it. Every
//! generator is a pure function of its seed.

use diac_core::rng::SplitMix64;

/// Seed behind the corpora used by the large end-to-end checks.
pub const CORPUS_SEED: u64 = 0xD1AC;

/// Word mass of the full synthetic corpus. Sized so an 80% train split
/// stays comfortably above the largest 50k-word training budget exercised
/// against it.
pub const CORPUS_WORDS: usize = 66_000;

pub const ONSETS: &[char] = &['b', 'd', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'w', 'y'];
pub const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

/// Combining marks the lexicon draws from: grave, acute, circumflex,
/// line below, diaeresis.
pub const MARKS: &[char] = &['\u{300}', '\u{301}', '\u{302}', '\u{331}', '\u{308}'];

fn pick<T: Copy>(rng: &mut SplitMix64, items: &[T]) -> T {
    items[rng.next_below(items.len() as u64) as usize]
}

/// A fixed lexicon of distinct CV(CV(CV)) words. Roughly half carry one
/// combining mark on one vowel, always the same vowel of the same word,
/// so the mapping from stripped form to gold form is learnable.
pub fn lexicon(n_words: usize, seed: u64) -> Vec<String> {
    let mut rng = SplitMix64::new(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while out.len() < n_words {
        let syllables = 1 + rng.next_below(3);
        let mut word = String::new();
        let mut vowel_ends = Vec::new();
        for _ in 0..syllables {
            word.push(pick(&mut rng, ONSETS));
            word.push(pick(&mut rng, VOWELS));
            vowel_ends.push(word.len());
        }
        if rng.next_unit() < 0.5 {
            let at = vowel_ends[rng.next_below(vowel_ends.len() as u64) as usize];
            word.insert(at, pick(&mut rng, MARKS));
        }
        if seen.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

/// Samples one line of 5 to 10 lexicon words, skewed toward low ranks so
/// the corpus has a frequent core and a long tail.
fn sample_line(lexicon: &[String], rng: &mut SplitMix64) -> (String, usize) {
    let n_words = 5 + rng.next_below(6) as usize;
    let n = lexicon.len() as u64;
    let mut words = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        let rank = rng.next_below(n).min(rng.next_below(n)) as usize;
        words.push(lexicon[rank].as_str());
    }
    (words.join(" "), n_words)
}

/// Gold lines totalling at least `target_words` words.
pub fn gold_corpus_lines(lexicon: &[String], target_words: usize, seed: u64) -> Vec<String> {
    let mut rng = SplitMix64::new(seed);
    let mut lines = Vec::new();
    let mut words = 0;
    while words < target_words {
        let (line, n) = sample_line(lexicon, &mut rng);
        words += n;
        lines.push(line);
    }
    lines
}

/// A small batch of gold lines, for checks that need variety rather than
/// mass.
pub fn gold_lines(lexicon: &[String], n_lines: usize, seed: u64) -> Vec<String> {
    let mut rng = SplitMix64::new(seed);
    (0..n_lines)
        .map(|_| sample_line(lexicon, &mut rng).0)
        .collect()
}

/// The default lexicon used by the end-to-end checks.
pub fn default_lexicon() -> Vec<String> {
    lexicon(180, CORPUS_SEED)
}
