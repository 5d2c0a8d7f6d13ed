//! Evaluation: word error rate, diacritic-focused transcriptions, and
//! per-class precision/recall/F1 with confusion matrices.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::orthography::{
    fold_variants, segment_pieces, Grapheme, LanguageProfile, MarkCategory, Piece, SchemeRule,
    SchemeSpec,
};
use crate::{Error, Result};

/// A line rewritten as diacritic-focused codes, one code per word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptionString {
    words: Vec<Vec<char>>,
    empty_words: usize,
    anomalies: usize,
}

impl TranscriptionString {
    /// Label sequences per word. A word with nothing to label is empty.
    pub fn words(&self) -> &[Vec<char>] {
        &self.words
    }

    /// Words that produced no labels at all (no vowels, or no letters).
    pub fn empty_words(&self) -> usize {
        self.empty_words
    }

    /// Structures the labeling rule could not account for, e.g. consonants
    /// with no following vowel in a strictly (C)V language.
    pub fn anomalies(&self) -> usize {
        self.anomalies
    }

    /// Whitespace-joined codes; empty codes render as "-" so the word
    /// count stays visible.
    pub fn rendered(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            if w.is_empty() {
                out.push('-');
            } else {
                out.extend(w.iter());
            }
        }
        out
    }
}

/// Rewrites a line under one transcription scheme. Punctuation and digits
/// carry no labels; an all-unlabelable word keeps its slot as an empty
/// code.
pub fn transcribe(
    line: &str,
    scheme: &SchemeSpec,
    profile: &LanguageProfile,
) -> TranscriptionString {
    let folded = fold_variants(line, profile);
    let mut words = Vec::new();
    let mut empty_words = 0;
    let mut anomalies = 0;
    for token in folded.split_whitespace() {
        let graphemes: Vec<Grapheme> = segment_pieces(token, profile)
            .into_iter()
            .filter_map(|(_, piece)| match piece {
                Piece::Grapheme(g) => Some(g),
                Piece::Orphan(_) => {
                    anomalies += 1;
                    None
                }
            })
            .collect();
        let labels = match scheme.rule {
            SchemeRule::BribriTones => {
                vowel_labels(&graphemes, profile, |g| tone_label(g, profile))
            }
            SchemeRule::BribriNasal => vowel_labels(&graphemes, profile, |g| {
                category_label(g, profile, MarkCategory::Nasality, 'N', 'O')
            }),
            SchemeRule::BribriUmlaut => vowel_labels(&graphemes, profile, |g| {
                category_label(g, profile, MarkCategory::Quality, 'L', 'T')
            }),
            SchemeRule::CimLength => {
                let (sylls, bad) = syllabify(&graphemes, profile);
                anomalies += bad;
                sylls
                    .iter()
                    .map(|s| category_label(&s.vowel, profile, MarkCategory::Length, 'L', 'S'))
                    .collect()
            }
            SchemeRule::CimConsonants => {
                let (sylls, bad) = syllabify(&graphemes, profile);
                anomalies += bad;
                sylls
                    .iter()
                    .map(|s| match s.onset {
                        Onset::None => 'N',
                        Onset::Consonant => 'C',
                        Onset::Glottal => 'G',
                    })
                    .collect()
            }
            SchemeRule::CimGlottalPresence => {
                let lettered = graphemes
                    .iter()
                    .any(|g| g.base.is_alphabetic() || profile.is_glottal_char(g.base));
                if !lettered {
                    Vec::new()
                } else {
                    let glottals = graphemes
                        .iter()
                        .filter(|g| profile.is_glottal_char(g.base) || g.trailing_glottal)
                        .count();
                    if glottals == 0 {
                        vec!['N']
                    } else {
                        vec!['G'; glottals]
                    }
                }
            }
        };
        if labels.is_empty() {
            empty_words += 1;
        }
        words.push(labels);
    }
    TranscriptionString {
        words,
        empty_words,
        anomalies,
    }
}

fn vowel_labels<F>(graphemes: &[Grapheme], profile: &LanguageProfile, label: F) -> Vec<char>
where
    F: Fn(&Grapheme) -> char,
{
    graphemes
        .iter()
        .filter(|g| profile.is_vowel(g.base))
        .map(label)
        .collect()
}

fn tone_label(g: &Grapheme, profile: &LanguageProfile) -> char {
    if g.trailing_glottal {
        return 'G';
    }
    for idx in g.marks.iter() {
        let class = &profile.classes()[idx as usize];
        if class.category == MarkCategory::Tone {
            return class
                .tag
                .chars()
                .next()
                .map(|c| c.to_ascii_uppercase())
                .unwrap_or('L');
        }
    }
    'L'
}

fn category_label(
    g: &Grapheme,
    profile: &LanguageProfile,
    category: MarkCategory,
    marked: char,
    unmarked: char,
) -> char {
    let has = g
        .marks
        .iter()
        .any(|idx| profile.classes()[idx as usize].category == category);
    if has {
        marked
    } else {
        unmarked
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Onset {
    None,
    Consonant,
    Glottal,
}

struct Syllable {
    onset: Onset,
    vowel: Grapheme,
}

/// Strict (C)V parse: an onset is at most one consonant or glottal letter
/// before its vowel. Consonants with no vowel to attach to (clusters,
/// codas) are counted as anomalies and skipped.
fn syllabify(graphemes: &[Grapheme], profile: &LanguageProfile) -> (Vec<Syllable>, usize) {
    let mut sylls = Vec::new();
    let mut pending: Option<Onset> = None;
    let mut anomalies = 0;
    for g in graphemes {
        if profile.is_glottal_char(g.base) {
            if pending.replace(Onset::Glottal).is_some() {
                anomalies += 1;
            }
        } else if profile.is_vowel(g.base) {
            sylls.push(Syllable {
                onset: pending.take().unwrap_or(Onset::None),
                vowel: g.clone(),
            });
        } else if profile.is_consonant(g.base) {
            if pending.replace(Onset::Consonant).is_some() {
                anomalies += 1;
            }
        }
    }
    if pending.is_some() {
        anomalies += 1;
    }
    (sylls, anomalies)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EditOp {
    Keep(usize, usize),
    Sub(usize, usize),
    Del(usize),
    Ins(usize),
}

fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Minimal-cost alignment, backtraced with a fixed preference order
/// (diagonal, then deletion, then insertion) so it is deterministic.
fn edit_script<T: PartialEq>(a: &[T], b: &[T]) -> Vec<EditOp> {
    let n = a.len();
    let m = b.len();
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut ops = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let sub_cost = usize::from(a[i - 1] != b[j - 1]);
            if d[i][j] == d[i - 1][j - 1] + sub_cost {
                ops.push(if sub_cost == 0 {
                    EditOp::Keep(i - 1, j - 1)
                } else {
                    EditOp::Sub(i - 1, j - 1)
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            ops.push(EditOp::Del(i - 1));
            i -= 1;
        } else {
            ops.push(EditOp::Ins(j - 1));
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Word error rate as a percentage: 100 × summed word-level edit distance
/// over total reference words. Insertions can push it past 100.
pub fn wer<R: AsRef<str>, H: AsRef<str>>(refs: &[R], hyps: &[H]) -> Result<f64> {
    if refs.len() != hyps.len() {
        return Err(Error::LineCountMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    let mut dist = 0usize;
    let mut words = 0usize;
    for (r, h) in refs.iter().zip(hyps) {
        let rt: Vec<&str> = r.as_ref().split_whitespace().collect();
        let ht: Vec<&str> = h.as_ref().split_whitespace().collect();
        dist += edit_distance(&rt, &ht);
        words += rt.len();
    }
    if words == 0 {
        return if dist == 0 {
            Ok(0.0)
        } else {
            Err(Error::EmptyCorpus)
        };
    }
    Ok(100.0 * dist as f64 / words as f64)
}

/// Reference-label × hypothesis-label counts. The final `eps` row and
/// column hold insertions and deletions, so precision and recall for any
/// class recompute exactly from the matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    fn new(alphabet: &[char]) -> Self {
        let mut labels: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
        labels.push("eps".into());
        let n = labels.len();
        ConfusionMatrix {
            labels,
            rows: vec![vec![0; n]; n],
        }
    }

    fn index(&self, label: Option<char>) -> usize {
        match label {
            Some(c) => self
                .labels
                .iter()
                .position(|l| l.len() == c.len_utf8() && l.chars().next() == Some(c))
                .unwrap_or(self.labels.len() - 1),
            None => self.labels.len() - 1,
        }
    }

    fn bump(&mut self, ref_label: Option<char>, hyp_label: Option<char>) {
        let i = self.index(ref_label);
        let j = self.index(hyp_label);
        self.rows[i][j] += 1;
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().flatten().sum()
    }

    /// Count of reference occurrences of a label (its row sum).
    pub fn row_sum(&self, label: &str) -> u64 {
        match self.labels.iter().position(|l| l == label) {
            Some(i) => self.rows[i].iter().sum(),
            None => 0,
        }
    }

    /// Count of hypothesis occurrences of a label (its column sum).
    pub fn col_sum(&self, label: &str) -> u64 {
        match self.labels.iter().position(|l| l == label) {
            Some(j) => self.rows.iter().map(|r| r[j]).sum(),
            None => 0,
        }
    }

    pub fn diagonal(&self, label: &str) -> u64 {
        match self.labels.iter().position(|l| l == label) {
            Some(i) => self.rows[i][i],
            None => 0,
        }
    }
}

/// Precision, recall, and F1 for one label, as percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Reference occurrences of the label.
    pub support: u64,
}

fn class_scores(confusion: &ConfusionMatrix, alphabet: &[char]) -> Vec<ClassScore> {
    alphabet
        .iter()
        .map(|&c| {
            let label = c.to_string();
            let tp = confusion.diagonal(&label);
            let row = confusion.row_sum(&label);
            let col = confusion.col_sum(&label);
            let fp = col - tp;
            let fn_ = row - tp;
            let (precision, recall, f1) = if tp + fp + fn_ == 0 {
                // The label never occurred on either side; nothing was
                // mishandled, so the class scores clean.
                (100.0, 100.0, 100.0)
            } else {
                let p = if tp + fp == 0 {
                    0.0
                } else {
                    100.0 * tp as f64 / (tp + fp) as f64
                };
                let r = if tp + fn_ == 0 {
                    0.0
                } else {
                    100.0 * tp as f64 / (tp + fn_) as f64
                };
                let f1 = if p + r == 0.0 {
                    0.0
                } else {
                    2.0 * p * r / (p + r)
                };
                (p, r, f1)
            };
            ClassScore {
                label,
                precision,
                recall,
                f1,
                support: row,
            }
        })
        .collect()
}

/// Transcribes both sides under the scheme and scores labels against each
/// other. Words align positionally when the sentences have equal word
/// counts and by a surface-word edit script otherwise; labels within an
/// aligned word pair align positionally when counts match and by a
/// label-level edit script otherwise. Unmatched labels land in the
/// epsilon row (hypothesis insertions) or column (deletions).
pub fn label_scores<R: AsRef<str>, H: AsRef<str>>(
    refs: &[R],
    hyps: &[H],
    scheme: &SchemeSpec,
    profile: &LanguageProfile,
) -> Result<(Vec<ClassScore>, ConfusionMatrix)> {
    if refs.len() != hyps.len() {
        return Err(Error::LineCountMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    let alphabet = scheme.label_alphabet();
    let mut conf = ConfusionMatrix::new(alphabet);
    for (r, h) in refs.iter().zip(hyps) {
        let rt = transcribe(r.as_ref(), scheme, profile);
        let ht = transcribe(h.as_ref(), scheme, profile);
        let pairs: Vec<(Option<usize>, Option<usize>)> = if rt.words.len() == ht.words.len() {
            (0..rt.words.len()).map(|i| (Some(i), Some(i))).collect()
        } else {
            let rf = fold_variants(r.as_ref(), profile);
            let hf = fold_variants(h.as_ref(), profile);
            let rw: Vec<&str> = rf.split_whitespace().collect();
            let hw: Vec<&str> = hf.split_whitespace().collect();
            edit_script(&rw, &hw)
                .into_iter()
                .map(|op| match op {
                    EditOp::Keep(i, j) | EditOp::Sub(i, j) => (Some(i), Some(j)),
                    EditOp::Del(i) => (Some(i), None),
                    EditOp::Ins(j) => (None, Some(j)),
                })
                .collect()
        };
        for (ri, hi) in pairs {
            match (ri, hi) {
                (Some(ri), Some(hi)) => {
                    let rl = &rt.words[ri];
                    let hl = &ht.words[hi];
                    if rl.len() == hl.len() {
                        for (&a, &b) in rl.iter().zip(hl) {
                            conf.bump(Some(a), Some(b));
                        }
                    } else {
                        for op in edit_script(rl, hl) {
                            match op {
                                EditOp::Keep(i, j) | EditOp::Sub(i, j) => {
                                    conf.bump(Some(rl[i]), Some(hl[j]));
                                }
                                EditOp::Del(i) => conf.bump(Some(rl[i]), None),
                                EditOp::Ins(j) => conf.bump(None, Some(hl[j])),
                            }
                        }
                    }
                }
                (Some(ri), None) => {
                    for &a in &rt.words[ri] {
                        conf.bump(Some(a), None);
                    }
                }
                (None, Some(hi)) => {
                    for &b in &ht.words[hi] {
                        conf.bump(None, Some(b));
                    }
                }
                (None, None) => unreachable!("edit ops always touch a side"),
            }
        }
    }
    Ok((class_scores(&conf, alphabet), conf))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub name: String,
    pub label_wer: f64,
    pub classes: Vec<ClassScore>,
    pub confusion: ConfusionMatrix,
    /// Reference words that produced no labels under this scheme.
    pub empty_words: usize,
    /// Reference-side structures the labeling rule could not parse.
    pub anomalies: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub sentences: usize,
    pub ref_words: usize,
    pub hyp_words: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub wer: f64,
    pub schemes: Vec<SchemeReport>,
    pub counts: EvalCounts,
}

/// Scores a hypothesis against its reference: surface WER plus, for every
/// scheme the profile defines, a label WER and per-class scores. Both
/// sides are variant-folded first so differently normalized but equal
/// text compares clean.
pub fn evaluate<R: AsRef<str>, H: AsRef<str>>(
    refs: &[R],
    hyps: &[H],
    profile: &LanguageProfile,
) -> Result<EvalReport> {
    if refs.len() != hyps.len() {
        return Err(Error::LineCountMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    let refs_f: Vec<String> = refs
        .iter()
        .map(|l| fold_variants(l.as_ref(), profile))
        .collect();
    let hyps_f: Vec<String> = hyps
        .iter()
        .map(|l| fold_variants(l.as_ref(), profile))
        .collect();
    let surface_wer = wer(&refs_f, &hyps_f)?;
    let mut schemes = Vec::new();
    for scheme in profile.schemes() {
        let mut ref_codes = Vec::with_capacity(refs_f.len());
        let mut hyp_codes = Vec::with_capacity(hyps_f.len());
        let mut empty_words = 0;
        let mut anomalies = 0;
        for line in &refs_f {
            let t = transcribe(line, scheme, profile);
            empty_words += t.empty_words();
            anomalies += t.anomalies();
            ref_codes.push(t.rendered());
        }
        for line in &hyps_f {
            hyp_codes.push(transcribe(line, scheme, profile).rendered());
        }
        let label_wer = wer(&ref_codes, &hyp_codes)?;
        let (classes, confusion) = label_scores(&refs_f, &hyps_f, scheme, profile)?;
        schemes.push(SchemeReport {
            name: scheme.name.clone(),
            label_wer,
            classes,
            confusion,
            empty_words,
            anomalies,
        });
    }
    let ref_words = refs_f.iter().map(|l| l.split_whitespace().count()).sum();
    let hyp_words = hyps_f.iter().map(|l| l.split_whitespace().count()).sum();
    Ok(EvalReport {
        wer: surface_wer,
        schemes,
        counts: EvalCounts {
            sentences: refs_f.len(),
            ref_words,
            hyp_words,
        },
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Fixed-width table mirroring the structure of the JSON report.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "sentences {}  ref-words {}  hyp-words {}",
            self.counts.sentences, self.counts.ref_words, self.counts.hyp_words
        );
        let _ = writeln!(out, "WER {:.1}", self.wer);
        for s in &self.schemes {
            let _ = writeln!(out);
            let _ = writeln!(out, "scheme {}  label-WER {:.1}", s.name, s.label_wer);
            if s.empty_words > 0 || s.anomalies > 0 {
                let _ = writeln!(
                    out,
                    "  unlabeled words {}  anomalies {}",
                    s.empty_words, s.anomalies
                );
            }
            let _ = writeln!(
                out,
                "  {:<6} {:>7} {:>7} {:>7} {:>9}",
                "class", "P", "R", "F1", "support"
            );
            for c in &s.classes {
                let _ = writeln!(
                    out,
                    "  {:<6} {:>7.1} {:>7.1} {:>7.1} {:>9}",
                    c.label, c.precision, c.recall, c.f1, c.support
                );
            }
            let _ = writeln!(out, "  confusion (rows reference, cols hypothesis):");
            let _ = write!(out, "  {:>6}", "");
            for l in &s.confusion.labels {
                let _ = write!(out, " {l:>6}");
            }
            let _ = writeln!(out);
            for (i, row) in s.confusion.rows.iter().enumerate() {
                let _ = write!(out, "  {:>6}", s.confusion.labels[i]);
                for v in row {
                    let _ = write!(out, " {v:>6}");
                }
                let _ = writeln!(out);
            }
        }
        out
    }
}
