//! Synthetic misspelling: probabilistically drops or swaps diacritics so
//! gold text becomes partially wrong correction-mode input.

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::corpus::ParallelCorpus;
use crate::orthography::{
    fold_variants, segment_pieces, token_spans, GlottalPosition, Grapheme, LanguageProfile, Piece,
};
use crate::rng::site_unit;
use crate::{Error, Result};

const BRIBRI_DEFAULT: &str = include_str!("../configs/bribri-default.toml");
const CIM_DEFAULT: &str = include_str!("../configs/cim-default.toml");

/// What happens to a matched mark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transform {
    Keep,
    Drop,
    /// Replace the mark with another class of the same category.
    Swap(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub transform: Transform,
    pub p: f64,
}

/// Restricts a rule to sites inside a written pattern at a word edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SitePattern {
    Anywhere,
    Prefix(String),
    Suffix(String),
}

/// One first-match-wins rewrite rule: which mark class it targets, where,
/// and the outcome distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionRule {
    pub class: String,
    pub pattern: SitePattern,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionConfig {
    name: String,
    seed: u64,
    rules: Vec<CorruptionRule>,
    sha256: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    name: Option<String>,
    #[serde(default)]
    seed: u64,
    #[serde(rename = "rule")]
    rules: Vec<RuleDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    class: String,
    pattern: Option<String>,
    position: Option<String>,
    outcomes: Vec<OutcomeDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeDoc {
    transform: String,
    to: Option<String>,
    p: f64,
}

impl CorruptionConfig {
    /// Loads a built-in config by name or any config from a file path.
    pub fn load(spec: &str) -> Result<Self> {
        match spec {
            "bribri-default" => Self::from_toml(BRIBRI_DEFAULT),
            "cim-default" => Self::from_toml(CIM_DEFAULT),
            other => {
                let path = Path::new(other);
                if path.exists() {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    Self::from_toml(&text)
                } else {
                    Err(Error::UnknownCorruptionConfig(other.to_string()))
                }
            }
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: ConfigDoc =
            toml::from_str(text).map_err(|e| Error::CorruptionConfig(e.to_string()))?;
        let mut rules = Vec::with_capacity(doc.rules.len());
        for (i, rule) in doc.rules.into_iter().enumerate() {
            let nth = i + 1;
            let pattern = match (rule.pattern, rule.position.as_deref()) {
                (None, None) | (None, Some("anywhere")) => SitePattern::Anywhere,
                (None, Some(pos)) => {
                    return Err(Error::CorruptionConfig(format!(
                        "rule {nth}: position {pos:?} requires a pattern"
                    )))
                }
                (Some(p), Some("prefix")) => SitePattern::Prefix(p),
                (Some(p), Some("suffix")) => SitePattern::Suffix(p),
                (Some(_), Some(pos)) => {
                    return Err(Error::CorruptionConfig(format!(
                    "rule {nth}: unknown position {pos:?} (expected prefix, suffix, or anywhere)"
                )))
                }
                (Some(_), None) => {
                    return Err(Error::CorruptionConfig(format!(
                        "rule {nth}: a pattern requires a position"
                    )))
                }
            };
            if rule.outcomes.is_empty() {
                return Err(Error::CorruptionConfig(format!("rule {nth}: no outcomes")));
            }
            let mut sum = 0.0;
            let mut outcomes = Vec::with_capacity(rule.outcomes.len());
            for o in rule.outcomes {
                if !(o.p >= 0.0 && o.p.is_finite()) {
                    return Err(Error::CorruptionConfig(format!(
                        "rule {nth}: outcome probability {} is invalid",
                        o.p
                    )));
                }
                sum += o.p;
                let transform = match (o.transform.as_str(), o.to) {
                    ("keep", None) => Transform::Keep,
                    ("drop", None) => Transform::Drop,
                    ("swap", Some(to)) => Transform::Swap(to),
                    ("swap", None) => {
                        return Err(Error::CorruptionConfig(format!(
                            "rule {nth}: swap needs a `to` class"
                        )))
                    }
                    (t, Some(_)) if t != "swap" => {
                        return Err(Error::CorruptionConfig(format!(
                            "rule {nth}: `to` is only valid with swap"
                        )))
                    }
                    (t, _) => {
                        return Err(Error::CorruptionConfig(format!(
                            "rule {nth}: unknown transform {t:?}"
                        )))
                    }
                };
                outcomes.push(Outcome { transform, p: o.p });
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::CorruptionConfig(format!(
                    "rule {nth}: outcome probabilities sum to {sum}, expected 1"
                )));
            }
            rules.push(CorruptionRule {
                class: rule.class,
                pattern,
                outcomes,
            });
        }
        if rules.is_empty() {
            return Err(Error::CorruptionConfig("config has no rules".into()));
        }
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        Ok(CorruptionConfig {
            name: doc.name.unwrap_or_else(|| "unnamed".into()),
            seed: doc.seed,
            rules,
            sha256: crate::corpus::hex(&h.finalize()),
        })
    }

    /// Checks every rule against a concrete profile: classes must exist
    /// and swaps must stay within the source class's category.
    pub fn validate_for(&self, profile: &LanguageProfile) -> Result<()> {
        for (i, rule) in self.rules.iter().enumerate() {
            let nth = i + 1;
            let is_glottal = rule.class == "glottal" && profile.glottal().is_some();
            let class_idx = profile.class_index(&rule.class);
            if !is_glottal && class_idx.is_none() {
                return Err(Error::CorruptionConfig(format!(
                    "rule {nth}: profile {:?} has no class {:?}",
                    profile.name(),
                    rule.class
                )));
            }
            for o in &rule.outcomes {
                if let Transform::Swap(to) = &o.transform {
                    if is_glottal {
                        return Err(Error::CorruptionConfig(format!(
                            "rule {nth}: the glottal mark has nothing to swap with"
                        )));
                    }
                    let from = class_idx.expect("checked above");
                    match profile.class_index(to) {
                        None => {
                            return Err(Error::CorruptionConfig(format!(
                                "rule {nth}: swap target {to:?} is not a profile class"
                            )))
                        }
                        Some(t)
                            if profile.classes()[t].category
                                != profile.classes()[from].category =>
                        {
                            return Err(Error::CorruptionConfig(format!(
                                "rule {nth}: swap target {to:?} is a different mark category"
                            )))
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn rules(&self) -> &[CorruptionRule] {
        &self.rules
    }

    /// Hash of the config text this was parsed from.
    pub fn sha256(&self) -> &str {
        &self.sha256
    }
}

/// How the profile expresses a glottal site on a grapheme.
fn is_glottal_site(g: &Grapheme, profile: &LanguageProfile) -> bool {
    match profile.glottal() {
        Some(spec) => match spec.position {
            GlottalPosition::AfterVowel => g.trailing_glottal,
            GlottalPosition::SyllableOnset => g.base == spec.mark,
        },
        None => false,
    }
}

fn ci_eq(a: char, b: char) -> bool {
    a.to_lowercase().eq(b.to_lowercase())
}

/// Byte length of `pat` matched case-insensitively at the start of `word`.
fn ci_prefix_len(word: &str, pat: &str) -> Option<usize> {
    let mut it = word.char_indices();
    for pc in pat.chars() {
        let (_, wc) = it.next()?;
        if !ci_eq(wc, pc) {
            return None;
        }
    }
    Some(it.next().map(|(i, _)| i).unwrap_or(word.len()))
}

/// Byte offset where a case-insensitive match of `pat` starts at the end
/// of `word`.
fn ci_suffix_start(word: &str, pat: &str) -> Option<usize> {
    let wchars: Vec<(usize, char)> = word.char_indices().collect();
    let pchars: Vec<char> = pat.chars().collect();
    if pchars.len() > wchars.len() {
        return None;
    }
    let start = wchars.len() - pchars.len();
    for (w, p) in wchars[start..].iter().zip(&pchars) {
        if !ci_eq(w.1, *p) {
            return None;
        }
    }
    Some(wchars[start].0)
}

/// Byte spans of the folded line where a patterned rule applies.
fn pattern_spans(
    folded: &str,
    pattern: &SitePattern,
    profile: &LanguageProfile,
) -> Option<Vec<(usize, usize)>> {
    let (pat, prefix) = match pattern {
        SitePattern::Anywhere => return None,
        SitePattern::Prefix(p) => (p, true),
        SitePattern::Suffix(p) => (p, false),
    };
    let pat = fold_variants(pat, profile);
    let mut spans = Vec::new();
    for (start, end) in token_spans(folded) {
        let word = &folded[start..end];
        if prefix {
            if let Some(len) = ci_prefix_len(word, &pat) {
                spans.push((start, start + len));
            }
        } else if let Some(off) = ci_suffix_start(word, &pat) {
            spans.push((start + off, end));
        }
    }
    Some(spans)
}

struct SiteMatch {
    rule_idx: usize,
    /// Class index for a mark site; None for the glottal.
    class: Option<u8>,
}

fn first_matching_rule(
    g: &Grapheme,
    offset: usize,
    config: &CorruptionConfig,
    spans: &[Option<Vec<(usize, usize)>>],
    profile: &LanguageProfile,
) -> Option<SiteMatch> {
    for (rule_idx, rule) in config.rules.iter().enumerate() {
        let class = if rule.class == "glottal" && profile.glottal().is_some() {
            if !is_glottal_site(g, profile) {
                continue;
            }
            None
        } else {
            match profile.class_index(&rule.class) {
                Some(idx) if g.marks.contains(idx as u8) => Some(idx as u8),
                _ => continue,
            }
        };
        if let Some(spans) = &spans[rule_idx] {
            if !spans.iter().any(|&(s, e)| offset >= s && offset < e) {
                continue;
            }
        }
        return Some(SiteMatch { rule_idx, class });
    }
    None
}

fn pick_outcome(rule: &CorruptionRule, u: f64) -> &Transform {
    let mut cum = 0.0;
    for o in &rule.outcomes {
        cum += o.p;
        if u < cum {
            return &o.transform;
        }
    }
    &rule.outcomes.last().expect("rules have outcomes").transform
}

/// Applies the config to one line. Site draws are keyed by
/// (seed, line_index, grapheme index), so any line corrupts the same way
/// no matter what order lines are processed in. The result always strips
/// to the same bare form as the input.
pub fn corrupt(
    line: &str,
    line_index: u64,
    config: &CorruptionConfig,
    profile: &LanguageProfile,
) -> Result<String> {
    config.validate_for(profile)?;
    let folded = fold_variants(line, profile);
    let spans: Vec<Option<Vec<(usize, usize)>>> = config
        .rules
        .iter()
        .map(|r| pattern_spans(&folded, &r.pattern, profile))
        .collect();
    let mut out = String::with_capacity(folded.len());
    for (site_idx, (offset, piece)) in segment_pieces(&folded, profile).into_iter().enumerate() {
        match piece {
            Piece::Grapheme(g) => {
                let mut g = g;
                if let Some(m) = first_matching_rule(&g, offset, config, &spans, profile) {
                    let u = site_unit(config.seed, line_index, site_idx as u64);
                    match pick_outcome(&config.rules[m.rule_idx], u) {
                        Transform::Keep => {}
                        Transform::Drop => match m.class {
                            Some(idx) => g.marks.remove(idx),
                            None => match profile.glottal().map(|s| s.position) {
                                Some(GlottalPosition::AfterVowel) => {
                                    g.trailing_glottal = false;
                                }
                                _ => continue,
                            },
                        },
                        Transform::Swap(to) => {
                            let from = m.class.expect("validated: swaps never hit glottals");
                            let to = profile
                                .class_index(to)
                                .expect("validated: swap target exists")
                                as u8;
                            g.marks.remove(from);
                            g.marks.insert(to);
                        }
                    }
                }
                out.push_str(&g.compose(profile));
            }
            Piece::Orphan(c) => out.push(c),
        }
    }
    Ok(out)
}

/// Corrupts every target line of a corpus into a new source side; targets
/// stay gold. Line indices feed the draw stream, so regenerating with the
/// same config is byte-identical.
pub fn corrupt_corpus(
    corpus: &ParallelCorpus,
    config: &CorruptionConfig,
    profile: &LanguageProfile,
) -> Result<ParallelCorpus> {
    config.validate_for(profile)?;
    let mut pairs = Vec::with_capacity(corpus.len());
    for (i, (_, tgt)) in corpus.lines().iter().enumerate() {
        pairs.push((corrupt(tgt, i as u64, config, profile)?, tgt.clone()));
    }
    ParallelCorpus::from_pairs(
        pairs,
        profile,
        &format!("{}+{}@{}", corpus.provenance(), config.name, config.seed),
    )
}
