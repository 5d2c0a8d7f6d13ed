use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::{Error, Result};

/// What a diacritic class encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MarkCategory {
    Tone,
    Nasality,
    Quality,
    Length,
    Glottal,
}

impl MarkCategory {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "tone" => Some(MarkCategory::Tone),
            "nasality" => Some(MarkCategory::Nasality),
            "quality" => Some(MarkCategory::Quality),
            "length" => Some(MarkCategory::Length),
            "glottal" => Some(MarkCategory::Glottal),
            _ => None,
        }
    }

    /// Rank used to order marks of equal combining class when composing:
    /// inner marks (vowel quality) sit closest to the base, tone outermost.
    pub(crate) fn compose_rank(self) -> u8 {
        match self {
            MarkCategory::Quality => 0,
            MarkCategory::Nasality => 1,
            MarkCategory::Length => 2,
            MarkCategory::Tone => 3,
            MarkCategory::Glottal => 4,
        }
    }
}

impl fmt::Display for MarkCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MarkCategory::Tone => "tone",
            MarkCategory::Nasality => "nasality",
            MarkCategory::Quality => "quality",
            MarkCategory::Length => "length",
            MarkCategory::Glottal => "glottal",
        };
        f.write_str(s)
    }
}

/// One diacritic class: a tag like "high", the category it encodes, and its
/// canonical combining mark.
#[derive(Debug, Clone)]
pub struct DiacriticClass {
    pub tag: String,
    pub category: MarkCategory,
    pub mark: char,
}

/// Where a glottal mark attaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlottalPosition {
    /// Written after the vowel it closes (Bribri apostrophe).
    AfterVowel,
    /// A letter of its own at the start of a syllable (CIM saltillo).
    SyllableOnset,
}

#[derive(Debug, Clone)]
pub struct GlottalSpec {
    pub mark: char,
    pub position: GlottalPosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeUnit {
    Syllable,
    Word,
}

/// Built-in transcription rules. Each maps a word to a code string, one
/// label per unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeRule {
    /// Per vowel: L/H/F/R by tone mark, G when the vowel carries a glottal.
    BribriTones,
    /// Per vowel: N if nasal-marked, O otherwise.
    BribriNasal,
    /// Per vowel: L if lax-marked, T otherwise.
    BribriUmlaut,
    /// Per syllable: L if the vowel is long, S otherwise.
    CimLength,
    /// Per syllable: G/C/N by onset kind.
    CimConsonants,
    /// Per word: one G per glottal, or a single N.
    CimGlottalPresence,
}

impl SchemeRule {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "bribri-tones" => Some(SchemeRule::BribriTones),
            "bribri-nasal" => Some(SchemeRule::BribriNasal),
            "bribri-umlaut" => Some(SchemeRule::BribriUmlaut),
            "cim-length" => Some(SchemeRule::CimLength),
            "cim-consonants" => Some(SchemeRule::CimConsonants),
            "cim-glottal-presence" => Some(SchemeRule::CimGlottalPresence),
            _ => None,
        }
    }

    fn natural_unit(self) -> SchemeUnit {
        match self {
            SchemeRule::CimGlottalPresence => SchemeUnit::Word,
            _ => SchemeUnit::Syllable,
        }
    }

    /// Every label the rule can emit.
    pub fn label_alphabet(self) -> &'static [char] {
        match self {
            SchemeRule::BribriTones => &['L', 'H', 'F', 'R', 'G'],
            SchemeRule::BribriNasal => &['O', 'N'],
            SchemeRule::BribriUmlaut => &['T', 'L'],
            SchemeRule::CimLength => &['S', 'L'],
            SchemeRule::CimConsonants => &['N', 'C', 'G'],
            SchemeRule::CimGlottalPresence => &['N', 'G'],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeSpec {
    pub name: String,
    pub unit: SchemeUnit,
    pub rule: SchemeRule,
}

impl SchemeSpec {
    pub fn label_alphabet(&self) -> &'static [char] {
        self.rule.label_alphabet()
    }
}

/// A declarative description of one orthography: its vowels, diacritic
/// classes, glottal mark, variant folds, and transcription schemes.
#[derive(Debug, Clone)]
pub struct LanguageProfile {
    name: String,
    vowels: BTreeSet<char>,
    classes: Vec<DiacriticClass>,
    glottal: Option<GlottalSpec>,
    folds: Vec<(Vec<char>, Vec<char>)>,
    schemes: Vec<SchemeSpec>,
    nasal_on_lax: bool,
    mark_to_class: HashMap<char, u8>,
}

const BRIBRI_CONSTENLA: &str = include_str!("../../profiles/bribri-constenla.toml");
const CIM_CIMR: &str = include_str!("../../profiles/cim-cimr.toml");

/// Names of the profiles shipped with the crate.
pub fn builtin_profiles() -> &'static [&'static str] {
    &["bribri-constenla", "cim-cimr"]
}

impl LanguageProfile {
    /// Loads a built-in profile by name, or any profile from a file path.
    pub fn load(spec: &str) -> Result<Self> {
        match spec {
            "bribri-constenla" => Self::from_toml(BRIBRI_CONSTENLA),
            "cim-cimr" => Self::from_toml(CIM_CIMR),
            other => {
                let path = Path::new(other);
                if path.exists() {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    Self::from_toml(&text)
                } else {
                    Err(Error::UnknownProfile(other.to_string()))
                }
            }
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: ProfileDoc =
            toml::from_str(text).map_err(|e| Error::ProfileSchema(e.to_string()))?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: ProfileDoc) -> Result<Self> {
        if doc.name.is_empty() {
            return Err(Error::ProfileSchema(
                "field `name` must not be empty".into(),
            ));
        }

        let mut vowels = BTreeSet::new();
        for v in &doc.vowels {
            let mut chars = v.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(Error::ProfileSchema(format!(
                    "vowel {v:?} must be a single character"
                )));
            };
            vowels.insert(c.to_lowercase().next().unwrap_or(c));
        }
        if vowels.is_empty() {
            return Err(Error::ProfileSchema(
                "field `vowels` must not be empty".into(),
            ));
        }

        let mut classes = Vec::new();
        let mut glottal: Option<GlottalSpec> = None;
        let mut claimed: HashMap<char, String> = HashMap::new();
        let mut extra_folds: Vec<(Vec<char>, Vec<char>)> = Vec::new();
        let claim = |c: char, owner: String, claimed: &mut HashMap<char, String>| {
            if let Some(first) = claimed.get(&c) {
                return Err(Error::DuplicateCodepoint {
                    codepoint: c as u32,
                    first: first.clone(),
                    second: owner,
                });
            }
            claimed.insert(c, owner);
            Ok(())
        };

        for class in &doc.classes {
            let category = MarkCategory::parse(&class.category).ok_or_else(|| {
                Error::ProfileSchema(format!(
                    "class {:?} has unknown category {:?}",
                    class.tag, class.category
                ))
            })?;
            if class.codepoints.is_empty() {
                return Err(Error::ProfileSchema(format!(
                    "class {:?} lists no codepoints",
                    class.tag
                )));
            }
            let mut marks = Vec::new();
            for cp in &class.codepoints {
                marks.push(parse_codepoint(cp, &class.tag)?);
            }
            let canonical = marks[0];
            for &m in &marks {
                claim(m, format!("class `{}`", class.tag), &mut claimed)?;
            }
            for &variant in &marks[1..] {
                extra_folds.push((vec![variant], vec![canonical]));
            }

            if category == MarkCategory::Glottal {
                if glottal.is_some() {
                    return Err(Error::ProfileSchema(
                        "more than one glottal class declared".into(),
                    ));
                }
                let position = match class.position.as_deref() {
                    Some("after-vowel") => GlottalPosition::AfterVowel,
                    Some("syllable-onset") => GlottalPosition::SyllableOnset,
                    Some(other) => {
                        return Err(Error::ProfileSchema(format!(
                            "glottal class {:?} has unknown position {:?}",
                            class.tag, other
                        )))
                    }
                    None => {
                        return Err(Error::ProfileSchema(format!(
                            "glottal class {:?} requires a `position`",
                            class.tag
                        )))
                    }
                };
                glottal = Some(GlottalSpec {
                    mark: canonical,
                    position,
                });
            } else {
                if class.position.is_some() {
                    return Err(Error::ProfileSchema(format!(
                        "class {:?} is not glottal and cannot set `position`",
                        class.tag
                    )));
                }
                classes.push(DiacriticClass {
                    tag: class.tag.clone(),
                    category,
                    mark: canonical,
                });
            }
        }

        if classes.len() > 16 {
            return Err(Error::ProfileSchema(format!(
                "at most 16 non-glottal classes supported, got {}",
                classes.len()
            )));
        }
        let mut seen_tags = BTreeSet::new();
        for c in &classes {
            if !seen_tags.insert(c.tag.clone()) {
                return Err(Error::ProfileSchema(format!(
                    "class tag {:?} declared twice",
                    c.tag
                )));
            }
        }

        let mut folds = extra_folds;
        for fold in &doc.folds {
            let from = parse_codepoint_seq(&fold.from, "fold `from`")?;
            let to = parse_codepoint_seq(&fold.to, "fold `to`")?;
            if from.is_empty() {
                return Err(Error::ProfileSchema("fold `from` must not be empty".into()));
            }
            if from.len() == 1 {
                if let Some(owner) = claimed.get(&from[0]) {
                    return Err(Error::ProfileSchema(format!(
                        "fold source U+{:04X} is the canonical mark of {owner}",
                        from[0] as u32
                    )));
                }
            }
            folds.push((from, to));
        }
        let mut seen_sources = BTreeSet::new();
        for (from, _) in &folds {
            if !seen_sources.insert(from.clone()) {
                return Err(Error::ProfileSchema(format!(
                    "duplicate fold source {:?}",
                    from.iter()
                        .map(|c| format!("U+{:04X}", *c as u32))
                        .collect::<Vec<_>>()
                )));
            }
        }
        // Longest source first so greedy matching prefers specific sequences.
        folds.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));

        let mut schemes = Vec::new();
        for s in &doc.schemes {
            let rule = SchemeRule::parse(&s.rule).ok_or_else(|| {
                Error::ProfileSchema(format!("scheme {:?} has unknown rule {:?}", s.name, s.rule))
            })?;
            let unit = match s.unit.as_str() {
                "syllable" => SchemeUnit::Syllable,
                "word" => SchemeUnit::Word,
                other => {
                    return Err(Error::ProfileSchema(format!(
                        "scheme {:?} has unknown unit {:?}",
                        s.name, other
                    )))
                }
            };
            if unit != rule.natural_unit() {
                return Err(Error::ProfileSchema(format!(
                    "scheme {:?}: rule {:?} labels per {}",
                    s.name,
                    s.rule,
                    match rule.natural_unit() {
                        SchemeUnit::Syllable => "syllable",
                        SchemeUnit::Word => "word",
                    }
                )));
            }
            schemes.push(SchemeSpec {
                name: s.name.clone(),
                unit,
                rule,
            });
        }

        let mark_to_class = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.mark, i as u8))
            .collect();

        Ok(LanguageProfile {
            name: doc.name,
            vowels,
            classes,
            glottal,
            folds,
            schemes,
            nasal_on_lax: doc.options.nasal_on_lax,
            mark_to_class,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn classes(&self) -> &[DiacriticClass] {
        &self.classes
    }

    /// Lowercase vowel inventory in codepoint order.
    pub fn vowels(&self) -> impl Iterator<Item = char> + '_ {
        self.vowels.iter().copied()
    }

    pub fn glottal(&self) -> Option<&GlottalSpec> {
        self.glottal.as_ref()
    }

    pub fn schemes(&self) -> &[SchemeSpec] {
        &self.schemes
    }

    pub fn scheme(&self, name: &str) -> Result<&SchemeSpec> {
        self.schemes
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownScheme {
                profile: self.name.clone(),
                scheme: name.to_string(),
            })
    }

    /// Whether lax (quality-marked) vowels may also carry the nasal mark in
    /// restoration lattices.
    pub fn nasal_on_lax(&self) -> bool {
        self.nasal_on_lax
    }

    pub fn is_vowel(&self, c: char) -> bool {
        let lower = c.to_lowercase().next().unwrap_or(c);
        self.vowels.contains(&lower)
    }

    /// A letter that is neither a vowel nor the glottal mark.
    pub fn is_consonant(&self, c: char) -> bool {
        c.is_alphabetic() && !self.is_vowel(c) && !self.is_glottal_char(c)
    }

    pub fn is_glottal_char(&self, c: char) -> bool {
        self.glottal.as_ref().is_some_and(|g| g.mark == c)
    }

    pub(crate) fn class_of_mark(&self, c: char) -> Option<u8> {
        self.mark_to_class.get(&c).copied()
    }

    pub fn class_index(&self, tag: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.tag == tag)
    }

    /// Indices of classes in the given category, in declaration order.
    pub fn classes_in(&self, category: MarkCategory) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.category == category)
            .map(|(i, _)| i)
            .collect()
    }

    pub(crate) fn folds(&self) -> &[(Vec<char>, Vec<char>)] {
        &self.folds
    }

    /// One-paragraph summary used by `profile validate`.
    pub fn summary(&self) -> String {
        let classes: Vec<String> = self
            .classes
            .iter()
            .map(|c| format!("{} ({}, U+{:04X})", c.tag, c.category, c.mark as u32))
            .collect();
        let glottal = match &self.glottal {
            Some(g) => format!(
                "U+{:04X} {}",
                g.mark as u32,
                match g.position {
                    GlottalPosition::AfterVowel => "after vowel",
                    GlottalPosition::SyllableOnset => "at syllable onset",
                }
            ),
            None => "none".into(),
        };
        let schemes: Vec<&str> = self.schemes.iter().map(|s| s.name.as_str()).collect();
        format!(
            "profile {}\n  vowels: {}\n  classes: {}\n  glottal: {}\n  folds: {}\n  schemes: {}",
            self.name,
            self.vowels.iter().collect::<String>(),
            classes.join(", "),
            glottal,
            self.folds.len(),
            schemes.join(", ")
        )
    }
}

fn parse_codepoint(s: &str, owner: &str) -> Result<char> {
    let v = u32::from_str_radix(s, 16)
        .map_err(|_| Error::ProfileSchema(format!("{owner}: {s:?} is not a hex codepoint")))?;
    char::from_u32(v)
        .ok_or_else(|| Error::ProfileSchema(format!("{owner}: U+{v:04X} is not a valid scalar")))
}

fn parse_codepoint_seq(seq: &[String], owner: &str) -> Result<Vec<char>> {
    seq.iter().map(|s| parse_codepoint(s, owner)).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    name: String,
    vowels: Vec<String>,
    #[serde(default)]
    options: OptionsDoc,
    #[serde(default, rename = "class")]
    classes: Vec<ClassDoc>,
    #[serde(default, rename = "fold")]
    folds: Vec<FoldDoc>,
    #[serde(default, rename = "scheme")]
    schemes: Vec<SchemeDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsDoc {
    #[serde(default = "default_true")]
    nasal_on_lax: bool,
}

impl Default for OptionsDoc {
    fn default() -> Self {
        OptionsDoc { nasal_on_lax: true }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDoc {
    tag: String,
    category: String,
    codepoints: Vec<String>,
    #[serde(default)]
    position: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FoldDoc {
    from: Vec<String>,
    to: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeDoc {
    name: String,
    unit: String,
    rule: String,
}
