use std::collections::BTreeMap;
use std::collections::HashMap;
use std::path::Path;

use crate::binio::{Reader, Writer};
use crate::lm::CharNGramLM;
use crate::orthography::{fold_variants, strip_diacritics, token_spans, LanguageProfile};
use crate::restorer::{decode, BeamConfig};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"DCWL";
const VERSION: u32 = 1;

/// Word-level memorization baseline: maps each bare word to the marked
/// form it most often carried in training.
#[derive(Debug, Clone, PartialEq)]
pub struct WordLookupModel {
    profile_name: String,
    entries: BTreeMap<String, (String, u64)>,
    total_words: u64,
}

impl WordLookupModel {
    /// Builds the table from gold (fully marked) lines. Keys are the
    /// stripped forms of each whitespace token; the stored value is the
    /// most frequent marked form, ties going to the form with the
    /// smaller codepoint sequence.
    pub fn train<I, S>(gold_lines: I, profile: &LanguageProfile) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, HashMap<String, u64>> = HashMap::new();
        let mut total_words = 0u64;
        for line in gold_lines {
            let folded = fold_variants(line.as_ref(), profile);
            for token in folded.split_whitespace() {
                let key = strip_diacritics(token, profile);
                *counts
                    .entry(key)
                    .or_default()
                    .entry(token.to_string())
                    .or_insert(0) += 1;
                total_words += 1;
            }
        }
        let entries = counts
            .into_iter()
            .map(|(key, forms)| {
                let best = forms
                    .into_iter()
                    .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
                    .expect("every key has at least one form");
                (key, best)
            })
            .collect();
        WordLookupModel {
            profile_name: profile.name().to_string(),
            entries,
            total_words,
        }
    }

    pub fn profile_name(&self) -> &str {
        &self.profile_name
    }

    /// Number of distinct bare word types stored.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Running total of tokens seen in training.
    pub fn total_words(&self) -> u64 {
        self.total_words
    }

    /// The stored form and its training count for a bare word, if any.
    pub fn get(&self, key: &str) -> Option<(&str, u64)> {
        self.entries.get(key).map(|(form, n)| (form.as_str(), *n))
    }

    /// Restores a line word by word. Tokens whose bare form is in the
    /// table are replaced by the stored form; the rest fall back to the
    /// decoder when one is given (scored in full sentence context) and
    /// pass through untouched otherwise. Whitespace is preserved exactly.
    pub fn restore(
        &self,
        line: &str,
        profile: &LanguageProfile,
        fallback: Option<(&CharNGramLM, &BeamConfig)>,
    ) -> Result<String> {
        if self.profile_name != profile.name() {
            return Err(Error::ProfileMismatch {
                model: self.profile_name.clone(),
                profile: profile.name().to_string(),
            });
        }
        let spans = token_spans(line);
        let hits: Vec<Option<&str>> = spans
            .iter()
            .map(|&(s, e)| {
                let folded = fold_variants(&line[s..e], profile);
                let key = strip_diacritics(&folded, profile);
                self.entries.get(&key).map(|(form, _)| form.as_str())
            })
            .collect();

        let decoded_tokens: Vec<String> = if hits.iter().any(|h| h.is_none()) {
            if let Some((lm, cfg)) = fallback {
                let decoded = decode(line, lm, profile, cfg)?;
                let tokens: Vec<String> = decoded.split_whitespace().map(str::to_string).collect();
                if tokens.len() == spans.len() {
                    tokens
                } else {
                    Vec::new()
                }
            } else {
                Vec::new()
            }
        } else {
            Vec::new()
        };

        let mut out = String::with_capacity(line.len());
        let mut cursor = 0;
        for (i, &(s, e)) in spans.iter().enumerate() {
            out.push_str(&line[cursor..s]);
            match hits[i] {
                Some(form) => out.push_str(form),
                None => match decoded_tokens.get(i) {
                    Some(tok) => out.push_str(tok),
                    None => out.push_str(&line[s..e]),
                },
            }
            cursor = e;
        }
        out.push_str(&line[cursor..]);
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.str(&self.profile_name);
        w.u64(self.total_words);
        w.u64(self.entries.len() as u64);
        for (key, (form, n)) in &self.entries {
            w.str(key);
            w.str(form);
            w.u64(*n);
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = Reader::new(data, MAGIC, VERSION)?;
        let profile_name = r.str()?;
        let total_words = r.u64()?;
        let count = r.u64()? as usize;
        let mut entries = BTreeMap::new();
        for _ in 0..count {
            let key = r.str()?;
            let form = r.str()?;
            let n = r.u64()?;
            if entries.insert(key, (form, n)).is_some() {
                return Err(Error::ModelFormat("duplicate word entry".into()));
            }
        }
        r.expect_end()?;
        Ok(WordLookupModel {
            profile_name,
            entries,
            total_words,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&data)
    }
}
