//! Parallel corpora of (bare, marked) sentence pairs, seeded splits, and
//! word-count-bounded training subsets.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::orthography::{fold_variants, segment, strip_diacritics, LanguageProfile};
use crate::rng::shuffle;
use crate::{Error, Result};

/// Aligned sentences: `source` carries no diacritics, `target` is the
/// marked form it was derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    lines: Vec<(String, String)>,
    profile_name: String,
    provenance: String,
}

impl ParallelCorpus {
    /// Reads a gold text file, one sentence per line, and pairs each line
    /// with its stripped form. Blank lines are dropped.
    pub fn ingest(path: &Path, profile: &LanguageProfile) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_gold_lines(text.lines(), profile, &path.display().to_string())
    }

    /// Builds a corpus from gold lines already in memory. Each line is
    /// variant-folded before stripping so both sides are canonical.
    pub fn from_gold_lines<I, S>(
        gold_lines: I,
        profile: &LanguageProfile,
        provenance: &str,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lines = Vec::new();
        for (idx, raw) in gold_lines.into_iter().enumerate() {
            let raw = raw.as_ref().trim_end_matches('\r');
            if raw.trim().is_empty() {
                continue;
            }
            let target = fold_variants(raw, profile);
            segment(&target, profile).map_err(|e| match e {
                Error::OrphanMark { byte, .. } => Error::OrphanMark {
                    byte,
                    line: Some(idx + 1),
                },
                other => other,
            })?;
            let source = strip_diacritics(&target, profile);
            let src_tokens = source.split_whitespace().count();
            let tgt_tokens = target.split_whitespace().count();
            if src_tokens != tgt_tokens {
                return Err(Error::TokenMismatch {
                    line: idx + 1,
                    src_tokens,
                    tgt_tokens,
                });
            }
            lines.push((source, target));
        }
        Ok(ParallelCorpus {
            lines,
            profile_name: profile.name().to_string(),
            provenance: provenance.to_string(),
        })
    }

    /// Builds a corpus from already-aligned (source, target) pairs. The
    /// source may carry marks of its own (correction-mode data); both
    /// sides are folded, and each pair must agree on token count and on
    /// its stripped reading.
    pub fn from_pairs<I, S, T>(
        pairs: I,
        profile: &LanguageProfile,
        provenance: &str,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut lines = Vec::new();
        for (idx, (src, tgt)) in pairs.into_iter().enumerate() {
            let src = src.as_ref().trim_end_matches('\r');
            let tgt = tgt.as_ref().trim_end_matches('\r');
            if src.trim().is_empty() && tgt.trim().is_empty() {
                continue;
            }
            let source = fold_variants(src, profile);
            let target = fold_variants(tgt, profile);
            let src_tokens = source.split_whitespace().count();
            let tgt_tokens = target.split_whitespace().count();
            if src_tokens != tgt_tokens
                || strip_diacritics(&source, profile) != strip_diacritics(&target, profile)
            {
                return Err(Error::TokenMismatch {
                    line: idx + 1,
                    src_tokens,
                    tgt_tokens,
                });
            }
            lines.push((source, target));
        }
        Ok(ParallelCorpus {
            lines,
            profile_name: profile.name().to_string(),
            provenance: provenance.to_string(),
        })
    }

    /// Reads an existing source/target file pair, validating that the
    /// sides are line-aligned and strip to the same reading. Sources may
    /// be partially marked (correction-mode data).
    pub fn read_pair(src_path: &Path, tgt_path: &Path, profile: &LanguageProfile) -> Result<Self> {
        let src_text = std::fs::read_to_string(src_path).map_err(|e| Error::io(src_path, e))?;
        let tgt_text = std::fs::read_to_string(tgt_path).map_err(|e| Error::io(tgt_path, e))?;
        let src_lines: Vec<&str> = src_text.lines().collect();
        let tgt_lines: Vec<&str> = tgt_text.lines().collect();
        if src_lines.len() != tgt_lines.len() {
            return Err(Error::LineCountMismatch {
                refs: tgt_lines.len(),
                hyps: src_lines.len(),
            });
        }
        Self::from_pairs(
            src_lines.into_iter().zip(tgt_lines),
            profile,
            &tgt_path.display().to_string(),
        )
    }

    /// Writes `source` and `target` sides to two line-aligned files.
    pub fn write_pair(&self, src_path: &Path, tgt_path: &Path) -> Result<()> {
        let mut src = String::new();
        let mut tgt = String::new();
        for (s, t) in &self.lines {
            let _ = writeln!(src, "{s}");
            let _ = writeln!(tgt, "{t}");
        }
        std::fs::write(src_path, src).map_err(|e| Error::io(src_path, e))?;
        std::fs::write(tgt_path, tgt).map_err(|e| Error::io(tgt_path, e))
    }

    pub fn lines(&self) -> &[(String, String)] {
        &self.lines
    }

    pub fn sources(&self) -> Vec<String> {
        self.lines.iter().map(|(s, _)| s.clone()).collect()
    }

    pub fn targets(&self) -> Vec<String> {
        self.lines.iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Whitespace-token count, summed over lines. Source and target sides
    /// agree by construction.
    pub fn word_count(&self) -> usize {
        self.lines
            .iter()
            .map(|(s, _)| s.split_whitespace().count())
            .sum()
    }

    pub fn profile_name(&self) -> &str {
        &self.profile_name
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    fn select(&self, indices: &[usize], provenance: String) -> ParallelCorpus {
        ParallelCorpus {
            lines: indices.iter().map(|&i| self.lines[i].clone()).collect(),
            profile_name: self.profile_name.clone(),
            provenance,
        }
    }

    /// SHA-256 over the target side, one line per sentence.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for (_, t) in &self.lines {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex(&h.finalize())
    }

    /// SHA-256 over both sides, source TAB target per sentence. Unlike
    /// `content_hash` this distinguishes corpora whose targets agree but
    /// whose sources differ, as corrupted corpora do.
    pub fn pair_hash(&self) -> String {
        let mut h = Sha256::new();
        for (s, t) in &self.lines {
            h.update(s.as_bytes());
            h.update(b"\t");
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex(&h.finalize())
    }
}

/// Partition proportions for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub valid_frac: f64,
    pub test_frac: f64,
    pub n_replicates: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.8,
            valid_frac: 0.1,
            test_frac: 0.1,
            n_replicates: 5,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train_frac", self.train_frac),
            ("valid_frac", self.valid_frac),
            ("test_frac", self.test_frac),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidSplitSpec(format!(
                    "{name} must lie strictly between 0 and 1, got {f}"
                )));
            }
        }
        let sum = self.train_frac + self.valid_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplitSpec(format!(
                "fractions must sum to 1, got {sum}"
            )));
        }
        if self.n_replicates == 0 {
            return Err(Error::InvalidSplitSpec(
                "n_replicates must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Line counts for a corpus of `n` sentences: valid and test take the
    /// floor of their shares, train takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let valid = (n as f64 * self.valid_frac).floor() as usize;
        let test = (n as f64 * self.test_frac).floor() as usize;
        let train = n - valid - test;
        (train, valid, test)
    }
}

/// One replicate's partition.
#[derive(Debug, Clone)]
pub struct SplitReplicate {
    pub train: ParallelCorpus,
    pub valid: ParallelCorpus,
    pub test: ParallelCorpus,
    pub seed: u64,
}

/// Partitions the corpus `spec.n_replicates` times. Replicate `i` shuffles
/// line indices with seed `spec.seed + i` and deals them out as
/// train, then valid, then test.
pub fn split(corpus: &ParallelCorpus, spec: &SplitSpec) -> Result<Vec<SplitReplicate>> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = corpus.len();
    let (train_n, valid_n, test_n) = spec.sizes(n);
    if train_n == 0 || valid_n == 0 || test_n == 0 {
        return Err(Error::SplitTooSmall { lines: n });
    }
    let mut replicates = Vec::with_capacity(spec.n_replicates);
    for i in 0..spec.n_replicates {
        let seed = spec.seed.wrapping_add(i as u64);
        let mut indices: Vec<usize> = (0..n).collect();
        shuffle(&mut indices, seed);
        let (train_idx, rest) = indices.split_at(train_n);
        let (valid_idx, test_idx) = rest.split_at(valid_n);
        let tag = |part: &str| format!("{}#{i}/{part}", corpus.provenance);
        replicates.push(SplitReplicate {
            train: corpus.select(train_idx, tag("train")),
            valid: corpus.select(valid_idx, tag("valid")),
            test: corpus.select(test_idx, tag("test")),
            seed,
        });
    }
    Ok(replicates)
}

/// Draws whole sentences in seeded shuffle order until their cumulative
/// word count first reaches `target_words`.
pub fn subset_by_words(
    train: &ParallelCorpus,
    target_words: usize,
    seed: u64,
) -> Result<ParallelCorpus> {
    let available = train.word_count();
    if target_words > available {
        return Err(Error::SubsetTargetTooLarge {
            target: target_words,
            available,
        });
    }
    let mut indices: Vec<usize> = (0..train.len()).collect();
    shuffle(&mut indices, seed);
    let mut taken = Vec::new();
    let mut words = 0usize;
    for &i in &indices {
        if words >= target_words {
            break;
        }
        words += train.lines[i].0.split_whitespace().count();
        taken.push(i);
    }
    Ok(train.select(&taken, format!("{}@{target_words}w", train.provenance)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitManifest {
    pub profile: String,
    pub granularity: String,
    pub seed: u64,
    pub n_replicates: usize,
    pub fractions: [f64; 3],
    pub corpus_sentences: usize,
    pub corpus_words: usize,
    pub corpus_sha256: String,
    pub replicates: Vec<ReplicateManifest>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReplicateManifest {
    pub seed: u64,
    pub train: PartManifest,
    pub valid: PartManifest,
    pub test: PartManifest,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PartManifest {
    pub sentences: usize,
    pub words: usize,
    /// Achieved share of corpus words.
    pub word_fraction: f64,
    /// Achieved minus requested share; splitting is sentence-granular so
    /// word shares land near, not on, the requested fractions.
    pub word_deviation: f64,
    pub tgt_sha256: String,
}

fn part_manifest(part: &ParallelCorpus, total_words: usize, frac: f64) -> PartManifest {
    let words = part.word_count();
    let word_fraction = if total_words == 0 {
        0.0
    } else {
        words as f64 / total_words as f64
    };
    PartManifest {
        sentences: part.len(),
        words,
        word_fraction,
        word_deviation: word_fraction - frac,
        tgt_sha256: part.content_hash(),
    }
}

/// Writes every replicate as `{i}/{train,valid,test}.{src,tgt}` under
/// `dir`, plus a `manifest.json` describing the whole split.
pub fn write_split_dir(
    dir: &Path,
    corpus: &ParallelCorpus,
    spec: &SplitSpec,
    replicates: &[SplitReplicate],
) -> Result<()> {
    let total_words = corpus.word_count();
    let mut manifest = SplitManifest {
        profile: corpus.profile_name.clone(),
        granularity: "sentence".into(),
        seed: spec.seed,
        n_replicates: replicates.len(),
        fractions: [spec.train_frac, spec.valid_frac, spec.test_frac],
        corpus_sentences: corpus.len(),
        corpus_words: total_words,
        corpus_sha256: corpus.content_hash(),
        replicates: Vec::new(),
    };
    for (i, rep) in replicates.iter().enumerate() {
        let rep_dir = dir.join(i.to_string());
        std::fs::create_dir_all(&rep_dir).map_err(|e| Error::io(&rep_dir, e))?;
        for (name, part) in [
            ("train", &rep.train),
            ("valid", &rep.valid),
            ("test", &rep.test),
        ] {
            part.write_pair(
                &rep_dir.join(format!("{name}.src")),
                &rep_dir.join(format!("{name}.tgt")),
            )?;
        }
        manifest.replicates.push(ReplicateManifest {
            seed: rep.seed,
            train: part_manifest(&rep.train, total_words, spec.train_frac),
            valid: part_manifest(&rep.valid, total_words, spec.valid_frac),
            test: part_manifest(&rep.test, total_words, spec.test_frac),
        });
    }
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Reads one replicate of a split directory written by [`write_split_dir`].
pub fn read_split_replicate(
    dir: &Path,
    replicate: usize,
    profile: &LanguageProfile,
) -> Result<SplitReplicate> {
    let rep_dir = dir.join(replicate.to_string());
    let part = |name: &str| {
        ParallelCorpus::read_pair(
            &rep_dir.join(format!("{name}.src")),
            &rep_dir.join(format!("{name}.tgt")),
            profile,
        )
    };
    Ok(SplitReplicate {
        train: part("train")?,
        valid: part("valid")?,
        test: part("test")?,
        seed: 0,
    })
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}
