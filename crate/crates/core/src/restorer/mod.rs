//! Diacritic restoration: candidate lattices over stripped text, scored by
//! a character n-gram model under a beam search, plus a word-lookup
//! baseline with optional decoder fallback.

mod lattice;
mod lookup;

pub use lattice::{build_lattice, Candidate, DiacritizationLattice, Position};
pub use lookup::WordLookupModel;

use crate::lm::{CharNGramLM, SymId, BOS, EOS};
use crate::orthography::{fold_variants, strip_diacritics, Grapheme, LanguageProfile, Piece};
use crate::{Error, Result};

/// Decoder settings.
#[derive(Debug, Clone)]
pub struct BeamConfig {
    pub beam_width: usize,
    /// Allow candidates that add a glottal mark absent from the input.
    pub insertion_allowed: bool,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_width: 16,
            insertion_allowed: true,
        }
    }
}

#[derive(Clone)]
struct Hyp {
    ctx: Vec<SymId>,
    logp: f64,
    text: String,
}

/// Restores diacritics on one line. The input is folded and stripped
/// first, so partially marked input decodes the same as its bare form.
/// Whitespace and characters outside the profile pass through untouched.
pub fn decode(
    line: &str,
    lm: &CharNGramLM,
    profile: &LanguageProfile,
    cfg: &BeamConfig,
) -> Result<String> {
    check_model(lm, profile)?;
    Ok(decode_unchecked(line, lm, profile, cfg))
}

/// Restores a batch of lines, optionally in parallel. Output order always
/// matches input order and is independent of the worker count.
pub fn decode_lines(
    lines: &[String],
    lm: &CharNGramLM,
    profile: &LanguageProfile,
    cfg: &BeamConfig,
    jobs: usize,
) -> Result<Vec<String>> {
    check_model(lm, profile)?;
    let run = || {
        use rayon::prelude::*;
        lines
            .par_iter()
            .map(|line| decode_unchecked(line, lm, profile, cfg))
            .collect()
    };
    if jobs == 0 {
        Ok(run())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Experiment(format!("thread pool: {e}")))?;
        Ok(pool.install(run))
    }
}

/// Restores a batch through a word table, optionally in parallel. Output
/// order matches input order regardless of the worker count.
pub fn restore_lines(
    table: &WordLookupModel,
    lines: &[String],
    profile: &LanguageProfile,
    fallback: Option<(&CharNGramLM, &BeamConfig)>,
    jobs: usize,
) -> Result<Vec<String>> {
    let run = || {
        use rayon::prelude::*;
        lines
            .par_iter()
            .map(|line| table.restore(line, profile, fallback))
            .collect()
    };
    if jobs == 0 {
        run()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Experiment(format!("thread pool: {e}")))?;
        pool.install(run)
    }
}

fn check_model(lm: &CharNGramLM, profile: &LanguageProfile) -> Result<()> {
    if lm.profile_name() != profile.name() {
        return Err(Error::ProfileMismatch {
            model: lm.profile_name().to_string(),
            profile: profile.name().to_string(),
        });
    }
    Ok(())
}

fn decode_unchecked(
    line: &str,
    lm: &CharNGramLM,
    profile: &LanguageProfile,
    cfg: &BeamConfig,
) -> String {
    let folded = fold_variants(line, profile);
    let stripped = strip_diacritics(&folded, profile);
    let graphemes: Vec<Grapheme> = crate::orthography::segment_pieces(&stripped, profile)
        .into_iter()
        .map(|(_, piece)| match piece {
            Piece::Grapheme(g) => g,
            Piece::Orphan(c) => Grapheme::new(c),
        })
        .collect();
    let lattice = lattice::build_from_graphemes(&graphemes, profile, cfg.insertion_allowed);
    beam_search(&lattice, lm, cfg.beam_width)
}

/// Beam search over the lattice, keeping `width` best prefixes per step.
/// Ties break toward the lexicographically smaller written path, so the
/// result is deterministic.
fn beam_search(lattice: &DiacritizationLattice, lm: &CharNGramLM, width: usize) -> String {
    let width = width.max(1);
    let pad = lm.order() - 1;

    // Candidate symbol ids per position, resolved against this model once.
    let syms_at: Vec<Vec<Vec<SymId>>> = lattice
        .positions
        .iter()
        .map(|pos| {
            pos.candidates
                .iter()
                .map(|c| c.syms.iter().map(|s| lm.sym_id(s)).collect())
                .collect()
        })
        .collect();

    let mut beams = vec![Hyp {
        ctx: vec![BOS; pad],
        logp: 0.0,
        text: String::new(),
    }];

    for (pos, syms) in lattice.positions.iter().zip(&syms_at) {
        let mut next: Vec<Hyp> = Vec::with_capacity(beams.len() * pos.candidates.len());
        for hyp in &beams {
            let chain = lm.chain(&hyp.ctx);
            for (cand, cand_syms) in pos.candidates.iter().zip(syms) {
                let mut logp = hyp.logp;
                let mut ctx = hyp.ctx.clone();
                for (j, &sym) in cand_syms.iter().enumerate() {
                    let p = if j == 0 {
                        lm.prob_chain(&chain, sym)
                    } else {
                        lm.prob_id(&ctx, sym)
                    };
                    logp += p.ln();
                    push_ctx(&mut ctx, sym, pad);
                }
                let mut text = String::with_capacity(hyp.text.len() + cand.composed.len());
                text.push_str(&hyp.text);
                text.push_str(&cand.composed);
                next.push(Hyp { ctx, logp, text });
            }
        }
        next.sort_by(|a, b| b.logp.total_cmp(&a.logp).then_with(|| a.text.cmp(&b.text)));
        next.truncate(width);
        beams = next;
    }

    for hyp in &mut beams {
        hyp.logp += lm.prob_id(&hyp.ctx, EOS).ln();
    }
    beams.sort_by(|a, b| b.logp.total_cmp(&a.logp).then_with(|| a.text.cmp(&b.text)));
    beams.swap_remove(0).text
}

fn push_ctx(ctx: &mut Vec<SymId>, sym: SymId, pad: usize) {
    if pad == 0 {
        return;
    }
    if ctx.len() == pad {
        ctx.remove(0);
    }
    ctx.push(sym);
}
