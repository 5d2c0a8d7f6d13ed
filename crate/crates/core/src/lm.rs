//! Character n-gram language model with Witten-Bell smoothing.
//!
//! Symbols are composed graphemes, so a vowel travels with its diacritics
//! as one unit. Probabilities interpolate maximum-likelihood estimates with
//! the next shorter context, bottoming out in a uniform distribution over
//! the vocabulary, which keeps every symbol (including the unknown symbol)
//! above zero under every context.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::orthography::{fold_variants, segment_pieces, LanguageProfile, Piece};
use crate::{binio, Error, Result};

pub type SymId = u32;

pub const UNK: SymId = 0;
pub const EOS: SymId = 1;
pub const BOS: SymId = 2;
const FIRST_SYMBOL: SymId = 3;

const MAGIC: &[u8; 4] = b"DCLM";
const VERSION: u32 = 1;

#[derive(Debug, Default, Clone)]
pub(crate) struct ContextStats {
    total: u64,
    succ: HashMap<SymId, u64>,
}

impl ContextStats {
    fn bump(&mut self, sym: SymId) {
        self.total += 1;
        *self.succ.entry(sym).or_insert(0) += 1;
    }

    fn types(&self) -> u64 {
        self.succ.len() as u64
    }
}

/// Backoff character n-gram model over grapheme symbols.
#[derive(Debug, Clone)]
pub struct CharNGramLM {
    profile_name: String,
    order: usize,
    symbols: Vec<String>,
    by_name: HashMap<String, SymId>,
    /// `contexts[k]` holds statistics for contexts of length `k`;
    /// `contexts[0]` is the unigram table under the empty context.
    contexts: Vec<HashMap<Box<[SymId]>, ContextStats>>,
}

impl CharNGramLM {
    /// Trains a model of the given order on gold lines.
    pub fn train<I, S>(lines: I, order: usize, profile: &LanguageProfile) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if order == 0 {
            return Err(Error::InvalidOrder(0));
        }
        let mut lm = CharNGramLM {
            profile_name: profile.name().to_string(),
            order,
            symbols: vec!["<unk>".into(), "</s>".into(), "<s>".into()],
            by_name: reserved_names(),
            contexts: vec![HashMap::new(); order],
        };

        let mut any = false;
        for line in lines {
            any = true;
            let syms = lm.intern_line(line.as_ref(), profile);
            lm.count_line(&syms);
        }
        if !any {
            return Err(Error::EmptyCorpus);
        }
        Ok(lm)
    }

    fn intern_line(&mut self, line: &str, profile: &LanguageProfile) -> Vec<SymId> {
        let folded = fold_variants(line, profile);
        line_symbols(&folded, profile)
            .into_iter()
            .map(|s| {
                if let Some(&id) = self.by_name.get(&s) {
                    id
                } else {
                    let id = self.symbols.len() as SymId;
                    self.symbols.push(s.clone());
                    self.by_name.insert(s, id);
                    id
                }
            })
            .collect()
    }

    fn count_line(&mut self, syms: &[SymId]) {
        let pad = self.order - 1;
        let mut seq = Vec::with_capacity(syms.len() + pad + 1);
        seq.resize(pad, BOS);
        seq.extend_from_slice(syms);
        seq.push(EOS);
        for i in pad..seq.len() {
            let target = seq[i];
            for k in 0..self.order {
                let ctx = &seq[i - k..i];
                match self.contexts[k].get_mut(ctx) {
                    Some(st) => st.bump(target),
                    None => {
                        let mut st = ContextStats::default();
                        st.bump(target);
                        self.contexts[k].insert(ctx.to_vec().into_boxed_slice(), st);
                    }
                }
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn profile_name(&self) -> &str {
        &self.profile_name
    }

    /// Symbols the model can predict: everything interned plus the end and
    /// unknown symbols, excluding the begin padding symbol.
    pub fn vocab_size(&self) -> usize {
        self.symbols.len() - 1
    }

    pub fn sym_id(&self, sym: &str) -> SymId {
        self.by_name.get(sym).copied().unwrap_or(UNK)
    }

    pub fn sym_name(&self, id: SymId) -> &str {
        &self.symbols[id as usize]
    }

    /// Ids of every predictable symbol, unknown and end included.
    pub fn predictable_ids(&self) -> impl Iterator<Item = SymId> + '_ {
        (FIRST_SYMBOL..self.symbols.len() as SymId).chain([UNK, EOS])
    }

    /// Raw training count of `sym` after `context` (symbols as written).
    pub fn count(&self, context: &[&str], sym: &str) -> u64 {
        let k = context.len().min(self.order - 1);
        let ctx: Vec<SymId> = context[context.len() - k..]
            .iter()
            .map(|s| self.sym_id(s))
            .collect();
        self.contexts[k]
            .get(ctx.as_slice())
            .and_then(|st| st.succ.get(&self.sym_id(sym)))
            .copied()
            .unwrap_or(0)
    }

    fn uniform(&self) -> f64 {
        1.0 / self.vocab_size() as f64
    }

    /// Stats for every stored suffix of `ctx`, shortest first.
    pub(crate) fn chain(&self, ctx: &[SymId]) -> Vec<&ContextStats> {
        let max = ctx.len().min(self.order - 1);
        let mut out = Vec::with_capacity(max + 1);
        for k in 0..=max {
            if let Some(st) = self.contexts[k].get(&ctx[ctx.len() - k..]) {
                out.push(st);
            }
        }
        out
    }

    pub(crate) fn prob_chain(&self, chain: &[&ContextStats], sym: SymId) -> f64 {
        let mut p = self.uniform();
        for st in chain {
            let c = st.succ.get(&sym).copied().unwrap_or(0);
            let t = st.types() as f64;
            p = (c as f64 + t * p) / (st.total as f64 + t);
        }
        p
    }

    /// Witten-Bell probability of `sym` after the id context.
    pub fn prob_id(&self, ctx: &[SymId], sym: SymId) -> f64 {
        self.prob_chain(&self.chain(ctx), sym)
    }

    /// Natural-log probability of a whole line, end symbol included.
    pub fn log_prob(&self, line: &str, profile: &LanguageProfile) -> f64 {
        let folded = fold_variants(line, profile);
        let syms: Vec<SymId> = line_symbols(&folded, profile)
            .into_iter()
            .map(|s| self.sym_id(&s))
            .collect();
        let pad = self.order - 1;
        let mut seq = Vec::with_capacity(syms.len() + pad + 1);
        seq.resize(pad, BOS);
        seq.extend_from_slice(&syms);
        seq.push(EOS);
        let mut lp = 0.0;
        for i in pad..seq.len() {
            lp += self.prob_id(&seq[i - pad..i], seq[i]).ln();
        }
        lp
    }

    /// Distribution over the next symbol given trailing context text.
    /// Context shorter than the model window is padded with the begin
    /// symbol, matching line starts.
    pub fn next_distribution(
        &self,
        context: &str,
        profile: &LanguageProfile,
    ) -> Vec<(String, f64)> {
        let folded = fold_variants(context, profile);
        let mut ctx: Vec<SymId> = line_symbols(&folded, profile)
            .into_iter()
            .map(|s| self.sym_id(&s))
            .collect();
        let pad = self.order - 1;
        if ctx.len() < pad {
            let mut padded = vec![BOS; pad - ctx.len()];
            padded.append(&mut ctx);
            ctx = padded;
        }
        let chain = self.chain(&ctx);
        let mut out: Vec<(String, f64)> = self
            .predictable_ids()
            .map(|id| (self.sym_name(id).to_string(), self.prob_chain(&chain, id)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Maximum-likelihood distribution from the longest stored context,
    /// with no smoothing. Diagnostic view of the raw counts.
    pub fn ml_distribution(&self, context: &str, profile: &LanguageProfile) -> Vec<(String, f64)> {
        let folded = fold_variants(context, profile);
        let ctx: Vec<SymId> = line_symbols(&folded, profile)
            .into_iter()
            .map(|s| self.sym_id(&s))
            .collect();
        let max = ctx.len().min(self.order - 1);
        let mut found: Option<&ContextStats> = None;
        for k in (0..=max).rev() {
            if let Some(st) = self.contexts[k].get(&ctx[ctx.len() - k..]) {
                found = Some(st);
                break;
            }
        }
        let mut out = Vec::new();
        if let Some(st) = found {
            for (&sym, &c) in &st.succ {
                out.push((self.sym_name(sym).to_string(), c as f64 / st.total as f64));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = binio::Writer::new(MAGIC, VERSION);
        w.str(&self.profile_name);
        w.u32(self.order as u32);
        w.u32((self.symbols.len() - FIRST_SYMBOL as usize) as u32);
        for s in &self.symbols[FIRST_SYMBOL as usize..] {
            w.str(s);
        }
        for map in &self.contexts {
            let mut ctxs: Vec<&Box<[SymId]>> = map.keys().collect();
            ctxs.sort();
            w.u64(ctxs.len() as u64);
            for ctx in ctxs {
                for &id in ctx.iter() {
                    w.u32(id);
                }
                let st = &map[ctx];
                let mut succ: Vec<(SymId, u64)> = st.succ.iter().map(|(&s, &c)| (s, c)).collect();
                succ.sort();
                w.u32(succ.len() as u32);
                for (sym, c) in succ {
                    w.u32(sym);
                    w.u64(c);
                }
            }
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = binio::Reader::new(data, MAGIC, VERSION)?;
        let profile_name = r.str()?;
        let order = r.u32()? as usize;
        if order == 0 {
            return Err(Error::ModelFormat("order 0 in model file".into()));
        }
        let n_symbols = r.u32()? as usize;
        let mut symbols: Vec<String> = vec!["<unk>".into(), "</s>".into(), "<s>".into()];
        let mut by_name = reserved_names();
        for _ in 0..n_symbols {
            let s = r.str()?;
            by_name.insert(s.clone(), symbols.len() as SymId);
            symbols.push(s);
        }
        let limit = symbols.len() as SymId;
        let mut contexts = Vec::with_capacity(order);
        for k in 0..order {
            let n_ctx = r.u64()?;
            let mut map = HashMap::with_capacity(n_ctx as usize);
            for _ in 0..n_ctx {
                let mut ctx = Vec::with_capacity(k);
                for _ in 0..k {
                    let id = r.u32()?;
                    if id >= limit {
                        return Err(Error::ModelFormat(format!("symbol id {id} out of range")));
                    }
                    ctx.push(id);
                }
                let n_succ = r.u32()?;
                let mut st = ContextStats::default();
                for _ in 0..n_succ {
                    let sym = r.u32()?;
                    if sym >= limit {
                        return Err(Error::ModelFormat(format!("symbol id {sym} out of range")));
                    }
                    let c = r.u64()?;
                    st.succ.insert(sym, c);
                    st.total += c;
                }
                map.insert(ctx.into_boxed_slice(), st);
            }
            contexts.push(map);
        }
        r.expect_end()?;
        Ok(CharNGramLM {
            profile_name,
            order,
            symbols,
            by_name,
            contexts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&data)
    }

    /// ARPA-style text dump of the smoothed model, sorted for diffing.
    pub fn dump_arpa(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "\\data\\")?;
        for k in 0..self.order {
            let grams: usize = self.contexts[k].values().map(|st| st.succ.len()).sum();
            writeln!(out, "ngram {}={}", k + 1, grams)?;
        }
        for k in 0..self.order {
            writeln!(out, "\n\\{}-grams:", k + 1)?;
            let mut ctxs: Vec<&Box<[SymId]>> = self.contexts[k].keys().collect();
            ctxs.sort();
            for ctx in ctxs {
                let st = &self.contexts[k][ctx];
                let chain = self.chain(ctx);
                let mut succ: Vec<SymId> = st.succ.keys().copied().collect();
                succ.sort_unstable();
                for sym in succ {
                    let p = self.prob_chain(&chain, sym).log10();
                    let mut gram: Vec<String> =
                        ctx.iter().map(|&id| self.render_symbol(id)).collect();
                    gram.push(self.render_symbol(sym));
                    writeln!(out, "{:.6}\t{}", p, gram.join(" "))?;
                }
            }
        }
        writeln!(out, "\n\\end\\")
    }

    fn render_symbol(&self, id: SymId) -> String {
        let name = self.sym_name(id);
        if id < FIRST_SYMBOL {
            return name.to_string();
        }
        name.chars()
            .map(|c| {
                if c.is_whitespace() || c.is_control() {
                    format!("<U+{:04X}>", c as u32)
                } else {
                    c.to_string()
                }
            })
            .collect()
    }
}

/// Multi-character grapheme symbols can never collide with these names:
/// composed symbols always start from a single base character.
fn reserved_names() -> HashMap<String, SymId> {
    HashMap::from([
        ("<unk>".to_string(), UNK),
        ("</s>".to_string(), EOS),
        ("<s>".to_string(), BOS),
    ])
}

/// Symbol sequence of a folded line: one composed string per grapheme,
/// orphan marks rendered as their own symbols.
pub(crate) fn line_symbols(folded: &str, profile: &LanguageProfile) -> Vec<String> {
    segment_pieces(folded, profile)
        .into_iter()
        .map(|(_, piece)| match piece {
            Piece::Grapheme(g) => g.compose(profile),
            Piece::Orphan(c) => c.to_string(),
        })
        .collect()
}
