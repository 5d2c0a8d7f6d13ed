//! Acceptance suite: one test per release gate, each printing a pass or
//! fail line. Tolerances and runtime budgets are pinned in this file.

mod support;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use diac_core::analysis::{evaluate, label_scores, transcribe, wer};
use diac_core::corpus::{self, ParallelCorpus, SplitSpec};
use diac_core::corruptor::{corrupt, CorruptionConfig};
use diac_core::experiment::{run_data_mass, run_restoration, write_run, ModelKind, ModelSpec};
use diac_core::lm::CharNGramLM;
use diac_core::orthography::{fold_variants, segment, strip_diacritics};
use diac_core::restorer::{build_lattice, decode, BeamConfig};
use diac_core::rng::SplitMix64;
use diac_core::LanguageProfile;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn criterion(name: &str, budget: Duration, run: impl FnOnce() -> Result<(), String>) {
    let start = Instant::now();
    let outcome = run();
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) if elapsed <= budget => {
            println!("acceptance {name}: pass ({elapsed:.2?}, budget {budget:.0?})");
        }
        Ok(()) => {
            println!("acceptance {name}: FAIL (took {elapsed:.2?}, budget {budget:.0?})");
            panic!("{name} exceeded its runtime budget");
        }
        Err(msg) => {
            println!("acceptance {name}: FAIL ({msg})");
            panic!("{name}: {msg}");
        }
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn bribri() -> LanguageProfile {
    LanguageProfile::load("bribri-constenla").expect("built-in profile loads")
}

fn cim() -> LanguageProfile {
    LanguageProfile::load("cim-cimr").expect("built-in profile loads")
}

const BRIBRI_SENTENCE: &str = "\u{CC}s be' shk\u{E8}na\u{331}";
const BRIBRI_PHRASE: &str = "\u{EC}s be' shk\u{E8}na\u{331}, ak\u{EB}\u{301}k\u{EB}pa";
const CIM_PHRASE: &str = "i t\u{14D}ku \u{A78C}\u{101}pi\u{A78C}i";

#[test]
fn golden_reference_examples() {
    criterion("golden-examples", Duration::from_secs(1), || {
        let bp = bribri();
        let cp = cim();

        let folded = fold_variants(BRIBRI_SENTENCE, &bp);
        let stripped = strip_diacritics(&folded, &bp);
        check!(stripped == "Is be shkena", "strip gave {stripped:?}");

        let cases: [(&LanguageProfile, &str, &str, &str); 6] = [
            (&bp, BRIBRI_PHRASE, "tones", "H G HL LFLL"),
            (&bp, BRIBRI_PHRASE, "nasal", "O O ON OOOO"),
            (&bp, BRIBRI_PHRASE, "umlaut", "T T TT TLLT"),
            (&cp, CIM_PHRASE, "length", "S LS LSS"),
            (&cp, CIM_PHRASE, "consonants", "N CC GCG"),
            (&cp, CIM_PHRASE, "glottals", "N N GG"),
        ];
        for (p, phrase, scheme, want) in cases {
            let spec = p.scheme(scheme).map_err(s)?;
            let got = transcribe(phrase, spec, p).rendered();
            check!(got == want, "{scheme} gave {got:?}, want {want:?}");
        }

        for (p, phrase) in [
            (&bp, BRIBRI_SENTENCE),
            (&bp, BRIBRI_PHRASE),
            (&cp, CIM_PHRASE),
        ] {
            let folded = fold_variants(phrase, p);
            let gold = segment(&folded, p).map_err(s)?;
            let lattice = build_lattice(&strip_diacritics(&folded, p), p, true);
            check!(
                lattice.contains(&gold),
                "{phrase:?} is unreachable from its stripped form"
            );
        }
        Ok(())
    });
}

#[test]
fn stripped_baseline_equals_the_marked_word_fraction() {
    criterion("no-restoration-identity", Duration::from_secs(10), || {
        let p = bribri();
        let lex = support::default_lexicon();
        let lines = support::gold_lines(&lex, 10_000, support::CORPUS_SEED ^ 0xBA5E);
        let corpus = ParallelCorpus::from_gold_lines(lines.iter(), &p, "synthetic").map_err(s)?;
        let baseline = wer(&corpus.targets(), &corpus.sources()).map_err(s)?;

        // Independent count: a word scores as an error exactly when
        // stripping changes it.
        let mut marked = 0u64;
        let mut total = 0u64;
        for line in &lines {
            let folded = fold_variants(line, &p);
            for w in folded.split_whitespace() {
                total += 1;
                if strip_diacritics(w, &p) != w {
                    marked += 1;
                }
            }
        }
        let expected = 100.0 * marked as f64 / total as f64;
        check!(
            (baseline - expected).abs() < 1e-9,
            "wer {baseline} differs from counted fraction {expected}"
        );

        let report = evaluate(&corpus.targets(), &corpus.sources(), &p).map_err(s)?;
        check!(
            (report.wer - expected).abs() < 1e-9,
            "evaluator wer {} differs from counted fraction {expected}",
            report.wer
        );
        Ok(())
    });
}

const TOY_PROFILE: &str = r#"
name = "toy-abc"
vowels = ["a"]

[[class]]
tag = "acute"
category = "tone"
codepoints = ["0301"]

[[class]]
tag = "grave"
category = "tone"
codepoints = ["0300"]
"#;

#[test]
fn beam_decode_matches_exhaustive_search() {
    criterion("decoder-oracle", Duration::from_secs(60), || {
        let dir = tempfile::tempdir().map_err(s)?;
        let path = dir.path().join("toy-abc.toml");
        std::fs::write(&path, TOY_PROFILE).map_err(s)?;
        let toy = LanguageProfile::load(path.to_str().unwrap()).map_err(s)?;

        let mut rng = SplitMix64::new(41);
        let mut train = Vec::new();
        for _ in 0..300 {
            let n_words = 1 + rng.next_below(4);
            let words: Vec<String> = (0..n_words)
                .map(|_| {
                    let len = 1 + rng.next_below(4);
                    (0..len)
                        .map(|_| match rng.next_below(5) {
                            0 => 'a',
                            1 => 'b',
                            2 => 'c',
                            3 => '\u{E0}',
                            _ => '\u{E1}',
                        })
                        .collect()
                })
                .collect();
            train.push(words.join(" "));
        }
        let lm = CharNGramLM::train(train.iter(), 3, &toy).map_err(s)?;
        let cfg = BeamConfig {
            beam_width: 1000,
            insertion_allowed: true,
        };

        // Every input over {a, b, c, space} up to length six.
        let alphabet = ['a', 'b', 'c', ' '];
        let mut inputs = vec![String::new()];
        let mut frontier = vec![String::new()];
        for _ in 0..6 {
            let mut next = Vec::with_capacity(frontier.len() * alphabet.len());
            for prefix in &frontier {
                for c in alphabet {
                    let mut t = prefix.clone();
                    t.push(c);
                    next.push(t);
                }
            }
            inputs.extend_from_slice(&next);
            frontier = next;
        }
        check!(inputs.len() == 5461, "enumerated {} inputs", inputs.len());

        let mut max_paths = 0usize;
        for input in &inputs {
            let lattice = build_lattice(input, &toy, true);
            let mut paths = vec![String::new()];
            for pos in &lattice.positions {
                let mut next = Vec::with_capacity(paths.len() * pos.candidates.len());
                for prefix in &paths {
                    for cand in &pos.candidates {
                        let mut t = prefix.clone();
                        t.push_str(&cand.composed);
                        next.push(t);
                    }
                }
                paths = next;
            }
            check!(
                paths.len() == lattice.path_count(),
                "path count mismatch on {input:?}"
            );
            check!(
                paths.len() <= cfg.beam_width,
                "beam narrower than the path set on {input:?}"
            );
            max_paths = max_paths.max(paths.len());

            // Exhaustive argmax with the decoder's tie rule: best score,
            // then smallest written form.
            let mut best: Option<(f64, &String)> = None;
            for path in &paths {
                let lp = lm.log_prob(path, &toy);
                best = match best {
                    Some((b, t)) if lp < b || (lp == b && path >= t) => Some((b, t)),
                    _ => Some((lp, path)),
                };
            }
            let (best_lp, best_path) = best.expect("the identity path always exists");
            let decoded = decode(input, &lm, &toy, &cfg).map_err(s)?;
            check!(
                &decoded == best_path,
                "decode {input:?} gave {decoded:?}, exhaustive best is {best_path:?}"
            );
            check!(
                lm.log_prob(&decoded, &toy) == best_lp,
                "decode {input:?} scores differently from the exhaustive best"
            );
            check!(
                strip_diacritics(&fold_variants(&decoded, &toy), &toy) == *input,
                "decode {input:?} is not a restoration of its input"
            );
        }
        check!(max_paths == 729, "largest lattice had {max_paths} paths");
        Ok(())
    });
}

#[test]
fn ngram_model_is_a_proper_distribution() {
    criterion("lm-correctness", Duration::from_secs(60), || {
        let p = bribri();
        let lex = support::default_lexicon();
        let train = support::gold_lines(&lex, 400, 0x1111);
        let lm = CharNGramLM::train(train.iter(), 4, &p).map_err(s)?;

        let pool: Vec<char> =
            "abcdefgiklmnoprstuwy '\u{E0}\u{E9}\u{EC}\u{F2}\u{FA}\u{EB}\u{301}\u{331}\u{308}"
                .chars()
                .collect();
        let mut rng = SplitMix64::new(0x2222);
        let fuzz = |max_len: u64, rng: &mut SplitMix64| -> String {
            let len = rng.next_below(max_len) as usize;
            (0..len)
                .map(|_| pool[rng.next_below(pool.len() as u64) as usize])
                .collect()
        };

        for i in 0..1000 {
            let ctx = fuzz(12, &mut rng);
            let dist = lm.next_distribution(&ctx, &p);
            let sum: f64 = dist.iter().map(|(_, v)| v).sum();
            check!((sum - 1.0).abs() < 1e-9, "context {i} sums to {sum:.12}");
            check!(
                dist.iter().all(|(_, v)| *v > 0.0),
                "context {i} assigns zero mass"
            );
        }

        // Hand-worked interpolated counts for the corpus ["aba"] at order
        // two. Unigram events a,b,a,end give counts a:2 b:1 end:1 over 3
        // types, the predictable vocabulary is {a, b, end, unk}, so
        //   P1(x) = (c(x) + 3/4) / 7
        // and the context "a" saw 2 events over 2 types:
        //   P(x|a) = (c(a,x) + 2 P1(x)) / 4.
        let tiny = CharNGramLM::train(["aba"], 2, &p).map_err(s)?;
        check!(tiny.vocab_size() == 4, "vocab is {}", tiny.vocab_size());
        let prob = |ctx: &[&str], sym: &str| {
            let ids: Vec<_> = ctx.iter().map(|c| tiny.sym_id(c)).collect();
            tiny.prob_id(&ids, tiny.sym_id(sym))
        };
        let tol = 1e-12;
        let hand: [(&[&str], &str, f64); 11] = [
            (&[], "a", 11.0 / 28.0),
            (&[], "b", 7.0 / 28.0),
            (&[], "</s>", 7.0 / 28.0),
            (&[], "<unk>", 3.0 / 28.0),
            (&["a"], "b", 3.0 / 8.0),
            (&["a"], "</s>", 3.0 / 8.0),
            (&["a"], "a", 11.0 / 56.0),
            (&["a"], "<unk>", 3.0 / 56.0),
            (&["<s>"], "a", 39.0 / 56.0),
            (&["<s>"], "b", 7.0 / 56.0),
            (&["b"], "a", 39.0 / 56.0),
        ];
        for (ctx, sym, want) in hand {
            let got = prob(ctx, sym);
            check!(
                (got - want).abs() < tol,
                "P({sym} | {ctx:?}) = {got:.15}, want {want:.15}"
            );
        }
        let want_lp = (39.0f64 / 56.0).ln()
            + (3.0f64 / 8.0).ln()
            + (39.0f64 / 56.0).ln()
            + (3.0f64 / 8.0).ln();
        check!(
            (tiny.log_prob("aba", &p) - want_lp).abs() < tol,
            "log-prob of the training line is off"
        );

        let dir = tempfile::tempdir().map_err(s)?;
        let path = dir.path().join("model.bin");
        lm.save(&path).map_err(s)?;
        let loaded = CharNGramLM::load(&path).map_err(s)?;
        for i in 0..1000 {
            let line = fuzz(30, &mut rng);
            let before = lm.log_prob(&line, &p);
            let after = loaded.log_prob(&line, &p);
            check!(
                before == after,
                "line {i} scores {before} before saving, {after} after"
            );
        }
        Ok(())
    });
}

#[test]
fn restoration_halves_the_no_restoration_baseline() {
    criterion("learning-signal", Duration::from_secs(600), || {
        let p = bribri();
        let lex = support::default_lexicon();
        let lines = support::gold_corpus_lines(&lex, support::CORPUS_WORDS, support::CORPUS_SEED);
        let corpus =
            ParallelCorpus::from_gold_lines(lines.iter(), &p, "synthetic-cv").map_err(s)?;
        check!(
            corpus.word_count() >= support::CORPUS_WORDS,
            "corpus drew only {} words",
            corpus.word_count()
        );

        let spec = SplitSpec {
            train_frac: 0.8,
            valid_frac: 0.1,
            test_frac: 0.1,
            n_replicates: 5,
            seed: support::CORPUS_SEED,
        };
        let model = ModelSpec {
            kind: ModelKind::CharLm,
            order: 6,
            beam: BeamConfig::default(),
            jobs: 0,
            hypothesis_files: Vec::new(),
        };
        let run = run_restoration(&corpus, &model, &spec, &p).map_err(s)?;
        check!(
            run.summary.failed == 0,
            "{} replicates failed",
            run.summary.failed
        );
        let wer_mean = run.summary.wer.as_ref().ok_or("no aggregate wer")?.mean;
        let base_mean = run.summary.baseline_wer.mean;
        check!(
            base_mean > 10.0,
            "baseline {base_mean:.2} is too easy to be informative"
        );
        check!(
            wer_mean <= 0.5 * base_mean,
            "mean WER {wer_mean:.2} is above half the baseline {base_mean:.2}"
        );
        println!(
            "  restored {wer_mean:.2} WER against a {base_mean:.2} baseline over 5 replicates"
        );

        let targets = [1_000usize, 5_000, 10_000, 25_000, 50_000];
        let mass = run_data_mass(&corpus, &targets, &model, &spec, &p).map_err(s)?;
        check!(
            mass.curve.len() == targets.len(),
            "curve has {} points",
            mass.curve.len()
        );
        let first = &mass.curve[0];
        let last = &mass.curve[mass.curve.len() - 1];
        check!(
            first.wer.mean >= last.wer.mean,
            "more data made things worse: {:.2} at {} words, {:.2} at {}",
            first.wer.mean,
            first.target_words,
            last.wer.mean,
            last.target_words
        );
        let curve: Vec<String> = mass
            .curve
            .iter()
            .map(|pt| format!("{} words {:.2}", pt.target_words, pt.wer.mean))
            .collect();
        println!("  data-mass curve: {}", curve.join(", "));
        Ok(())
    });
}

#[test]
fn corruption_matches_its_configured_rates() {
    criterion("corruption-statistics", Duration::from_secs(60), || {
        let p = bribri();
        let config = CorruptionConfig::load("bribri-default").map_err(s)?;

        // 2,500 lines of four grave-marked sites each.
        let line = "k\u{E8} k\u{E8} k\u{E8} k\u{E8}";
        let (mut swapped, mut kept, mut dropped) = (0u64, 0u64, 0u64);
        for i in 0..2500u64 {
            let out = corrupt(line, i, &config, &p).map_err(s)?;
            for w in out.split_whitespace() {
                match w {
                    "k\u{E9}" => swapped += 1,
                    "k\u{E8}" => kept += 1,
                    "ke" => dropped += 1,
                    other => return Err(format!("unexpected token {other:?}")),
                }
            }
        }
        let n = swapped + kept + dropped;
        check!(n == 10_000, "tallied {n} sites");
        let pct = |c: u64| 100.0 * c as f64 / n as f64;
        check!(
            (pct(swapped) - 15.0).abs() <= 2.0,
            "swap rate {:.2}%, want 15 +/- 2",
            pct(swapped)
        );
        check!(
            (pct(kept) - 15.0).abs() <= 2.0,
            "keep rate {:.2}%, want 15 +/- 2",
            pct(kept)
        );
        check!(
            (pct(dropped) - 70.0).abs() <= 2.0,
            "drop rate {:.2}%, want 70 +/- 2",
            pct(dropped)
        );

        // Chi-square with two degrees of freedom at the 0.01 level.
        let chi2: f64 = [(swapped, 0.15), (kept, 0.15), (dropped, 0.70)]
            .iter()
            .map(|&(obs, pr)| {
                let e = pr * n as f64;
                (obs as f64 - e).powi(2) / e
            })
            .sum();
        check!(
            chi2 < 9.210340371976182,
            "chi-square {chi2:.3} rejects the configured rates"
        );
        println!(
            "  swap {:.2}% keep {:.2}% drop {:.2}% over {n} sites, chi-square {chi2:.3}",
            pct(swapped),
            pct(kept),
            pct(dropped)
        );

        // Corruption must never change the stripped reading.
        let lex = support::default_lexicon();
        let fuzz = support::gold_lines(&lex, 300, 0x57121);
        for (i, line) in fuzz.iter().enumerate() {
            let out = corrupt(line, i as u64, &config, &p).map_err(s)?;
            let want = strip_diacritics(&fold_variants(line, &p), &p);
            let got = strip_diacritics(&fold_variants(&out, &p), &p);
            check!(got == want, "line {i} changed its stripped reading");
        }

        let cp = cim();
        let cim_config = CorruptionConfig::load("cim-default").map_err(s)?;
        let cim_words = [
            "\u{A78C}aka",
            "t\u{14D}ku",
            "\u{A78C}\u{101}pi\u{A78C}i",
            "ranga\u{A78C}anga",
            "moana",
            "\u{A78C}ei",
        ];
        let mut rng = SplitMix64::new(0x57122);
        for i in 0..300u64 {
            let n = 3 + rng.next_below(5);
            let line = (0..n)
                .map(|_| cim_words[rng.next_below(cim_words.len() as u64) as usize])
                .collect::<Vec<_>>()
                .join(" ");
            let out = corrupt(&line, i, &cim_config, &cp).map_err(s)?;
            let want = strip_diacritics(&fold_variants(&line, &cp), &cp);
            let got = strip_diacritics(&fold_variants(&out, &cp), &cp);
            check!(got == want, "line {i} changed its stripped reading");
        }
        Ok(())
    });
}

/// Mark-level noise that keeps word and vowel counts intact, so reference
/// and hypothesis labels align position by position.
fn perturb_marks(word: &str, rng: &mut SplitMix64) -> String {
    let mut out = String::new();
    for c in word.chars() {
        if support::MARKS.contains(&c) {
            match rng.next_below(4) {
                0 => {}
                1 => out.push(support::MARKS[rng.next_below(5) as usize]),
                _ => out.push(c),
            }
        } else {
            out.push(c);
            if support::VOWELS.contains(&c) && rng.next_unit() < 0.1 {
                out.push(support::MARKS[rng.next_below(5) as usize]);
            }
        }
    }
    out
}

#[test]
fn label_scorer_matches_a_brute_force_tally() {
    criterion("scorer-oracle", Duration::from_secs(60), || {
        let p = bribri();
        let lex = support::default_lexicon();
        for set in 0..100u64 {
            let mut rng = SplitMix64::new(0x5C0 + set);
            let n_lines = 3 + rng.next_below(6) as usize;
            let mut refs = Vec::with_capacity(n_lines);
            let mut hyps = Vec::with_capacity(n_lines);
            for _ in 0..n_lines {
                let n_words = 2 + rng.next_below(5) as usize;
                let mut rw = Vec::with_capacity(n_words);
                let mut hw = Vec::with_capacity(n_words);
                for _ in 0..n_words {
                    let w = &lex[rng.next_below(lex.len() as u64) as usize];
                    rw.push(w.clone());
                    hw.push(perturb_marks(w, &mut rng));
                }
                refs.push(rw.join(" "));
                hyps.push(hw.join(" "));
            }

            for scheme_name in ["tones", "nasal", "umlaut"] {
                let scheme = p.scheme(scheme_name).map_err(s)?;
                let (scores, conf) = label_scores(&refs, &hyps, scheme, &p).map_err(s)?;

                let mut tally: BTreeMap<(char, char), u64> = BTreeMap::new();
                for (r, h) in refs.iter().zip(&hyps) {
                    let rt = transcribe(r, scheme, &p);
                    let ht = transcribe(h, scheme, &p);
                    check!(
                        rt.words().len() == ht.words().len(),
                        "set {set}: word counts diverged"
                    );
                    for (rl, hl) in rt.words().iter().zip(ht.words()) {
                        check!(rl.len() == hl.len(), "set {set}: label counts diverged");
                        for (&a, &b) in rl.iter().zip(hl) {
                            *tally.entry((a, b)).or_default() += 1;
                        }
                    }
                }

                for (i, rl) in conf.labels.iter().enumerate() {
                    for (j, hl) in conf.labels.iter().enumerate() {
                        let want = if rl == "eps" || hl == "eps" {
                            0
                        } else {
                            let rc = rl.chars().next().expect("single-char label");
                            let hc = hl.chars().next().expect("single-char label");
                            tally.get(&(rc, hc)).copied().unwrap_or(0)
                        };
                        check!(
                            conf.rows[i][j] == want,
                            "set {set} {scheme_name}: cell {rl}->{hl} is {}, tally says {want}",
                            conf.rows[i][j]
                        );
                    }
                }

                for score in &scores {
                    let c = score.label.chars().next().expect("single-char label");
                    let tp = tally.get(&(c, c)).copied().unwrap_or(0);
                    let row: u64 = tally
                        .iter()
                        .filter(|((a, _), _)| *a == c)
                        .map(|(_, n)| *n)
                        .sum();
                    let col: u64 = tally
                        .iter()
                        .filter(|((_, b), _)| *b == c)
                        .map(|(_, n)| *n)
                        .sum();
                    let fp = col - tp;
                    let fn_ = row - tp;
                    let (precision, recall, f1) = if tp + fp + fn_ == 0 {
                        (100.0, 100.0, 100.0)
                    } else {
                        let pr = if tp + fp == 0 {
                            0.0
                        } else {
                            100.0 * tp as f64 / (tp + fp) as f64
                        };
                        let rc = if tp + fn_ == 0 {
                            0.0
                        } else {
                            100.0 * tp as f64 / (tp + fn_) as f64
                        };
                        let f = if pr + rc == 0.0 {
                            0.0
                        } else {
                            2.0 * pr * rc / (pr + rc)
                        };
                        (pr, rc, f)
                    };
                    check!(
                        score.precision == precision
                            && score.recall == recall
                            && score.f1 == f1
                            && score.support == row,
                        "set {set} {scheme_name}: label {c} scores diverge from the tally"
                    );
                }
            }
        }
        Ok(())
    });
}

fn dir_snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("walk stays under its root")
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path)?);
            }
        }
        Ok(())
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out).map_err(s)?;
    Ok(out)
}

#[test]
fn experiment_reruns_are_byte_identical() {
    criterion("determinism", Duration::from_secs(120), || {
        let p = bribri();
        let lex = support::default_lexicon();
        let lines = support::gold_lines(&lex, 60, 0xD0D0);
        let corpus = ParallelCorpus::from_gold_lines(lines.iter(), &p, "synthetic").map_err(s)?;
        let spec = SplitSpec {
            train_frac: 0.8,
            valid_frac: 0.1,
            test_frac: 0.1,
            n_replicates: 3,
            seed: 5,
        };
        let model = ModelSpec {
            kind: ModelKind::Hybrid,
            order: 3,
            beam: BeamConfig {
                beam_width: 4,
                insertion_allowed: true,
            },
            jobs: 0,
            hypothesis_files: Vec::new(),
        };
        let dir = tempfile::tempdir().map_err(s)?;

        let mut restoration_dirs = Vec::new();
        for tag in ["a", "b"] {
            let out = dir.path().join(format!("restoration-{tag}"));
            let run = run_restoration(&corpus, &model, &spec, &p).map_err(s)?;
            write_run(&out, &run).map_err(s)?;
            restoration_dirs.push(dir_snapshot(&out)?);
        }
        check!(
            restoration_dirs[0] == restoration_dirs[1],
            "restoration reruns differ on disk"
        );
        check!(
            restoration_dirs[0].contains_key("summary.json"),
            "no summary was written"
        );

        let config = CorruptionConfig::load("bribri-default").map_err(s)?;
        let mut correction_dirs = Vec::new();
        for tag in ["a", "b"] {
            let out = dir.path().join(format!("correction-{tag}"));
            let run = diac_core::experiment::run_correction(&corpus, &config, &model, &spec, &p)
                .map_err(s)?;
            write_run(&out, &run).map_err(s)?;
            correction_dirs.push(dir_snapshot(&out)?);
        }
        check!(
            correction_dirs[0] == correction_dirs[1],
            "correction reruns differ on disk"
        );

        let targets = [60usize, 240];
        let mut mass_dirs = Vec::new();
        for tag in ["a", "b"] {
            let out = dir.path().join(format!("datamass-{tag}"));
            let run = run_data_mass(&corpus, &targets, &model, &spec, &p).map_err(s)?;
            diac_core::experiment::write_data_mass(&out, &run).map_err(s)?;
            mass_dirs.push(dir_snapshot(&out)?);
        }
        check!(
            mass_dirs[0] == mass_dirs[1],
            "data-mass reruns differ on disk"
        );

        let mut split_dirs = Vec::new();
        for tag in ["a", "b"] {
            let out = dir.path().join(format!("splits-{tag}"));
            let reps = corpus::split(&corpus, &spec).map_err(s)?;
            corpus::write_split_dir(&out, &corpus, &spec, &reps).map_err(s)?;
            split_dirs.push(dir_snapshot(&out)?);
        }
        check!(
            split_dirs[0] == split_dirs[1],
            "split reruns differ on disk"
        );
        Ok(())
    });
}
