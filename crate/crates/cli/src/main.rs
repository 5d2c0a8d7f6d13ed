//! `diac`: command-line front end for the diacritic toolkit.
//!
//! Every subcommand is a thin wrapper over one library operation. Text
//! streams are newline-delimited UTF-8; CRLF is accepted on input and LF
//! is emitted. All randomness is surfaced through `--seed` flags.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use diac_core::analysis::{evaluate, transcribe};
use diac_core::corpus::{self, ParallelCorpus, SplitSpec};
use diac_core::corruptor::{corrupt, CorruptionConfig};
use diac_core::experiment::{
    run_correction, run_data_mass, run_restoration, write_data_mass, write_run, ModelKind,
    ModelSpec,
};
use diac_core::lm::CharNGramLM;
use diac_core::orthography::{fold_variants, strip_diacritics, GlottalPosition, SchemeUnit};
use diac_core::restorer::{decode_lines, restore_lines, BeamConfig, WordLookupModel};
use diac_core::{Error, LanguageProfile, Result};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  command-line usage error
  3  file or stream I/O error
  4  profile, config, or experiment setup error
  5  corpus data error (misaligned pairs, empty or undersized sets)
  6  model file error (bad magic, version, checksum, or profile mismatch)";

/// Diacritic restoration toolkit.
#[derive(Parser)]
#[command(name = "diac", version, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect language profiles.
    #[command(subcommand)]
    Profile(ProfileCmd),
    /// Prepare parallel corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Remove profile diacritics from stdin lines.
    Strip(StripArgs),
    /// Train a restoration model on gold text.
    Train(TrainArgs),
    /// Restore diacritics on stdin lines with trained models.
    Restore(RestoreArgs),
    /// Rewrite stdin lines as transcription code strings.
    Transcribe(TranscribeArgs),
    /// Score a hypothesis file against a reference file.
    Evaluate(EvaluateArgs),
    /// Probabilistically corrupt diacritics on stdin lines.
    Corrupt(CorruptArgs),
    /// Run multi-replicate experiments into a results directory.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Subcommand)]
enum ProfileCmd {
    /// Load a profile and print its inventory.
    Validate {
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        format: FormatArg,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Build an aligned source/target pair from gold text.
    Ingest {
        #[command(flatten)]
        profile: ProfileArg,
        /// Gold text, one sentence per line.
        #[arg(long, value_name = "FILE")]
        gold: PathBuf,
        /// Where to write the stripped source side.
        #[arg(long, value_name = "FILE")]
        out_src: PathBuf,
        /// Where to write the folded target side.
        #[arg(long, value_name = "FILE")]
        out_tgt: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Shuffle a pair into train/valid/test replicate directories.
    Split {
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        pair: PairArg,
        /// Directory to write replicates and a manifest into.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Draw a sentence subset holding roughly a target word count.
    Subset {
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        pair: PairArg,
        /// Word budget for the subset.
        #[arg(long, value_name = "N")]
        words: usize,
        /// Shuffle seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the subset source side.
        #[arg(long, value_name = "FILE")]
        out_src: PathBuf,
        /// Where to write the subset target side.
        #[arg(long, value_name = "FILE")]
        out_tgt: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Strip gold text and restore it across split replicates.
    Restoration(RestorationArgs),
    /// Restoration at increasing training word budgets.
    Datamass(DataMassArgs),
    /// Corrupt gold text and correct it across split replicates.
    Correction(CorrectionArgs),
}

#[derive(Args)]
struct ProfileArg {
    /// Built-in profile name (`bribri-constenla`, `cim-cimr`) or a TOML path.
    #[arg(long, value_name = "NAME|PATH")]
    profile: String,
}

#[derive(Args)]
struct FormatArg {
    /// Output format for reports and stats.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Args)]
struct PairArg {
    /// Source side of a prepared pair.
    #[arg(long, value_name = "FILE")]
    src: PathBuf,
    /// Target side of a prepared pair.
    #[arg(long, value_name = "FILE")]
    tgt: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    /// Fraction of sentences for training.
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    /// Fraction of sentences for validation.
    #[arg(long, default_value_t = 0.1)]
    valid_frac: f64,
    /// Fraction of sentences for testing.
    #[arg(long, default_value_t = 0.1)]
    test_frac: f64,
    /// Number of independently shuffled replicates.
    #[arg(long, default_value_t = 5)]
    replicates: usize,
    /// Base shuffle seed; replicate i shuffles with seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SplitArgs {
    fn to_spec(&self) -> SplitSpec {
        SplitSpec {
            train_frac: self.train_frac,
            valid_frac: self.valid_frac,
            test_frac: self.test_frac,
            n_replicates: self.replicates,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct StripArgs {
    #[command(flatten)]
    profile: ProfileArg,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    profile: ProfileArg,
    /// Gold training text, one sentence per line.
    #[arg(long, value_name = "FILE")]
    gold: PathBuf,
    /// Model family to train.
    #[arg(long, value_enum, default_value_t = TrainKind::CharLm)]
    kind: TrainKind,
    /// N-gram order for char-lm models.
    #[arg(long, default_value_t = 6)]
    order: usize,
    /// Where to write the model file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainKind {
    CharLm,
    WordLookup,
}

#[derive(Args)]
struct RestoreArgs {
    #[command(flatten)]
    profile: ProfileArg,
    /// Model file. Pass an n-gram model, a word table, or both (the table
    /// answers known words and the n-gram model decodes the rest).
    #[arg(long, value_name = "FILE", required = true)]
    model: Vec<PathBuf>,
    /// Beam width for n-gram decoding.
    #[arg(long, default_value_t = 16)]
    beam: usize,
    /// Never propose glottal marks absent from the input.
    #[arg(long)]
    no_insert: bool,
    /// Worker threads for batch decoding; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct TranscribeArgs {
    #[command(flatten)]
    profile: ProfileArg,
    /// Transcription scheme name from the profile.
    #[arg(long, value_name = "NAME")]
    scheme: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    profile: ProfileArg,
    /// Reference file, one sentence per line.
    #[arg(long = "ref", value_name = "FILE")]
    reference: PathBuf,
    /// Hypothesis file, aligned line by line with the reference.
    #[arg(long, value_name = "FILE")]
    hyp: PathBuf,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Args)]
struct CorruptArgs {
    #[command(flatten)]
    profile: ProfileArg,
    /// Built-in corruption config name (`bribri-default`, `cim-default`)
    /// or a TOML path.
    #[arg(long, value_name = "NAME|PATH")]
    config: String,
    /// Override the config's own seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RestorationArgs {
    #[command(flatten)]
    profile: ProfileArg,
    #[command(flatten)]
    input: ExperimentInput,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Results directory to create.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Args)]
struct DataMassArgs {
    #[command(flatten)]
    base: RestorationArgs,
    /// Training word budgets for the curve; repeat the flag per point.
    #[arg(long = "words", value_name = "N", default_values_t = [1000usize, 5000, 10000, 25000, 50000])]
    words: Vec<usize>,
}

#[derive(Args)]
struct CorrectionArgs {
    #[command(flatten)]
    base: RestorationArgs,
    /// Corruption config name or TOML path.
    #[arg(long, value_name = "NAME|PATH")]
    config: String,
    /// Override the corruption config's seed.
    #[arg(long, value_name = "SEED")]
    corruption_seed: Option<u64>,
}

#[derive(Args)]
struct ExperimentInput {
    /// Gold text; the source side is its stripped form.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["src", "tgt"])]
    gold: Option<PathBuf>,
    /// Source side of a prepared pair (with --tgt).
    #[arg(long, value_name = "FILE", requires = "tgt")]
    src: Option<PathBuf>,
    /// Target side of a prepared pair (with --src).
    #[arg(long, value_name = "FILE", requires = "src")]
    tgt: Option<PathBuf>,
}

impl ExperimentInput {
    fn load(&self, profile: &LanguageProfile) -> Result<ParallelCorpus> {
        match (&self.gold, &self.src, &self.tgt) {
            (Some(gold), None, None) => ParallelCorpus::ingest(gold, profile),
            (None, Some(src), Some(tgt)) => ParallelCorpus::read_pair(src, tgt, profile),
            (Some(_), _, _) => unreachable!("clap rejects --gold with --src/--tgt"),
            _ => Err(Error::Experiment(
                "pass --gold, or --src and --tgt together".into(),
            )),
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Model family to evaluate.
    #[arg(long, value_enum, default_value_t = KindArg::CharLm)]
    kind: KindArg,
    /// N-gram order for LM-based kinds.
    #[arg(long, default_value_t = 6)]
    order: usize,
    /// Beam width for LM-based kinds.
    #[arg(long, default_value_t = 16)]
    beam: usize,
    /// Never propose glottal marks absent from the input.
    #[arg(long)]
    no_insert: bool,
    /// Worker threads for batch decoding; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Hypothesis file for the external-hypotheses kind, one per
    /// replicate; repeat the flag in replicate order.
    #[arg(long = "hyp", value_name = "FILE")]
    hyps: Vec<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    CharLm,
    WordLookup,
    Hybrid,
    ExternalHypotheses,
}

impl ModelArgs {
    fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            kind: match self.kind {
                KindArg::CharLm => ModelKind::CharLm,
                KindArg::WordLookup => ModelKind::WordLookup,
                KindArg::Hybrid => ModelKind::Hybrid,
                KindArg::ExternalHypotheses => ModelKind::External,
            },
            order: self.order,
            beam: BeamConfig {
                beam_width: self.beam,
                insertion_allowed: !self.no_insert,
            },
            jobs: self.jobs,
            hypothesis_files: self.hyps.clone(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Profile(cmd) => run_profile(cmd),
        Command::Corpus(cmd) => run_corpus(cmd),
        Command::Strip(args) => run_strip(args),
        Command::Train(args) => run_train(args),
        Command::Restore(args) => run_restore(args),
        Command::Transcribe(args) => run_transcribe(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Corrupt(args) => run_corrupt(args),
        Command::Experiment(cmd) => run_experiment(cmd),
    }
}

fn io_err(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
    Error::Io {
        path: path.into(),
        source,
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn emit(line: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").map_err(|e| io_err("<stdout>", e))
}

/// Applies `f` to each stdin line and prints the result, preserving order.
fn map_stdin_lines(mut f: impl FnMut(usize, &str) -> Result<String>) -> Result<()> {
    let stdin = std::io::stdin().lock();
    let mut out = std::io::stdout().lock();
    for (i, line) in stdin.lines().enumerate() {
        let line = line.map_err(|e| io_err("<stdin>", e))?;
        let mapped = f(i, &line)?;
        writeln!(out, "{mapped}").map_err(|e| io_err("<stdout>", e))?;
    }
    Ok(())
}

fn run_profile(cmd: ProfileCmd) -> Result<()> {
    let ProfileCmd::Validate { profile, format } = cmd;
    let p = LanguageProfile::load(&profile.profile)?;
    match format.format {
        Format::Structured => {
            let classes: Vec<_> = p
                .classes()
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "tag": c.tag,
                        "category": c.category.to_string(),
                        "mark": format!("U+{:04X}", c.mark as u32),
                    })
                })
                .collect();
            let schemes: Vec<_> = p
                .schemes()
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "name": s.name,
                        "unit": match s.unit {
                            SchemeUnit::Syllable => "syllable",
                            SchemeUnit::Word => "word",
                        },
                        "labels": s.label_alphabet().iter().collect::<String>(),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "profile": p.name(),
                "vowels": p.vowels().collect::<String>(),
                "classes": classes,
                "glottal": p.glottal().map(|g| serde_json::json!({
                    "mark": format!("U+{:04X}", g.mark as u32),
                    "position": match g.position {
                        GlottalPosition::AfterVowel => "after-vowel",
                        GlottalPosition::SyllableOnset => "syllable-onset",
                    },
                })),
                "nasal_on_lax": p.nasal_on_lax(),
                "schemes": schemes,
            });
            emit(&serde_json::to_string_pretty(&doc).expect("report serializes"))?;
        }
        Format::Text => {
            emit(&format!("profile {}", p.name()))?;
            emit(&format!("vowels {}", p.vowels().collect::<String>()))?;
            for c in p.classes() {
                emit(&format!(
                    "class {} {} U+{:04X}",
                    c.tag, c.category, c.mark as u32
                ))?;
            }
            if let Some(g) = p.glottal() {
                let position = match g.position {
                    GlottalPosition::AfterVowel => "after-vowel",
                    GlottalPosition::SyllableOnset => "syllable-onset",
                };
                emit(&format!("glottal U+{:04X} {}", g.mark as u32, position))?;
            }
            for s in p.schemes() {
                let unit = match s.unit {
                    SchemeUnit::Syllable => "syllable",
                    SchemeUnit::Word => "word",
                };
                emit(&format!(
                    "scheme {} per-{} labels {}",
                    s.name,
                    unit,
                    s.label_alphabet().iter().collect::<String>()
                ))?;
            }
            emit("ok")?;
        }
    }
    Ok(())
}

fn pair_stats(c: &ParallelCorpus, format: Format) -> Result<()> {
    match format {
        Format::Structured => {
            let doc = serde_json::json!({
                "sentences": c.len(),
                "words": c.word_count(),
                "target_sha256": c.content_hash(),
                "pair_sha256": c.pair_hash(),
            });
            emit(&serde_json::to_string_pretty(&doc).expect("stats serialize"))
        }
        Format::Text => emit(&format!(
            "{} sentences, {} words, sha256 {}",
            c.len(),
            c.word_count(),
            c.content_hash()
        )),
    }
}

fn run_corpus(cmd: CorpusCmd) -> Result<()> {
    match cmd {
        CorpusCmd::Ingest {
            profile,
            gold,
            out_src,
            out_tgt,
            format,
        } => {
            let p = LanguageProfile::load(&profile.profile)?;
            let c = ParallelCorpus::ingest(&gold, &p)?;
            c.write_pair(&out_src, &out_tgt)?;
            pair_stats(&c, format.format)
        }
        CorpusCmd::Split {
            profile,
            pair,
            out_dir,
            split,
            format,
        } => {
            let p = LanguageProfile::load(&profile.profile)?;
            let c = ParallelCorpus::read_pair(&pair.src, &pair.tgt, &p)?;
            let spec = split.to_spec();
            let reps = corpus::split(&c, &spec)?;
            corpus::write_split_dir(&out_dir, &c, &spec, &reps)?;
            match format.format {
                Format::Structured => {
                    let doc = serde_json::json!({
                        "replicates": reps.len(),
                        "sentences": c.len(),
                        "dir": out_dir.display().to_string(),
                    });
                    emit(&serde_json::to_string_pretty(&doc).expect("stats serialize"))
                }
                Format::Text => emit(&format!(
                    "wrote {} replicates of {} sentences to {}",
                    reps.len(),
                    c.len(),
                    out_dir.display()
                )),
            }
        }
        CorpusCmd::Subset {
            profile,
            pair,
            words,
            seed,
            out_src,
            out_tgt,
            format,
        } => {
            let p = LanguageProfile::load(&profile.profile)?;
            let c = ParallelCorpus::read_pair(&pair.src, &pair.tgt, &p)?;
            let subset = corpus::subset_by_words(&c, words, seed)?;
            subset.write_pair(&out_src, &out_tgt)?;
            pair_stats(&subset, format.format)
        }
    }
}

fn run_strip(args: StripArgs) -> Result<()> {
    let p = LanguageProfile::load(&args.profile.profile)?;
    map_stdin_lines(|_, line| Ok(strip_diacritics(&fold_variants(line, &p), &p)))
}

fn run_train(args: TrainArgs) -> Result<()> {
    let p = LanguageProfile::load(&args.profile.profile)?;
    let lines = read_lines(&args.gold)?;
    match args.kind {
        TrainKind::CharLm => {
            let lm = CharNGramLM::train(lines.iter(), args.order, &p)?;
            lm.save(&args.out)?;
            emit(&format!(
                "wrote order-{} char-lm to {}",
                args.order,
                args.out.display()
            ))
        }
        TrainKind::WordLookup => {
            let table = WordLookupModel::train(lines.iter(), &p);
            table.save(&args.out)?;
            emit(&format!(
                "wrote word-lookup table to {}",
                args.out.display()
            ))
        }
    }
}

fn run_restore(args: RestoreArgs) -> Result<()> {
    let p = LanguageProfile::load(&args.profile.profile)?;
    let mut lm: Option<CharNGramLM> = None;
    let mut table: Option<WordLookupModel> = None;
    for path in &args.model {
        let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
        if bytes.starts_with(b"DCLM") {
            if lm.is_some() {
                return Err(Error::ModelFormat("two n-gram models given".into()));
            }
            lm = Some(CharNGramLM::from_bytes(&bytes)?);
        } else if bytes.starts_with(b"DCWL") {
            if table.is_some() {
                return Err(Error::ModelFormat("two word tables given".into()));
            }
            table = Some(WordLookupModel::from_bytes(&bytes)?);
        } else {
            return Err(Error::ModelFormat(format!(
                "{}: unrecognized model file",
                path.display()
            )));
        }
    }
    let cfg = BeamConfig {
        beam_width: args.beam,
        insertion_allowed: !args.no_insert,
    };
    let mut lines = Vec::new();
    for line in std::io::stdin().lock().lines() {
        lines.push(line.map_err(|e| io_err("<stdin>", e))?);
    }
    let restored = match (&table, &lm) {
        (Some(t), Some(l)) => restore_lines(t, &lines, &p, Some((l, &cfg)), args.jobs)?,
        (Some(t), None) => restore_lines(t, &lines, &p, None, args.jobs)?,
        (None, Some(l)) => decode_lines(&lines, l, &p, &cfg, args.jobs)?,
        (None, None) => unreachable!("clap requires at least one --model"),
    };
    let mut out = std::io::stdout().lock();
    for line in &restored {
        writeln!(out, "{line}").map_err(|e| io_err("<stdout>", e))?;
    }
    Ok(())
}

fn run_transcribe(args: TranscribeArgs) -> Result<()> {
    let p = LanguageProfile::load(&args.profile.profile)?;
    let scheme = p.scheme(&args.scheme)?.clone();
    map_stdin_lines(|_, line| Ok(transcribe(line, &scheme, &p).rendered()))
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let p = LanguageProfile::load(&args.profile.profile)?;
    let refs = read_lines(&args.reference)?;
    let hyps = read_lines(&args.hyp)?;
    let report = evaluate(&refs, &hyps, &p)?;
    match args.format.format {
        Format::Structured => emit(&report.to_json()),
        Format::Text => {
            print!("{}", report.render_text());
            Ok(())
        }
    }
}

fn run_corrupt(args: CorruptArgs) -> Result<()> {
    let p = LanguageProfile::load(&args.profile.profile)?;
    let mut config = CorruptionConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    config.validate_for(&p)?;
    map_stdin_lines(|i, line| corrupt(line, i as u64, &config, &p))
}

fn run_experiment(cmd: ExperimentCmd) -> Result<()> {
    match cmd {
        ExperimentCmd::Restoration(args) => {
            let p = LanguageProfile::load(&args.profile.profile)?;
            let c = args.input.load(&p)?;
            let run = run_restoration(&c, &args.model.to_spec(), &args.split.to_spec(), &p)?;
            write_run(&args.out_dir, &run)?;
            match args.format.format {
                Format::Structured => emit(&run.to_json()),
                Format::Text => {
                    print!("{}", run.render_text());
                    Ok(())
                }
            }
        }
        ExperimentCmd::Datamass(args) => {
            let p = LanguageProfile::load(&args.base.profile.profile)?;
            let c = args.base.input.load(&p)?;
            let run = run_data_mass(
                &c,
                &args.words,
                &args.base.model.to_spec(),
                &args.base.split.to_spec(),
                &p,
            )?;
            write_data_mass(&args.base.out_dir, &run)?;
            match args.base.format.format {
                Format::Structured => emit(&run.to_json()),
                Format::Text => {
                    print!("{}", run.render_text());
                    Ok(())
                }
            }
        }
        ExperimentCmd::Correction(args) => {
            let p = LanguageProfile::load(&args.base.profile.profile)?;
            let c = args.base.input.load(&p)?;
            let mut config = CorruptionConfig::load(&args.config)?;
            if let Some(seed) = args.corruption_seed {
                config = config.with_seed(seed);
            }
            let run = run_correction(
                &c,
                &config,
                &args.base.model.to_spec(),
                &args.base.split.to_spec(),
                &p,
            )?;
            write_run(&args.base.out_dir, &run)?;
            match args.base.format.format {
                Format::Structured => emit(&run.to_json()),
                Format::Text => {
                    print!("{}", run.render_text());
                    Ok(())
                }
            }
        }
    }
}
