//! Experiment driver: multi-replicate restoration runs, data-mass curves,
//! and synthetic spell-correction runs, each with a manifest that pins every
//! seed and input hash so a rerun reproduces its reports byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{evaluate, wer, EvalReport};
use crate::corpus::{split, subset_by_words, ParallelCorpus, SplitSpec};
use crate::corruptor::{corrupt_corpus, CorruptionConfig};
use crate::lm::CharNGramLM;
use crate::orthography::LanguageProfile;
use crate::restorer::{decode_lines, restore_lines, BeamConfig, WordLookupModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Character n-gram model with beam-search decoding.
    CharLm,
    /// Most-frequent-form word table.
    WordLookup,
    /// Word table with decoder fallback for unseen words.
    Hybrid,
    /// Precomputed hypothesis files, one per replicate.
    External,
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "char-lm" => Some(ModelKind::CharLm),
            "word-lookup" => Some(ModelKind::WordLookup),
            "hybrid" => Some(ModelKind::Hybrid),
            "external-hypotheses" => Some(ModelKind::External),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::CharLm => "char-lm",
            ModelKind::WordLookup => "word-lookup",
            ModelKind::Hybrid => "hybrid",
            ModelKind::External => "external-hypotheses",
        }
    }
}

/// Which model to run and with what settings. Order and beam apply to the
/// LM-based kinds; hypothesis files apply to the external kind only.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub order: usize,
    pub beam: BeamConfig,
    pub jobs: usize,
    pub hypothesis_files: Vec<PathBuf>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: ModelKind::CharLm,
            order: 6,
            beam: BeamConfig::default(),
            jobs: 0,
            hypothesis_files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub kind: String,
    pub order: usize,
    pub beam_width: usize,
    pub insertion_allowed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionManifest {
    pub name: String,
    pub seed: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisManifest {
    pub path: String,
    /// None when the file could not be read at manifest time; the affected
    /// replicate carries the error.
    pub sha256: Option<String>,
}

/// Everything that determined a run's outputs: corpus and config hashes,
/// the model settings, and every derived seed. Deliberately carries no
/// timestamps or host details, so reruns serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub experiment: String,
    pub profile: String,
    pub corpus_sha256: String,
    pub corpus_sentences: usize,
    pub corpus_words: usize,
    pub model: ModelManifest,
    pub split: SplitSpec,
    pub replicate_seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub corruption: Option<CorruptionManifest>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub word_targets: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subset_seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hypotheses: Option<Vec<HypothesisManifest>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Per-replicate values in replicate order, failed replicates omitted.
    pub values: Vec<f64>,
}

impl Aggregate {
    fn from_values(values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Aggregate {
            mean,
            min,
            max,
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    /// WER of the untouched source against the target on this replicate's
    /// test set: the score of doing nothing.
    pub baseline_wer: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl ReplicateResult {
    pub fn wer(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.wer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeAggregate {
    pub scheme: String,
    pub label_wer: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wer: Option<Aggregate>,
    pub baseline_wer: Aggregate,
    pub schemes: Vec<SchemeAggregate>,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub manifest: ExperimentManifest,
    pub replicates: Vec<ReplicateResult>,
    pub summary: RunSummary,
}

impl ExperimentRun {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run serialization cannot fail")
    }

    /// Per-replicate table followed by the aggregate lines.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let m = &self.manifest;
        let _ = writeln!(
            out,
            "experiment {}  model {}  profile {}",
            m.experiment, m.model.kind, m.profile
        );
        let _ = writeln!(
            out,
            "corpus {} sentences, {} words  sha256 {}",
            m.corpus_sentences, m.corpus_words, m.corpus_sha256
        );
        if let Some(c) = &m.corruption {
            let _ = writeln!(
                out,
                "corruption {} seed {}  sha256 {}",
                c.name, c.seed, c.sha256
            );
        }
        let _ = writeln!(
            out,
            "{:>9}  {:>20}  {:>12}  {:>8}",
            "replicate", "seed", "baseline-wer", "wer"
        );
        for r in &self.replicates {
            match r.wer() {
                Some(w) => {
                    let _ = writeln!(
                        out,
                        "{:>9}  {:>20}  {:>12.2}  {:>8.2}",
                        r.replicate, r.seed, r.baseline_wer, w
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:>9}  {:>20}  {:>12.2}  {:>8}",
                        r.replicate, r.seed, r.baseline_wer, "failed"
                    );
                }
            }
        }
        match &self.summary.wer {
            Some(a) => {
                let _ = writeln!(
                    out,
                    "wer mean {:.2}  min {:.2}  max {:.2}",
                    a.mean, a.min, a.max
                );
            }
            None => {
                let _ = writeln!(out, "wer unavailable: every replicate failed");
            }
        }
        let b = &self.summary.baseline_wer;
        let _ = writeln!(
            out,
            "baseline mean {:.2}  min {:.2}  max {:.2}",
            b.mean, b.min, b.max
        );
        for s in &self.summary.schemes {
            let _ = writeln!(
                out,
                "label-wer {}  mean {:.2}  min {:.2}  max {:.2}",
                s.scheme, s.label_wer.mean, s.label_wer.min, s.label_wer.max
            );
        }
        if self.summary.failed > 0 {
            let _ = writeln!(out, "failed replicates: {}", self.summary.failed);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicatePoint {
    pub target_words: usize,
    pub subset_words: usize,
    pub subset_sentences: usize,
    pub wer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMassReplicate {
    pub replicate: usize,
    pub seed: u64,
    pub subset_seed: u64,
    pub baseline_wer: f64,
    pub points: Vec<ReplicatePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub target_words: usize,
    pub wer: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMassRun {
    pub manifest: ExperimentManifest,
    pub replicates: Vec<DataMassReplicate>,
    /// Mean/min/max WER per word target, in ascending target order.
    pub curve: Vec<CurvePoint>,
    pub baseline_wer: Aggregate,
}

impl DataMassRun {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run serialization cannot fail")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let m = &self.manifest;
        let _ = writeln!(
            out,
            "experiment {}  model {}  profile {}",
            m.experiment, m.model.kind, m.profile
        );
        let _ = writeln!(
            out,
            "corpus {} sentences, {} words  sha256 {}",
            m.corpus_sentences, m.corpus_words, m.corpus_sha256
        );
        let _ = writeln!(
            out,
            "{:>10}  {:>8}  {:>8}  {:>8}",
            "words", "mean-wer", "min", "max"
        );
        for p in &self.curve {
            let _ = writeln!(
                out,
                "{:>10}  {:>8.2}  {:>8.2}  {:>8.2}",
                p.target_words, p.wer.mean, p.wer.min, p.wer.max
            );
        }
        let _ = writeln!(out, "baseline mean {:.2}", self.baseline_wer.mean);
        out
    }
}

fn file_sha256(path: &Path) -> Option<String> {
    let bytes = std::fs::read(path).ok()?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Some(crate::corpus::hex(&h.finalize()))
}

fn base_manifest(
    experiment: &str,
    corpus: &ParallelCorpus,
    model: &ModelSpec,
    spec: &SplitSpec,
    profile: &LanguageProfile,
) -> ExperimentManifest {
    let hypotheses = if model.kind == ModelKind::External {
        Some(
            model
                .hypothesis_files
                .iter()
                .map(|p| HypothesisManifest {
                    path: p.display().to_string(),
                    sha256: file_sha256(p),
                })
                .collect(),
        )
    } else {
        None
    };
    ExperimentManifest {
        experiment: experiment.to_string(),
        profile: profile.name().to_string(),
        corpus_sha256: corpus.pair_hash(),
        corpus_sentences: corpus.len(),
        corpus_words: corpus.word_count(),
        model: ModelManifest {
            kind: model.kind.as_str().to_string(),
            order: model.order,
            beam_width: model.beam.beam_width,
            insertion_allowed: model.beam.insertion_allowed,
        },
        split: spec.clone(),
        replicate_seeds: (0..spec.n_replicates)
            .map(|i| spec.seed.wrapping_add(i as u64))
            .collect(),
        corruption: None,
        word_targets: None,
        subset_seeds: None,
        hypotheses,
    }
}

fn check_model_spec(model: &ModelSpec, spec: &SplitSpec) -> Result<()> {
    if matches!(model.kind, ModelKind::CharLm | ModelKind::Hybrid) && model.order == 0 {
        return Err(Error::InvalidOrder(0));
    }
    if model.kind == ModelKind::External && model.hypothesis_files.len() != spec.n_replicates {
        return Err(Error::Experiment(format!(
            "external hypotheses need one file per replicate: {} files for {} replicates",
            model.hypothesis_files.len(),
            spec.n_replicates
        )));
    }
    Ok(())
}

/// Trains the requested model on `train` and produces hypotheses for the
/// given source lines. The external kind ignores `train` and reads its
/// replicate's hypothesis file instead.
fn model_hypotheses(
    train: &ParallelCorpus,
    sources: &[String],
    model: &ModelSpec,
    replicate: usize,
    profile: &LanguageProfile,
) -> Result<Vec<String>> {
    match model.kind {
        ModelKind::CharLm => {
            let lm = CharNGramLM::train(train.targets(), model.order, profile)?;
            decode_lines(sources, &lm, profile, &model.beam, model.jobs)
        }
        ModelKind::WordLookup => {
            let table = WordLookupModel::train(train.targets(), profile);
            restore_lines(&table, sources, profile, None, model.jobs)
        }
        ModelKind::Hybrid => {
            let lm = CharNGramLM::train(train.targets(), model.order, profile)?;
            let table = WordLookupModel::train(train.targets(), profile);
            restore_lines(
                &table,
                sources,
                profile,
                Some((&lm, &model.beam)),
                model.jobs,
            )
        }
        ModelKind::External => {
            let path = &model.hypothesis_files[replicate];
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok(text
                .lines()
                .map(|l| l.trim_end_matches('\r').to_string())
                .collect())
        }
    }
}

fn summarize(replicates: &[ReplicateResult]) -> RunSummary {
    let baseline_wer = Aggregate::from_values(replicates.iter().map(|r| r.baseline_wer).collect())
        .expect("a run always has at least one replicate");
    let wer = Aggregate::from_values(replicates.iter().filter_map(ReplicateResult::wer).collect());
    let failed = replicates.iter().filter(|r| r.report.is_none()).count();
    let mut schemes = Vec::new();
    if let Some(first) = replicates.iter().find_map(|r| r.report.as_ref()) {
        for (si, scheme) in first.schemes.iter().enumerate() {
            let values: Vec<f64> = replicates
                .iter()
                .filter_map(|r| r.report.as_ref())
                .map(|rep| rep.schemes[si].label_wer)
                .collect();
            schemes.push(SchemeAggregate {
                scheme: scheme.name.clone(),
                label_wer: Aggregate::from_values(values)
                    .expect("taken from the same reports as the scheme list"),
            });
        }
    }
    RunSummary {
        wer,
        baseline_wer,
        schemes,
        failed,
    }
}

fn run_core(
    corpus: &ParallelCorpus,
    model: &ModelSpec,
    spec: &SplitSpec,
    profile: &LanguageProfile,
    manifest: ExperimentManifest,
) -> Result<ExperimentRun> {
    let parts = split(corpus, spec)?;
    let mut replicates = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let targets = part.test.targets();
        let sources = part.test.sources();
        let baseline_wer = wer(&targets, &sources)?;
        let outcome = model_hypotheses(&part.train, &sources, model, i, profile)
            .and_then(|hyps| evaluate(&targets, &hyps, profile));
        let (report, error) = match outcome {
            Ok(report) => (Some(report), None),
            Err(e) => (None, Some(e.to_string())),
        };
        replicates.push(ReplicateResult {
            replicate: i,
            seed: part.seed,
            baseline_wer,
            report,
            error,
        });
    }
    let summary = summarize(&replicates);
    Ok(ExperimentRun {
        manifest,
        replicates,
        summary,
    })
}

/// Splits the corpus, then trains and scores one model per replicate.
/// Failed replicates are recorded with an error marker instead of aborting
/// the run; configuration problems abort up front.
pub fn run_restoration(
    corpus: &ParallelCorpus,
    model: &ModelSpec,
    spec: &SplitSpec,
    profile: &LanguageProfile,
) -> Result<ExperimentRun> {
    check_model_spec(model, spec)?;
    let manifest = base_manifest("restoration", corpus, model, spec, profile);
    run_core(corpus, model, spec, profile, manifest)
}

/// Corrupts the corpus targets into new sources per the config, then runs
/// the restoration flow on the corrupted corpus. The baseline column then
/// reads as the no-correction score.
pub fn run_correction(
    corpus: &ParallelCorpus,
    config: &CorruptionConfig,
    model: &ModelSpec,
    spec: &SplitSpec,
    profile: &LanguageProfile,
) -> Result<ExperimentRun> {
    check_model_spec(model, spec)?;
    let corrupted = corrupt_corpus(corpus, config, profile)?;
    let mut manifest = base_manifest("correction", corpus, model, spec, profile);
    manifest.corruption = Some(CorruptionManifest {
        name: config.name().to_string(),
        seed: config.seed(),
        sha256: config.sha256().to_string(),
    });
    run_core(&corrupted, model, spec, profile, manifest)
}

/// For each replicate, retrains on ever larger word subsets of the training
/// split (drawn as prefixes of one shuffle, so subsets nest) and scores each
/// model on that replicate's fixed test set.
pub fn run_data_mass(
    corpus: &ParallelCorpus,
    word_targets: &[usize],
    model: &ModelSpec,
    spec: &SplitSpec,
    profile: &LanguageProfile,
) -> Result<DataMassRun> {
    if model.kind == ModelKind::External {
        return Err(Error::Experiment(
            "external hypotheses cannot be retrained on subsets".into(),
        ));
    }
    check_model_spec(model, spec)?;
    if word_targets.is_empty() {
        return Err(Error::Experiment("no word targets given".into()));
    }
    let mut targets: Vec<usize> = word_targets.to_vec();
    targets.sort_unstable();
    targets.dedup();
    let max_target = *targets.last().expect("targets are nonempty");

    let parts = split(corpus, spec)?;
    for part in &parts {
        let available = part.train.word_count();
        if max_target > available {
            return Err(Error::SubsetTargetTooLarge {
                target: max_target,
                available,
            });
        }
    }

    let subset_seeds: Vec<u64> = (0..spec.n_replicates)
        .map(|i| spec.seed.wrapping_add(1000 * i as u64))
        .collect();
    let mut manifest = base_manifest("datamass", corpus, model, spec, profile);
    manifest.word_targets = Some(targets.clone());
    manifest.subset_seeds = Some(subset_seeds.clone());

    let mut replicates = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let test_targets = part.test.targets();
        let test_sources = part.test.sources();
        let baseline_wer = wer(&test_targets, &test_sources)?;
        let mut points = Vec::with_capacity(targets.len());
        for &target in &targets {
            let subset = subset_by_words(&part.train, target, subset_seeds[i])?;
            let hyps = model_hypotheses(&subset, &test_sources, model, i, profile)?;
            points.push(ReplicatePoint {
                target_words: target,
                subset_words: subset.word_count(),
                subset_sentences: subset.len(),
                wer: wer(&test_targets, &hyps)?,
            });
        }
        replicates.push(DataMassReplicate {
            replicate: i,
            seed: part.seed,
            subset_seed: subset_seeds[i],
            baseline_wer,
            points,
        });
    }

    let curve = targets
        .iter()
        .enumerate()
        .map(|(ti, &target)| CurvePoint {
            target_words: target,
            wer: Aggregate::from_values(replicates.iter().map(|r| r.points[ti].wer).collect())
                .expect("every replicate scored every target"),
        })
        .collect();
    let baseline_wer = Aggregate::from_values(replicates.iter().map(|r| r.baseline_wer).collect())
        .expect("a run always has at least one replicate");

    Ok(DataMassRun {
        manifest,
        replicates,
        curve,
        baseline_wer,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub order: usize,
    pub beam_width: usize,
    pub valid_wer: f64,
}

/// Sweeps n-gram order and beam width on the validation split and picks the
/// lowest-WER point; ties go to the smaller order, then the smaller beam.
/// Returns the winner and the full grid.
pub fn select_model(
    train: &ParallelCorpus,
    valid: &ParallelCorpus,
    orders: &[usize],
    beam_widths: &[usize],
    insertion_allowed: bool,
    jobs: usize,
    profile: &LanguageProfile,
) -> Result<(GridPoint, Vec<GridPoint>)> {
    if orders.is_empty() || beam_widths.is_empty() {
        return Err(Error::Experiment("model selection grid is empty".into()));
    }
    let mut orders: Vec<usize> = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();
    let mut beam_widths: Vec<usize> = beam_widths.to_vec();
    beam_widths.sort_unstable();
    beam_widths.dedup();

    let sources = valid.sources();
    let targets = valid.targets();
    let mut points = Vec::with_capacity(orders.len() * beam_widths.len());
    for &order in &orders {
        let lm = CharNGramLM::train(train.targets(), order, profile)?;
        for &beam_width in &beam_widths {
            let cfg = BeamConfig {
                beam_width,
                insertion_allowed,
            };
            let hyps = decode_lines(&sources, &lm, profile, &cfg, jobs)?;
            points.push(GridPoint {
                order,
                beam_width,
                valid_wer: wer(&targets, &hyps)?,
            });
        }
    }
    let best = points
        .iter()
        .min_by(|a, b| {
            a.valid_wer
                .total_cmp(&b.valid_wer)
                .then(a.order.cmp(&b.order))
                .then(a.beam_width.cmp(&b.beam_width))
        })
        .cloned()
        .expect("grid is nonempty");
    Ok((best, points))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub replicate: usize,
    pub seed: u64,
    pub wer_a: f64,
    pub wer_b: f64,
    /// `wer_b - wer_a`; negative means run B scored better.
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub model_a: String,
    pub model_b: String,
    pub rows: Vec<PairedRow>,
    pub mean_diff: f64,
}

impl PairedComparison {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serialization cannot fail")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "paired comparison: a = {}, b = {}",
            self.model_a, self.model_b
        );
        let _ = writeln!(
            out,
            "{:>9}  {:>8}  {:>8}  {:>8}",
            "replicate", "wer-a", "wer-b", "diff"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>9}  {:>8.2}  {:>8.2}  {:>+8.2}",
                r.replicate, r.wer_a, r.wer_b, r.diff
            );
        }
        let _ = writeln!(out, "mean diff {:+.2}", self.mean_diff);
        out
    }
}

/// Lines up two runs replicate by replicate. Both must have been produced
/// from the same corpus and split, so their test sets are identical and the
/// per-replicate differences are paired observations.
pub fn compare_runs(a: &ExperimentRun, b: &ExperimentRun) -> Result<PairedComparison> {
    if a.manifest.corpus_sha256 != b.manifest.corpus_sha256
        || a.manifest.profile != b.manifest.profile
        || a.manifest.split != b.manifest.split
    {
        return Err(Error::Experiment(
            "runs were not produced from the same corpus and split".into(),
        ));
    }
    let mut rows = Vec::with_capacity(a.replicates.len());
    for (ra, rb) in a.replicates.iter().zip(&b.replicates) {
        let (Some(wer_a), Some(wer_b)) = (ra.wer(), rb.wer()) else {
            return Err(Error::Experiment(format!(
                "replicate {} failed in one of the runs",
                ra.replicate
            )));
        };
        rows.push(PairedRow {
            replicate: ra.replicate,
            seed: ra.seed,
            wer_a,
            wer_b,
            diff: wer_b - wer_a,
        });
    }
    let mean_diff = rows.iter().map(|r| r.diff).sum::<f64>() / rows.len() as f64;
    Ok(PairedComparison {
        model_a: a.manifest.model.kind.clone(),
        model_b: b.manifest.model.kind.clone(),
        rows,
        mean_diff,
    })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialization cannot fail");
    s.push('\n');
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct ReplicateRow<'a> {
    replicate: usize,
    seed: u64,
    baseline_wer: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    replicates: Vec<ReplicateRow<'a>>,
    #[serde(flatten)]
    summary: &'a RunSummary,
}

/// Writes `manifest.json`, one directory per replicate holding `report.json`
/// and `report.txt` (or `error.txt` for a failed replicate), and
/// `summary.json` / `summary.txt` at the top.
pub fn write_run(dir: &Path, run: &ExperimentRun) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("manifest.json"), &pretty(&run.manifest))?;
    for rep in &run.replicates {
        let rep_dir = dir.join(rep.replicate.to_string());
        std::fs::create_dir_all(&rep_dir).map_err(|e| Error::io(&rep_dir, e))?;
        match (&rep.report, &rep.error) {
            (Some(report), _) => {
                write_text(&rep_dir.join("report.json"), &pretty(report))?;
                write_text(&rep_dir.join("report.txt"), &report.render_text())?;
            }
            (None, Some(error)) => {
                let mut text = error.clone();
                text.push('\n');
                write_text(&rep_dir.join("error.txt"), &text)?;
            }
            (None, None) => {}
        }
    }
    let doc = SummaryDoc {
        replicates: run
            .replicates
            .iter()
            .map(|r| ReplicateRow {
                replicate: r.replicate,
                seed: r.seed,
                baseline_wer: r.baseline_wer,
                wer: r.wer(),
                error: r.error.as_deref(),
            })
            .collect(),
        summary: &run.summary,
    };
    write_text(&dir.join("summary.json"), &pretty(&doc))?;
    write_text(&dir.join("summary.txt"), &run.render_text())
}

/// Same layout as [`write_run`]: per-replicate point tables under numbered
/// directories, curve and baseline in `summary.json` / `summary.txt`.
pub fn write_data_mass(dir: &Path, run: &DataMassRun) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("manifest.json"), &pretty(&run.manifest))?;
    for rep in &run.replicates {
        let rep_dir = dir.join(rep.replicate.to_string());
        std::fs::create_dir_all(&rep_dir).map_err(|e| Error::io(&rep_dir, e))?;
        write_text(&rep_dir.join("report.json"), &pretty(rep))?;
    }
    #[derive(Serialize)]
    struct CurveDoc<'a> {
        curve: &'a [CurvePoint],
        baseline_wer: &'a Aggregate,
    }
    let doc = CurveDoc {
        curve: &run.curve,
        baseline_wer: &run.baseline_wer,
    };
    write_text(&dir.join("summary.json"), &pretty(&doc))?;
    write_text(&dir.join("summary.txt"), &run.render_text())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ParallelCorpus;

    fn profile() -> LanguageProfile {
        LanguageProfile::load("bribri-constenla").unwrap()
    }

    fn corpus(profile: &LanguageProfile) -> ParallelCorpus {
        let lines: Vec<String> = (0..50)
            .map(|i| format!("\u{EC}s be' shk\u{E8}na\u{331} w\u{E0}{i}"))
            .collect();
        ParallelCorpus::from_gold_lines(lines.iter(), profile, "test-lines").unwrap()
    }

    fn spec() -> SplitSpec {
        SplitSpec {
            train_frac: 0.8,
            valid_frac: 0.1,
            test_frac: 0.1,
            n_replicates: 5,
            seed: 41,
        }
    }

    fn fast_model(kind: ModelKind) -> ModelSpec {
        ModelSpec {
            kind,
            order: 3,
            beam: BeamConfig {
                beam_width: 4,
                insertion_allowed: true,
            },
            jobs: 0,
            hypothesis_files: Vec::new(),
        }
    }

    #[test]
    fn restoration_reports_every_replicate_with_aggregates() {
        let p = profile();
        let c = corpus(&p);
        let run = run_restoration(&c, &fast_model(ModelKind::CharLm), &spec(), &p).unwrap();

        assert_eq!(run.replicates.len(), 5);
        assert_eq!(run.summary.failed, 0);
        assert_eq!(run.manifest.experiment, "restoration");
        assert_eq!(run.manifest.replicate_seeds, vec![41, 42, 43, 44, 45]);
        assert_eq!(run.manifest.corpus_sha256, c.pair_hash());
        assert_eq!(run.manifest.model.kind, "char-lm");

        let agg = run.summary.wer.as_ref().unwrap();
        assert_eq!(agg.values.len(), 5);
        let mean = agg.values.iter().sum::<f64>() / 5.0;
        assert_eq!(agg.mean, mean);
        assert!(agg.min <= agg.mean && agg.mean <= agg.max);
        for (i, r) in run.replicates.iter().enumerate() {
            assert_eq!(r.replicate, i);
            assert_eq!(r.seed, 41 + i as u64);
            assert_eq!(r.wer().unwrap(), agg.values[i]);
            assert!(r.error.is_none());
        }
        // Sources are fully stripped, so doing nothing gets every word wrong.
        assert_eq!(run.summary.baseline_wer.mean, 100.0);
        // One aggregate per profile scheme.
        let names: Vec<&str> = run
            .summary
            .schemes
            .iter()
            .map(|s| s.scheme.as_str())
            .collect();
        assert_eq!(names, ["tones", "nasal", "umlaut"]);
    }

    #[test]
    fn external_gold_hypotheses_score_zero() {
        let p = profile();
        let c = corpus(&p);
        let dir = tempfile::tempdir().unwrap();
        let parts = split(&c, &spec()).unwrap();
        let files: Vec<std::path::PathBuf> = parts
            .iter()
            .enumerate()
            .map(|(i, part)| {
                let path = dir.path().join(format!("hyp{i}.txt"));
                let mut text = part.test.targets().join("\n");
                text.push('\n');
                std::fs::write(&path, text).unwrap();
                path
            })
            .collect();
        let model = ModelSpec {
            kind: ModelKind::External,
            hypothesis_files: files,
            ..ModelSpec::default()
        };
        let run = run_restoration(&c, &model, &spec(), &p).unwrap();
        assert_eq!(run.summary.failed, 0);
        assert_eq!(run.summary.wer.as_ref().unwrap().mean, 0.0);
        for h in run.manifest.hypotheses.as_ref().unwrap() {
            assert!(h.sha256.is_some());
        }
    }

    #[test]
    fn external_kind_wants_one_file_per_replicate() {
        let p = profile();
        let c = corpus(&p);
        let model = ModelSpec {
            kind: ModelKind::External,
            hypothesis_files: vec![PathBuf::from("only-one.txt")],
            ..ModelSpec::default()
        };
        assert!(matches!(
            run_restoration(&c, &model, &spec(), &p),
            Err(Error::Experiment(_))
        ));
    }

    #[test]
    fn missing_hypothesis_file_is_a_failure_marker_not_an_abort() {
        let p = profile();
        let c = corpus(&p);
        let dir = tempfile::tempdir().unwrap();
        let parts = split(&c, &spec()).unwrap();
        let files: Vec<std::path::PathBuf> = parts
            .iter()
            .enumerate()
            .map(|(i, part)| {
                let path = dir.path().join(format!("hyp{i}.txt"));
                if i != 2 {
                    let mut text = part.test.targets().join("\n");
                    text.push('\n');
                    std::fs::write(&path, text).unwrap();
                }
                path
            })
            .collect();
        let model = ModelSpec {
            kind: ModelKind::External,
            hypothesis_files: files,
            ..ModelSpec::default()
        };
        let run = run_restoration(&c, &model, &spec(), &p).unwrap();
        assert_eq!(run.summary.failed, 1);
        assert!(run.replicates[2].report.is_none());
        assert!(run.replicates[2].error.is_some());
        assert!(run.manifest.hypotheses.as_ref().unwrap()[2]
            .sha256
            .is_none());
        // The other four still aggregate.
        assert_eq!(run.summary.wer.as_ref().unwrap().values.len(), 4);
        assert_eq!(run.summary.wer.as_ref().unwrap().mean, 0.0);
    }

    #[test]
    fn lookup_and_char_lm_runs_pair_up() {
        let p = profile();
        let c = corpus(&p);
        let a = run_restoration(&c, &fast_model(ModelKind::CharLm), &spec(), &p).unwrap();
        let b = run_restoration(&c, &fast_model(ModelKind::WordLookup), &spec(), &p).unwrap();
        let cmp = compare_runs(&a, &b).unwrap();
        assert_eq!(cmp.model_a, "char-lm");
        assert_eq!(cmp.model_b, "word-lookup");
        assert_eq!(cmp.rows.len(), 5);
        for (i, row) in cmp.rows.iter().enumerate() {
            assert_eq!(row.wer_a, a.replicates[i].wer().unwrap());
            assert_eq!(row.wer_b, b.replicates[i].wer().unwrap());
            assert_eq!(row.diff, row.wer_b - row.wer_a);
        }
        let mean = cmp.rows.iter().map(|r| r.diff).sum::<f64>() / 5.0;
        assert_eq!(cmp.mean_diff, mean);
    }

    #[test]
    fn runs_on_different_corpora_refuse_to_pair() {
        let p = profile();
        let c = corpus(&p);
        let lines: Vec<String> = (0..50).map(|i| format!("b\u{E9} s\u{EC} {i}")).collect();
        let other = ParallelCorpus::from_gold_lines(lines.iter(), &p, "other").unwrap();
        let a = run_restoration(&c, &fast_model(ModelKind::WordLookup), &spec(), &p).unwrap();
        let b = run_restoration(&other, &fast_model(ModelKind::WordLookup), &spec(), &p).unwrap();
        assert!(matches!(compare_runs(&a, &b), Err(Error::Experiment(_))));
    }

    #[test]
    fn datamass_full_target_point_matches_the_restoration_run() {
        let p = profile();
        let c = corpus(&p);
        let model = fast_model(ModelKind::CharLm);
        // Every replicate trains on 40 lines of 4 words each.
        let mass = run_data_mass(&c, &[10, 40, 160], &model, &spec(), &p).unwrap();
        let rest = run_restoration(&c, &model, &spec(), &p).unwrap();

        assert_eq!(mass.curve.len(), 3);
        assert_eq!(
            mass.manifest.word_targets.as_ref().unwrap(),
            &vec![10, 40, 160]
        );
        assert_eq!(
            mass.manifest.subset_seeds.as_ref().unwrap(),
            &vec![41, 1041, 2041, 3041, 4041]
        );
        for rep in &mass.replicates {
            for (pt, &target) in rep.points.iter().zip(&[10usize, 40, 160]) {
                assert_eq!(pt.target_words, target);
                assert!(pt.subset_words >= target);
            }
            // A full-size subset is the whole training split, so the model
            // and its score are exactly the restoration replicate's.
            let full = rep.points.last().unwrap();
            assert_eq!(full.subset_words, 160);
            assert_eq!(full.subset_sentences, 40);
            assert_eq!(full.wer, rest.replicates[rep.replicate].wer().unwrap());
        }
        assert_eq!(
            mass.curve[2].wer.mean,
            rest.summary.wer.as_ref().unwrap().mean
        );
    }

    #[test]
    fn datamass_rejects_bad_requests() {
        let p = profile();
        let c = corpus(&p);
        let model = fast_model(ModelKind::CharLm);
        assert!(matches!(
            run_data_mass(&c, &[], &model, &spec(), &p),
            Err(Error::Experiment(_))
        ));
        assert!(matches!(
            run_data_mass(&c, &[161], &model, &spec(), &p),
            Err(Error::SubsetTargetTooLarge {
                target: 161,
                available: 160
            })
        ));
        let external = ModelSpec {
            kind: ModelKind::External,
            ..ModelSpec::default()
        };
        assert!(matches!(
            run_data_mass(&c, &[10], &external, &spec(), &p),
            Err(Error::Experiment(_))
        ));
    }

    #[test]
    fn identity_corruption_equals_a_gold_on_gold_run() {
        let p = profile();
        let c = corpus(&p);
        let keep_everything: String = ["high", "falling", "rising", "nasal", "lax", "glottal"]
            .iter()
            .map(|class| {
                format!(
                    "[[rule]]\nclass = \"{class}\"\noutcomes = [{{ transform = \"keep\", p = 1.0 }}]\n"
                )
            })
            .collect();
        let config = CorruptionConfig::from_toml(&keep_everything).unwrap();
        let run =
            run_correction(&c, &config, &fast_model(ModelKind::WordLookup), &spec(), &p).unwrap();

        let gold_pairs: Vec<(String, String)> =
            c.targets().into_iter().map(|t| (t.clone(), t)).collect();
        let gold = ParallelCorpus::from_pairs(gold_pairs, &p, "gold-on-gold").unwrap();
        let gold_run =
            run_restoration(&gold, &fast_model(ModelKind::WordLookup), &spec(), &p).unwrap();

        assert_eq!(run.manifest.experiment, "correction");
        assert_eq!(
            run.manifest.corruption.as_ref().unwrap().sha256,
            config.sha256()
        );
        assert_eq!(run.summary.baseline_wer.mean, 0.0);
        assert_eq!(run.replicates, gold_run.replicates);
    }

    #[test]
    fn correction_baseline_sits_between_zero_and_the_strip_baseline() {
        let p = profile();
        let c = corpus(&p);
        let config = CorruptionConfig::load("bribri-default").unwrap();
        let corr =
            run_correction(&c, &config, &fast_model(ModelKind::WordLookup), &spec(), &p).unwrap();
        let rest = run_restoration(&c, &fast_model(ModelKind::WordLookup), &spec(), &p).unwrap();
        let partial = corr.summary.baseline_wer.mean;
        let full = rest.summary.baseline_wer.mean;
        assert!(partial > 0.0, "corruption left the test sets untouched");
        assert!(
            partial < full,
            "partial corruption ({partial}) should score below a full strip ({full})"
        );
    }

    #[test]
    fn reruns_serialize_identically() {
        let p = profile();
        let c = corpus(&p);
        let config = CorruptionConfig::load("bribri-default").unwrap();
        let model = fast_model(ModelKind::Hybrid);
        let a = run_correction(&c, &config, &model, &spec(), &p).unwrap();
        let b = run_correction(&c, &config, &model, &spec(), &p).unwrap();
        assert_eq!(a.to_json(), b.to_json());

        let ma =
            run_data_mass(&c, &[10, 160], &fast_model(ModelKind::CharLm), &spec(), &p).unwrap();
        let mb =
            run_data_mass(&c, &[10, 160], &fast_model(ModelKind::CharLm), &spec(), &p).unwrap();
        assert_eq!(ma.to_json(), mb.to_json());
    }

    #[test]
    fn results_directory_has_the_documented_layout() {
        let p = profile();
        let c = corpus(&p);
        let run = run_restoration(&c, &fast_model(ModelKind::WordLookup), &spec(), &p).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("restoration");
        write_run(&out, &run).unwrap();

        assert!(out.join("manifest.json").is_file());
        assert!(out.join("summary.json").is_file());
        assert!(out.join("summary.txt").is_file());
        for i in 0..5 {
            assert!(out.join(i.to_string()).join("report.json").is_file());
            assert!(out.join(i.to_string()).join("report.txt").is_file());
        }
        let manifest: ExperimentManifest =
            serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest, run.manifest);
        let report: EvalReport = serde_json::from_str(
            &std::fs::read_to_string(out.join("0").join("report.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(&report, run.replicates[0].report.as_ref().unwrap());

        let mass = run_data_mass(
            &c,
            &[10, 160],
            &fast_model(ModelKind::WordLookup),
            &spec(),
            &p,
        )
        .unwrap();
        let mass_out = dir.path().join("datamass");
        write_data_mass(&mass_out, &mass).unwrap();
        assert!(mass_out.join("manifest.json").is_file());
        assert!(mass_out.join("summary.json").is_file());
        assert!(mass_out.join("summary.txt").is_file());
        assert!(mass_out.join("0").join("report.json").is_file());
    }

    #[test]
    fn failed_replicates_write_error_files() {
        let p = profile();
        let c = corpus(&p);
        let model = ModelSpec {
            kind: ModelKind::External,
            hypothesis_files: (0..5)
                .map(|i| PathBuf::from(format!("/nonexistent/hyp{i}.txt")))
                .collect(),
            ..ModelSpec::default()
        };
        let run = run_restoration(&c, &model, &spec(), &p).unwrap();
        assert_eq!(run.summary.failed, 5);
        assert!(run.summary.wer.is_none());
        assert!(run.render_text().contains("every replicate failed"));

        let dir = tempfile::tempdir().unwrap();
        write_run(dir.path(), &run).unwrap();
        for i in 0..5 {
            let rep_dir = dir.path().join(i.to_string());
            assert!(rep_dir.join("error.txt").is_file());
            assert!(!rep_dir.join("report.json").exists());
        }
    }

    #[test]
    fn model_selection_scans_the_grid_and_breaks_ties_downward() {
        let p = profile();
        // The first word is always marked and the second never is. A trigram
        // separates the two through its context; a unigram sees a dead tie
        // and falls back to the bare form everywhere.
        let lines: Vec<String> = (0..30).map(|_| "b\u{E0} ba".to_string()).collect();
        let c = ParallelCorpus::from_gold_lines(lines.iter(), &p, "grid").unwrap();
        let parts = split(
            &c,
            &SplitSpec {
                n_replicates: 1,
                seed: 7,
                ..SplitSpec::default()
            },
        )
        .unwrap();
        let part = &parts[0];

        let (best, points) =
            select_model(&part.train, &part.valid, &[1, 3], &[2, 4], true, 0, &p).unwrap();
        assert_eq!(points.len(), 4);

        // Recompute each grid point through the public pieces.
        let sources = part.valid.sources();
        let targets = part.valid.targets();
        for gp in &points {
            let lm = CharNGramLM::train(part.train.targets(), gp.order, &p).unwrap();
            let cfg = BeamConfig {
                beam_width: gp.beam_width,
                insertion_allowed: true,
            };
            let hyps = decode_lines(&sources, &lm, &p, &cfg, 0).unwrap();
            assert_eq!(gp.valid_wer, wer(&targets, &hyps).unwrap());
        }
        let expected = points
            .iter()
            .min_by(|a, b| {
                a.valid_wer
                    .total_cmp(&b.valid_wer)
                    .then(a.order.cmp(&b.order))
                    .then(a.beam_width.cmp(&b.beam_width))
            })
            .unwrap();
        assert_eq!(&best, expected);
        assert_eq!(best.order, 3, "the trigram should win on this data");
        assert_eq!(best.valid_wer, 0.0);
        // Every beam width finds the same argmax here, so the tie goes to
        // the smaller one.
        assert_eq!(best.beam_width, 2);

        assert!(matches!(
            select_model(&part.train, &part.valid, &[], &[4], true, 0, &p),
            Err(Error::Experiment(_))
        ));
    }

    #[test]
    fn run_json_round_trips() {
        let p = profile();
        let c = corpus(&p);
        let run = run_restoration(&c, &fast_model(ModelKind::WordLookup), &spec(), &p).unwrap();
        let back: ExperimentRun = serde_json::from_str(&run.to_json()).unwrap();
        assert_eq!(back, run);
    }
}
