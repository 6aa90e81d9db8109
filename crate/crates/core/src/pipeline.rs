//! Pipeline stages. Each stage reads its predecessor's files and writes its own.
//!
//! | stage          | reads                                   | writes |
//! |----------------|-----------------------------------------|--------|
//! | mine           | repository                              | `hunks.jsonl`, `fixlinks.tsv`, `mining_report.json` |
//! | build-corpus   | `hunks.jsonl`, `fixlinks.tsv`           | corpus directory, `corpus_report.json` |
//! | train          | corpus directory                        | `model.plm`, `model.history.json` |
//! | generate       | `model.plm`, query file                 | `patches.jsonl` |
//! | baseline       | corpus directory, query file            | `baseline.jsonl` |
//! | evaluate       | corpus directory, patch files           | CSV, JSON, table |
//! | sweep          | `model.plm`, corpus directory           | `sweep.csv` |

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{self, CorpusError, CorpusOptions, CorpusReport, TestRecord};
use crate::eval::{self, EvalReport, Filter, ReportRow};
use crate::generator::{self, BaselineIndex, DecodeOptions, Generation, PatchRecord};
use crate::miner::{self, ChangeHunk, FixLink, MineError, MineOptions, MiningReport, Repository};
use crate::nmt::{self, train::EpochStats, NmtError, ParallelData, TrainingConfig};
use crate::statement::{from_corpus_line, TokenizedStatement};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Mine(#[from] MineError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Nmt(#[from] NmtError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::Format {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    write_text(path, &text)
}

/// A file next to `path`.
pub fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new("")).join(name)
}

pub const FIXLINKS_FILE: &str = "fixlinks.tsv";
pub const MINING_REPORT_FILE: &str = "mining_report.json";
pub const CORPUS_REPORT_FILE: &str = "corpus_report.json";
const FIXLINKS_HEADER: &str = "fixing_commit\tinducing_commit";

pub fn hunks_to_jsonl(hunks: &[ChangeHunk]) -> String {
    let mut out = String::new();
    for h in hunks {
        out.push_str(&serde_json::to_string(h).expect("serializable hunk"));
        out.push('\n');
    }
    out
}

pub fn read_hunks(path: &Path) -> Result<Vec<ChangeHunk>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format_err(path, i + 1, e.to_string())))
        .collect()
}

pub fn fixlinks_to_tsv(links: &[FixLink]) -> String {
    let mut out = format!("{FIXLINKS_HEADER}\n");
    for l in links {
        out.push_str(&format!("{}\t{}\n", l.fixing_commit, l.inducing_commit));
    }
    out
}

pub fn read_fixlinks(path: &Path) -> Result<Vec<FixLink>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == FIXLINKS_HEADER => {}
        _ => return Err(format_err(path, 1, format!("header must be {FIXLINKS_HEADER:?}"))),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| match l.split_once('\t') {
            Some((f, b)) if !f.is_empty() && !b.is_empty() && !b.contains('\t') => Ok(FixLink {
                fixing_commit: f.to_string(),
                inducing_commit: b.to_string(),
            }),
            _ => Err(format_err(path, i + 1, "expected two tab-separated commit ids")),
        })
        .collect()
}

/// Mine `repo`; writes the hunk dump at `out` and the fix links and report
/// beside it.
pub fn mine_stage<R: Repository>(repo: &R, opts: MineOptions, out: &Path) -> Result<MiningReport> {
    let t = Instant::now();
    let mined = miner::mine_hunks(repo, opts)?;
    let links = miner::fix_links(&mined);
    write_text(out, &hunks_to_jsonl(&mined.hunks))?;
    write_text(&sibling(out, FIXLINKS_FILE), &fixlinks_to_tsv(&links))?;
    write_json(&sibling(out, MINING_REPORT_FILE), &mined.report)?;
    log::info!(
        "stage=mine hunks={} fix_links={} secs={:.2}",
        mined.hunks.len(),
        links.len(),
        t.elapsed().as_secs_f64()
    );
    Ok(mined.report)
}

/// `test_year` defaults to the last year present; an explicit one must lie
/// within the mined span.
pub fn resolve_test_year(hunks: &[ChangeHunk], requested: Option<i32>) -> Result<i32> {
    let (Some(lo), Some(hi)) = (
        hunks.iter().map(|h| h.year_post).min(),
        hunks.iter().map(|h| h.year_post).max(),
    ) else {
        return Err(PipelineError::Invalid("no hunks to build a corpus from".into()));
    };
    match requested {
        None => Ok(hi),
        Some(y) if (lo..=hi).contains(&y) => Ok(y),
        Some(y) => Err(PipelineError::Invalid(format!(
            "test year {y} outside the mined span {lo}..={hi}"
        ))),
    }
}

pub fn corpus_stage(hunks_path: &Path, test_year: Option<i32>, min_count: usize, out_dir: &Path) -> Result<CorpusReport> {
    let t = Instant::now();
    let hunks = read_hunks(hunks_path)?;
    let links = read_fixlinks(&sibling(hunks_path, FIXLINKS_FILE))?;
    let test_year = resolve_test_year(&hunks, test_year)?;
    let built = corpus::build_corpus(&hunks, &links, CorpusOptions { test_year, min_count })?;
    corpus::write_train(out_dir, &built.train)?;
    corpus::write_test(out_dir, &built.test)?;
    let report = built.report();
    write_json(&out_dir.join(CORPUS_REPORT_FILE), &report)?;
    log::info!(
        "stage=build-corpus test_year={test_year} train={} test={} secs={:.2}",
        built.train.pairs.len(),
        built.test.len(),
        t.elapsed().as_secs_f64()
    );
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub best_epoch: usize,
    pub aborted: Option<String>,
    pub history: Vec<EpochStats>,
}

/// `model.plm` becomes `model.history.json`.
pub fn history_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("history.json")
}

pub fn train_stage(corpus_dir: &Path, cfg: &TrainingConfig, model_path: &Path) -> Result<TrainSummary> {
    let t = Instant::now();
    let files = corpus::read_train(corpus_dir)?;
    let data = ParallelData::from_files(&files);
    let outcome = nmt::train(&data, cfg)?;
    if let Some(dir) = model_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    nmt::io::save(&outcome.model, model_path)?;
    let summary = TrainSummary {
        best_epoch: outcome.best_epoch,
        aborted: outcome.aborted,
        history: outcome.history,
    };
    write_json(&history_path(model_path), &summary)?;
    log::info!(
        "stage=train pairs={} best_epoch={} secs={:.2}",
        data.pairs.len(),
        summary.best_epoch,
        t.elapsed().as_secs_f64()
    );
    Ok(summary)
}

/// One query per line, tokens separated by spaces as in `test.src`.
pub fn read_queries(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?.lines().map(str::to_string).collect())
}

pub fn generate_stage(
    model_path: &Path,
    query_file: &Path,
    threshold: f64,
    opts: &DecodeOptions,
    out: &Path,
) -> Result<Vec<Generation>> {
    let t = Instant::now();
    let model = nmt::io::load(model_path)?;
    let queries = read_queries(query_file)?;
    let gens: Vec<Generation> = generator::decode_all(&model, &queries, opts)
        .iter()
        .map(|d| generator::select(d, threshold))
        .collect();
    write_text(out, &generator::to_jsonl(&gens))?;
    log::info!(
        "stage=generate queries={} patches={} secs={:.2}",
        gens.len(),
        gens.iter().filter(|g| g.patch.is_some()).count(),
        t.elapsed().as_secs_f64()
    );
    Ok(gens)
}

pub fn baseline_index(corpus_dir: &Path) -> Result<BaselineIndex> {
    let pairs = corpus::read_train_concrete(corpus_dir)?;
    Ok(BaselineIndex::from_concrete_pairs(pairs.iter().map(|(a, b)| (a, b))))
}

pub fn baseline_stage(corpus_dir: &Path, query_file: &Path, out: &Path) -> Result<Vec<Generation>> {
    let index = baseline_index(corpus_dir)?;
    let gens: Vec<Generation> = read_queries(query_file)?.iter().map(|q| index.suggest(q)).collect();
    write_text(out, &generator::to_jsonl(&gens))?;
    log::info!(
        "stage=baseline index={} queries={} patches={}",
        index.len(),
        gens.len(),
        gens.iter().filter(|g| g.patch.is_some()).count()
    );
    Ok(gens)
}

pub fn read_patches(path: &Path) -> Result<Vec<PatchRecord>> {
    generator::from_jsonl(&read_text(path)?).map_err(|(line, e)| format_err(path, line, e.to_string()))
}

/// Check that `patches` answer the test queries in order.
fn aligned_patches(records: &[TestRecord], patches: &[PatchRecord], path: &Path) -> Result<Vec<Option<TokenizedStatement>>> {
    if records.len() != patches.len() {
        return Err(format_err(
            path,
            0,
            format!("{} patch records for {} test pairs", patches.len(), records.len()),
        ));
    }
    records
        .iter()
        .zip(patches)
        .enumerate()
        .map(|(i, (r, p))| {
            if p.query != r.query.joined() {
                return Err(format_err(path, i + 1, format!("query differs from test pair {i}")));
            }
            Ok(p.patch.as_deref().map(from_corpus_line))
        })
        .collect()
}

/// Score a patch file against the test pairs of `corpus_dir`.
pub fn evaluate_stage(corpus_dir: &Path, patches_path: &Path, filter: Filter) -> Result<EvalReport> {
    let records = corpus::read_test(corpus_dir)?;
    let patches = read_patches(patches_path)?;
    let slots = aligned_patches(&records, &patches, patches_path)?;
    let refs: Vec<Option<&TokenizedStatement>> = slots.iter().map(Option::as_ref).collect();
    let report = eval::evaluate_patches(&records, &refs, filter, None);
    log::info!(
        "stage=evaluate file={} filter={} queries={} correct={}",
        patches_path.display(),
        filter.label(),
        report.n_queries,
        report.counts.correct
    );
    Ok(report)
}

/// Share of records whose top output parses.
pub fn validity(patches: &[PatchRecord]) -> f64 {
    eval::validity_rate(&patches.iter().map(|p| p.valid).collect::<Vec<_>>())
}

/// Metrics CSV, report JSON and the terminal table for `rows`.
pub fn write_reports(rows: &[ReportRow], csv: Option<&Path>, json: Option<&Path>) -> Result<String> {
    if let Some(p) = csv {
        write_text(p, &eval::to_csv(rows))?;
    }
    if let Some(p) = json {
        let reports: Vec<&EvalReport> = rows.iter().map(|r| &r.report).collect();
        write_json(p, &reports)?;
    }
    Ok(eval::to_table(rows))
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<(f64, EvalReport)>,
    pub baseline: EvalReport,
}

pub fn sweep_stage(
    model_path: &Path,
    corpus_dir: &Path,
    thresholds: &[f64],
    filter: Filter,
    opts: &DecodeOptions,
    out: &Path,
) -> Result<SweepResult> {
    let t = Instant::now();
    let model = nmt::io::load(model_path)?;
    let records = corpus::read_test(corpus_dir)?;
    let queries: Vec<String> = records.iter().map(|r| r.query.joined()).collect();
    let decoded = generator::decode_all(&model, &queries, opts);
    let points = eval::sweep_thresholds(&records, &decoded, thresholds, filter).map_err(PipelineError::Invalid)?;
    let index = baseline_index(corpus_dir)?;
    let base: Vec<Generation> = queries.iter().map(|q| index.suggest(q)).collect();
    let baseline = eval::evaluate(&records, &base, filter, None);
    write_text(out, &eval::sweep_csv(&points, &baseline))?;
    log::info!(
        "stage=sweep thresholds={} queries={} secs={:.2}",
        points.len(),
        queries.len(),
        t.elapsed().as_secs_f64()
    );
    Ok(SweepResult { points, baseline })
}

/// Paths of every artifact of a full run under one directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub hunks: PathBuf,
    pub corpus: PathBuf,
    pub model: PathBuf,
    pub patches: PathBuf,
    pub baseline: PathBuf,
    pub eval_csv: PathBuf,
    pub eval_json: PathBuf,
    pub sweep: PathBuf,
}

impl Layout {
    pub fn new(dir: &Path) -> Self {
        Self {
            hunks: dir.join("hunks.jsonl"),
            corpus: dir.join("corpus"),
            model: dir.join("model.plm"),
            patches: dir.join("patches.jsonl"),
            baseline: dir.join("baseline.jsonl"),
            eval_csv: dir.join("eval.csv"),
            eval_json: dir.join("eval.json"),
            sweep: dir.join("sweep.csv"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub model: EvalReport,
    pub baseline: EvalReport,
    pub validity: f64,
    pub table: String,
}

/// Every stage in order, artifacts under `cfg.output_dir`.
pub fn run_all<R: Repository>(repo: &R, cfg: &RunConfig) -> Result<RunSummary> {
    let layout = Layout::new(&cfg.output_dir);
    mine_stage(
        repo,
        MineOptions {
            since: cfg.since,
            until: cfg.until,
        },
        &layout.hunks,
    )?;
    corpus_stage(&layout.hunks, cfg.test_year, cfg.min_count, &layout.corpus)?;
    train_stage(&layout.corpus, &cfg.training(), &layout.model)?;
    let queries = layout.corpus.join("test.src");
    generate_stage(&layout.model, &queries, cfg.threshold, &cfg.decode, &layout.patches)?;
    baseline_stage(&layout.corpus, &queries, &layout.baseline)?;
    let model = evaluate_stage(&layout.corpus, &layout.patches, cfg.filter)?;
    let baseline = evaluate_stage(&layout.corpus, &layout.baseline, cfg.filter)?;
    let project = cfg
        .repo_path
        .as_ref()
        .and_then(|p| p.file_name())
        .map_or("repo".to_string(), |n| n.to_string_lossy().into_owned());
    let rows = vec![
        ReportRow {
            project: project.clone(),
            filter: cfg.filter.label(),
            threshold: Some(cfg.threshold),
            report: EvalReport {
                threshold: Some(cfg.threshold),
                ..model.clone()
            },
        },
        ReportRow {
            project: format!("{project}-baseline"),
            filter: cfg.filter.label(),
            threshold: None,
            report: baseline.clone(),
        },
    ];
    let table = write_reports(&rows, Some(&layout.eval_csv), Some(&layout.eval_json))?;
    sweep_stage(
        &layout.model,
        &layout.corpus,
        &eval::default_thresholds(),
        cfg.filter,
        &cfg.decode,
        &layout.sweep,
    )?;
    let validity = validity(&read_patches(&layout.patches)?);
    Ok(RunSummary {
        model,
        baseline,
        validity,
        table,
    })
}
