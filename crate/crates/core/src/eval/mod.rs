//! Outcome classification, precision/recall/F1 and threshold sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Category, TestRecord};
use crate::generator::{select, Decoded, Generation};
use crate::statement::{abstract_arguments, TokenizedStatement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Correct,
    ArgIncorrect,
    Incorrect,
    NA,
}

/// Compare a patch with the concrete reference. Equality after abstracting
/// arguments on both sides counts as an argument-only mistake.
pub fn classify_output(patch: Option<&TokenizedStatement>, reference: &TokenizedStatement) -> Outcome {
    let Some(patch) = patch else {
        return Outcome::NA;
    };
    if patch.tokens == reference.tokens {
        return Outcome::Correct;
    }
    match (abstract_arguments(patch), abstract_arguments(reference)) {
        (Ok((a, _)), Ok((b, _))) if a.tokens == b.tokens => Outcome::ArgIncorrect,
        _ => Outcome::Incorrect,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: usize,
    pub arg_incorrect: usize,
    pub incorrect: usize,
    pub na: usize,
}

impl Counts {
    pub fn from_outcomes<'a, I: IntoIterator<Item = &'a Outcome>>(outcomes: I) -> Self {
        let mut c = Counts::default();
        for o in outcomes {
            match o {
                Outcome::Correct => c.correct += 1,
                Outcome::ArgIncorrect => c.arg_incorrect += 1,
                Outcome::Incorrect => c.incorrect += 1,
                Outcome::NA => c.na += 1,
            }
        }
        c
    }

    pub fn provided(&self) -> usize {
        self.correct + self.arg_incorrect + self.incorrect
    }

    pub fn queries(&self) -> usize {
        self.provided() + self.na
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No patch provided, or none correct: the ratios are shown as `--`.
    pub undefined: bool,
}

impl Metrics {
    pub fn from_counts(c: &Counts) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(c.correct, c.provided());
        let recall = ratio(c.correct, c.queries());
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            undefined: c.provided() == 0 || c.correct == 0,
        }
    }

    /// Two-decimal cells, `--` when undefined.
    pub fn cells(&self) -> [String; 3] {
        if self.undefined {
            return ["--".into(), "--".into(), "--".into()];
        }
        [self.precision, self.recall, self.f1].map(|x| format!("{x:.2}"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BugfixFilter {
    #[default]
    All,
    BugfixOnly,
    NonBugfixOnly,
}

impl FromStr for BugfixFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Self::All),
            "bugfix" | "bugfix-only" => Ok(Self::BugfixOnly),
            "non-bugfix" | "non-bugfix-only" => Ok(Self::NonBugfixOnly),
            _ => Err(format!("unknown bug-fix filter {s:?} (all, bugfix, non-bugfix)")),
        }
    }
}

/// Which test pairs enter an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filter {
    /// `None` keeps every category.
    pub category: Option<Category>,
    pub bugfix: BugfixFilter,
}

impl Default for Filter {
    fn default() -> Self {
        Self {
            category: Some(Category::NU),
            bugfix: BugfixFilter::All,
        }
    }
}

impl Filter {
    pub fn accepts(&self, r: &TestRecord) -> bool {
        let cat = self.category.is_none_or(|c| c == r.category);
        let fix = match self.bugfix {
            BugfixFilter::All => true,
            BugfixFilter::BugfixOnly => r.meta.bugfix,
            BugfixFilter::NonBugfixOnly => !r.meta.bugfix,
        };
        cat && fix
    }

    pub fn label(&self) -> String {
        let cat = self.category.map_or("all".to_string(), |c| c.to_string());
        let fix = match self.bugfix {
            BugfixFilter::All => "all",
            BugfixFilter::BugfixOnly => "bugfix",
            BugfixFilter::NonBugfixOnly => "non-bugfix",
        };
        format!("{cat}/{fix}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub n_queries: usize,
    pub threshold: Option<f64>,
    pub filter: Filter,
}

impl EvalReport {
    pub fn from_counts(counts: Counts, threshold: Option<f64>, filter: Filter) -> Self {
        let m = Metrics::from_counts(&counts);
        Self {
            counts,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            precision_undefined: m.undefined,
            n_queries: counts.queries(),
            threshold,
            filter,
        }
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
            undefined: self.precision_undefined,
        }
    }
}

pub fn compute_metrics(outcomes: &[Outcome]) -> EvalReport {
    EvalReport::from_counts(Counts::from_outcomes(outcomes), None, Filter::default())
}

/// Classify each generation against its reference, keeping the pairs the
/// filter accepts.
pub fn evaluate(records: &[TestRecord], gens: &[Generation], filter: Filter, threshold: Option<f64>) -> EvalReport {
    let patches: Vec<Option<&TokenizedStatement>> = gens.iter().map(|g| g.patch.as_ref().map(|p| &p.tokens)).collect();
    evaluate_patches(records, &patches, filter, threshold)
}

/// As [`evaluate`], over bare patches such as those read back from disk.
pub fn evaluate_patches(
    records: &[TestRecord],
    patches: &[Option<&TokenizedStatement>],
    filter: Filter,
    threshold: Option<f64>,
) -> EvalReport {
    assert_eq!(records.len(), patches.len(), "one patch slot per test record");
    let outcomes: Vec<Outcome> = records
        .iter()
        .zip(patches)
        .filter(|(r, _)| filter.accepts(r))
        .map(|(r, p)| classify_output(*p, &r.reference))
        .collect();
    EvalReport::from_counts(Counts::from_outcomes(&outcomes), threshold, filter)
}

/// `-1.2, -1.1, ..., -0.1`
pub fn default_thresholds() -> Vec<f64> {
    (1..=12).rev().map(|k| -(k as f64) / 10.0).collect()
}

/// Evaluate the cached beam outputs at each threshold.
pub fn sweep_thresholds(
    records: &[TestRecord],
    decoded: &[Decoded],
    thresholds: &[f64],
    filter: Filter,
) -> Result<Vec<(f64, EvalReport)>, String> {
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err("thresholds must be strictly ascending".into());
    }
    Ok(thresholds
        .iter()
        .map(|&t| {
            let gens: Vec<Generation> = decoded.iter().map(|d| select(d, t)).collect();
            (t, evaluate(records, &gens, filter, Some(t)))
        })
        .collect())
}

/// Fraction of queries whose output is valid. Zero queries give 0.
pub fn validity_rate(valid: &[bool]) -> f64 {
    if valid.is_empty() {
        return 0.0;
    }
    valid.iter().filter(|&&v| v).count() as f64 / valid.len() as f64
}

/// A row of the metrics CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub project: String,
    pub filter: String,
    pub threshold: Option<f64>,
    pub report: EvalReport,
}

pub const CSV_HEADER: &str = "project,filter,threshold,correct,arg_incorrect,incorrect,na,precision,recall,f1";

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let c = &r.report.counts;
        let t = r.threshold.map_or(String::new(), |t| format!("{t}"));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6},{:.6},{:.6}",
            r.project,
            r.filter,
            t,
            c.correct,
            c.arg_incorrect,
            c.incorrect,
            c.na,
            r.report.precision,
            r.report.recall,
            r.report.f1
        )
        .unwrap();
    }
    out
}

/// Fixed-width table for the terminal.
pub fn to_table(rows: &[ReportRow]) -> String {
    let mut out = format!(
        "{:<12} {:<18} {:>9} {:>7} {:>9} {:>7} {:>5} {:>6} {:>6} {:>6}\n",
        "project", "filter", "threshold", "correct", "arg-inc", "incor", "NA", "P", "R", "F1"
    );
    for r in rows {
        let c = &r.report.counts;
        let [p, rec, f] = r.report.metrics().cells();
        let t = r.threshold.map_or("-".to_string(), |t| format!("{t:.2}"));
        writeln!(
            out,
            "{:<12} {:<18} {:>9} {:>7} {:>9} {:>7} {:>5} {:>6} {:>6} {:>6}",
            r.project, r.filter, t, c.correct, c.arg_incorrect, c.incorrect, c.na, p, rec, f
        )
        .unwrap();
    }
    out
}

/// Plot-ready sweep: `threshold,f1_model,f1_baseline`.
pub fn sweep_csv(points: &[(f64, EvalReport)], baseline: &EvalReport) -> String {
    let mut out = String::from("threshold,f1_model,f1_baseline\n");
    for (t, r) in points {
        writeln!(out, "{t:.1},{:.6},{:.6}", r.f1, baseline.f1).unwrap();
    }
    out
}

/// One row of a counts table such as `fixtures/table5.csv`. The trailing
/// printed-metric columns are optional.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsRow {
    pub project: String,
    pub system: String,
    pub counts: Counts,
    pub printed: Option<[String; 3]>,
}

pub fn read_counts_csv(text: &str) -> Result<Vec<CountsRow>, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err("empty counts file".into());
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let want = ["project", "system", "correct", "arg_incorrect", "incorrect", "na"];
    if cols.len() < 6 || cols[..6] != want {
        return Err(format!("header must start with {}", want.join(",")));
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != cols.len() {
            return Err(format!("line {}: expected {} columns", n + 1, cols.len()));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| format!("line {}: bad count {s:?}", n + 1));
        rows.push(CountsRow {
            project: f[0].to_string(),
            system: f[1].to_string(),
            counts: Counts {
                correct: num(f[2])?,
                arg_incorrect: num(f[3])?,
                incorrect: num(f[4])?,
                na: num(f[5])?,
            },
            printed: (f.len() >= 9).then(|| [f[6].to_string(), f[7].to_string(), f[8].to_string()]),
        });
    }
    Ok(rows)
}

/// Count of NA outcomes by reason, for reporting.
pub fn na_breakdown(gens: &[Generation]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for g in gens {
        if let Some(r) = g.na_reason {
            *m.entry(r.to_string()).or_default() += 1;
        }
    }
    m
}
