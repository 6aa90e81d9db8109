//! Statement-pair extraction, filtering, chronological split and
//! categorization.

mod io;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::miner::{ChangeHunk, FixLink};
use crate::nmt::vocab::{Vocabulary, RESERVED, UNK};
use crate::statement::{abstract_arguments, tokenize, validate_statement, ArgumentTable, TokenizedStatement};

pub use io::{read_test, read_train, read_train_concrete, write_test, write_train, TestRecord, TrainFiles, TrainMeta};

/// Statements shorter than this are dropped.
pub const MIN_TOKENS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("no training pairs before {0}")]
    EmptyTrain(i32),
    #[error("no test pairs created and changed in {0}")]
    EmptyTest(i32),
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    NU,
    UQ,
    UR,
    Unassigned,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::NU => "NU",
            Category::UQ => "UQ",
            Category::UR => "UR",
            Category::Unassigned => "unassigned",
        })
    }
}

impl std::str::FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "NU" => Ok(Category::NU),
            "UQ" => Ok(Category::UQ),
            "UR" => Ok(Category::UR),
            "unassigned" => Ok(Category::Unassigned),
            _ => Err(format!("unknown category {s:?}")),
        }
    }
}

/// A statement after tokenizing, abstraction and validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prepared {
    pub concrete: TokenizedStatement,
    pub abstracted: TokenizedStatement,
    pub args: ArgumentTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    Untokenizable,
    TooShort,
    Unparsable,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::Untokenizable => "untokenizable",
            Rejection::TooShort => "too-short",
            Rejection::Unparsable => "unparsable",
        })
    }
}

/// Tokenize, length-filter, abstract and validate one line.
pub fn prepare(raw: &str) -> Result<Prepared, Rejection> {
    let concrete = tokenize(raw).map_err(|_| Rejection::Untokenizable)?;
    prepare_tokens(concrete)
}

/// Same as [`prepare`] for an already tokenized statement.
pub fn prepare_tokens(concrete: TokenizedStatement) -> Result<Prepared, Rejection> {
    if concrete.len() < MIN_TOKENS {
        return Err(Rejection::TooShort);
    }
    let (abstracted, args) = abstract_arguments(&concrete).map_err(|_| Rejection::Unparsable)?;
    if !validate_statement(&abstracted) {
        return Err(Rejection::Unparsable);
    }
    Ok(Prepared {
        concrete,
        abstracted,
        args,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementPair {
    pub pre: TokenizedStatement,
    pub post: TokenizedStatement,
    pub pre_args: ArgumentTable,
    pub post_args: ArgumentTable,
    pub pre_concrete: TokenizedStatement,
    pub post_concrete: TokenizedStatement,
    pub file_path: String,
    pub commit_pre_origin: String,
    pub commit_post: String,
    pub year_pre: i32,
    pub year_post: i32,
    pub bugfix: bool,
    pub category: Category,
}

/// Per-step counts of the filtering pipeline.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterLedger {
    pub hunks_in: usize,
    pub not_method_scoped: usize,
    pub not_pair: usize,
    pub multi_statement: usize,
    pub origin_unknown: usize,
    /// Single-statement pairs entering steps (2)-(7).
    pub before_filtering: usize,
    pub untokenizable: usize,
    pub too_short: usize,
    pub not_parsable: usize,
    pub lost_candidates: usize,
    pub identical: usize,
    pub final_pairs: usize,
}

impl FilterLedger {
    /// (label, count, percent of `before_filtering`) rows.
    pub fn rows(&self) -> Vec<(&'static str, usize, f64)> {
        let pct = |n: usize| {
            if self.before_filtering == 0 {
                0.0
            } else {
                100.0 * n as f64 / self.before_filtering as f64
            }
        };
        [
            ("before filtering", self.before_filtering),
            ("(2) untokenizable", self.untokenizable),
            ("(3) <3 tokens", self.too_short),
            ("(5) not parsable", self.not_parsable),
            ("(6) lost candidates", self.lost_candidates),
            ("(7) identical", self.identical),
            ("final statement pairs", self.final_pairs),
        ]
        .into_iter()
        .map(|(l, n)| (l, n, pct(n)))
        .collect()
    }
}

/// Steps (1)-(5): single-statement method-scoped pairs that tokenize,
/// have at least three tokens, abstract, and parse on both sides.
pub fn build_pairs<'a, I>(hunks: I) -> (Vec<StatementPair>, FilterLedger)
where
    I: IntoIterator<Item = &'a ChangeHunk>,
{
    let mut ledger = FilterLedger::default();
    let mut out = Vec::new();
    for h in hunks {
        ledger.hunks_in += 1;
        if !h.method_scoped {
            ledger.not_method_scoped += 1;
            continue;
        }
        if !h.is_pair() {
            ledger.not_pair += 1;
            continue;
        }
        if h.deleted_lines.len() != 1 || h.added_lines.len() != 1 {
            ledger.multi_statement += 1;
            continue;
        }
        let (Some(origin), Some(year_pre)) = (&h.commit_pre_origin, h.year_pre) else {
            ledger.origin_unknown += 1;
            continue;
        };
        ledger.before_filtering += 1;
        let sides = prepare(&h.deleted_lines[0]).and_then(|pre| Ok((pre, prepare(&h.added_lines[0])?)));
        let (pre, post) = match sides {
            Ok(p) => p,
            Err(Rejection::Untokenizable) => {
                ledger.untokenizable += 1;
                continue;
            }
            Err(Rejection::TooShort) => {
                ledger.too_short += 1;
                continue;
            }
            Err(Rejection::Unparsable) => {
                ledger.not_parsable += 1;
                continue;
            }
        };
        out.push(StatementPair {
            pre: pre.abstracted,
            post: post.abstracted,
            pre_args: pre.args,
            post_args: post.args,
            pre_concrete: pre.concrete,
            post_concrete: post.concrete,
            file_path: h.file_path.clone(),
            commit_pre_origin: origin.clone(),
            commit_post: h.commit_post.clone(),
            year_pre,
            year_post: h.year_post,
            bugfix: false,
            category: Category::Unassigned,
        });
    }
    (out, ledger)
}

/// Flag pairs whose (origin, post commit) matches a fix link.
pub fn mark_bugfix(pairs: &mut [StatementPair], links: &[FixLink]) {
    let set: HashSet<(&str, &str)> = links
        .iter()
        .map(|l| (l.inducing_commit.as_str(), l.fixing_commit.as_str()))
        .collect();
    for p in pairs {
        p.bugfix = set.contains(&(p.commit_pre_origin.as_str(), p.commit_post.as_str()));
    }
}

fn instance_key(p: &StatementPair) -> (String, String, String, String, String) {
    (
        p.commit_post.clone(),
        p.file_path.clone(),
        p.commit_pre_origin.clone(),
        p.pre_concrete.joined(),
        p.post_concrete.joined(),
    )
}

/// Step (6): one post per distinct abstracted pre.
///
/// Candidates are restricted to the most recent `year_post` in the group,
/// then to the post most frequent over the whole group, then to the
/// code-point-smallest joined post. Returns the kept pairs in canonical
/// order and the number removed.
pub fn select_post_correction(pairs: Vec<StatementPair>) -> (Vec<StatementPair>, usize) {
    let total = pairs.len();
    let mut groups: BTreeMap<Vec<String>, Vec<StatementPair>> = BTreeMap::new();
    for p in pairs {
        groups.entry(p.pre.tokens.clone()).or_default().push(p);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (_, group) in groups {
        let mut freq: HashMap<&[String], usize> = HashMap::new();
        for p in &group {
            *freq.entry(&p.post.tokens).or_default() += 1;
        }
        let chosen = group
            .iter()
            .min_by(|a, b| {
                b.year_post
                    .cmp(&a.year_post)
                    .then_with(|| freq[b.post.tokens.as_slice()].cmp(&freq[a.post.tokens.as_slice()]))
                    .then_with(|| a.post.joined().cmp(&b.post.joined()))
                    .then_with(|| instance_key(a).cmp(&instance_key(b)))
            })
            .expect("non-empty group")
            .clone();
        out.push(chosen);
    }
    sort_canonical(&mut out);
    let lost = total - out.len();
    (out, lost)
}

/// Order pairs by (year_post, commit_post, instance), independent of input order.
pub fn sort_canonical(pairs: &mut [StatementPair]) {
    pairs.sort_by(|a, b| {
        (a.year_post, instance_key(a)).cmp(&(b.year_post, instance_key(b)))
    });
}

/// Step (7): drop pairs whose abstracted sides are equal.
pub fn drop_identical(pairs: Vec<StatementPair>) -> (Vec<StatementPair>, usize) {
    let total = pairs.len();
    let kept: Vec<StatementPair> = pairs.into_iter().filter(|p| p.pre != p.post).collect();
    let dropped = total - kept.len();
    (kept, dropped)
}

/// Split by year: test pairs were both created and changed in `test_year`;
/// training pairs were changed before it. Everything else is excluded.
pub fn split_chronological(
    pairs: Vec<StatementPair>,
    test_year: i32,
) -> Result<(Vec<StatementPair>, Vec<StatementPair>), CorpusError> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for p in pairs {
        if p.year_post < test_year {
            train.push(p);
        } else if p.year_pre == test_year && p.year_post == test_year {
            test.push(p);
        }
    }
    if train.is_empty() {
        return Err(CorpusError::EmptyTrain(test_year));
    }
    if test.is_empty() {
        return Err(CorpusError::EmptyTest(test_year));
    }
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub pairs: Vec<StatementPair>,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    pub span: (i32, i32),
}

/// Vocabulary of tokens seen at least `min_count` times, most frequent
/// first (ties by code point).
fn side_vocab<'a, I>(statements: I, min_count: usize) -> (Vocabulary, HashMap<String, usize>)
where
    I: IntoIterator<Item = &'a TokenizedStatement>,
{
    let mut counts: HashMap<String, usize> = HashMap::new();
    for s in statements {
        for t in &s.tokens {
            *counts.entry(t.clone()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&String, &usize)> = counts
        .iter()
        .filter(|(t, &n)| n >= min_count || RESERVED.contains(&t.as_str()))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let vocab = Vocabulary::from_tokens(kept.into_iter().map(|(t, _)| t.as_str()));
    (vocab, counts)
}

fn substitute(s: &TokenizedStatement, vocab: &Vocabulary) -> TokenizedStatement {
    let tokens: Vec<String> = s
        .tokens
        .iter()
        .map(|t| if vocab.contains(t) { t.clone() } else { UNK.to_string() })
        .collect();
    TokenizedStatement::from_tokens(&tokens)
}

/// Per-side rare-token replacement: tokens seen fewer than `min_count`
/// times on a side become `<unk>` on that side.
pub fn replace_rare(pairs: Vec<StatementPair>, min_count: usize) -> Corpus {
    let (src_vocab, _) = side_vocab(pairs.iter().map(|p| &p.pre), min_count);
    let (tgt_vocab, _) = side_vocab(pairs.iter().map(|p| &p.post), min_count);
    let span = (
        pairs.iter().map(|p| p.year_pre).min().unwrap_or(0),
        pairs.iter().map(|p| p.year_post).max().unwrap_or(0),
    );
    let pairs = pairs
        .into_iter()
        .map(|mut p| {
            p.pre = substitute(&p.pre, &src_vocab);
            p.post = substitute(&p.post, &tgt_vocab);
            p
        })
        .collect();
    Corpus {
        pairs,
        src_vocab,
        tgt_vocab,
        span,
    }
}

/// UQ if the abstracted query has an out-of-vocabulary token, else UR if the
/// abstracted reference has one, else NU.
pub fn categorize(pair: &StatementPair, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Category {
    if pair.pre.tokens.iter().any(|t| !src_vocab.contains(t)) {
        Category::UQ
    } else if pair.post.tokens.iter().any(|t| !tgt_vocab.contains(t)) {
        Category::UR
    } else {
        Category::NU
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusOptions {
    pub test_year: i32,
    pub min_count: usize,
}

pub struct BuiltCorpus {
    pub train: Corpus,
    pub test: Vec<StatementPair>,
    pub train_ledger: FilterLedger,
    pub test_ledger: FilterLedger,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub train: FilterLedger,
    pub test: FilterLedger,
    pub categories: BTreeMap<Category, usize>,
    pub bugfix_test_pairs: usize,
}

/// The full preprocessing pipeline over a mined hunk stream.
pub fn build_corpus(
    hunks: &[ChangeHunk],
    links: &[FixLink],
    opts: CorpusOptions,
) -> Result<BuiltCorpus, CorpusError> {
    // Steps (1)-(5) are per pair, so run them per side of the split to keep
    // separate ledgers.
    let in_train = |h: &&ChangeHunk| h.year_post < opts.test_year;
    let in_test = |h: &&ChangeHunk| h.year_post == opts.test_year && h.year_pre == Some(opts.test_year);
    let (train_pairs, mut train_ledger) = build_pairs(hunks.iter().filter(in_train));
    let (test_pairs, mut test_ledger) = build_pairs(hunks.iter().filter(in_test));
    let mut all = train_pairs;
    all.extend(test_pairs);
    let (train, test) = split_chronological(all, opts.test_year)?;

    let (train, lost) = select_post_correction(train);
    train_ledger.lost_candidates = lost;
    let (mut train, identical) = drop_identical(train);
    mark_bugfix(&mut train, links);
    train_ledger.identical = identical;
    train_ledger.final_pairs = train.len();
    if train.is_empty() {
        return Err(CorpusError::EmptyTrain(opts.test_year));
    }
    let train = replace_rare(train, opts.min_count);

    let (mut test, identical) = drop_identical(test);
    test_ledger.identical = identical;
    sort_canonical(&mut test);
    mark_bugfix(&mut test, links);
    for p in &mut test {
        p.category = categorize(p, &train.src_vocab, &train.tgt_vocab);
    }
    test_ledger.final_pairs = test.len();
    if test.is_empty() {
        return Err(CorpusError::EmptyTest(opts.test_year));
    }
    log::info!(
        "stage=build-corpus train_pairs={} test_pairs={} src_vocab={} tgt_vocab={}",
        train.pairs.len(),
        test.len(),
        train.src_vocab.len(),
        train.tgt_vocab.len()
    );
    Ok(BuiltCorpus {
        train,
        test,
        train_ledger,
        test_ledger,
    })
}

impl BuiltCorpus {
    pub fn report(&self) -> CorpusReport {
        let mut categories = BTreeMap::new();
        for p in &self.test {
            *categories.entry(p.category).or_default() += 1;
        }
        CorpusReport {
            train: self.train_ledger.clone(),
            test: self.test_ledger.clone(),
            categories,
            bugfix_test_pairs: self.test.iter().filter(|p| p.bugfix).count(),
        }
    }
}
