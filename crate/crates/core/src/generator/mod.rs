//! Candidate patches for query statements, from the model or from exact
//! lookup in the training pairs.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{prepare, prepare_tokens, Prepared, Rejection};
use crate::nmt::beam::{beam_search, DEFAULT_BEAM, DEFAULT_MAX_LEN};
use crate::nmt::vocab::EOS_ID;
use crate::nmt::Model;
use crate::statement::{reinsert_arguments, validate_statement, TokenizedStatement};

pub const DEFAULT_THRESHOLD: f64 = -0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchSource {
    Model,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NaReason {
    Untokenizable,
    TooShort,
    InvalidQuery,
    /// No hypothesis emitted `</s>` within the length bound.
    Unfinished,
    LowScore,
    Identical,
    InvalidAfterReinsertion,
    NotInTraining,
}

impl NaReason {
    pub const ALL: [NaReason; 8] = [
        NaReason::Untokenizable,
        NaReason::TooShort,
        NaReason::InvalidQuery,
        NaReason::Unfinished,
        NaReason::LowScore,
        NaReason::Identical,
        NaReason::InvalidAfterReinsertion,
        NaReason::NotInTraining,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NaReason::Untokenizable => "untokenizable",
            NaReason::TooShort => "too-short",
            NaReason::InvalidQuery => "invalid-query",
            NaReason::Unfinished => "unfinished",
            NaReason::LowScore => "low-score",
            NaReason::Identical => "identical",
            NaReason::InvalidAfterReinsertion => "invalid-after-reinsertion",
            NaReason::NotInTraining => "not-in-training",
        }
    }
}

impl fmt::Display for NaReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NaReason {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown NA reason {s:?}"))
    }
}

impl From<Rejection> for NaReason {
    fn from(r: Rejection) -> Self {
        match r {
            Rejection::Untokenizable => NaReason::Untokenizable,
            Rejection::TooShort => NaReason::TooShort,
            Rejection::Unparsable => NaReason::InvalidQuery,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPatch {
    pub tokens: TokenizedStatement,
    /// Log-probability of the abstracted output; 0 for baseline patches.
    pub score: f64,
    pub valid: bool,
    pub arguments_reinserted: bool,
    pub source: PatchSource,
}

/// Result for one query: a patch, or NA with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub query: String,
    pub patch: Option<GeneratedPatch>,
    /// Score of the top hypothesis, when one exists.
    pub score: Option<f64>,
    pub na_reason: Option<NaReason>,
    pub source: PatchSource,
    /// The top output parses after reinsertion, whatever the threshold.
    pub valid: bool,
    /// Further hypotheses passing the same checks, best first.
    pub alternatives: Vec<GeneratedPatch>,
}

impl Generation {
    fn na(query: &str, reason: NaReason, score: Option<f64>, source: PatchSource, valid: bool) -> Self {
        Self {
            query: query.to_string(),
            patch: None,
            score,
            na_reason: Some(reason),
            source,
            valid,
            alternatives: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeOptions {
    pub beam_size: usize,
    pub max_len: usize,
    /// Number of hypotheses surfaced; only the first decides NA.
    pub top_k: usize,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            beam_size: DEFAULT_BEAM,
            max_len: DEFAULT_MAX_LEN,
            top_k: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub abstracted: TokenizedStatement,
    pub score: f64,
    pub finished: bool,
}

/// Beam output for one query before thresholding, so several thresholds can
/// share one decoding pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub query: String,
    pub prepared: Result<Prepared, NaReason>,
    pub candidates: Vec<Candidate>,
}

fn prepare_query(query: &str) -> Result<Prepared, NaReason> {
    prepare(query).map_err(NaReason::from)
}

/// Prepare `query` and run beam search on its abstraction.
pub fn decode(model: &Model<f32>, query: &str, opts: &DecodeOptions) -> Decoded {
    let prepared = prepare_query(query);
    let mut candidates = Vec::new();
    if let Ok(p) = &prepared {
        let src = model.src_vocab.encode(&p.abstracted.tokens);
        let hyps = beam_search(model, &src, opts.beam_size, opts.max_len).expect("prepared queries are non-empty");
        for h in hyps.into_iter().take(opts.top_k.max(1)) {
            let ids: Vec<usize> = h.tokens.iter().copied().filter(|&t| t != EOS_ID).collect();
            candidates.push(Candidate {
                abstracted: TokenizedStatement::from_tokens(&model.tgt_vocab.decode(&ids)),
                score: h.log_prob as f64,
                finished: h.finished,
            });
        }
    }
    Decoded {
        query: query.to_string(),
        prepared,
        candidates,
    }
}

fn check(prepared: &Prepared, c: &Candidate, threshold: f64) -> Result<GeneratedPatch, NaReason> {
    if !c.finished {
        return Err(NaReason::Unfinished);
    }
    if c.score < threshold {
        return Err(NaReason::LowScore);
    }
    if c.abstracted.tokens == prepared.abstracted.tokens {
        return Err(NaReason::Identical);
    }
    let r = reinsert_arguments(&c.abstracted, &prepared.args);
    let valid = r.emptied == 0 && validate_statement(&r.statement);
    if !valid {
        return Err(NaReason::InvalidAfterReinsertion);
    }
    Ok(GeneratedPatch {
        tokens: r.statement,
        score: c.score,
        valid,
        arguments_reinserted: r.filled > 0,
        source: PatchSource::Model,
    })
}

/// Apply the NA rules at `threshold` to decoded hypotheses.
pub fn select(decoded: &Decoded, threshold: f64) -> Generation {
    let prepared = match &decoded.prepared {
        Ok(p) => p,
        Err(reason) => return Generation::na(&decoded.query, *reason, None, PatchSource::Model, false),
    };
    let Some(top) = decoded.candidates.first() else {
        return Generation::na(&decoded.query, NaReason::Unfinished, None, PatchSource::Model, false);
    };
    let valid = top_is_valid(decoded);
    match check(prepared, top, threshold) {
        Err(reason) => Generation::na(&decoded.query, reason, Some(top.score), PatchSource::Model, valid),
        Ok(patch) => Generation {
            query: decoded.query.clone(),
            patch: Some(patch),
            score: Some(top.score),
            na_reason: None,
            source: PatchSource::Model,
            valid,
            alternatives: decoded.candidates[1..]
                .iter()
                .filter_map(|c| check(prepared, c, threshold).ok())
                .collect(),
        },
    }
}

/// The top hypothesis, unthresholded, is a complete statement that parses
/// once the query's arguments are put back.
pub fn top_is_valid(decoded: &Decoded) -> bool {
    let (Ok(p), Some(c)) = (&decoded.prepared, decoded.candidates.first()) else {
        return false;
    };
    if !c.finished {
        return false;
    }
    let r = reinsert_arguments(&c.abstracted, &p.args);
    r.emptied == 0 && validate_statement(&r.statement)
}

pub fn generate(model: &Model<f32>, query: &str, threshold: f64, opts: &DecodeOptions) -> Generation {
    select(&decode(model, query, opts), threshold)
}

/// Decode many queries in parallel; output order follows input order.
pub fn decode_all(model: &Model<f32>, queries: &[String], opts: &DecodeOptions) -> Vec<Decoded> {
    queries.par_iter().map(|q| decode(model, q, opts)).collect()
}

/// Exact-match lookup from abstracted pre-statement to its post-statement.
#[derive(Debug, Clone, Default)]
pub struct BaselineIndex {
    map: HashMap<Vec<String>, TokenizedStatement>,
}

impl BaselineIndex {
    /// Index concrete training pairs. The first pair wins when abstracted
    /// pre-statements repeat.
    pub fn from_concrete_pairs<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (&'a TokenizedStatement, &'a TokenizedStatement)>,
    {
        // abstracted pre -> (abstracted post -> count)
        let mut seen: HashMap<Vec<String>, HashMap<Vec<String>, usize>> = HashMap::new();
        for (pre, post) in pairs {
            let (Ok(pre), Ok(post)) = (prepare_tokens(pre.clone()), prepare_tokens(post.clone())) else {
                continue;
            };
            *seen.entry(pre.abstracted.tokens).or_default().entry(post.abstracted.tokens).or_default() += 1;
        }
        // most frequent post wins, then the smaller joined text
        let map = seen
            .into_iter()
            .map(|(key, posts)| {
                let best = posts
                    .into_iter()
                    .min_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.join(" ").cmp(&b.0.join(" "))))
                    .expect("non-empty")
                    .0;
                (key, TokenizedStatement::from_tokens(&best))
            })
            .collect();
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn suggest(&self, query: &str) -> Generation {
        let na = |r| Generation::na(query, r, None, PatchSource::Baseline, false);
        let prepared = match prepare_query(query) {
            Ok(p) => p,
            Err(r) => return na(r),
        };
        let Some(post) = self.map.get(&prepared.abstracted.tokens) else {
            return na(NaReason::NotInTraining);
        };
        if post.tokens == prepared.abstracted.tokens {
            return na(NaReason::Identical);
        }
        let r = reinsert_arguments(post, &prepared.args);
        if r.emptied > 0 || !validate_statement(&r.statement) {
            return na(NaReason::InvalidAfterReinsertion);
        }
        Generation {
            query: query.to_string(),
            patch: Some(GeneratedPatch {
                tokens: r.statement,
                score: 0.0,
                valid: true,
                arguments_reinserted: r.filled > 0,
                source: PatchSource::Baseline,
            }),
            score: None,
            na_reason: None,
            source: PatchSource::Baseline,
            valid: true,
            alternatives: Vec::new(),
        }
    }
}

/// One line of `patches.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub query: String,
    pub patch: Option<String>,
    pub score: Option<f64>,
    pub valid: bool,
    pub na_reason: Option<NaReason>,
    pub source: PatchSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<Alternative>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub patch: String,
    pub score: f64,
}

impl From<&Generation> for PatchRecord {
    fn from(g: &Generation) -> Self {
        Self {
            query: g.query.clone(),
            patch: g.patch.as_ref().map(|p| p.tokens.joined()),
            score: g.score,
            valid: g.valid,
            na_reason: g.na_reason,
            source: g.source,
            alternatives: g
                .alternatives
                .iter()
                .map(|a| Alternative {
                    patch: a.tokens.joined(),
                    score: a.score,
                })
                .collect(),
        }
    }
}

pub fn to_jsonl(gens: &[Generation]) -> String {
    let mut out = String::new();
    for g in gens {
        out.push_str(&serde_json::to_string(&PatchRecord::from(g)).expect("serializable record"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<PatchRecord>, (usize, serde_json::Error)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e)))
        .collect()
}
