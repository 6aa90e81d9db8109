//! Keyword-based fix-commit labeling and fix/inducing links.

use std::collections::{BTreeSet, HashSet};
use std::sync::LazyLock;

use regex::Regex;

use super::{ChangeHunk, CommitRecord, FixLink};

static FIX_WORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(fix(e[sd]|ing)?|bugs?|defects?|patch(e[sd]|ing)?)\b").unwrap()
});
static ISSUE_KEY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b[A-Z][A-Z0-9]*-[0-9]+\b").unwrap());

pub fn is_fix_message(message: &str) -> bool {
    FIX_WORD.is_match(message)
        || (ISSUE_KEY.is_match(message) && message.to_lowercase().contains("fix"))
}

pub fn identify_fix_commits<'a, I>(commits: I) -> HashSet<String>
where
    I: IntoIterator<Item = &'a CommitRecord>,
{
    commits
        .into_iter()
        .filter(|c| is_fix_message(&c.message))
        .map(|c| c.id.clone())
        .collect()
}

/// One link per distinct (fixing, inducing) pair, sorted.
pub fn link_inducing<'a, I>(fix_hunks: I) -> Vec<FixLink>
where
    I: IntoIterator<Item = &'a ChangeHunk>,
{
    let set: BTreeSet<FixLink> = fix_hunks
        .into_iter()
        .filter_map(|h| {
            Some(FixLink {
                fixing_commit: h.commit_post.clone(),
                inducing_commit: h.commit_pre_origin.clone()?,
            })
        })
        .collect();
    set.into_iter().collect()
}
