//! Change-hunk extraction, blame and fix-commit labeling.

pub mod blame;
pub mod diff;
mod git;
mod memory;
pub mod scope;
pub mod szz;

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::{DateTime, Datelike};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use blame::{blame_origin, Blamer, Origin};
pub use diff::{histogram_diff, RawHunk};
pub use git::GitRepo;
pub use memory::{MemoryCommit, MemoryRepo};
pub use szz::{identify_fix_commits, is_fix_message, link_inducing};

#[derive(Debug, thiserror::Error)]
pub enum MineError {
    #[error("repository error: {0}")]
    Repo(String),
    #[error("unknown commit {0}")]
    UnknownCommit(String),
    #[error("commit {id} has an invalid timestamp {time}")]
    BadTimestamp { id: String, time: i64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: String,
    /// Seconds since the Unix epoch, UTC.
    pub author_time: i64,
    pub message: String,
    pub parent_ids: Vec<String>,
}

impl CommitRecord {
    pub fn year(&self) -> Result<i32, MineError> {
        DateTime::from_timestamp(self.author_time, 0)
            .map(|t| t.year())
            .ok_or_else(|| MineError::BadTimestamp {
                id: self.id.clone(),
                time: self.author_time,
            })
    }

    pub fn is_merge(&self) -> bool {
        self.parent_ids.len() > 1
    }

    pub fn first_parent(&self) -> Option<&str> {
        self.parent_ids.first().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChangeKind {
    Added,
    Deleted,
    Modified,
    Renamed { from: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FileChange {
    pub path: String,
    pub kind: ChangeKind,
}

/// Read access to a version-control history.
///
/// `changed_files` is relative to the commit's first parent (or to the empty
/// tree for a root commit).
pub trait Repository: Sync {
    fn commits(&self) -> Result<Vec<CommitRecord>, MineError>;
    fn changed_files(&self, commit: &CommitRecord) -> Result<Vec<FileChange>, MineError>;
    fn file_at(&self, commit: &str, path: &str) -> Result<Option<String>, MineError>;
}

/// Commits sorted by (author time, id).
pub fn ordered_commits<R: Repository + ?Sized>(repo: &R) -> Result<Vec<CommitRecord>, MineError> {
    let mut commits = repo.commits()?;
    commits.sort_by(|a, b| a.author_time.cmp(&b.author_time).then_with(|| a.id.cmp(&b.id)));
    Ok(commits)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeHunk {
    pub deleted_lines: Vec<String>,
    pub added_lines: Vec<String>,
    pub file_path: String,
    pub commit_post: String,
    pub commit_pre_origin: Option<String>,
    pub year_pre: Option<i32>,
    pub year_post: i32,
    pub method_scoped: bool,
}

impl ChangeHunk {
    pub fn is_pair(&self) -> bool {
        !self.deleted_lines.is_empty() && !self.added_lines.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FixLink {
    pub fixing_commit: String,
    pub inducing_commit: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningReport {
    pub commits_seen: usize,
    pub commits_in_range: usize,
    pub merges_skipped: usize,
    pub renames: usize,
    pub files_modified: usize,
    pub hunks: usize,
    pub method_scoped_hunks: usize,
    pub origin_unknown: usize,
    pub unparseable_files: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MineOptions {
    pub since: Option<i32>,
    pub until: Option<i32>,
}

impl MineOptions {
    fn contains(&self, year: i32) -> bool {
        self.since.is_none_or(|s| year >= s) && self.until.is_none_or(|u| year <= u)
    }
}

pub struct MineOutput {
    pub hunks: Vec<ChangeHunk>,
    pub commits: Vec<CommitRecord>,
    pub report: MiningReport,
}

#[derive(Default)]
struct Counters {
    renames: AtomicUsize,
    files_modified: AtomicUsize,
    origin_unknown: AtomicUsize,
    unparseable_files: AtomicUsize,
}

fn is_java(path: &str) -> bool {
    path.ends_with(".java")
}

/// Extract every hunk of every modified Java file, in (time, id) commit order.
///
/// Work is spread over the current rayon pool; output does not depend on the
/// number of workers.
pub fn mine_hunks<R: Repository>(repo: &R, opts: MineOptions) -> Result<MineOutput, MineError> {
    let commits = ordered_commits(repo)?;
    let blamer = Blamer::new(repo, &commits)?;
    let counters = Counters::default();

    let mut report = MiningReport {
        commits_seen: commits.len(),
        ..Default::default()
    };
    let mut selected = Vec::new();
    for c in &commits {
        if !opts.contains(c.year()?) {
            continue;
        }
        report.commits_in_range += 1;
        if c.is_merge() {
            report.merges_skipped += 1;
            continue;
        }
        selected.push(c);
    }

    let per_commit: Vec<Vec<ChangeHunk>> = selected
        .par_iter()
        .map(|c| mine_commit(repo, &blamer, c, &counters))
        .collect::<Result<_, _>>()?;

    let hunks: Vec<ChangeHunk> = per_commit.into_iter().flatten().collect();
    report.renames = counters.renames.into_inner();
    report.files_modified = counters.files_modified.into_inner();
    report.origin_unknown = counters.origin_unknown.into_inner();
    report.unparseable_files = counters.unparseable_files.into_inner();
    report.hunks = hunks.len();
    report.method_scoped_hunks = hunks.iter().filter(|h| h.method_scoped).count();
    log::info!(
        "stage=mine commits={} merges_skipped={} hunks={} origin_unknown={} unparseable_files={}",
        report.commits_seen,
        report.merges_skipped,
        report.hunks,
        report.origin_unknown,
        report.unparseable_files
    );
    Ok(MineOutput {
        hunks,
        commits,
        report,
    })
}

fn mine_commit<R: Repository>(
    repo: &R,
    blamer: &Blamer<'_, R>,
    commit: &CommitRecord,
    counters: &Counters,
) -> Result<Vec<ChangeHunk>, MineError> {
    let Some(parent) = commit.first_parent() else {
        return Ok(Vec::new());
    };
    let year_post = commit.year()?;
    let mut out = Vec::new();
    let mut changes = repo.changed_files(commit)?;
    changes.sort();
    for change in changes {
        match change.kind {
            ChangeKind::Renamed { .. } => {
                counters.renames.fetch_add(1, Ordering::Relaxed);
                continue;
            }
            ChangeKind::Modified if is_java(&change.path) => {}
            _ => continue,
        }
        counters.files_modified.fetch_add(1, Ordering::Relaxed);
        let path = &change.path;
        let (Some(pre_text), Some(post_text)) =
            (repo.file_at(parent, path)?, repo.file_at(&commit.id, path)?)
        else {
            return Err(MineError::Repo(format!(
                "{path} reported modified in {} but missing from a side",
                commit.id
            )));
        };
        let pre = diff::NormalizedText::new(&pre_text);
        let post = diff::NormalizedText::new(&post_text);
        let raw_hunks = histogram_diff(&pre.keys, &post.keys);
        if raw_hunks.is_empty() {
            continue;
        }
        let scopes = match (
            scope::MethodScopes::scan(&pre_text),
            scope::MethodScopes::scan(&post_text),
        ) {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => {
                log::warn!("unparseable file {path} at {}", commit.id);
                counters.unparseable_files.fetch_add(1, Ordering::Relaxed);
                None
            }
        };
        for h in &raw_hunks {
            let del_raw: Vec<usize> = h.deleted.clone().map(|k| pre.kept[k]).collect();
            let add_raw: Vec<usize> = h.added.clone().map(|k| post.kept[k]).collect();
            let method_scoped = scopes
                .as_ref()
                .is_some_and(|(a, b)| same_method(a, &del_raw, b, &add_raw));
            let (origin, year_pre) = match del_raw.first() {
                None => (None, None),
                Some(&line) => match blamer.origin(parent, path, line)? {
                    Origin::Known { commit, year } => (Some(commit), Some(year)),
                    Origin::Unknown => {
                        counters.origin_unknown.fetch_add(1, Ordering::Relaxed);
                        (None, None)
                    }
                },
            };
            out.push(ChangeHunk {
                deleted_lines: del_raw.iter().map(|&i| pre.raw[i].clone()).collect(),
                added_lines: add_raw.iter().map(|&i| post.raw[i].clone()).collect(),
                file_path: path.clone(),
                commit_post: commit.id.clone(),
                commit_pre_origin: origin,
                year_pre,
                year_post,
                method_scoped,
            });
        }
    }
    Ok(out)
}

fn same_method(
    pre: &scope::MethodScopes,
    del: &[usize],
    post: &scope::MethodScopes,
    add: &[usize],
) -> bool {
    let a = if del.is_empty() {
        None
    } else {
        match pre.common_method(del.iter().copied()) {
            None => return false,
            some => some,
        }
    };
    let b = if add.is_empty() {
        None
    } else {
        match post.common_method(add.iter().copied()) {
            None => return false,
            some => some,
        }
    };
    match (a, b) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

/// Mined hunks plus the fix links derived from them.
pub fn fix_links(out: &MineOutput) -> Vec<FixLink> {
    let fixing: HashSet<String> = identify_fix_commits(&out.commits);
    let fix_hunks: Vec<&ChangeHunk> = out
        .hunks
        .iter()
        .filter(|h| fixing.contains(&h.commit_post))
        .collect();
    link_inducing(fix_hunks)
}
