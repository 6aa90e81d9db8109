//! Line-origin tracing along first-parent history.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::diff::{histogram_diff, map_back, NormalizedText, RawHunk};
use super::{ordered_commits, ChangeKind, CommitRecord, FileChange, MineError, Repository};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Known { commit: String, year: i32 },
    /// The line crosses a rename, or sits on a blank line.
    Unknown,
}

struct FileDiff {
    pre: NormalizedText,
    post: NormalizedText,
    hunks: Vec<RawHunk>,
}

/// Memoizing blame engine shared by mining workers.
pub struct Blamer<'r, R: Repository + ?Sized> {
    repo: &'r R,
    commits: HashMap<String, CommitRecord>,
    changes: Mutex<HashMap<String, Arc<Vec<FileChange>>>>,
    diffs: Mutex<HashMap<(String, String), Arc<FileDiff>>>,
}

impl<'r, R: Repository + ?Sized> Blamer<'r, R> {
    pub fn new(repo: &'r R, commits: &[CommitRecord]) -> Result<Self, MineError> {
        Ok(Self {
            repo,
            commits: commits.iter().map(|c| (c.id.clone(), c.clone())).collect(),
            changes: Mutex::new(HashMap::new()),
            diffs: Mutex::new(HashMap::new()),
        })
    }

    fn record(&self, id: &str) -> Result<&CommitRecord, MineError> {
        self.commits
            .get(id)
            .ok_or_else(|| MineError::UnknownCommit(id.to_string()))
    }

    fn changes(&self, rec: &CommitRecord) -> Result<Arc<Vec<FileChange>>, MineError> {
        if let Some(c) = self.changes.lock().unwrap().get(&rec.id) {
            return Ok(c.clone());
        }
        let c = Arc::new(self.repo.changed_files(rec)?);
        self.changes
            .lock()
            .unwrap()
            .insert(rec.id.clone(), c.clone());
        Ok(c)
    }

    fn diff(&self, rec: &CommitRecord, parent: &str, path: &str) -> Result<Arc<FileDiff>, MineError> {
        let key = (rec.id.clone(), path.to_string());
        if let Some(d) = self.diffs.lock().unwrap().get(&key) {
            return Ok(d.clone());
        }
        let read = |commit: &str| -> Result<String, MineError> {
            self.repo.file_at(commit, path)?.ok_or_else(|| {
                MineError::Repo(format!("{path} missing at {commit} while tracing blame"))
            })
        };
        let pre = NormalizedText::new(&read(parent)?);
        let post = NormalizedText::new(&read(&rec.id)?);
        let hunks = histogram_diff(&pre.keys, &post.keys);
        let d = Arc::new(FileDiff { pre, post, hunks });
        self.diffs.lock().unwrap().insert(key, d.clone());
        Ok(d)
    }

    /// Commit that introduced raw line `line` of `path` as it exists at `commit`.
    pub fn origin(&self, commit: &str, path: &str, line: usize) -> Result<Origin, MineError> {
        let mut cur = self.record(commit)?;
        let mut line = line;
        loop {
            let changes = self.changes(cur)?;
            let change = changes.iter().find(|c| c.path == path);
            let parent = cur.first_parent();
            match (change.map(|c| &c.kind), parent) {
                (None, Some(p)) => {
                    cur = self.record(p)?;
                    continue;
                }
                (None, None) | (Some(ChangeKind::Added), _) => {
                    return Ok(Origin::Known {
                        commit: cur.id.clone(),
                        year: cur.year()?,
                    })
                }
                (Some(ChangeKind::Renamed { .. }), _) => return Ok(Origin::Unknown),
                (Some(ChangeKind::Deleted), _) => {
                    return Err(MineError::Repo(format!(
                        "{path} is deleted at {} but blamed there",
                        cur.id
                    )))
                }
                (Some(ChangeKind::Modified), None) => {
                    return Err(MineError::Repo(format!(
                        "root commit {} reports {path} as modified",
                        cur.id
                    )))
                }
                (Some(ChangeKind::Modified), Some(p)) => {
                    let d = self.diff(cur, p, path)?;
                    let Some(k) = d.post.kept_index(line) else {
                        return Ok(Origin::Unknown);
                    };
                    if d.hunks.iter().any(|h| h.added.contains(&k)) {
                        return Ok(Origin::Known {
                            commit: cur.id.clone(),
                            year: cur.year()?,
                        });
                    }
                    let back = map_back(&d.hunks, k).expect("unchanged line maps back");
                    line = d.pre.kept[back];
                    cur = self.record(p)?;
                }
            }
        }
    }
}

/// Origin of raw line `deleted_line_index` in the first parent of `commit_post`.
pub fn blame_origin<R: Repository + ?Sized>(
    repo: &R,
    commit_post: &str,
    file_path: &str,
    deleted_line_index: usize,
) -> Result<Origin, MineError> {
    let commits = ordered_commits(repo)?;
    let blamer = Blamer::new(repo, &commits)?;
    let post = blamer.record(commit_post)?;
    let Some(parent) = post.first_parent() else {
        return Err(MineError::Repo(format!("{commit_post} has no parent")));
    };
    let parent = parent.to_string();
    blamer.origin(&parent, file_path, deleted_line_index)
}
