//! In-memory repository built from full per-commit snapshots.

use std::collections::{BTreeMap, HashMap};

use super::{ChangeKind, CommitRecord, FileChange, MineError, Repository};

#[derive(Debug, Clone)]
pub struct MemoryCommit {
    pub record: CommitRecord,
    /// Complete tree at this commit.
    pub files: BTreeMap<String, String>,
    /// (from, to) pairs recorded as renames relative to the first parent.
    pub renames: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default)]
pub struct MemoryRepo {
    commits: Vec<MemoryCommit>,
    index: HashMap<String, usize>,
}

impl MemoryRepo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, commit: MemoryCommit) {
        self.index.insert(commit.record.id.clone(), self.commits.len());
        self.commits.push(commit);
    }

    /// Append a commit on top of `parent` (or a root commit) with the given
    /// tree, returning its id.
    pub fn commit(
        &mut self,
        id: &str,
        parent: Option<&str>,
        author_time: i64,
        message: &str,
        files: BTreeMap<String, String>,
    ) -> String {
        self.push(MemoryCommit {
            record: CommitRecord {
                id: id.to_string(),
                author_time,
                message: message.to_string(),
                parent_ids: parent.into_iter().map(String::from).collect(),
            },
            files,
            renames: Vec::new(),
        });
        id.to_string()
    }

    pub fn tree(&self, id: &str) -> Option<&BTreeMap<String, String>> {
        self.index.get(id).map(|&i| &self.commits[i].files)
    }

    fn get(&self, id: &str) -> Result<&MemoryCommit, MineError> {
        self.index
            .get(id)
            .map(|&i| &self.commits[i])
            .ok_or_else(|| MineError::UnknownCommit(id.to_string()))
    }
}

impl Repository for MemoryRepo {
    fn commits(&self) -> Result<Vec<CommitRecord>, MineError> {
        Ok(self.commits.iter().map(|c| c.record.clone()).collect())
    }

    fn changed_files(&self, commit: &CommitRecord) -> Result<Vec<FileChange>, MineError> {
        let cur = self.get(&commit.id)?;
        let empty = BTreeMap::new();
        let parent = match commit.first_parent() {
            Some(p) => &self.get(p)?.files,
            None => &empty,
        };
        let rename_from: HashMap<&str, &str> = cur
            .renames
            .iter()
            .map(|(f, t)| (t.as_str(), f.as_str()))
            .collect();
        let rename_sources: Vec<&str> = cur.renames.iter().map(|(f, _)| f.as_str()).collect();
        let mut out = Vec::new();
        for (path, text) in &cur.files {
            let kind = match (parent.get(path), rename_from.get(path.as_str())) {
                (_, Some(from)) => ChangeKind::Renamed {
                    from: from.to_string(),
                },
                (None, None) => ChangeKind::Added,
                (Some(old), None) if old != text => ChangeKind::Modified,
                _ => continue,
            };
            out.push(FileChange {
                path: path.clone(),
                kind,
            });
        }
        for path in parent.keys() {
            if !cur.files.contains_key(path) && !rename_sources.contains(&path.as_str()) {
                out.push(FileChange {
                    path: path.clone(),
                    kind: ChangeKind::Deleted,
                });
            }
        }
        out.sort();
        Ok(out)
    }

    fn file_at(&self, commit: &str, path: &str) -> Result<Option<String>, MineError> {
        Ok(self.get(commit)?.files.get(path).cloned())
    }
}
