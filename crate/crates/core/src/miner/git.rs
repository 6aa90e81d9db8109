//! Repository adapter that shells out to the `git` executable.

use std::path::{Path, PathBuf};
use std::process::Command;

use super::{ChangeKind, CommitRecord, FileChange, MineError, Repository};

/// Read-only view of a git working copy or bare repository.
///
/// Each query spawns its own `git` process, so concurrent reads are safe.
#[derive(Debug, Clone)]
pub struct GitRepo {
    path: PathBuf,
}

impl GitRepo {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, MineError> {
        let repo = Self {
            path: path.as_ref().to_path_buf(),
        };
        repo.run(&["rev-parse", "--git-dir"])?;
        Ok(repo)
    }

    fn output(&self, args: &[&str]) -> Result<std::process::Output, MineError> {
        Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(["-c", "core.quotepath=off"])
            .args(args)
            .output()
            .map_err(|e| MineError::Repo(format!("cannot run git: {e}")))
    }

    fn run(&self, args: &[&str]) -> Result<Vec<u8>, MineError> {
        let out = self.output(args)?;
        if !out.status.success() {
            return Err(MineError::Repo(format!(
                "git {} failed in {}: {}",
                args.join(" "),
                self.path.display(),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(out.stdout)
    }
}

impl Repository for GitRepo {
    fn commits(&self) -> Result<Vec<CommitRecord>, MineError> {
        let raw = self.run(&["log", "HEAD", "--format=%H%x1f%at%x1f%P%x1f%B%x1e"])?;
        let text = String::from_utf8_lossy(&raw);
        let mut out = Vec::new();
        for rec in text.split('\x1e') {
            let rec = rec.trim_start_matches('\n');
            if rec.is_empty() {
                continue;
            }
            let fields: Vec<&str> = rec.splitn(4, '\x1f').collect();
            if fields.len() != 4 {
                return Err(MineError::Repo(format!("malformed log record {rec:?}")));
            }
            let author_time = fields[1]
                .parse()
                .map_err(|_| MineError::Repo(format!("bad timestamp {:?}", fields[1])))?;
            out.push(CommitRecord {
                id: fields[0].to_string(),
                author_time,
                message: fields[3].trim_end().to_string(),
                parent_ids: fields[2].split_whitespace().map(String::from).collect(),
            });
        }
        Ok(out)
    }

    fn changed_files(&self, commit: &CommitRecord) -> Result<Vec<FileChange>, MineError> {
        let mut args = vec!["diff-tree", "-r", "-z", "-M", "--no-commit-id", "--name-status"];
        match commit.first_parent() {
            Some(p) => {
                args.push(p);
                args.push(&commit.id);
            }
            None => {
                args.push("--root");
                args.push(&commit.id);
            }
        }
        let raw = self.run(&args)?;
        let text = String::from_utf8_lossy(&raw);
        let mut fields = text.split('\0').filter(|s| !s.is_empty());
        let mut out = Vec::new();
        while let Some(status) = fields.next() {
            let mut next = || {
                fields
                    .next()
                    .map(String::from)
                    .ok_or_else(|| MineError::Repo("truncated diff-tree output".into()))
            };
            let change = match status.as_bytes()[0] {
                b'A' | b'C' => {
                    if status.starts_with('C') {
                        next()?;
                    }
                    FileChange {
                        path: next()?,
                        kind: ChangeKind::Added,
                    }
                }
                b'D' => FileChange {
                    path: next()?,
                    kind: ChangeKind::Deleted,
                },
                b'R' => {
                    let from = next()?;
                    FileChange {
                        path: next()?,
                        kind: ChangeKind::Renamed { from },
                    }
                }
                _ => FileChange {
                    path: next()?,
                    kind: ChangeKind::Modified,
                },
            };
            out.push(change);
        }
        out.sort();
        Ok(out)
    }

    fn file_at(&self, commit: &str, path: &str) -> Result<Option<String>, MineError> {
        let spec = format!("{commit}:{path}");
        let out = self.output(&["cat-file", "blob", &spec])?;
        if !out.status.success() {
            return Ok(None);
        }
        Ok(Some(String::from_utf8_lossy(&out.stdout).into_owned()))
    }
}
