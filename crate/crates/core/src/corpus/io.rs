//! Corpus files: `{train,test}.src`, `.tgt` and `.meta.tsv`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Category, Corpus, CorpusError, StatementPair};
use crate::statement::{from_corpus_line, TokenizedStatement};

const TRAIN_HEADER: &str = "pair_id\tcommit_pre_origin\tcommit_post\tyear_pre\tyear_post\tbugfix";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainMeta {
    pub pair_id: usize,
    pub commit_pre_origin: String,
    pub commit_post: String,
    pub year_pre: i32,
    pub year_post: i32,
    pub bugfix: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainFiles {
    pub src: Vec<TokenizedStatement>,
    pub tgt: Vec<TokenizedStatement>,
    pub meta: Vec<TrainMeta>,
}

/// One test pair as stored on disk: concrete query and reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestRecord {
    pub query: TokenizedStatement,
    pub reference: TokenizedStatement,
    pub meta: TrainMeta,
    pub category: Category,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CorpusError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(content.as_bytes()).map_err(io_err(path))
}

fn meta_line(i: usize, p: &StatementPair) -> String {
    format!(
        "{i}\t{}\t{}\t{}\t{}\t{}",
        p.commit_pre_origin,
        p.commit_post,
        p.year_pre,
        p.year_post,
        u8::from(p.bugfix)
    )
}

fn lines<'a, I: Iterator<Item = &'a TokenizedStatement>>(it: I) -> String {
    let mut s = String::new();
    for t in it {
        s.push_str(&t.joined());
        s.push('\n');
    }
    s
}

pub fn write_train(dir: &Path, corpus: &Corpus) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(&dir.join("train.src"), &lines(corpus.pairs.iter().map(|p| &p.pre)))?;
    write_file(&dir.join("train.tgt"), &lines(corpus.pairs.iter().map(|p| &p.post)))?;
    write_file(&dir.join("train.concrete.src"), &lines(corpus.pairs.iter().map(|p| &p.pre_concrete)))?;
    write_file(&dir.join("train.concrete.tgt"), &lines(corpus.pairs.iter().map(|p| &p.post_concrete)))?;
    let mut meta = format!("{TRAIN_HEADER}\n");
    for (i, p) in corpus.pairs.iter().enumerate() {
        meta.push_str(&meta_line(i, p));
        meta.push('\n');
    }
    write_file(&dir.join("train.meta.tsv"), &meta)
}

pub fn write_test(dir: &Path, pairs: &[StatementPair]) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(&dir.join("test.src"), &lines(pairs.iter().map(|p| &p.pre_concrete)))?;
    write_file(&dir.join("test.tgt"), &lines(pairs.iter().map(|p| &p.post_concrete)))?;
    let mut meta = format!("{TRAIN_HEADER}\tcategory\n");
    for (i, p) in pairs.iter().enumerate() {
        meta.push_str(&meta_line(i, p));
        meta.push('\t');
        meta.push_str(&p.category.to_string());
        meta.push('\n');
    }
    write_file(&dir.join("test.meta.tsv"), &meta)
}

fn read_lines(path: &Path) -> Result<Vec<TokenizedStatement>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.lines().map(from_corpus_line).collect())
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Format {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_meta(path: &Path, extra_columns: usize) -> Result<Vec<(TrainMeta, Vec<String>)>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 + extra_columns {
            return Err(format_err(path, n + 1, format!("expected {} columns", 6 + extra_columns)));
        }
        let num = |s: &str| -> Result<i64, CorpusError> {
            s.parse().map_err(|_| format_err(path, n + 1, format!("bad number {s:?}")))
        };
        out.push((
            TrainMeta {
                pair_id: num(f[0])? as usize,
                commit_pre_origin: f[1].to_string(),
                commit_post: f[2].to_string(),
                year_pre: num(f[3])? as i32,
                year_post: num(f[4])? as i32,
                bugfix: match f[5] {
                    "0" => false,
                    "1" => true,
                    other => return Err(format_err(path, n + 1, format!("bad bugfix flag {other:?}"))),
                },
            },
            f[6..].iter().map(|s| s.to_string()).collect(),
        ));
    }
    Ok(out)
}

fn check_aligned(dir: &Path, a: usize, b: usize, c: usize) -> Result<(), CorpusError> {
    if a != b || a != c {
        return Err(format_err(
            dir,
            0,
            format!("src/tgt/meta line counts differ ({a}/{b}/{c})"),
        ));
    }
    Ok(())
}

pub fn read_train(dir: &Path) -> Result<TrainFiles, CorpusError> {
    let src = read_lines(&dir.join("train.src"))?;
    let tgt = read_lines(&dir.join("train.tgt"))?;
    let meta: Vec<TrainMeta> = read_meta(&dir.join("train.meta.tsv"), 0)?
        .into_iter()
        .map(|(m, _)| m)
        .collect();
    check_aligned(dir, src.len(), tgt.len(), meta.len())?;
    Ok(TrainFiles { src, tgt, meta })
}

/// Concrete (pre, post) training statements, in `train.src` order.
pub fn read_train_concrete(dir: &Path) -> Result<Vec<(TokenizedStatement, TokenizedStatement)>, CorpusError> {
    let src = read_lines(&dir.join("train.concrete.src"))?;
    let tgt = read_lines(&dir.join("train.concrete.tgt"))?;
    check_aligned(dir, src.len(), tgt.len(), src.len())?;
    Ok(src.into_iter().zip(tgt).collect())
}

pub fn read_test(dir: &Path) -> Result<Vec<TestRecord>, CorpusError> {
    let src = read_lines(&dir.join("test.src"))?;
    let tgt = read_lines(&dir.join("test.tgt"))?;
    let path = dir.join("test.meta.tsv");
    let meta = read_meta(&path, 1)?;
    check_aligned(dir, src.len(), tgt.len(), meta.len())?;
    src.into_iter()
        .zip(tgt)
        .zip(meta)
        .enumerate()
        .map(|(i, ((query, reference), (meta, extra)))| {
            let category = extra[0].parse().map_err(|e: String| format_err(&path, i + 2, e))?;
            Ok(TestRecord {
                query,
                reference,
                meta,
                category,
            })
        })
        .collect()
}
