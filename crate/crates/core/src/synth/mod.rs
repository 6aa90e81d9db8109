//! Seeded synthetic data: a rewrite-rule statement corpus and a small Java
//! repository history whose edits follow the same rules.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::process::Command;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{prepare, TrainFiles, TrainMeta};
use crate::miner::{MemoryRepo, MineError, Repository};
use crate::statement::{tokenize, TokenizedStatement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// `this . f` becomes `f`.
    ThisRemoval,
    /// An integer literal index `[ n ]` becomes `[ n+1 ]`.
    ConstantIncrement,
    /// `new H ( )` on a parameterized declaration becomes `new H < > ( )`.
    Diamond,
    /// A raw `List`/`Class`/... declaration gains `< ? >`.
    Wildcard,
    /// `. size ( ) == 0` becomes `. isEmpty ( )`.
    IsEmpty,
}

impl Rule {
    pub const ALL: [Rule; 5] = [
        Rule::ThisRemoval,
        Rule::ConstantIncrement,
        Rule::Diamond,
        Rule::Wildcard,
        Rule::IsEmpty,
    ];
}

const FIELDS: &[&str] = &[
    "height", "width", "name", "count", "total", "index", "offset", "length", "label", "title", "owner",
    "parent", "child", "buffer", "cache", "status", "level", "limit", "timeout", "port", "host", "path",
    "prefix", "suffix", "source", "target", "result", "config", "context", "handler", "listener",
    "manager", "factory", "builder", "reader", "writer", "stream", "session", "request", "response",
];
const LOCALS: &[&str] = &[
    "item", "entry", "node", "elem", "key", "data", "info", "items", "nodes", "values", "names", "keys",
    "parts", "tokens", "rows", "cols", "out", "res", "tmp", "ret", "found", "first", "last", "next",
    "prev", "current", "copy", "local", "temp", "state",
];
const METHODS: &[&str] = &[
    "get", "put", "add", "remove", "build", "create", "open", "close", "read", "write", "load", "save",
    "start", "stop", "reset", "clear", "update", "compute", "resolve", "parse", "format", "apply",
    "handle", "process", "flush", "merge", "lookup", "find", "select", "convert",
];
const TYPES: &[&str] = &["String", "int", "long", "Object", "Integer", "Long", "Node", "Entry", "Config", "Path"];
const ELEMENT_TYPES: &[&str] = &["String", "Integer", "Long", "Node", "Entry", "Path", "Object"];
const CONTAINERS: &[(&str, &str)] = &[
    ("List", "ArrayList"),
    ("List", "LinkedList"),
    ("Set", "HashSet"),
    ("Set", "TreeSet"),
    ("Collection", "ArrayList"),
    ("Queue", "LinkedList"),
    ("Deque", "ArrayDeque"),
];
const RAW_TYPES: &[&str] = &["List", "Class", "Collection", "Iterator", "Set"];
const ARGUMENTS: &[&str] = &["x", "y", "x , y", "\"text\"", "1", "id , 0", "this", "type", "null", "key , value"];
const MAX_INDEX: usize = 20;

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

/// A rule-applicable statement drawn from the templates of `rule`.
pub fn rule_statement<R: Rng>(rule: Rule, rng: &mut R) -> String {
    let f = pick(rng, FIELDS);
    let v = pick(rng, LOCALS);
    let m = pick(rng, METHODS);
    let t = pick(rng, TYPES);
    let a = pick(rng, ARGUMENTS);
    match rule {
        Rule::ThisRemoval => match rng.gen_range(0..4) {
            0 => format!("return this . {f} ;"),
            1 => format!("{v} = this . {f} ;"),
            2 => format!("this . {f} . {m} ( {a} ) ;"),
            _ => format!("{t} {v} = this . {f} . {m} ( ) ;"),
        },
        Rule::ConstantIncrement => {
            let n = rng.gen_range(0..MAX_INDEX);
            match rng.gen_range(0..3) {
                0 => format!("{v} [ {n} ] = {f} . {m} ( ) ;"),
                1 => format!("return {v} [ {n} ] ;"),
                _ => format!("{t} {v} = {f} [ {n} ] ;"),
            }
        }
        Rule::Diamond => {
            let (iface, class) = CONTAINERS[rng.gen_range(0..CONTAINERS.len())];
            let e = pick(rng, ELEMENT_TYPES);
            if rng.gen_bool(0.2) {
                let e2 = pick(rng, ELEMENT_TYPES);
                format!("Map < {e} , {e2} > {v} = new HashMap ( ) ;")
            } else {
                format!("{iface} < {e} > {v} = new {class} ( ) ;")
            }
        }
        Rule::Wildcard => {
            let raw = pick(rng, RAW_TYPES);
            match rng.gen_range(0..3) {
                0 => format!("{raw} {v} = {m} ( {a} ) ;"),
                1 => format!("{raw} {v} = {f} . {m} ( ) ;"),
                _ => format!("{raw} {v} = {f} ;"),
            }
        }
        Rule::IsEmpty => match rng.gen_range(0..3) {
            0 => format!("return {v} . size ( ) == 0 ;"),
            1 => format!("boolean {v} = {f} . size ( ) == 0 ;"),
            _ => format!("{v} = {f} . {m} ( ) . size ( ) == 0 ;"),
        },
    }
}

fn is_int(tok: &str) -> bool {
    !tok.is_empty() && tok.bytes().all(|b| b.is_ascii_digit())
}

/// Apply `rule` at its first site, or `None` when it does not apply.
pub fn apply_rule(rule: Rule, tokens: &[String]) -> Option<Vec<String>> {
    let mut t = tokens.to_vec();
    let at = |t: &[String], i: usize, s: &str| t.get(i).is_some_and(|x| x == s);
    match rule {
        Rule::ThisRemoval => {
            let i = (0..t.len()).find(|&i| at(&t, i, "this") && at(&t, i + 1, "."))?;
            t.drain(i..i + 2);
        }
        Rule::ConstantIncrement => {
            let i = (1..t.len()).find(|&i| at(&t, i - 1, "[") && is_int(&t[i]) && at(&t, i + 1, "]"))?;
            t[i] = (t[i].parse::<u64>().ok()? + 1).to_string();
        }
        Rule::Diamond => {
            let eq = t.iter().position(|x| x == "=")?;
            if !t[..eq].iter().any(|x| x == "<") {
                return None;
            }
            let i = (eq..t.len()).find(|&i| at(&t, i, "new") && at(&t, i + 2, "("))?;
            t.splice(i + 2..i + 2, ["<".to_string(), ">".to_string()]);
        }
        Rule::Wildcard => {
            if !RAW_TYPES.contains(&t.first()?.as_str()) || at(&t, 1, "<") {
                return None;
            }
            t.splice(1..1, ["<", "?", ">"].map(String::from));
        }
        Rule::IsEmpty => {
            let i = (0..t.len()).find(|&i| {
                ["size", "(", ")", "==", "0"]
                    .iter()
                    .enumerate()
                    .all(|(k, s)| at(&t, i + k, s))
            })?;
            t.splice(i..i + 5, ["isEmpty", "(", ")"].map(String::from));
        }
    }
    Some(t)
}

/// Rules that change `tokens`.
pub fn applicable_rules(tokens: &[String]) -> Vec<Rule> {
    Rule::ALL.into_iter().filter(|&r| apply_rule(r, tokens).is_some()).collect()
}

/// A concrete statement pair. `rule` is `None` for distractors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthPair {
    pub pre: TokenizedStatement,
    pub post: TokenizedStatement,
    pub rule: Option<Rule>,
}

fn tok(s: &str) -> TokenizedStatement {
    tokenize(s).expect("synthetic statements tokenize")
}

/// An edit no rule explains: a call is renamed to another random method.
fn distractor<R: Rng>(rng: &mut R) -> SynthPair {
    loop {
        let v = pick(rng, LOCALS);
        let f = pick(rng, FIELDS);
        let m1 = pick(rng, METHODS);
        let m2 = pick(rng, METHODS);
        let a = pick(rng, ARGUMENTS);
        if m1 == m2 {
            continue;
        }
        let (pre, post) = if rng.gen_bool(0.5) {
            (format!("{v} . {m1} ( {a} ) ;"), format!("{v} . {m2} ( {a} ) ;"))
        } else {
            (format!("{v} = {f} . {m1} ( ) ;"), format!("{v} = {f} . {m2} ( ) ;"))
        };
        return SynthPair {
            pre: tok(&pre),
            post: tok(&post),
            rule: None,
        };
    }
}

fn rule_pair<R: Rng>(rng: &mut R) -> SynthPair {
    let rule = Rule::ALL[rng.gen_range(0..Rule::ALL.len())];
    let pre = tok(&rule_statement(rule, rng));
    let post = apply_rule(rule, &pre.tokens).expect("templates satisfy their rule");
    SynthPair {
        post: TokenizedStatement::from_tokens(&post),
        pre,
        rule: Some(rule),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkOptions {
    pub train_pairs: usize,
    pub distractor_fraction: f64,
    pub held_out: usize,
    pub queries: usize,
    /// Share of queries that are rule-applicable and absent from training.
    pub novel_fraction: f64,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            train_pairs: 2000,
            distractor_fraction: 0.1,
            held_out: 200,
            queries: 200,
            novel_fraction: 0.4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthQuery {
    pub pair: SynthPair,
    pub novel: bool,
}

#[derive(Debug, Clone)]
pub struct RewriteBenchmark {
    pub train: Vec<SynthPair>,
    /// Rule pairs whose pre-statement (abstracted) is absent from training.
    pub held_out: Vec<SynthPair>,
    pub queries: Vec<SynthQuery>,
}

fn abstracted(s: &TokenizedStatement) -> Vec<String> {
    prepare(&s.joined()).expect("synthetic statements are valid").abstracted.tokens
}

/// Training pairs, a held-out rule set, and a query set mixing training
/// pre-statements with novel rule-applicable ones. Pre-statements are
/// unique after abstraction across the whole benchmark.
pub fn rewrite_benchmark(seed: u64, opts: &BenchmarkOptions) -> RewriteBenchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut fresh = |rng: &mut ChaCha8Rng, distract: bool| loop {
        let p = if distract { distractor(rng) } else { rule_pair(rng) };
        if seen.insert(abstracted(&p.pre)) {
            return p;
        }
    };
    let n_distract = (opts.train_pairs as f64 * opts.distractor_fraction).round() as usize;
    let mut train: Vec<SynthPair> = (0..opts.train_pairs)
        .map(|i| fresh(&mut rng, i < n_distract))
        .collect();
    train.shuffle(&mut rng);
    let held_out = (0..opts.held_out).map(|_| fresh(&mut rng, false)).collect();
    let n_novel = (opts.queries as f64 * opts.novel_fraction).round() as usize;
    let mut queries: Vec<SynthQuery> = train
        .choose_multiple(&mut rng, opts.queries - n_novel)
        .map(|p| SynthQuery {
            pair: p.clone(),
            novel: false,
        })
        .collect();
    queries.extend((0..n_novel).map(|_| SynthQuery {
        pair: fresh(&mut rng, false),
        novel: true,
    }));
    queries.shuffle(&mut rng);
    RewriteBenchmark {
        train,
        held_out,
        queries,
    }
}

/// Abstracted training files for `pairs`, years spread evenly over
/// `first_year..=last_year` in order.
pub fn train_files(pairs: &[SynthPair], first_year: i32, last_year: i32) -> TrainFiles {
    let span = (last_year - first_year + 1) as usize;
    let mut files = TrainFiles {
        src: Vec::new(),
        tgt: Vec::new(),
        meta: Vec::new(),
    };
    for (i, p) in pairs.iter().enumerate() {
        let year = first_year + (i * span / pairs.len().max(1)) as i32;
        files.src.push(TokenizedStatement::from_tokens(&abstracted(&p.pre)));
        files.tgt.push(TokenizedStatement::from_tokens(&abstracted(&p.post)));
        files.meta.push(TrainMeta {
            pair_id: i,
            commit_pre_origin: String::new(),
            commit_post: String::new(),
            year_pre: year,
            year_post: year,
            bugfix: false,
        });
    }
    files
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepoOptions {
    pub files: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// Commits per year.
    pub commits_per_year: usize,
    /// Statements introduced per new method.
    pub statements_per_method: usize,
}

impl Default for RepoOptions {
    fn default() -> Self {
        Self {
            files: 6,
            first_year: 2011,
            last_year: 2015,
            commits_per_year: 60,
            statements_per_method: 3,
        }
    }
}

#[derive(Debug, Clone)]
struct Method {
    name: String,
    body: Vec<String>,
}

#[derive(Debug, Clone)]
struct Class {
    name: String,
    methods: Vec<Method>,
}

impl Class {
    fn render(&self) -> String {
        let mut s = format!("package synth;\n\npublic class {} {{\n", self.name);
        for (i, m) in self.methods.iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            s.push_str(&format!("    public void {}() {{\n", m.name));
            for line in &m.body {
                s.push_str("        ");
                s.push_str(line);
                s.push('\n');
            }
            s.push_str("    }\n");
        }
        s.push_str("}\n");
        s
    }
}

fn year_start(year: i32) -> i64 {
    chrono::NaiveDate::from_ymd_opt(year, 1, 1)
        .expect("valid year")
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc()
        .timestamp()
}

fn new_method<R: Rng>(rng: &mut R, serial: usize, statements: usize) -> Method {
    let mut body: Vec<String> = (0..statements)
        .map(|_| {
            if rng.gen_bool(0.15) {
                distractor(rng).pre.joined()
            } else {
                let rule = Rule::ALL[rng.gen_range(0..Rule::ALL.len())];
                rule_statement(rule, rng)
            }
        })
        .collect();
    body.push("log ( ) ;".to_string());
    Method {
        name: format!("m{serial}"),
        body,
    }
}

/// A repository whose commits add methods and then fix their statements
/// with the rewrite rules (or an occasional unexplained rename). Commit
/// messages of rule fixes mention fixing, so some pairs link as bug fixes.
pub fn synthetic_repository(seed: u64, opts: &RepoOptions) -> MemoryRepo {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<Class> = (0..opts.files)
        .map(|i| Class {
            name: format!("Component{i}"),
            methods: Vec::new(),
        })
        .collect();
    let mut serial = 0;
    let mut repo = MemoryRepo::new();
    let mut parent: Option<String> = None;
    let mut n = 0;
    let snapshot = |classes: &[Class]| -> BTreeMap<String, String> {
        classes
            .iter()
            .map(|c| (format!("src/synth/{}.java", c.name), c.render()))
            .collect()
    };
    for year in opts.first_year..=opts.last_year {
        let start = year_start(year);
        let span = year_start(year + 1) - start;
        for k in 0..opts.commits_per_year {
            let time = start + (k as i64 * span) / opts.commits_per_year as i64 + 3600;
            let c = rng.gen_range(0..classes.len());
            // early in a year mostly add code, later mostly fix it
            let add = classes[c].methods.is_empty() || rng.gen_bool(if k < opts.commits_per_year / 3 { 0.7 } else { 0.25 });
            let message = if add {
                let m = new_method(&mut rng, serial, opts.statements_per_method);
                serial += 1;
                let msg = format!("Add {} to {}", m.name, classes[c].name);
                classes[c].methods.push(m);
                msg
            } else {
                let sites: Vec<(usize, usize)> = classes[c]
                    .methods
                    .iter()
                    .enumerate()
                    .flat_map(|(mi, m)| (0..m.body.len()).map(move |li| (mi, li)))
                    .filter(|&(mi, li)| {
                        let line = &classes[c].methods[mi].body[li];
                        !applicable_rules(&tok(line).tokens).is_empty()
                    })
                    .collect();
                if sites.is_empty() {
                    let m = new_method(&mut rng, serial, opts.statements_per_method);
                    serial += 1;
                    let msg = format!("Add {} to {}", m.name, classes[c].name);
                    classes[c].methods.push(m);
                    msg
                } else {
                    let (mi, li) = sites[rng.gen_range(0..sites.len())];
                    let line = tok(&classes[c].methods[mi].body[li]);
                    let rule = applicable_rules(&line.tokens)[0];
                    let post = apply_rule(rule, &line.tokens).unwrap();
                    classes[c].methods[mi].body[li] = post.join(" ");
                    if rng.gen_bool(0.5) {
                        format!("Fix {rule:?} issue in {}", classes[c].methods[mi].name)
                    } else {
                        format!("Tidy {}", classes[c].methods[mi].name)
                    }
                }
            };
            let id = format!("c{n:05}");
            n += 1;
            repo.commit(&id, parent.as_deref(), time, &message, snapshot(&classes));
            parent = Some(id);
        }
    }
    repo
}

/// Replay `repo` (linear history) into a fresh git repository at `dir`.
pub fn write_git_repository(repo: &MemoryRepo, dir: &Path) -> Result<(), MineError> {
    let git = |args: &[&str], time: i64| -> Result<(), MineError> {
        let date = format!("@{time} +0000");
        let out = Command::new("git")
            .current_dir(dir)
            .args(["-c", "user.name=synth", "-c", "user.email=synth@example.com", "-c", "commit.gpgsign=false"])
            .args(args)
            .env("GIT_AUTHOR_DATE", &date)
            .env("GIT_COMMITTER_DATE", &date)
            .output()
            .map_err(|e| MineError::Repo(format!("cannot run git: {e}")))?;
        if !out.status.success() {
            return Err(MineError::Repo(format!(
                "git {} failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(())
    };
    std::fs::create_dir_all(dir)?;
    git(&["init", "-q"], 0)?;
    let mut previous: BTreeMap<String, String> = BTreeMap::new();
    for c in repo.commits()? {
        let files = repo.tree(&c.id).ok_or_else(|| MineError::UnknownCommit(c.id.clone()))?.clone();
        for p in previous.keys().filter(|p| !files.contains_key(*p)) {
            std::fs::remove_file(dir.join(p))?;
        }
        for (p, text) in &files {
            let path = dir.join(p);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, text)?;
        }
        git(&["add", "-A"], c.author_time)?;
        git(&["commit", "-q", "--allow-empty", "-m", &c.message], c.author_time)?;
        previous = files;
    }
    Ok(())
}
