use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use patchloom::config::{parse_config, ConfigError, RunConfig};
use patchloom::corpus::Category;
use patchloom::eval::BugfixFilter;
use patchloom::miner::{GitRepo, MineOptions};
use patchloom::pipeline::{self, read_fixlinks, read_hunks, run_all, Layout};
use patchloom::synth::{synthetic_repository, write_git_repository, RepoOptions};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_patchloom"));
    c.env_remove("PATCHLOOM_SEED").env("RUST_LOG", "warn");
    c
}

#[test]
fn config_values_and_defaults() {
    let cfg = parse_config("threshold=-0.7\n").unwrap();
    assert_eq!(cfg.threshold, -0.7);
    assert_eq!(parse_config("").unwrap(), RunConfig::default());
    let cfg = parse_config("# comment\n\nseed = 9  # trailing\nhidden=64\ncategory=all\nbugfix=bugfix\npatience=3\n").unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.training().seed, 9);
    assert_eq!(cfg.train.hidden, 64);
    assert_eq!(cfg.filter.category, None);
    assert_eq!(cfg.filter.bugfix, BugfixFilter::BugfixOnly);
    assert_eq!(cfg.train.patience, Some(3));
    assert_eq!(parse_config("category=UQ").unwrap().filter.category, Some(Category::UQ));
}

#[test]
fn config_errors_name_the_line() {
    match parse_config("seed=1\nthresold=-0.7\n") {
        Err(ConfigError::UnknownKey { line: 2, key }) => assert_eq!(key, "thresold"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_config("seed\n"), Err(ConfigError::Malformed { line: 1, .. })));
    assert!(matches!(parse_config("a=1\n").unwrap_err(), ConfigError::UnknownKey { .. }));
    let e = parse_config("\nhidden=wide\n").unwrap_err();
    assert!(matches!(e, ConfigError::BadValue { line: 2, .. }), "{e}");
    assert!(e.to_string().contains("line 2"));
}

#[test]
fn seed_precedence() {
    let mut cfg = parse_config("seed=4\n").unwrap();
    cfg.set("seed", "5").unwrap();
    assert_eq!(cfg.seed, 5);
    cfg.apply_seed_env(Some("6")).unwrap();
    assert_eq!(cfg.seed, 6);
    cfg.apply_seed_env(None).unwrap();
    assert_eq!(cfg.seed, 6);
    assert!(cfg.apply_seed_env(Some("six")).is_err());
}

#[test]
fn selftest_succeeds() {
    let out = bin().arg("selftest").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{text}");
}

#[test]
fn evaluate_reprints_table_five() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/table5.csv");
    let out = bin().arg("evaluate").arg("--counts").arg(&fixture).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let jetty = text.lines().find(|l| l.starts_with("jetty") && l.contains("model")).unwrap();
    let cells: Vec<&str> = jetty.split_whitespace().collect();
    assert_eq!(&cells[cells.len() - 3..], ["0.83", "0.68", "0.75"]);
}

#[test]
fn exit_codes() {
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "thresold=-0.7\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("thresold"));

    let missing = dir.path().join("absent.plm");
    let out = bin()
        .args(["generate", "--query-file", "q.src", "--model"])
        .arg(&missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.plm"));

    let out = bin().env("PATCHLOOM_SEED", "x").arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn small_run(dir: &Path) -> RunConfig {
    let mut cfg = parse_config("hidden=32\nembed=16\nmax_epochs=3\ndropout=0.1\nlearning_rate=0.005\nminibatch_words=256\nbeam_size=4\n").unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn file_map(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn full_pipeline_is_reproducible() {
    let repo = synthetic_repository(1, &RepoOptions::default());
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let summary = run_all(&repo, &small_run(a.path())).unwrap();
    run_all(&repo, &small_run(b.path())).unwrap();
    let (fa, fb) = (file_map(a.path()), file_map(b.path()));
    let names: Vec<&str> = fa.keys().map(String::as_str).collect();
    for f in [
        "hunks.jsonl",
        "fixlinks.tsv",
        "mining_report.json",
        "corpus/train.src",
        "corpus/test.meta.tsv",
        "corpus/corpus_report.json",
        "model.plm",
        "model.history.json",
        "patches.jsonl",
        "baseline.jsonl",
        "eval.csv",
        "eval.json",
        "sweep.csv",
    ] {
        assert!(names.contains(&f), "{f} missing from {names:?}");
    }
    assert_eq!(fa, fb);
    assert!(summary.table.contains("NU/all"));

    let layout = Layout::new(a.path());
    let hunks = read_hunks(&layout.hunks).unwrap();
    assert_eq!(pipeline::hunks_to_jsonl(&hunks).as_bytes(), &fa["hunks.jsonl"][..]);
    assert!(!read_fixlinks(&a.path().join("fixlinks.tsv")).unwrap().is_empty());
    let patches = pipeline::read_patches(&layout.patches).unwrap();
    let tests = std::fs::read_to_string(layout.corpus.join("test.src")).unwrap();
    assert_eq!(patches.len(), tests.lines().count());
    let sweep = std::fs::read_to_string(&layout.sweep).unwrap();
    assert_eq!(sweep.lines().count(), 13);
}

#[test]
fn git_and_memory_repositories_mine_alike() {
    let repo = synthetic_repository(2, &RepoOptions {
        commits_per_year: 12,
        ..RepoOptions::default()
    });
    let dir = tempfile::tempdir().unwrap();
    let git_dir = dir.path().join("repo");
    write_git_repository(&repo, &git_dir).unwrap();

    let mem_out = dir.path().join("mem/hunks.jsonl");
    let git_out = dir.path().join("git/hunks.jsonl");
    let m = pipeline::mine_stage(&repo, MineOptions::default(), &mem_out).unwrap();
    let g = pipeline::mine_stage(&GitRepo::open(&git_dir).unwrap(), MineOptions::default(), &git_out).unwrap();
    assert_eq!(m, g);
    let strip = |p: &Path| -> Vec<_> {
        read_hunks(p)
            .unwrap()
            .into_iter()
            .map(|h| (h.deleted_lines, h.added_lines, h.file_path, h.year_pre, h.year_post, h.method_scoped))
            .collect()
    };
    assert_eq!(strip(&mem_out), strip(&git_out));
    assert_eq!(
        read_fixlinks(&mem_out.with_file_name("fixlinks.tsv")).unwrap().len(),
        read_fixlinks(&git_out.with_file_name("fixlinks.tsv")).unwrap().len()
    );
}

#[test]
fn stages_chain_through_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let out = bin().current_dir(d).args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    ok(&["synth-repo", "--out", "repo"]);
    ok(&["mine", "--repo", "repo", "--out", "hunks.jsonl"]);
    ok(&["build-corpus", "--hunks", "hunks.jsonl", "--out", "corpus", "--test-year", "2015"]);
    ok(&["train", "--corpus", "corpus", "--out", "model.plm", "--hidden", "16", "--embed", "8", "--epochs", "2"]);
    ok(&["generate", "--model", "model.plm", "--query-file", "corpus/test.src", "--out", "patches.jsonl", "--threshold", "-0.7"]);
    ok(&["baseline", "--corpus", "corpus", "--query-file", "corpus/test.src", "--out", "baseline.jsonl"]);
    let table = ok(&[
        "evaluate", "--patches", "patches.jsonl", "--baseline", "baseline.jsonl", "--corpus", "corpus", "--csv", "eval.csv",
    ]);
    assert!(table.contains("validity"));
    assert!(std::fs::read_to_string(d.join("eval.csv")).unwrap().starts_with("project,filter,threshold"));
    ok(&["sweep", "--model", "model.plm", "--corpus", "corpus", "--out", "sweep.csv", "--thresholds", "-1.0,-0.7,-0.4"]);
    assert_eq!(std::fs::read_to_string(d.join("sweep.csv")).unwrap().lines().count(), 4);

    let out = bin()
        .current_dir(d)
        .args(["build-corpus", "--hunks", "hunks.jsonl", "--out", "c2", "--test-year", "1999"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
