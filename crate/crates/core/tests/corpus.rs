use std::collections::HashMap;

use patchloom::corpus::{
    build_corpus, build_pairs, categorize, drop_identical, prepare, read_test, read_train, read_train_concrete,
    replace_rare, select_post_correction, split_chronological, write_test, write_train, Category,
    CorpusOptions, StatementPair,
};
use patchloom::miner::{ChangeHunk, FixLink};
use patchloom::nmt::Vocabulary;
use patchloom::statement::{validate_statement, TokenizedStatement};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hunk(del: &[&str], add: &[&str], year_pre: i32, year_post: i32, commit: &str) -> ChangeHunk {
    ChangeHunk {
        deleted_lines: del.iter().map(|s| format!("        {s}")).collect(),
        added_lines: add.iter().map(|s| format!("        {s}")).collect(),
        file_path: "src/A.java".into(),
        commit_post: commit.into(),
        commit_pre_origin: Some(format!("origin-{commit}")),
        year_pre: Some(year_pre),
        year_post,
        method_scoped: true,
    }
}

fn pair(pre: &str, post: &str, year_post: i32, commit: &str) -> StatementPair {
    let h = hunk(&[pre], &[post], year_post, year_post, commit);
    let (mut pairs, _) = build_pairs([&h]);
    assert_eq!(pairs.len(), 1, "{pre} -> {post}");
    pairs.pop().unwrap()
}

#[test]
fn listing_hunk_becomes_one_pair() {
    let h = hunk(
        &["long hours = (long) ((uptime - days) * 60);"],
        &["long hours = (long) ((uptime - days) * 24);"],
        2012,
        2012,
        "m",
    );
    let (pairs, ledger) = build_pairs([&h]);
    assert_eq!(pairs.len(), 1);
    assert_eq!(ledger.before_filtering, 1);
    let p = &pairs[0];
    assert_eq!(p.pre.joined(), "long hours = ( long ) ( ( uptime - days ) * 60 ) ;");
    assert_eq!(p.post.joined(), "long hours = ( long ) ( ( uptime - days ) * 24 ) ;");
}

#[test]
fn multi_statement_hunk_dropped() {
    let h = hunk(&["a = 1;"], &["a = 2;", "b = 3;"], 2012, 2012, "m");
    let (pairs, ledger) = build_pairs([&h]);
    assert!(pairs.is_empty());
    assert_eq!(ledger.multi_statement, 1);
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Fate {
    NotScoped,
    NotPair,
    Multi,
    Unknown,
    Untokenizable,
    Short,
    Unparsable,
    Kept,
}

/// 50 hunks whose fate is known by construction.
fn fixture50() -> Vec<(ChangeHunk, Fate)> {
    let mut v = Vec::new();
    let mut n = 0;
    let mut next = || {
        n += 1;
        format!("c{n:02}")
    };
    for i in 0..4 {
        let mut h = hunk(&[&format!("x = {i};")], &[&format!("x = {};", i + 1)], 2012, 2012, &next());
        h.method_scoped = false;
        v.push((h, Fate::NotScoped));
    }
    for i in 0..5 {
        v.push((hunk(&[&format!("y = {i};")], &[], 2012, 2012, &next()), Fate::NotPair));
    }
    for i in 0..6 {
        v.push((hunk(&[&format!("y = {i};")], &["a ( ) ;", "b ( ) ;"], 2012, 2012, &next()), Fate::Multi));
    }
    for i in 0..3 {
        let mut h = hunk(&[&format!("z = {i};")], &[&format!("z = {};", i + 2)], 2012, 2012, &next());
        h.commit_pre_origin = None;
        h.year_pre = None;
        v.push((h, Fate::Unknown));
    }
    v.push((hunk(&["s = \"open;"], &["s = \"closed\";"], 2012, 2012, &next()), Fate::Untokenizable));
    for (a, b) in [("}", "return x;"), ("return x;", "x;"), ("a;", "b = c;"), ("return;", "return x;")] {
        v.push((hunk(&[a], &[b], 2012, 2012, &next()), Fate::Short));
    }
    for (a, b) in [
        ("if (x", "if (y"),
        ("a + b;", "a - b;"),
        ("int x = ;", "int x = 1;"),
        ("foo(a, b);", "foo(a, b"),
        ("return x y;", "return y;"),
        ("x = y +", "x = y + z;"),
        ("a == b;", "a != b;"),
    ] {
        v.push((hunk(&[a], &[b], 2012, 2012, &next()), Fate::Unparsable));
    }
    let kept = [
        ("return this.height;", "return height;"),
        ("commands[10] = this.passwordFile.toString();", "commands[11] = this.passwordFile.toString();"),
        ("Set<String> s = new HashSet<String>();", "Set<String> s = new HashSet<>();"),
        ("if (list.size() == 0) {", "if (list.isEmpty()) {"),
        ("foo(a);", "foo(b);"),
        ("int n = count + 1;", "int n = count + 2;"),
        ("log.debug(\"x\");", "LOG.debug(\"x\");"),
        ("return a.equals(b);", "return Objects.equals(a, b);"),
        ("throw new IllegalStateException(msg);", "throw new IllegalArgumentException(msg);"),
        ("x = y * 60;", "x = y * 24;"),
        ("list.add(item);", "items.add(item);"),
        ("for (int i = 0; i < n; i++) {", "for (int i = 0; i <= n; i++) {"),
        ("} else {", "} else if (x) {"),
        ("String s = a + b;", "String s = a + c;"),
        ("bar(1, 2);", "bar(1, 3);"),
        ("return null;", "return Optional.empty();"),
        ("long t = System.currentTimeMillis();", "long t = System.nanoTime();"),
        ("synchronized (lock) {", "synchronized (this) {"),
        ("assert x > 0;", "assert x >= 0;"),
        ("a[i] = b[j];", "a[i] = c[j];"),
    ];
    for (a, b) in kept {
        v.push((hunk(&[a], &[b], 2012, 2012, &next()), Fate::Kept));
    }
    assert_eq!(v.len(), 50);
    v
}

#[test]
fn fixture_ledger_matches_hand_trace() {
    let fx = fixture50();
    let mut want: HashMap<Fate, usize> = HashMap::new();
    for (_, f) in &fx {
        *want.entry(*f).or_default() += 1;
    }
    let hunks: Vec<ChangeHunk> = fx.iter().map(|(h, _)| h.clone()).collect();
    let (pairs, l) = build_pairs(&hunks);
    assert_eq!(l.hunks_in, 50);
    assert_eq!(l.not_method_scoped, want[&Fate::NotScoped]);
    assert_eq!(l.not_pair, want[&Fate::NotPair]);
    assert_eq!(l.multi_statement, want[&Fate::Multi]);
    assert_eq!(l.origin_unknown, want[&Fate::Unknown]);
    assert_eq!(l.untokenizable, want[&Fate::Untokenizable]);
    assert_eq!(l.too_short, want[&Fate::Short]);
    assert_eq!(l.not_parsable, want[&Fate::Unparsable]);
    assert_eq!(pairs.len(), want[&Fate::Kept]);
    assert_eq!(
        l.before_filtering,
        want[&Fate::Untokenizable] + want[&Fate::Short] + want[&Fate::Unparsable] + want[&Fate::Kept]
    );
    // "foo(a);" -> "foo(b);" and "bar(1, 2);" -> "bar(1, 3);" differ only in arguments
    let (kept, identical) = drop_identical(pairs);
    assert_eq!(identical, 2);
    for p in &kept {
        assert!(p.pre.len() >= 3 && p.post.len() >= 3);
        assert_ne!(p.pre, p.post);
        assert!(validate_statement(&p.pre) && validate_statement(&p.post));
    }
}

#[test]
fn select_rule_examples() {
    let g = vec![
        pair("x = a + 1;", "x = q1;", 2012, "a"),
        pair("x = a + 1;", "x = q1;", 2012, "b"),
        pair("x = a + 1;", "x = q1;", 2012, "c"),
        pair("x = a + 1;", "x = q3;", 2013, "d"),
        pair("x = a + 1;", "x = q2;", 2013, "e"),
    ];
    let (out, lost) = select_post_correction(g);
    assert_eq!(lost, 4);
    assert_eq!(out[0].post.joined(), "x = q2 ;");

    let g = vec![
        pair("y = b;", "y = q1;", 2013, "a"),
        pair("y = b;", "y = q1;", 2013, "b"),
        pair("y = b;", "y = q2;", 2013, "c"),
        pair("y = b;", "y = q2;", 2013, "d"),
        pair("y = b;", "y = q2;", 2013, "e"),
        pair("y = b;", "y = q2;", 2013, "f"),
        pair("y = b;", "y = q2;", 2013, "g"),
    ];
    let (out, _) = select_post_correction(g);
    assert_eq!(out[0].post.joined(), "y = q2 ;");
}

fn random_group_pairs(seed: u64) -> Vec<StatementPair> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..rng.gen_range(1..40) {
        let pre = format!("v{} = w ;", rng.gen_range(0..4));
        let post = format!("v = q{} ;", rng.gen_range(0..5));
        out.push(pair(&pre, &post, rng.gen_range(2010..2014), &format!("c{i}")));
    }
    out
}

proptest! {
    #[test]
    fn selection_matches_sort_oracle(seed in any::<u64>()) {
        let pairs = random_group_pairs(seed);
        let mut groups: HashMap<String, Vec<&StatementPair>> = HashMap::new();
        for p in &pairs {
            groups.entry(p.pre.joined()).or_default().push(p);
        }
        let (out, lost) = select_post_correction(pairs.clone());
        prop_assert_eq!(out.len(), groups.len());
        prop_assert_eq!(lost, pairs.len() - groups.len());
        for p in &out {
            let g = &groups[&p.pre.joined()];
            let freq = |post: &str| g.iter().filter(|q| q.post.joined() == post).count();
            let mut cands: Vec<(i32, usize, String)> = g
                .iter()
                .map(|q| (q.year_post, freq(&q.post.joined()), q.post.joined()))
                .collect();
            // year desc, freq desc, text asc
            cands.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
            prop_assert_eq!(&p.post.joined(), &cands[0].2);
        }
    }

    #[test]
    fn selection_is_order_independent(seed in any::<u64>()) {
        let pairs = random_group_pairs(seed);
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        prop_assert_eq!(select_post_correction(pairs).0, select_post_correction(shuffled).0);
    }

    #[test]
    fn rare_replacement_matches_recount(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::new();
        for i in 0..rng.gen_range(1..25) {
            let pre = format!("t{} = t{} + t{} ;", rng.gen_range(0..8), rng.gen_range(0..8), rng.gen_range(0..30));
            let post = format!("u{} = foo ( arg ) ;", rng.gen_range(0..12));
            pairs.push(pair(&pre, &post, 2012, &format!("c{i}")));
        }
        let corpus = replace_rare(pairs.clone(), 2);
        let count = |side: &dyn Fn(&StatementPair) -> &TokenizedStatement| {
            let mut m: HashMap<String, usize> = HashMap::new();
            for p in &pairs {
                for t in &side(p).tokens {
                    *m.entry(t.clone()).or_default() += 1;
                }
            }
            m
        };
        let src = count(&|p| &p.pre);
        let tgt = count(&|p| &p.post);
        for (counts, vocab) in [(&src, &corpus.src_vocab), (&tgt, &corpus.tgt_vocab)] {
            for (t, &n) in counts {
                let reserved = t == "arg" || t == "val";
                prop_assert_eq!(vocab.contains(t), n >= 2 || reserved, "token {}", t);
            }
            // only reserved tokens may be absent from the corpus
            for t in vocab.tokens() {
                prop_assert!(counts.contains_key(t) || ["<unk>", "<s>", "</s>", "arg", "val"].contains(&t.as_str()));
            }
        }
        for (p, orig) in corpus.pairs.iter().zip(&pairs) {
            for (t, o) in p.pre.tokens.iter().zip(&orig.pre.tokens) {
                prop_assert_eq!(t.as_str(), if src[o] >= 2 { o.as_str() } else { "<unk>" });
            }
            for (t, o) in p.post.tokens.iter().zip(&orig.post.tokens) {
                prop_assert_eq!(t.as_str(), if tgt[o] >= 2 || o == "arg" { o.as_str() } else { "<unk>" });
            }
        }
    }
}

#[test]
fn rare_replacement_is_per_side() {
    let pairs = vec![
        pair("x = once ;", "y = twice ;", 2012, "a"),
        pair("x = z ;", "y = twice ;", 2012, "b"),
        pair("x = z ;", "once = z ;", 2012, "c"),
        pair("x = once2 ;", "once = z ;", 2012, "d"),
    ];
    let c = replace_rare(pairs.clone(), 2);
    assert_eq!(c.pairs[0].pre.joined(), "x = <unk> ;");
    assert!(c.tgt_vocab.contains("once"));
    assert!(!c.src_vocab.contains("once"));

    let frequent = vec![pair("a = b ;", "a = c ;", 2012, "a"), pair("a = b ;", "a = c ;", 2012, "b")];
    let c = replace_rare(frequent.clone(), 2);
    assert_eq!(c.pairs.iter().map(|p| &p.pre).collect::<Vec<_>>(), frequent.iter().map(|p| &p.pre).collect::<Vec<_>>());
}

#[test]
fn identical_ratio_fixture() {
    // 1000 pairs, 553 argument-only edits, as in the 55.3% row
    let mut pairs = Vec::new();
    for i in 0..1000 {
        if i < 553 {
            pairs.push(pair(&format!("call{i}(a);"), &format!("call{i}(b);"), 2012, &format!("c{i}")));
        } else {
            pairs.push(pair(&format!("v{i} = a + 1;"), &format!("v{i} = a + 2;"), 2012, &format!("c{i}")));
        }
    }
    let (kept, dropped) = drop_identical(pairs);
    assert_eq!(dropped, 553);
    assert!((dropped as f64 / 1000.0 - 0.553).abs() < 1e-12);
    assert_eq!(kept.len(), 447);
}

#[test]
fn split_and_categorize() {
    let mut a = pair("x = a + 1;", "x = a + 2;", 2013, "a");
    a.year_pre = 2013;
    let mut b = pair("x = a + 1;", "x = a + 3;", 2014, "b");
    b.year_pre = 2014;
    let mut c = pair("x = a + 1;", "x = a + 4;", 2014, "c");
    c.year_pre = 2013;
    let (train, test) = split_chronological(vec![a.clone(), b.clone(), c], 2014).unwrap();
    assert_eq!(train, vec![a.clone()]);
    assert_eq!(test, vec![b.clone()]);
    assert!(split_chronological(vec![a.clone()], 2014).is_err());

    let src = Vocabulary::from_tokens(["x", "=", "a", "+", "1", ";"]);
    let tgt = Vocabulary::from_tokens(["x", "=", "a", "+", "2", ";"]);
    assert_eq!(categorize(&a, &src, &tgt), Category::NU);
    let q = pair("y = a + 1;", "y = a + 2;", 2014, "q");
    assert_eq!(categorize(&q, &src, &tgt), Category::UQ);
    let r = pair("x = a + 1;", "x = a + 9;", 2014, "r");
    assert_eq!(categorize(&r, &src, &tgt), Category::UR);
}

fn pipeline_hunks() -> Vec<ChangeHunk> {
    let mut hunks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    use rand::Rng;
    for i in 0..300 {
        let year = 2010 + (i % 5);
        let v = rng.gen_range(0..20);
        let mut h = hunk(
            &[&format!("return this.f{v};")],
            &[&format!("return f{v};")],
            year - rng.gen_range(0..2).min(year - 2010),
            year,
            &format!("c{i:03}"),
        );
        if i % 7 == 0 {
            h.deleted_lines = vec![format!("        int q{v} = {};", rng.gen_range(0..3))];
            h.added_lines = vec![format!("        int q{v} = {};", rng.gen_range(3..6))];
        }
        hunks.push(h);
    }
    hunks
}

#[test]
fn built_corpus_round_trips_through_files_and_is_deterministic() {
    let hunks = pipeline_hunks();
    let fix = hunks
        .iter()
        .find(|h| h.year_post == 2014 && h.year_pre == Some(2014) && h.deleted_lines[0].contains("this"))
        .unwrap();
    let links = vec![FixLink {
        fixing_commit: fix.commit_post.clone(),
        inducing_commit: fix.commit_pre_origin.clone().unwrap(),
    }];
    let opts = CorpusOptions { test_year: 2014, min_count: 2 };
    let built = build_corpus(&hunks, &links, opts).unwrap();
    let report = built.report();
    assert_eq!(report.categories.values().sum::<usize>(), built.test.len());
    assert_eq!(report.bugfix_test_pairs, 1);
    let l = &built.train_ledger;
    assert_eq!(
        l.before_filtering,
        l.untokenizable + l.too_short + l.not_parsable + l.lost_candidates + l.identical + l.final_pairs
    );
    let pct: f64 = l.rows().iter().skip(1).map(|r| r.2).sum();
    assert!((pct - 100.0).abs() < 1e-9);

    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    write_train(d1.path(), &built.train).unwrap();
    write_test(d1.path(), &built.test).unwrap();
    let again = build_corpus(&hunks, &links, opts).unwrap();
    write_train(d2.path(), &again.train).unwrap();
    write_test(d2.path(), &again.test).unwrap();
    for f in ["train.src", "train.tgt", "train.concrete.src", "train.concrete.tgt", "train.meta.tsv", "test.src", "test.tgt", "test.meta.tsv"] {
        let a = std::fs::read(d1.path().join(f)).unwrap();
        let b = std::fs::read(d2.path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let train = read_train(d1.path()).unwrap();
    assert_eq!(train.src.len(), built.train.pairs.len());
    for (s, p) in train.src.iter().zip(&built.train.pairs) {
        assert_eq!(s.tokens, p.pre.tokens);
    }
    let concrete = read_train_concrete(d1.path()).unwrap();
    for ((pre, post), p) in concrete.iter().zip(&built.train.pairs) {
        assert_eq!(pre.tokens, p.pre_concrete.tokens);
        assert_eq!(post.tokens, p.post_concrete.tokens);
    }
    let test = read_test(d1.path()).unwrap();
    for (r, p) in test.iter().zip(&built.test) {
        assert_eq!(r.query.tokens, p.pre_concrete.tokens);
        assert_eq!(r.reference.tokens, p.post_concrete.tokens);
        assert_eq!(r.category, p.category);
        assert_eq!(r.meta.bugfix, p.bugfix);
        assert_eq!(prepare(&r.query.joined()).unwrap().abstracted, p.pre);
    }
}
