use std::collections::HashSet;

use patchloom::corpus::{build_corpus, prepare, CorpusOptions};
use patchloom::miner::{fix_links, mine_hunks, MineOptions};
use patchloom::statement::{tokenize, validate_statement, TokenizedStatement};
use patchloom::synth::{
    applicable_rules, apply_rule, rewrite_benchmark, rule_statement, synthetic_repository, BenchmarkOptions,
    RepoOptions, Rule,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toks(s: &str) -> Vec<String> {
    tokenize(s).unwrap().tokens
}

#[test]
fn published_example_rewrites() {
    let cases = [
        (
            Rule::ConstantIncrement,
            "commands [ 10 ] = this . passwordFile . toString ( ) ;",
            "commands [ 11 ] = this . passwordFile . toString ( ) ;",
        ),
        (Rule::ThisRemoval, "return this . height ;", "return height ;"),
        (
            Rule::Diamond,
            "Set < String > knownRoles = new HashSet ( ) ;",
            "Set < String > knownRoles = new HashSet < > ( ) ;",
        ),
        (
            Rule::Wildcard,
            "List body = assertIsInstanceOf ( List . class , result ) ;",
            "List < ? > body = assertIsInstanceOf ( List . class , result ) ;",
        ),
        (Rule::IsEmpty, "return names . size ( ) == 0 ;", "return names . isEmpty ( ) ;"),
    ];
    for (rule, pre, post) in cases {
        assert_eq!(apply_rule(rule, &toks(pre)).unwrap(), toks(post), "{rule:?}");
    }
    assert!(apply_rule(Rule::Diamond, &toks("List x = new ArrayList ( ) ;")).is_none());
    assert!(apply_rule(Rule::Wildcard, &toks("List < String > x = y ;")).is_none());
}

#[test]
fn templates_trigger_exactly_their_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for rule in Rule::ALL {
        for _ in 0..200 {
            let s = rule_statement(rule, &mut rng);
            let t = toks(&s);
            assert_eq!(applicable_rules(&t), vec![rule], "{s}");
            let post = TokenizedStatement::from_tokens(&apply_rule(rule, &t).unwrap());
            assert!(prepare(&s).is_ok(), "{s}");
            assert!(validate_statement(&post), "{}", post.joined());
        }
    }
}

#[test]
fn benchmark_shape() {
    let opts = BenchmarkOptions::default();
    let b = rewrite_benchmark(9, &opts);
    assert_eq!(b.train.len(), 2000);
    assert_eq!(b.train.iter().filter(|p| p.rule.is_none()).count(), 200);
    assert_eq!(b.held_out.len(), 200);
    assert_eq!(b.queries.len(), 200);
    assert_eq!(b.queries.iter().filter(|q| q.novel).count(), 80);

    let abs = |s: &TokenizedStatement| prepare(&s.joined()).unwrap().abstracted.tokens;
    let train: HashSet<_> = b.train.iter().map(|p| abs(&p.pre)).collect();
    assert_eq!(train.len(), 2000);
    assert!(b.held_out.iter().all(|p| p.rule.is_some() && !train.contains(&abs(&p.pre))));
    for q in &b.queries {
        assert_eq!(q.novel, !train.contains(&abs(&q.pair.pre)));
        if q.novel {
            assert!(q.pair.rule.is_some());
        }
    }
    for p in b.train.iter().chain(&b.held_out) {
        match p.rule {
            Some(r) => assert_eq!(apply_rule(r, &p.pre.tokens).unwrap(), p.post.tokens),
            None => assert!(applicable_rules(&p.pre.tokens).is_empty()),
        }
    }
    let again = rewrite_benchmark(9, &opts);
    assert_eq!(again.train, b.train);
}

#[test]
fn synthetic_repository_feeds_the_corpus_builder() {
    let repo = synthetic_repository(1, &RepoOptions::default());
    let mined = mine_hunks(&repo, MineOptions::default()).unwrap();
    assert!(mined.report.method_scoped_hunks > 100, "{:?}", mined.report);
    let links = fix_links(&mined);
    assert!(!links.is_empty());
    let built = build_corpus(
        &mined.hunks,
        &links,
        CorpusOptions {
            test_year: 2015,
            min_count: 1,
        },
    )
    .unwrap();
    assert!(built.train.pairs.len() > 100);
    assert!(!built.test.is_empty());
    // every mined pair is a rule rewrite or a call rename
    for p in &built.train.pairs {
        let rules = applicable_rules(&p.pre_concrete.tokens);
        let by_rule = rules.iter().any(|&r| apply_rule(r, &p.pre_concrete.tokens).unwrap() == p.post_concrete.tokens);
        assert!(by_rule || p.pre_concrete.len() == p.post_concrete.len(), "{} -> {}", p.pre_concrete.joined(), p.post_concrete.joined());
    }
}
