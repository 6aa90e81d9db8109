use patchloom::corpus::prepare;
use patchloom::generator::{
    decode, from_jsonl, select, to_jsonl, BaselineIndex, Candidate, DecodeOptions, Decoded, NaReason, PatchRecord,
    PatchSource, DEFAULT_THRESHOLD,
};
use patchloom::nmt::train::{train, ParallelData, TrainingConfig};
use patchloom::statement::{tokenize, TokenizedStatement};
use patchloom::synth::{train_files, Rule, SynthPair};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toks(s: &str) -> TokenizedStatement {
    tokenize(s).unwrap()
}

fn decoded(query: &str, candidates: &[(&str, f64, bool)]) -> Decoded {
    Decoded {
        query: query.to_string(),
        prepared: prepare(query).map_err(NaReason::from),
        candidates: candidates
            .iter()
            .map(|&(abs, score, finished)| Candidate {
                abstracted: toks(abs),
                score,
                finished,
            })
            .collect(),
    }
}

#[test]
fn default_threshold_is_minus_point_seven() {
    assert_eq!(DEFAULT_THRESHOLD, -0.7);
    assert_eq!(DecodeOptions::default().beam_size, 10);
}

#[test]
fn threshold_turns_low_scores_into_na() {
    let d = decoded("return this . height ;", &[("return height ;", -0.9, true)]);
    let g = select(&d, -0.7);
    assert_eq!(g.patch, None);
    assert_eq!(g.na_reason, Some(NaReason::LowScore));
    assert_eq!(g.score, Some(-0.9));
    assert!(g.valid, "validity ignores the threshold");

    let g = select(&d, -1.0);
    assert_eq!(g.patch.unwrap().tokens, toks("return height ;"));
    // the threshold itself is accepted
    assert!(select(&decoded("return this . height ;", &[("return height ;", -0.7, true)]), -0.7)
        .patch
        .is_some());
}

#[test]
fn identical_output_is_na() {
    let d = decoded("x = foo ( a , b ) ;", &[("x = foo ( arg ) ;", -0.01, true)]);
    let g = select(&d, DEFAULT_THRESHOLD);
    assert_eq!(g.na_reason, Some(NaReason::Identical));
    assert_eq!(g.patch, None);
}

#[test]
fn arguments_are_reinserted() {
    let d = decoded("x = foo ( a , b ) ;", &[("x = bar . foo ( arg ) ;", -0.1, true)]);
    let p = select(&d, DEFAULT_THRESHOLD).patch.unwrap();
    assert_eq!(p.tokens, toks("x = bar . foo ( a , b ) ;"));
    assert!(p.valid && p.arguments_reinserted);
    assert_eq!(p.source, PatchSource::Model);
}

#[test]
fn invalid_after_reinsertion_is_na() {
    // the second placeholder has no query argument left
    let d = decoded("foo ( x ) ;", &[("foo ( arg ) . bar ( arg ) ;", -0.1, true)]);
    assert_eq!(select(&d, DEFAULT_THRESHOLD).na_reason, Some(NaReason::InvalidAfterReinsertion));
    let d = decoded("foo ( x ) ;", &[("foo ( arg ) ) ;", -0.1, true)]);
    let g = select(&d, DEFAULT_THRESHOLD);
    assert_eq!(g.na_reason, Some(NaReason::InvalidAfterReinsertion));
    assert!(!g.valid);
}

#[test]
fn unfinished_and_bad_queries_are_na() {
    let d = decoded("foo ( x ) ;", &[("foo ( arg ) . bar", -0.1, false)]);
    assert_eq!(select(&d, DEFAULT_THRESHOLD).na_reason, Some(NaReason::Unfinished));
    assert_eq!(select(&decoded("foo ( x ) ;", &[]), 0.0).na_reason, Some(NaReason::Unfinished));
    assert_eq!(select(&decoded("x ;", &[]), 0.0).na_reason, Some(NaReason::TooShort));
    assert_eq!(select(&decoded("x = = = ;", &[]), 0.0).na_reason, Some(NaReason::InvalidQuery));
    assert_eq!(
        select(&decoded("s = \"open ;", &[]), 0.0).na_reason,
        Some(NaReason::Untokenizable)
    );
}

#[test]
fn only_valid_alternatives_are_kept() {
    let d = decoded(
        "return this . height ;",
        &[
            ("return height ;", -0.1, true),
            ("return this . height ;", -0.3, true),
            ("return height . width ;", -0.5, true),
            ("return ( ;", -0.6, true),
        ],
    );
    let g = select(&d, DEFAULT_THRESHOLD);
    let alts: Vec<String> = g.alternatives.iter().map(|a| a.tokens.joined()).collect();
    assert_eq!(alts, vec!["return height . width ;"]);
}

proptest! {
    #[test]
    fn raising_the_threshold_never_adds_patches(score in -3.0f64..0.0, t1 in -3.0f64..0.0, t2 in -3.0f64..0.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let d = decoded("return this . height ;", &[("return height ;", score, true)]);
        let at_hi = select(&d, hi).patch.is_some();
        let at_lo = select(&d, lo).patch.is_some();
        prop_assert!(!at_hi || at_lo);
        prop_assert_eq!(at_hi, score >= hi);
    }
}

fn baseline_pairs() -> Vec<(TokenizedStatement, TokenizedStatement)> {
    [
        ("return this . height ;", "return height ;"),
        ("x = list . size ( ) == 0 ;", "x = list . isEmpty ( ) ;"),
        ("foo ( a , b ) ;", "bar ( a , b ) ;"),
        ("y = 1 ;", "y = 2 ;"),
        // same abstracted pre-statements with competing posts
        ("q = make ( a ) ;", "q = build ( a ) ;"),
        ("q = make ( b ) ;", "q = create ( b ) ;"),
        ("q = make ( c ) ;", "q = create ( c ) ;"),
    ]
    .iter()
    .map(|(a, b)| (toks(a), toks(b)))
    .collect()
}

#[test]
fn baseline_matches_abstracted_queries() {
    let pairs = baseline_pairs();
    let index = BaselineIndex::from_concrete_pairs(pairs.iter().map(|(a, b)| (a, b)));
    assert_eq!(index.len(), 5);
    assert_eq!(index.suggest("q = make ( z ) ;").patch.unwrap().tokens, toks("q = create ( z ) ;"));

    let g = index.suggest("foo ( c ) ;");
    assert_eq!(g.patch.unwrap().tokens, toks("bar ( c ) ;"));
    assert_eq!(g.source, PatchSource::Baseline);

    let g = index.suggest("return this . width ;");
    assert_eq!(g.na_reason, Some(NaReason::NotInTraining));
    assert!(g.patch.is_none());
    assert_eq!(index.suggest("x ;").na_reason, Some(NaReason::TooShort));
}

#[test]
fn baseline_does_not_depend_on_pair_order() {
    let mut pairs = baseline_pairs();
    let queries = ["foo ( z ) ;", "return this . height ;", "y = 1 ;", "q = 3 ;", "q = make ( d ) ;"];
    let reference: Vec<_> = {
        let index = BaselineIndex::from_concrete_pairs(pairs.iter().map(|(a, b)| (a, b)));
        queries.iter().map(|q| index.suggest(q)).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        pairs.shuffle(&mut rng);
        let index = BaselineIndex::from_concrete_pairs(pairs.iter().map(|(a, b)| (a, b)));
        let got: Vec<_> = queries.iter().map(|q| index.suggest(q)).collect();
        assert_eq!(got, reference);
    }
}

#[test]
fn patch_records_round_trip_through_jsonl() {
    let gens = vec![
        select(&decoded("return this . height ;", &[("return height ;", -0.2, true)]), -0.7),
        select(&decoded("return this . height ;", &[("return height ;", -0.9, true)]), -0.7),
        select(&decoded("x ;", &[]), -0.7),
    ];
    let text = to_jsonl(&gens);
    assert_eq!(text.lines().count(), 3);
    let back = from_jsonl(&text).unwrap();
    let direct: Vec<PatchRecord> = gens.iter().map(PatchRecord::from).collect();
    assert_eq!(back, direct);
    assert_eq!(back[0].patch.as_deref(), Some("return height ;"));
    assert_eq!(back[1].na_reason, Some(NaReason::LowScore));
    let line = text.lines().next().unwrap();
    let at: Vec<usize> = ["query", "patch", "score", "valid", "na_reason", "source"]
        .iter()
        .map(|k| line.find(&format!("\"{k}\":")).unwrap())
        .collect();
    assert!(at.windows(2).all(|w| w[0] < w[1]), "{line}");
    assert!(line.ends_with("\"source\":\"model\"}"), "{line}");
    assert!(from_jsonl("{not json").is_err());
}

#[test]
fn trained_model_rewrites_memorized_queries() {
    let pairs: Vec<SynthPair> = ["height", "width", "depth", "name", "size", "color"]
        .iter()
        .map(|f| SynthPair {
            pre: toks(&format!("return this . {f} ;")),
            post: toks(&format!("return {f} ;")),
            rule: Some(Rule::ThisRemoval),
        })
        .collect();
    let data = ParallelData::from_files(&train_files(&pairs, 2010, 2012));
    let cfg = TrainingConfig {
        hidden: 32,
        embed: 16,
        dropout: 0.0,
        learning_rate: 0.01,
        minibatch_words: 4,
        // six pairs sit on a plateau for about a hundred epochs
        max_epochs: 200,
        decay_factor: 1.0,
        dev_fraction: 0.0,
        ..TrainingConfig::default()
    };
    let model = train(&data, &cfg).unwrap().model;
    let opts = DecodeOptions {
        top_k: 3,
        ..DecodeOptions::default()
    };
    let d = decode(&model, "return this . width ;", &opts);
    assert_eq!(d.candidates.len(), 3);
    assert!(d.candidates.windows(2).all(|w| w[0].score >= w[1].score));
    let g = select(&d, DEFAULT_THRESHOLD);
    assert_eq!(g.patch.unwrap_or_else(|| panic!("{d:?}")).tokens, toks("return width ;"));
}
